package demo.app;

public class FieldsAndLocals {
    private Connection conn;
    protected String firstName, lastName;
    static final int LIMIT = 10;

    void work() {
        Statement stmt;
        double ratio = 0.5;
        String greeting = "hello";
        var inferred = greeting;
    }
}
