package demo.app;

public class StringsComments {
    // a comment with new Fake() and stmt.call() inside
    /* block comment: import java.Bogus; */
    String banner = """
            multi line new Phantom()
            text block""";
    char quote = '\'';
    String tricky = "escaped \" quote and // not a comment";

    void emit(Printer printer) {
        printer.print(banner); // trailing note
    }
}
