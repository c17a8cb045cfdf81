package demo.app;

public class ObjectCreation {
    void build() {
        Object a = new java.util.ArrayList<String>();
        Object b = new StringBuilder("x");
        int[] nums = new int[4];
        Runnable[] jobs = new Runnable[2];
        Object c = new HashMap<String, Integer>();
    }
}
