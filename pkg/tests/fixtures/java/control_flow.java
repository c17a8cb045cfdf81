package demo.app;

public class ControlFlow {
    int scan(int a, int b, int[] values) {
        int total = 0;
        for (int i = 0; i < values.length; i++) {
            total += values[i];
        }
        for (String name : names()) {
            total += name.length();
        }
        while (a < b && total > 0) {
            total--;
        }
        if (a < b) {
            return total;
        }
        return 0;
    }

    String[] names() { return new String[0]; }
}
