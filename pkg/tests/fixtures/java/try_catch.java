package demo.app;

import java.io.IOException;
import java.sql.SQLException;

public class TryCatch {
    void risky() {
        try (BufferedReader reader = open()) {
            reader.readLine();
        } catch (IOException | SQLException failure) {
            failure.printStackTrace();
        }
    }

    BufferedReader open() { return null; }
}
