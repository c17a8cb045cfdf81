package demo.app;

import java.util.function.Function;

public class Lambdas {
    void apply(List<String> names) {
        names.forEach(name -> handle(name));
        Function<String, Integer> length = (String s) -> s.length();
        names.sort(String::compareTo);
    }

    void handle(String name) { }
}
