package demo.app;

public class Outer {
    private Registry registry;

    class Inner {
        private Session session;

        void touch() {
            session.refresh();
            registry.lookup("inner");
        }
    }
}
