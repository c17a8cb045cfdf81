package demo.app;

public class AnonymousClass {
    void schedule(Executor executor) {
        Runnable task = new Runnable() {
            public void run() {
                tick();
            }
        };
        executor.execute(task);
    }

    void tick() { }
}
