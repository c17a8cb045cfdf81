import { describe, expect, it } from "vitest";

import { Client } from "../src/api.js";
import { pollJob } from "../src/poll.js";
import { ApiError } from "../src/types.js";
import { fixtureFetch } from "./fixture_server.js";

const noSleep = () => Promise.resolve();

describe("api client", () => {
  it("submits a repository and returns the job id", async () => {
    const { fetch, log } = fixtureFetch();
    const client = new Client("", fetch);
    const created = await client.submitRepo("https://github.com/demo/javafix");
    expect(created.job_id).toBe("job-0001");
    expect(log[0]).toEqual({ method: "POST", url: "/repos" });
  });

  it("adopts an already-running job on 409", async () => {
    const impl = async () =>
      new Response(
        JSON.stringify({ error: { code: "job_in_flight", message: "busy" }, job_id: "job-0007" }),
        { status: 409 },
      );
    const client = new Client("", impl as typeof fetch);
    const created = await client.submitRepo("demo/javafix");
    expect(created.job_id).toBe("job-0007");
  });

  it("passes limit, skills and algorithm through as query parameters", async () => {
    const { fetch, log } = fixtureFetch();
    const client = new Client("", fetch);
    await client.getIssues("demo__javafix", { limit: 3, skills: 2, algorithm: "rf" });
    const url = log[log.length - 1].url;
    expect(url).toContain("/repos/demo__javafix/issues?");
    expect(url).toContain("limit=3");
    expect(url).toContain("skills=2");
    expect(url).toContain("algorithm=rf");
  });

  it("switching the algorithm switches the request parameter", async () => {
    const { fetch, log } = fixtureFetch();
    const client = new Client("", fetch);
    await client.getIssues("demo__javafix", { limit: 3, skills: 2, algorithm: "rf" });
    await expect(
      client.getIssues("demo__javafix", { limit: 3, skills: 2, algorithm: "llm" }),
    ).rejects.toMatchObject({ status: 503, code: "provider_unavailable" });
    expect(log[log.length - 2].url).toContain("algorithm=rf");
    expect(log[log.length - 1].url).toContain("algorithm=llm");
  });

  it("raises typed errors from the error envelope", async () => {
    const { fetch } = fixtureFetch();
    const client = new Client("", fetch);
    try {
      await client.getIssues("demo__javafix", { limit: 3, skills: 2, algorithm: "llm" });
      expect.unreachable();
    } catch (error) {
      expect(error).toBeInstanceOf(ApiError);
    }
  });
});

describe("job polling", () => {
  it("reports progress then resolves when the job is done", async () => {
    const { fetch } = fixtureFetch({ runningPolls: 2 });
    const client = new Client("", fetch);
    const seen: string[] = [];
    const final = await pollJob(client, "job-0001", {
      sleep: noSleep,
      onProgress: (job) => seen.push(job.status),
    });
    expect(seen).toEqual(["running", "running", "done"]);
    expect(final?.status).toBe("done");
  });

  it("stops silently when a newer submission supersedes the job", async () => {
    const { fetch } = fixtureFetch({ runningPolls: 5 });
    const client = new Client("", fetch);
    let current = "job-0001";
    const result = await pollJob(client, "job-0001", {
      sleep: async () => {
        current = "job-0002"; // user submitted again mid-poll
      },
      isCurrent: (id) => current === id,
    });
    expect(result).toBeNull();
  });
});
