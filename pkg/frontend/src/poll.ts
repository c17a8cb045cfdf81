import { Client } from "./api.js";
import { JobState } from "./types.js";

export interface PollOptions {
  intervalMs?: number;
  maxPolls?: number;
  /** superseded submissions return false and the loop stops silently */
  isCurrent?: (jobId: string) => boolean;
  onProgress?: (state: JobState) => void;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/**
 * Polls GET /jobs/{id} until the job leaves the queue. Resolves with the
 * final state, or null when a newer submission superseded this one.
 */
export async function pollJob(
  client: Client,
  jobId: string,
  options: PollOptions = {},
): Promise<JobState | null> {
  const interval = options.intervalMs ?? 1000;
  const maxPolls = options.maxPolls ?? 600;
  const sleep = options.sleep ?? defaultSleep;
  for (let i = 0; i < maxPolls; i++) {
    if (options.isCurrent && !options.isCurrent(jobId)) return null;
    const state = await client.getJob(jobId);
    if (options.isCurrent && !options.isCurrent(jobId)) return null;
    options.onProgress?.(state);
    if (state.status === "done" || state.status === "failed") return state;
    await sleep(interval);
  }
  throw new Error(`job ${jobId} still running after ${maxPolls} polls`);
}
