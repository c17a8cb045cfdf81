// Shapes of the skillscope HTTP API responses this client consumes.

export type Algorithm = "rf" | "llm";

export interface JobCreated {
  job_id: string;
}

export interface JobState {
  job_id: string;
  kind: string;
  repo: string;
  status: "queued" | "running" | "done" | "failed";
  progress: Record<string, number>;
  error: { code: string; message: string } | null;
  created_at: number;
  started_at: number | null;
  finished_at: number | null;
}

export interface SkillChip {
  label: string;
  display_path: string;
  score: number;
}

export interface IssuePrediction {
  issue: number;
  title: string;
  url: string;
  algorithm: Algorithm;
  skills: SkillChip[];
}

export interface ApiErrorBody {
  error: { code: string; message: string };
  job_id?: string;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public jobId?: string,
  ) {
    super(message);
  }
}
