// Thin typed client over the documented endpoints. Nothing here invents
// endpoints: POST /repos, GET /jobs/{id}, GET /repos/{id}/issues.
import { Algorithm, ApiError, ApiErrorBody, IssuePrediction, JobCreated, JobState } from "./types.js";

export interface IssueQuery {
  limit: number;
  skills: number;
  algorithm: Algorithm;
}

async function parseError(response: Response): Promise<ApiError> {
  let body: Partial<ApiErrorBody> = {};
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    // non-JSON error body; fall through to generic message
  }
  const code = body.error?.code ?? "http_error";
  const message = body.error?.message ?? `HTTP ${response.status}`;
  return new ApiError(response.status, code, message, body.job_id);
}

export class Client {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: typeof fetch = fetch,
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, { method: "GET" });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  async submitRepo(url: string): Promise<JobCreated> {
    const response = await this.fetchImpl(`${this.baseUrl}/repos`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ url }),
    });
    if (response.status === 409) {
      // a job is already running for this repo; adopt it
      const existing = await parseError(response);
      if (existing.jobId) return { job_id: existing.jobId };
      throw existing;
    }
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as JobCreated;
  }

  async getJob(jobId: string): Promise<JobState> {
    return this.get<JobState>(`/jobs/${encodeURIComponent(jobId)}`);
  }

  async getIssues(repoId: string, query: IssueQuery): Promise<IssuePrediction[]> {
    const params = new URLSearchParams({
      limit: String(query.limit),
      skills: String(query.skills),
      algorithm: query.algorithm,
    });
    return this.get<IssuePrediction[]>(`/repos/${encodeURIComponent(repoId)}/issues?${params}`);
  }
}

/** store key for a repository URL: "<owner>__<name>" */
export function repoIdFromUrl(url: string): string | null {
  const trimmed = url.trim().replace(/\.git$/, "").replace(/\/+$/, "");
  const parts = trimmed.split("/").filter((p) => p.length > 0);
  if (parts.length < 2) return null;
  const owner = parts[parts.length - 2];
  const name = parts[parts.length - 1];
  if (owner.includes(":") || owner.startsWith("http")) return null;
  if (!/^[A-Za-z0-9._-]+$/.test(owner) || !/^[A-Za-z0-9._-]+$/.test(name)) return null;
  return `${owner}__${name}`;
}
