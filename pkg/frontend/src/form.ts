import { Algorithm } from "./types.js";
import { repoIdFromUrl } from "./api.js";

export interface FormState {
  repoUrl: string;
  maxIssues: number;
  maxSkills: number;
  algorithm: Algorithm;
}

export const DEFAULT_FORM: FormState = {
  repoUrl: "",
  maxIssues: 10,
  maxSkills: 3,
  algorithm: "rf",
};

export interface ValidationResult {
  ok: boolean;
  problems: string[];
}

/** Submit stays disabled until the URL is present and limits are in range. */
export function validateForm(form: FormState): ValidationResult {
  const problems: string[] = [];
  if (!form.repoUrl.trim()) {
    problems.push("repository URL is required");
  } else if (repoIdFromUrl(form.repoUrl) === null) {
    problems.push("repository URL must name owner/repository");
  }
  if (!Number.isInteger(form.maxIssues) || form.maxIssues < 1 || form.maxIssues > 100) {
    problems.push("issues must be between 1 and 100");
  }
  if (!Number.isInteger(form.maxSkills) || form.maxSkills < 1 || form.maxSkills > 10) {
    problems.push("skills must be between 1 and 10");
  }
  if (form.algorithm !== "rf" && form.algorithm !== "llm") {
    problems.push("algorithm must be rf or llm");
  }
  return { ok: problems.length === 0, problems };
}
