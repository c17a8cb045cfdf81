import { IssuePrediction } from "./types.js";

/**
 * Client-side filter: keep issues that carry every selected skill label.
 * Pure set logic, so filtering is idempotent and order of selection cannot
 * matter. An empty selection returns the full list.
 */
export function filterBySkills(
  issues: IssuePrediction[],
  selected: ReadonlySet<string>,
): IssuePrediction[] {
  if (selected.size === 0) return issues;
  return issues.filter((issue) => {
    const labels = new Set(issue.skills.map((chip) => chip.label));
    for (const wanted of selected) {
      if (!labels.has(wanted)) return false;
    }
    return true;
  });
}

/** Distinct skill labels present in a result page, sorted for stable UI. */
export function availableSkills(issues: IssuePrediction[]): { label: string; path: string }[] {
  const seen = new Map<string, string>();
  for (const issue of issues) {
    for (const chip of issue.skills) {
      if (!seen.has(chip.label)) seen.set(chip.label, chip.display_path);
    }
  }
  return [...seen.entries()]
    .map(([label, path]) => ({ label, path }))
    .sort((a, b) => a.label.localeCompare(b.label));
}
