import { Algorithm, IssuePrediction, JobState } from "./types.js";

export interface IssueCardViewModel {
  issue: number;
  title: string;
  link: string;
  algorithm: Algorithm;
  chips: { path: string; score: number }[];
}

/** Chips are already score-ordered by the server; enforce the per-card cap
 * and ordering defensively so the view model invariants hold regardless. */
export function toCardViewModel(prediction: IssuePrediction, maxSkills: number): IssueCardViewModel {
  const chips = [...prediction.skills]
    .sort((a, b) => b.score - a.score)
    .slice(0, maxSkills)
    .map((chip) => ({ path: chip.display_path, score: chip.score }));
  return {
    issue: prediction.issue,
    title: prediction.title,
    link: prediction.url,
    algorithm: prediction.algorithm,
    chips,
  };
}

export function progressText(state: JobState): string {
  const counters = Object.entries(state.progress)
    .map(([stage, count]) => `${stage}: ${count}`)
    .join(", ");
  return counters ? `${state.status} (${counters})` : state.status;
}

export function renderCards(container: HTMLElement, cards: IssueCardViewModel[]): void {
  container.replaceChildren();
  for (const card of cards) {
    const article = document.createElement("article");
    article.className = "issue-card";
    article.dataset.issue = String(card.issue);

    const heading = document.createElement("h3");
    const link = document.createElement("a");
    link.href = card.link;
    link.textContent = `#${card.issue} ${card.title}`;
    heading.appendChild(link);

    const badge = document.createElement("span");
    badge.className = "algorithm-badge";
    badge.textContent = card.algorithm;
    heading.appendChild(badge);
    article.appendChild(heading);

    const chips = document.createElement("div");
    chips.className = "chips";
    for (const chip of card.chips) {
      const el = document.createElement("span");
      el.className = "chip";
      el.textContent = `${chip.path} (${chip.score.toFixed(2)})`;
      chips.appendChild(el);
    }
    if (card.chips.length === 0) {
      const el = document.createElement("span");
      el.className = "chip chip-empty";
      el.textContent = "no skills predicted";
      chips.appendChild(el);
    }
    article.appendChild(chips);
    container.appendChild(article);
  }
}

export function renderEmptyState(container: HTMLElement, message: string): void {
  container.replaceChildren();
  const p = document.createElement("p");
  p.className = "empty-state";
  p.textContent = message;
  container.appendChild(p);
}
