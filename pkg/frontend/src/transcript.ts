// Transcript rendering: user bubbles, collapsible step feedback, markdown
// answers, error bubbles. Each server entry appears exactly once.

import type { HistoryEntry, StepFeedback } from "./api.js";
import { renderMarkdown } from "./markdown.js";

export function emptyState(): HTMLElement {
  const hint = document.createElement("div");
  hint.className = "empty-state";
  hint.textContent =
    "Ask about the archive, for example: How many yellow cards did messi get in the 2015-16 season on home turf?";
  return hint;
}

export function userBubble(text: string): HTMLElement {
  const bubble = document.createElement("div");
  bubble.className = "bubble user";
  bubble.textContent = text;
  return bubble;
}

export function stepList(steps: StepFeedback[]): HTMLElement {
  const list = document.createElement("ul");
  list.className = "steps";
  for (const step of steps) {
    const item = document.createElement("li");
    item.className = "step";
    item.textContent = `${step.stage}: ${step.detail}`;
    list.appendChild(item);
  }
  return list;
}

export function answerBubble(markdown: string): HTMLElement {
  const bubble = document.createElement("div");
  bubble.className = "bubble answer";
  bubble.appendChild(renderMarkdown(markdown));
  return bubble;
}

export function errorBubble(message: string): HTMLElement {
  const bubble = document.createElement("div");
  bubble.className = "bubble error";
  bubble.textContent = message;
  return bubble;
}

export function renderTranscript(container: HTMLElement, history: HistoryEntry[]): void {
  container.textContent = "";
  if (history.length === 0) {
    container.appendChild(emptyState());
    return;
  }
  let steps: StepFeedback[] = [];
  const flushSteps = () => {
    if (steps.length > 0) {
      container.appendChild(stepList(steps));
      steps = [];
    }
  };
  for (const entry of history) {
    switch (entry.kind) {
      case "user":
        flushSteps();
        container.appendChild(userBubble(entry.text));
        break;
      case "step": {
        const [stage, ...rest] = entry.text.split(": ");
        steps.push({ stage, detail: rest.join(": ") });
        break;
      }
      case "clarification": {
        flushSteps();
        const note = document.createElement("div");
        note.className = "bubble clarification-note";
        note.textContent = entry.text;
        container.appendChild(note);
        break;
      }
      case "answer":
        flushSteps();
        container.appendChild(answerBubble(entry.text));
        break;
      case "failure":
        flushSteps();
        container.appendChild(errorBubble(entry.text));
        break;
    }
  }
  flushSteps();
}
