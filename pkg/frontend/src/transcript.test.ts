import { describe, expect, it } from "vitest";

import type { HistoryEntry } from "./api.js";
import { renderTranscript } from "./transcript.js";

function render(history: HistoryEntry[]): HTMLElement {
  const container = document.createElement("div");
  renderTranscript(container, history);
  return container;
}

describe("renderTranscript", () => {
  it("shows an empty-state hint for a fresh session", () => {
    const container = render([]);
    expect(container.querySelector(".empty-state")).not.toBeNull();
  });

  it("renders every step entry exactly once", () => {
    const container = render([
      { kind: "user", text: "how many games?" },
      { kind: "step", text: "extraction: extracted 0 properties: none" },
      { kind: "step", text: "validation: nothing to validate" },
      { kind: "step", text: "generation: generated SQL in 1 attempt(s)" },
      { kind: "step", text: "execution: query returned 1 row(s)" },
      { kind: "answer", text: "The answer is 40." },
    ]);
    const steps = [...container.querySelectorAll(".step")];
    expect(steps).toHaveLength(4);
    expect(new Set(steps.map((s) => s.textContent)).size).toBe(4);
    expect(container.querySelectorAll(".bubble.answer")).toHaveLength(1);
  });

  it("renders a failure entry as an error bubble", () => {
    const container = render([
      { kind: "user", text: "???" },
      { kind: "failure", text: "could not understand the question" },
    ]);
    const error = container.querySelector(".bubble.error");
    expect(error).not.toBeNull();
    expect(error!.textContent).toContain("could not understand");
  });

  it("renders answers through the markdown renderer", () => {
    const container = render([
      { kind: "user", text: "table" },
      { kind: "answer", text: "| A | B |\n| --- | --- |\n| 1 | 2 |" },
    ]);
    expect(container.querySelector(".bubble.answer table")).not.toBeNull();
  });

  it("keeps user bubbles and clarification notes in order", () => {
    const container = render([
      { kind: "user", text: "q" },
      { kind: "clarification", text: "which player did you mean by 'Lionel'?" },
      { kind: "answer", text: "done" },
    ]);
    const classes = [...container.children].map((c) => c.className);
    expect(classes[0]).toContain("user");
    expect(classes[1]).toContain("clarification-note");
    expect(classes[2]).toContain("answer");
  });
});
