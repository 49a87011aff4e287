// Clarification prompt: one button per candidate plus "keep original".
// The first click posts the choice and disables the whole prompt, so a
// double-click can never send a second request.

import type { ClarificationPayload } from "./api.js";

export function renderClarification(
  payload: ClarificationPayload,
  onChoose: (selection: number | "pass") => void,
): HTMLElement {
  const container = document.createElement("div");
  container.className = "clarification";

  const prompt = document.createElement("p");
  prompt.className = "clarification-prompt";
  prompt.textContent = `Which value did you mean by "${payload.raw_value}"?`;
  container.appendChild(prompt);

  const buttons = document.createElement("div");
  buttons.className = "clarification-buttons";
  let settled = false;

  const choose = (selection: number | "pass") => {
    if (settled) return;
    settled = true;
    container.classList.add("settled");
    for (const button of buttons.querySelectorAll("button")) {
      button.disabled = true;
    }
    onChoose(selection);
  };

  for (const option of payload.options) {
    const button = document.createElement("button");
    button.type = "button";
    button.className = "clarify-option";
    button.textContent = option.canonical;
    button.addEventListener("click", () => choose(option.index));
    buttons.appendChild(button);
  }

  const keep = document.createElement("button");
  keep.type = "button";
  keep.className = "clarify-pass";
  keep.textContent = `Keep "${payload.raw_value}"`;
  keep.addEventListener("click", () => choose("pass"));
  buttons.appendChild(keep);

  container.appendChild(buttons);
  return container;
}
