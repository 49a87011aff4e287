import { describe, expect, it, vi } from "vitest";

import type { ClarificationPayload } from "./api.js";
import { renderClarification } from "./clarify.js";

function payload(names: string[]): ClarificationPayload {
  return {
    type: "clarification",
    raw_value: "Lionel",
    options: names.map((canonical, index) => ({ index, canonical })),
    allow_pass_through: true,
  };
}

describe("renderClarification", () => {
  it("renders one button per candidate plus keep-original", () => {
    const element = renderClarification(payload(["Lionel Carole", "Lionel Messi"]), () => {});
    const buttons = [...element.querySelectorAll("button")];
    expect(buttons).toHaveLength(3);
    expect(buttons.map((b) => b.textContent)).toEqual([
      "Lionel Carole",
      "Lionel Messi",
      'Keep "Lionel"',
    ]);
  });

  it("scales with the candidate count", () => {
    const element = renderClarification(payload(["A", "B", "C"]), () => {});
    expect(element.querySelectorAll("button")).toHaveLength(4);
  });

  it("posts the picked candidate index", () => {
    const onChoose = vi.fn();
    const element = renderClarification(payload(["Lionel Carole", "Lionel Messi"]), onChoose);
    const buttons = element.querySelectorAll("button");
    (buttons[1] as HTMLButtonElement).click();
    expect(onChoose).toHaveBeenCalledExactlyOnceWith(1);
  });

  it("posts pass-through for keep-original", () => {
    const onChoose = vi.fn();
    const element = renderClarification(payload(["Lionel Carole"]), onChoose);
    const buttons = element.querySelectorAll("button");
    (buttons[buttons.length - 1] as HTMLButtonElement).click();
    expect(onChoose).toHaveBeenCalledExactlyOnceWith("pass");
  });

  it("suppresses a second click entirely", () => {
    const onChoose = vi.fn();
    const element = renderClarification(payload(["Lionel Carole", "Lionel Messi"]), onChoose);
    const first = element.querySelector("button") as HTMLButtonElement;
    first.click();
    first.click();
    const buttons = element.querySelectorAll("button");
    (buttons[1] as HTMLButtonElement).click();
    expect(onChoose).toHaveBeenCalledTimes(1);
  });

  it("disables every button after the choice", () => {
    const element = renderClarification(payload(["A", "B"]), () => {});
    (element.querySelector("button") as HTMLButtonElement).click();
    for (const button of element.querySelectorAll("button")) {
      expect((button as HTMLButtonElement).disabled).toBe(true);
    }
    expect(element.classList.contains("settled")).toBe(true);
  });
});
