import { describe, expect, it } from "vitest";

import { renderMarkdown } from "./markdown.js";

const GAME_TABLE = [
  "Here are the 2 matching games:",
  "",
  "| HomeTeam | AwayTeam | Score | Venue | Attendance | Date |",
  "| --- | --- | --- | --- | --- | --- |",
  "| Manchester United | Arsenal | 3-1 | Old Trafford | 74000 | 2016-11-19 |",
  "| Chelsea | Manchester United | 0-2 | Stamford Bridge | 41000 | 2017-03-18 |",
].join("\n");

function renderInto(markdown: string): HTMLElement {
  const host = document.createElement("div");
  host.appendChild(renderMarkdown(markdown));
  return host;
}

describe("renderMarkdown", () => {
  it("renders a pipe table with the six game-listing headers", () => {
    const host = renderInto(GAME_TABLE);
    const table = host.querySelector("table");
    expect(table).not.toBeNull();
    const headers = [...table!.querySelectorAll("th")].map((th) => th.textContent);
    expect(headers).toEqual(["HomeTeam", "AwayTeam", "Score", "Venue", "Attendance", "Date"]);
    expect(table!.querySelectorAll("tbody tr")).toHaveLength(2);
  });

  it("renders the lead sentence as a paragraph before the table", () => {
    const host = renderInto(GAME_TABLE);
    expect(host.firstElementChild?.tagName).toBe("P");
    expect(host.firstElementChild?.textContent).toContain("2 matching games");
  });

  it("renders bullet lists", () => {
    const host = renderInto("Teams played for:\n- Lionel Messi: FC Barcelona\n- Thierry Henry: Arsenal");
    const items = [...host.querySelectorAll("li")].map((li) => li.textContent);
    expect(items).toEqual(["Lionel Messi: FC Barcelona", "Thierry Henry: Arsenal"]);
  });

  it("strips inline bold and code markers", () => {
    const host = renderInto("The answer is **3** from `games`.");
    expect(host.textContent).toBe("The answer is 3 from games.");
  });

  it("never injects markup from answer text", () => {
    const host = renderInto("<img src=x onerror=alert(1)> | <b>bold</b>");
    expect(host.querySelector("img")).toBeNull();
    expect(host.querySelector("b")).toBeNull();
    expect(host.textContent).toContain("<img src=x onerror=alert(1)>");
  });

  it("tolerates a table at the very end without body rows", () => {
    const host = renderInto("| A | B |\n| --- | --- |");
    expect(host.querySelectorAll("th")).toHaveLength(2);
    expect(host.querySelectorAll("tbody tr")).toHaveLength(0);
  });
});
