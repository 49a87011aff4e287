import { beforeEach, describe, expect, it, vi } from "vitest";

import { SessionApi } from "./api.js";
import { createApp } from "./app.js";

const ANSWER = {
  type: "answer",
  markdown:
    "| HomeTeam | AwayTeam | Score | Venue | Attendance | Date |\n" +
    "| --- | --- | --- | --- | --- | --- |\n" +
    "| Manchester United | Arsenal | 3-1 | Old Trafford | 74000 | 2016-11-19 |",
  sql: "SELECT 1",
  steps: [
    { stage: "extraction", detail: "extracted 2 properties" },
    { stage: "validation", detail: "all resolved" },
    { stage: "generation", detail: "generated SQL in 1 attempt(s)" },
    { stage: "execution", detail: "query returned 1 row(s)" },
  ],
};

const CLARIFICATION = {
  type: "clarification",
  raw_value: "Lionel",
  options: [
    { index: 0, canonical: "Lionel Carole" },
    { index: 1, canonical: "Lionel Messi" },
  ],
  allow_pass_through: true,
};

interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

function stubFetch(program: Record<string, unknown[]>) {
  const calls: RecordedCall[] = [];
  const queues = new Map(Object.entries(program).map(([k, v]) => [k, [...v]]));
  const fetchStub = vi.fn(async (url: string, init?: RequestInit) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : null;
    calls.push({ url, method, body });
    const key = url.replace(/^.*\/sessions/, "/sessions");
    if (key === "/sessions") {
      return new Response(JSON.stringify({ session_id: "s1" }), { status: 201 });
    }
    const queue = queues.get(key);
    if (!queue || queue.length === 0) throw new Error(`no stub for ${key}`);
    return new Response(JSON.stringify(queue.shift()), { status: 200 });
  });
  vi.stubGlobal("fetch", fetchStub);
  return calls;
}

async function flush() {
  // Response.json() resolves on macrotask turns in Node, not just microtasks
  for (let i = 0; i < 10; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

function submitQuestion(root: HTMLElement, text: string) {
  const input = root.querySelector("textarea") as HTMLTextAreaElement;
  input.value = text;
  (root.querySelector(".composer") as HTMLFormElement).dispatchEvent(
    new Event("submit", { cancelable: true }),
  );
}

beforeEach(() => {
  vi.unstubAllGlobals();
  localStorage.clear();
  document.body.innerHTML = "";
});

describe("createApp", () => {
  it("runs a one-step question end to end against the stubbed API", async () => {
    const calls = stubFetch({ "/sessions/s1/query": [ANSWER] });
    const root = document.createElement("div");
    document.body.appendChild(root);
    createApp(root, new SessionApi(""));

    submitQuestion(root, "List all games played by ManU in the 16-17 season.");
    await flush();

    expect(calls.map((c) => c.method)).toEqual(["POST", "POST"]);
    expect(calls[1].body).toEqual({ text: "List all games played by ManU in the 16-17 season." });
    const headers = [...root.querySelectorAll("th")].map((th) => th.textContent);
    expect(headers).toEqual(["HomeTeam", "AwayTeam", "Score", "Venue", "Attendance", "Date"]);
    expect(root.querySelectorAll(".step")).toHaveLength(4);
  });

  it("clarification click posts exactly once even when double-clicked", async () => {
    const calls = stubFetch({
      "/sessions/s1/query": [CLARIFICATION],
      "/sessions/s1/clarify": [ANSWER],
    });
    const root = document.createElement("div");
    document.body.appendChild(root);
    createApp(root, new SessionApi(""));

    submitQuestion(root, "games Lionel got a yellow card");
    await flush();
    const optionButtons = root.querySelectorAll(".clarify-option");
    expect(optionButtons).toHaveLength(2);
    expect(root.querySelectorAll(".clarification button")).toHaveLength(3);

    (optionButtons[1] as HTMLButtonElement).click();
    (optionButtons[1] as HTMLButtonElement).click();
    await flush();

    const clarifyCalls = calls.filter((c) => c.url.endsWith("/clarify"));
    expect(clarifyCalls).toHaveLength(1);
    expect(clarifyCalls[0].body).toEqual({ selection: 1 });
    expect(root.querySelector(".bubble.answer")).not.toBeNull();
  });

  it("pass-through button posts the pass selection", async () => {
    const calls = stubFetch({
      "/sessions/s1/query": [CLARIFICATION],
      "/sessions/s1/clarify": [ANSWER],
    });
    const root = document.createElement("div");
    document.body.appendChild(root);
    createApp(root, new SessionApi(""));

    submitQuestion(root, "games Lionel got a yellow card");
    await flush();
    (root.querySelector(".clarify-pass") as HTMLButtonElement).click();
    await flush();

    const clarifyCalls = calls.filter((c) => c.url.endsWith("/clarify"));
    expect(clarifyCalls).toHaveLength(1);
    expect(clarifyCalls[0].body).toEqual({ selection: "pass" });
  });

  it("disables the composer while a request is in flight", async () => {
    let release: (value: Response) => void = () => {};
    const pending = new Promise<Response>((resolve) => {
      release = resolve;
    });
    const fetchStub = vi.fn(async (url: string) => {
      if (url.endsWith("/sessions")) {
        return new Response(JSON.stringify({ session_id: "s1" }), { status: 201 });
      }
      return pending;
    });
    vi.stubGlobal("fetch", fetchStub);
    const root = document.createElement("div");
    document.body.appendChild(root);
    createApp(root, new SessionApi(""));

    submitQuestion(root, "slow question");
    await flush();
    expect((root.querySelector("textarea") as HTMLTextAreaElement).disabled).toBe(true);

    release(new Response(JSON.stringify(ANSWER), { status: 200 }));
    await flush();
    expect((root.querySelector("textarea") as HTMLTextAreaElement).disabled).toBe(false);
  });

  it("renders server failures as error bubbles", async () => {
    stubFetch({
      "/sessions/s1/query": [{ type: "failure", message: "could not answer the question" }],
    });
    const root = document.createElement("div");
    document.body.appendChild(root);
    createApp(root, new SessionApi(""));

    submitQuestion(root, "???");
    await flush();
    expect(root.querySelector(".bubble.error")?.textContent).toContain("could not answer");
  });
});
