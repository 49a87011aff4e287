// Single-page chat client over the session API: transcript on top,
// clarification prompts inline, composer at the bottom. Input is disabled
// while a request is in flight.

import { SessionApi, StepResultPayload } from "./api.js";
import { renderClarification } from "./clarify.js";
import { answerBubble, emptyState, errorBubble, stepList, userBubble } from "./transcript.js";
import { applyTheme, settingsPanel, storedTheme } from "./theme.js";

export function createApp(root: HTMLElement, api: SessionApi = new SessionApi()): void {
  applyTheme(storedTheme());
  root.textContent = "";

  const header = document.createElement("header");
  const title = document.createElement("h1");
  title.textContent = "soccerql";
  header.appendChild(title);
  header.appendChild(settingsPanel());
  root.appendChild(header);

  const transcript = document.createElement("main");
  transcript.className = "transcript";
  transcript.appendChild(emptyState());
  root.appendChild(transcript);

  const composer = document.createElement("form");
  composer.className = "composer";
  const input = document.createElement("textarea");
  input.rows = 2;
  input.placeholder = "Ask about games, players, seasons...";
  const send = document.createElement("button");
  send.type = "submit";
  send.textContent = "Send";
  composer.appendChild(input);
  composer.appendChild(send);
  root.appendChild(composer);

  let firstQuery = true;
  let busy = false;

  const setBusy = (value: boolean) => {
    busy = value;
    input.disabled = value;
    send.disabled = value;
  };

  const showResult = (result: StepResultPayload) => {
    if (result.type === "answer") {
      transcript.appendChild(stepList(result.steps));
      transcript.appendChild(answerBubble(result.markdown));
      return;
    }
    if (result.type === "failure") {
      transcript.appendChild(errorBubble(result.message));
      return;
    }
    const prompt = renderClarification(result, (selection) => {
      void roundTrip(() => api.clarify(selection));
    });
    transcript.appendChild(prompt);
  };

  const roundTrip = async (call: () => Promise<StepResultPayload>) => {
    setBusy(true);
    try {
      showResult(await call());
    } catch (error) {
      transcript.appendChild(errorBubble(error instanceof Error ? error.message : String(error)));
    } finally {
      setBusy(false);
      transcript.scrollTop = transcript.scrollHeight;
    }
  };

  composer.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value.trim();
    if (!text || busy) return;
    if (firstQuery) {
      transcript.textContent = "";
      firstQuery = false;
    }
    transcript.appendChild(userBubble(text));
    input.value = "";
    void roundTrip(() => api.submitQuery(text));
  });
}
