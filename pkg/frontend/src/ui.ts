/** DOM rendering: transcript with cue badges, device panel, status banner,
 * and the dominant start button. Rendering is a function of the view only.
 */

import { SessionClient } from "./client.js";
import type { Bubble, ClientView } from "./reducer.js";

const CUE_LABELS: Record<string, string> = {
  ack: "got it",
  error: "problem",
  job_done: "job done",
  listening: "listening",
};

export function mount(root: HTMLElement, client: SessionClient): void {
  root.innerHTML = `
    <div class="banner" role="alert" hidden></div>
    <button class="start" type="button">Start</button>
    <main class="transcript" role="log" aria-live="polite" aria-relevant="additions"></main>
    <form class="composer">
      <label>Say something
        <input type="text" name="utterance" autocomplete="off" disabled />
      </label>
      <button type="submit" disabled>Send</button>
    </form>
    <details class="demo">
      <summary>Demo controls</summary>
      <section class="device-panel" aria-label="Device state"></section>
      <button type="button" data-op="inject_fault" data-code="paper_jam">Jam paper</button>
      <button type="button" data-op="inject_fault" data-code="out_of_paper">Empty trays</button>
      <button type="button" data-op="clear_fault" data-code="paper_jam">Clear jam</button>
      <button type="button" data-op="load_paper">Load paper</button>
    </details>
  `;

  const startButton = root.querySelector<HTMLButtonElement>(".start")!;
  const form = root.querySelector<HTMLFormElement>(".composer")!;
  const input = form.querySelector<HTMLInputElement>("input")!;
  const sendButton = form.querySelector<HTMLButtonElement>("button")!;

  startButton.addEventListener("click", () => client.start());
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (client.say(input.value)) input.value = "";
  });
  for (const button of root.querySelectorAll<HTMLButtonElement>(".demo button[data-op]")) {
    button.addEventListener("click", () => {
      const args: Record<string, unknown> = {};
      if (button.dataset.code) args.code = button.dataset.code;
      client.deviceCommand(button.dataset.op!, args);
    });
  }

  client.subscribe((view) => render(root, view));
  render(root, client.view);

  function render(container: HTMLElement, view: ClientView): void {
    const banner = container.querySelector<HTMLElement>(".banner")!;
    banner.hidden = view.banner === null;
    banner.textContent = view.banner ?? "";

    startButton.disabled = view.connection === "connecting" || view.connection === "open";
    input.disabled = !view.composerEnabled;
    sendButton.disabled = !view.composerEnabled;

    const transcript = container.querySelector<HTMLElement>(".transcript")!;
    transcript.replaceChildren(...view.transcript.map(renderBubble));
    transcript.scrollTop = transcript.scrollHeight;

    const panel = container.querySelector<HTMLElement>(".device-panel")!;
    const faults = view.device.faults.length
      ? `faults: ${view.device.faults.join(", ")}`
      : "no faults";
    const jobs = [...view.device.jobs.entries()]
      .map(([id, j]) => `${id}: ${j.status}`)
      .join("; ") || "no jobs";
    panel.textContent = `${faults} — ${jobs}`;
  }
}

function renderBubble(b: Bubble): HTMLElement {
  const el = document.createElement("article");
  el.className = `bubble ${b.speaker}`;
  el.dataset.seq = String(b.seq);
  if (b.rateHint === "slow") el.dataset.rate = "slow";
  for (const cue of b.cues) {
    const badge = document.createElement("span");
    badge.className = "cue";
    badge.textContent = CUE_LABELS[cue] ?? cue;
    el.appendChild(badge);
  }
  const text = document.createElement("p");
  text.textContent = b.text;
  el.appendChild(text);
  return el;
}
