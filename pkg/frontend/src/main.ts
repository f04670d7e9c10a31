/** DOM wiring: one session per tab, state rebuilt purely from server events. */

import { expressionFor } from "./avatar.js";
import { createSession, sendTurn, subscribe, type SessionHandle } from "./client.js";
import {
  applyEvent,
  initialState,
  inspectorView,
  setConnection,
  type ConsoleState,
} from "./state.js";
import type { ServerEvent } from "./types.js";

const DEFAULT_BASE_URL = "http://127.0.0.1:8742";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let state: ConsoleState = initialState();
let handle: SessionHandle | null = null;

function render(): void {
  const transcript = el<HTMLDivElement>("transcript");
  transcript.innerHTML = "";
  for (const line of state.transcript) {
    const bubble = document.createElement("div");
    bubble.className = `line ${line.speaker}`;
    bubble.textContent = line.text;
    transcript.appendChild(bubble);
  }
  transcript.scrollTop = transcript.scrollHeight;

  el<HTMLImageElement>("avatar").src = expressionFor(state.affect);
  el<HTMLSpanElement>("affect-label").textContent = state.affect;

  const statusBanner = el<HTMLDivElement>("status");
  statusBanner.textContent =
    state.connection === "open" ? "connected" : state.connection;
  statusBanner.className = `status ${state.connection}`;
  const input = el<HTMLInputElement>("input");
  const completed = state.inspector?.complete ?? false;
  input.disabled = state.connection !== "open" || completed;

  const panel = el<HTMLDivElement>("inspector");
  panel.innerHTML = "";
  if (!state.inspector) return;
  const view = inspectorView(state.inspector);

  const add = (cls: string, text: string) => {
    const row = document.createElement("div");
    row.className = cls;
    row.textContent = text;
    panel.appendChild(row);
  };
  add("stage", view.stageLine);
  for (const flag of view.flagLines) {
    add(`flag ${flag.done ? "done" : "open"}`, `${flag.done ? "✓" : "·"} ${flag.name}`);
  }
  add("offer", view.offerLine);
  if (view.cooldownBadge) add("cooldown", view.cooldownBadge);
  if (view.decisionLine) add("decision", view.decisionLine);
  if (view.claimLines.length) {
    add("heading", "what the engine believes");
    for (const claim of view.claimLines) add("claim", claim);
  }
  add("evidence", view.evidenceLine);
  if (view.completeBanner) add("complete", "session complete, thank you");
}

function onServerEvent(event: ServerEvent): void {
  state = applyEvent(state, event);
  render();
}

async function boot(): Promise<void> {
  const baseUrl = new URLSearchParams(location.search).get("api") ?? DEFAULT_BASE_URL;
  try {
    const created = await createSession(baseUrl, "lekia");
    handle = created.handle;
  } catch (error) {
    state = setConnection(state, "closed");
    render();
    el<HTMLDivElement>("status").textContent = `cannot reach ${baseUrl}`;
    return;
  }
  subscribe(handle, {
    onEvent: onServerEvent,
    onStatus: (status) => {
      state = setConnection(state, status);
      render();
    },
  });

  const input = el<HTMLInputElement>("input");
  el<HTMLFormElement>("composer").addEventListener("submit", async (submit) => {
    submit.preventDefault();
    const text = input.value.trim();
    if (!text || !handle) return;
    input.value = "";
    input.disabled = true;
    try {
      await sendTurn(handle, text);
      // the turn event arrives over the stream and drives the render
    } catch (error) {
      el<HTMLDivElement>("status").textContent = String(error);
    } finally {
      input.disabled = state.connection !== "open";
      input.focus();
    }
  });
}

void boot();
