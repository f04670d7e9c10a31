/** Thin client for the session service: REST calls plus the SSE stream. */

import type { AffectReply, PublicState, ServerEvent } from "./types.js";

export interface SessionHandle {
  baseUrl: string;
  sessionId: string;
}

export async function createSession(
  baseUrl: string,
  variant = "lekia",
): Promise<{ handle: SessionHandle; state: PublicState }> {
  const response = await fetch(`${baseUrl}/sessions`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ variant }),
  });
  if (!response.ok) {
    throw new Error(`session creation failed: ${response.status}`);
  }
  const body = (await response.json()) as { session_id: string; state: PublicState };
  return { handle: { baseUrl, sessionId: body.session_id }, state: body.state };
}

export async function sendTurn(
  handle: SessionHandle,
  text: string,
): Promise<{ reply: AffectReply; state: PublicState }> {
  const response = await fetch(`${handle.baseUrl}/sessions/${handle.sessionId}/turns`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ text }),
  });
  if (response.status === 409) {
    throw new Error("session already complete");
  }
  if (!response.ok) {
    throw new Error(`turn failed: ${response.status}`);
  }
  return (await response.json()) as { reply: AffectReply; state: PublicState };
}

export async function fetchInspector(handle: SessionHandle): Promise<PublicState> {
  const response = await fetch(`${handle.baseUrl}/sessions/${handle.sessionId}/inspector`);
  if (!response.ok) {
    throw new Error(`inspector fetch failed: ${response.status}`);
  }
  return (await response.json()) as PublicState;
}

export interface StreamCallbacks {
  onEvent: (event: ServerEvent) => void;
  onStatus: (status: "open" | "closed") => void;
}

/**
 * Subscribe to the session's event stream (replaying history first, so a
 * page reload rebuilds the identical view). Returns a close function.
 */
export function subscribe(handle: SessionHandle, callbacks: StreamCallbacks): () => void {
  const source = new EventSource(
    `${handle.baseUrl}/sessions/${handle.sessionId}/events?replay=1&live=1`,
  );
  source.onopen = () => callbacks.onStatus("open");
  source.onmessage = (message: MessageEvent<string>) => {
    callbacks.onEvent(JSON.parse(message.data) as ServerEvent);
  };
  source.onerror = () => {
    callbacks.onStatus("closed");
  };
  return () => {
    source.close();
    callbacks.onStatus("closed");
  };
}
