/**
 * Console state as a pure fold over server events.
 *
 * The view never infers anything client-side: every event carries the
 * engine-reported state snapshot, and the console state is a function of the
 * event sequence alone. Replaying a recorded stream therefore reproduces the
 * exact same view, which is also how reconnects work.
 */

import type {
  AffectLabel,
  ConnectionStatus,
  PublicState,
  ServerEvent,
  TranscriptLine,
} from "./types.js";

export interface ConsoleState {
  sessionId: string | null;
  connection: ConnectionStatus;
  transcript: TranscriptLine[];
  affect: AffectLabel;
  inspector: PublicState | null;
}

export function initialState(): ConsoleState {
  return {
    sessionId: null,
    connection: "connecting",
    transcript: [],
    affect: "neutral",
    inspector: null,
  };
}

/** Apply one server event; never mutates its input. */
export function applyEvent(state: ConsoleState, event: ServerEvent): ConsoleState {
  switch (event.type) {
    case "session_created":
      return {
        ...state,
        sessionId: event.state.session_id,
        inspector: event.state,
      };
    case "turn":
      return {
        ...state,
        sessionId: event.state.session_id,
        transcript: [
          ...state.transcript,
          { speaker: "you", text: event.user_text },
          { speaker: "counselor", text: event.reply.text, affect: event.reply.affect },
        ],
        affect: event.reply.affect,
        inspector: event.state,
      };
    default:
      return state;
  }
}

export function foldEvents(events: ServerEvent[], from?: ConsoleState): ConsoleState {
  return events.reduce(applyEvent, from ?? initialState());
}

export function setConnection(state: ConsoleState, connection: ConnectionStatus): ConsoleState {
  return { ...state, connection };
}

// ---------------------------------------------------------------------------
// Inspector view model (pure, DOM-free, unit-testable)
// ---------------------------------------------------------------------------

export interface InspectorView {
  stageLine: string;
  flagLines: { name: string; done: boolean }[];
  offerLine: string;
  cooldownBadge: string | null;
  decisionLine: string | null;
  claimLines: string[];
  evidenceLine: string;
  completeBanner: boolean;
}

export function inspectorView(state: PublicState): InspectorView {
  const flagLines = Object.entries(state.flags).map(([name, done]) => ({ name, done }));
  const decision = state.last_decision;
  return {
    stageLine:
      state.stage === null ? `variant: ${state.variant}` : `phase: ${state.stage}`,
    flagLines,
    offerLine: state.offer_pending ? "transition offered, awaiting reply" : "no offer pending",
    cooldownBadge:
      state.cooldown_remaining > 0 ? `cooldown: ${state.cooldown_remaining}` : null,
    decisionLine: decision ? `turn ${decision.turn}: ${decision.action} (${decision.reason})` : null,
    claimLines: state.claims.map((c) => `${c.key} = ${c.content} (t${c.source_turn})`),
    evidenceLine: Object.entries(state.evidence_digest)
      .map(([name, count]) => `${name}: ${count}`)
      .join("  ·  "),
    completeBanner: state.complete,
  };
}
