/** Wire types mirrored from the session service's public API. */

export type AffectLabel =
  | "warm"
  | "curious"
  | "sad"
  | "neutral"
  | "encouraging"
  | "concerned";

export interface GateDecisionView {
  turn: number;
  rule_gate: boolean;
  user_gate: string | null;
  action: string;
  reason: string;
  cooldown_remaining?: number;
}

export interface ClaimView {
  key: string;
  content: string;
  status: string;
  source_turn: number;
}

/** Engine-reported state; the inspector renders exactly this, no client inference. */
export interface PublicState {
  session_id: string;
  variant: string;
  turn_count: number;
  complete: boolean;
  pending_update: string;
  stage: string | null;
  flags: Record<string, boolean>;
  offer_pending: boolean;
  cooldown_remaining: number;
  last_decision: GateDecisionView | null;
  claims: ClaimView[];
  evidence_digest: Record<string, number>;
}

export interface AffectReply {
  text: string;
  affect: AffectLabel;
}

export type ServerEvent =
  | { type: "session_created"; state: PublicState }
  | {
      type: "turn";
      turn: number;
      user_text: string;
      reply: AffectReply;
      state: PublicState;
    };

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface TranscriptLine {
  speaker: "you" | "counselor";
  text: string;
  affect?: AffectLabel;
}
