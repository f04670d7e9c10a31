/**
 * Affect label -> static expression asset.
 *
 * One asset per label the engine can emit, no default: an unknown label is a
 * contract break and must fail loudly rather than render a silent fallback.
 */

import type { AffectLabel } from "./types.js";

export const AFFECT_EXPRESSIONS: Record<AffectLabel, string> = {
  warm: "assets/warm.svg",
  curious: "assets/curious.svg",
  sad: "assets/sad.svg",
  neutral: "assets/neutral.svg",
  encouraging: "assets/encouraging.svg",
  concerned: "assets/concerned.svg",
};

export function expressionFor(label: string): string {
  const asset = AFFECT_EXPRESSIONS[label as AffectLabel];
  if (asset === undefined) {
    throw new Error(`no expression asset for affect label "${label}"`);
  }
  return asset;
}
