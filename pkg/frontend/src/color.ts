import type { MentalState } from "./types";

/** Sequential red scale: light -> dark encodes underload -> overload. */
export const STATE_COLORS: Record<MentalState, string> = {
  underload: "#fcae91",
  optimal: "#fb6a4a",
  overload: "#a50f15",
};

/** Procedure palette; deliberately free of reds to avoid clashing with the
 * workload scale. Labels hash onto it stably. */
export const PROCEDURE_PALETTE = [
  "#1f77b4",
  "#2ca02c",
  "#9467bd",
  "#3a7f5c",
  "#e7ba52",
  "#17becf",
  "#7f7f7f",
  "#bcbd22",
  "#393b79",
  "#637939",
];

export function procedureColor(label: string, vocabulary: string[]): string {
  const idx = vocabulary.indexOf(label);
  const i = idx >= 0 ? idx : Math.abs(hash(label));
  return PROCEDURE_PALETTE[i % PROCEDURE_PALETTE.length];
}

function hash(text: string): number {
  let h = 0;
  for (let i = 0; i < text.length; i++) h = (h * 31 + text.charCodeAt(i)) | 0;
  return h;
}

export const ERROR_COLOR = "#000000";
export const PHASE_COLORS: Record<string, string> = { PF: "#c7d9ed", FL: "#9fc3e3" };
