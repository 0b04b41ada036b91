// Display formatting: scores round to 4 decimals for reading, while the
// verbatim response value is kept alongside (data attribute / tooltip) so
// nothing the server said is lost.

export function formatScore(score: number): string {
  return score.toFixed(4);
}

export function verbatim(value: number): string {
  return String(value);
}

/** Diverging color for a similarity on [-1, 1]: blue below zero, neutral
 *  at the midpoint, warm at the top. Values outside the range clamp. */
export function simColor(sim: number): string {
  const s = Math.max(-1, Math.min(1, sim));
  const intensity = Math.round(Math.abs(s) * 100) / 100;
  const lightness = 96 - 48 * intensity; // 96% at 0 -> 48% at |1|
  const hue = s >= 0 ? 16 : 215;
  return `hsl(${hue}, 85%, ${lightness}%)`;
}
