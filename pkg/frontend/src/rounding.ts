/**
 * Display rounding for probabilities.
 *
 * Every number shown in the UI is a service-reported probability rounded
 * half-up to one decimal percent. No probability arithmetic happens here
 * beyond the rounding itself.
 */

/** Round a probability to one decimal percent, halves up: 0.7631 -> 76.3. */
export function displayPercent(probability: number): number {
  return Math.round(probability * 1000) / 10;
}

/** Format a probability for display: 0.7631 -> "76.3%". */
export function formatPercent(probability: number): string {
  return `${displayPercent(probability).toFixed(1)}%`;
}
