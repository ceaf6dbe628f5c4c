/** Shared color conventions: content types and the heatmap ramp. */

export const CONTENT_COLORS: Record<string, string> = {
  personal: '#3b82d8', // blue
  collaborative: '#8b5cf6', // violet
  shared: '#22a06b', // green
};

export const SELECTION_YELLOW = '#f5d90a';

/** Server color classes -> rgba fills; white stays transparent so thumbnail
 * content shines through the heatmap grid. */
export const HEAT_FILLS: Record<string, string> = {
  white: 'rgba(255,255,255,0)',
  cold: 'rgba(49,102,179,0.55)',
  cool: 'rgba(90,155,213,0.55)',
  mild: 'rgba(250,216,120,0.55)',
  warm: 'rgba(244,121,72,0.60)',
  hot: 'rgba(211,47,47,0.65)',
};

/** Striped background for calendar days with more than one content type. */
export function stripedBackground(colors: string[]): string {
  const band = 7;
  const stops = colors
    .map((c, i) => `${c} ${i * band}px ${(i + 1) * band}px`)
    .join(', ');
  return `repeating-linear-gradient(45deg, ${stops})`;
}
