/**
 * Box colorization by visibility: a fixed red-to-green ramp.
 *
 * Color is a pure function of the visibility score; greener always means
 * more visible. Raw float components back the monotonicity guarantee,
 * the CSS string just rounds them for display.
 */

export interface RampColor {
  r: number;
  g: number;
  b: number;
}

export function visibilityColor(v: number): RampColor {
  const clamped = Math.min(1, Math.max(0, v));
  return { r: 220 * (1 - clamped), g: 200 * clamped, b: 40 };
}

export function visibilityCss(v: number): string {
  const c = visibilityColor(v);
  return `rgb(${Math.round(c.r)}, ${Math.round(c.g)}, ${Math.round(c.b)})`;
}
