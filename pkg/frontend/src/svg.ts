const SVG_NS = "http://www.w3.org/2000/svg";

export function svgElement<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [name, value] of Object.entries(attrs)) {
    el.setAttribute(name, value);
  }
  return el;
}

/** Maps a value from [lo, hi] onto [outLo, outHi]; degenerate ranges map to the midpoint. */
export function scaleLinear(lo: number, hi: number, outLo: number, outHi: number): (v: number) => number {
  if (hi === lo) {
    const mid = (outLo + outHi) / 2;
    return () => mid;
  }
  const k = (outHi - outLo) / (hi - lo);
  return (v: number) => outLo + (v - lo) * k;
}

/** Builds an SVG polyline `points` string from paired coordinates. */
export function pointString(xs: readonly number[], ys: readonly number[]): string {
  const parts: string[] = [];
  const n = Math.min(xs.length, ys.length);
  for (let i = 0; i < n; i += 1) {
    parts.push(`${xs[i]},${ys[i]}`);
  }
  return parts.join(" ");
}

export function extent(rows: readonly (readonly number[])[]): [number, number] {
  let lo = Number.POSITIVE_INFINITY;
  let hi = Number.NEGATIVE_INFINITY;
  for (const row of rows) {
    for (const v of row) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (lo === Number.POSITIVE_INFINITY) {
    return [0, 1];
  }
  return [lo, hi];
}
