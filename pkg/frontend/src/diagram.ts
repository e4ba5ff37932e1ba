// SVG builders for logical-scenario cards. Arc endpoints come verbatim from
// the service's (entry, exit) pairs; the only client-side work is placing
// entry indices evenly on a circle for drawing.

import type { ClassPayload, ConflictPair } from "./types.js";

const PALETTE = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
  "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"];

export interface Point {
  x: number;
  y: number;
}

export interface DiagramArc {
  carId: number;
  entry: number;
  exit: number;
  from: Point;
  to: Point;
  inConflict: boolean;
}

export function entryPoint(index: number, n: number, cx: number, cy: number, r: number): Point {
  const theta = (2 * Math.PI * index) / n;
  return { x: cx + r * Math.cos(theta), y: cy - r * Math.sin(theta) };
}

function conflictCars(conflicts: ConflictPair[], kinds?: string[]): Set<number> {
  const cars = new Set<number>();
  for (const pair of conflicts) {
    if (kinds && !kinds.includes(pair.kind)) continue;
    cars.add(pair.car_a);
    cars.add(pair.car_b);
  }
  return cars;
}

/** One arc per car, endpoints taken directly from the service payload. */
export function diagramArcs(
  cls: ClassPayload,
  size = 180,
  highlightKinds?: string[],
): DiagramArc[] {
  const n = cls.representative.n;
  const cx = size / 2;
  const cy = size / 2;
  const ring = size * 0.36;
  const flagged = highlightKinds ? conflictCars(cls.conflicts, highlightKinds) : new Set<number>();
  return cls.representative.cars.map((car) => ({
    carId: car.id,
    entry: car.entry,
    exit: car.exit,
    from: entryPoint(car.entry, n, cx, cy, ring),
    to: entryPoint(car.exit, n, cx, cy, ring),
    inConflict: flagged.has(car.id),
  }));
}

export function classCardSvg(
  cls: ClassPayload,
  size = 180,
  highlightKinds?: string[],
): string {
  const n = cls.representative.n;
  const cx = size / 2;
  const cy = size / 2;
  const ring = size * 0.36;
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${size}" height="${size}" viewBox="0 0 ${size} ${size}">`,
    "<defs>",
  ];
  cls.representative.cars.forEach((_, i) => {
    const color = PALETTE[i % PALETTE.length];
    parts.push(
      `<marker id="m${cls.index}-${i}" markerWidth="7" markerHeight="7" refX="5.5" refY="2.5" orient="auto">` +
      `<path d="M0,0 L6,2.5 L0,5 z" fill="${color}"/></marker>`,
    );
  });
  parts.push("</defs>");
  parts.push(`<circle cx="${cx}" cy="${cy}" r="${ring}" fill="none" stroke="#ccc"/>`);
  for (let e = 0; e < n; e++) {
    const p = entryPoint(e, n, cx, cy, ring);
    const label = entryPoint(e, n, cx, cy, ring + 14);
    parts.push(`<circle cx="${p.x.toFixed(2)}" cy="${p.y.toFixed(2)}" r="3.5" fill="#333"/>`);
    parts.push(
      `<text x="${label.x.toFixed(2)}" y="${label.y.toFixed(2)}" font-size="10" ` +
      `text-anchor="middle" dominant-baseline="middle" fill="#555">${e}</text>`,
    );
  }
  diagramArcs(cls, size, highlightKinds).forEach((arc, i) => {
    const color = PALETTE[i % PALETTE.length];
    const width = arc.inConflict ? 4 : 2;
    const glow = arc.inConflict ? ' stroke-opacity="0.95"' : "";
    parts.push(
      `<line x1="${arc.from.x.toFixed(2)}" y1="${arc.from.y.toFixed(2)}" ` +
      `x2="${arc.to.x.toFixed(2)}" y2="${arc.to.y.toFixed(2)}" stroke="${color}" ` +
      `stroke-width="${width}"${glow} marker-end="url(#m${cls.index}-${i})"/>`,
    );
  });
  parts.push("</svg>");
  return parts.join("");
}
