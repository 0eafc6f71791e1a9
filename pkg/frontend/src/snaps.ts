/** Parser for the service's plain-text snap listings. */

export interface SnapCell {
  x: number;
  y: number;
  instance: number;
  point: number;
}

/** Parse `snap <x> <y> <instance> <point>` lines; ignores blank lines. */
export function parseSnaps(text: string): SnapCell[] {
  const out: SnapCell[] = [];
  for (const raw of text.split("\n")) {
    const line = raw.trim();
    if (!line) continue;
    const parts = line.split(/\s+/);
    if (parts.length !== 5 || parts[0] !== "snap") {
      throw new Error(`bad snap line: ${line}`);
    }
    const [x, y, instance, point] = parts.slice(1).map(Number);
    if ([x, y, instance, point].some((v) => !Number.isInteger(v))) {
      throw new Error(`bad snap line: ${line}`);
    }
    out.push({ x, y, instance, point });
  }
  return out;
}

/** Index snap cells by "x,y" for O(1) hover/click lookups. */
export function snapIndex(cells: SnapCell[]): Map<string, SnapCell> {
  const map = new Map<string, SnapCell>();
  for (const c of cells) map.set(`${c.x},${c.y}`, c);
  return map;
}
