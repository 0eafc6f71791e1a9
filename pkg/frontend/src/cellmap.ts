/** Mapping from display clicks to cursor cells.
 *
 * Frames are rendered at a native size (256 table, 96 hand) and may be
 * displayed scaled.  A click maps display -> frame pixel through the
 * display scale, then integer-divides by 4 into the cursor grid.
 */

export interface Cell {
  x: number;
  y: number;
}

/**
 * Convert a click at display coordinates into a cursor cell, or null when
 * the click falls outside the displayed frame.
 *
 * @param displayX  click x relative to the frame element, in display pixels
 * @param displayY  click y relative to the frame element, in display pixels
 * @param frameSize native frame size in pixels (multiple of 4)
 * @param scale     display pixels per frame pixel (e.g. 2 at 2x zoom)
 */
export function clickToCell(
  displayX: number,
  displayY: number,
  frameSize: number,
  scale: number = 1,
): Cell | null {
  if (scale <= 0 || frameSize % 4 !== 0) {
    throw new Error("bad frame geometry");
  }
  const fx = Math.floor(displayX / scale);
  const fy = Math.floor(displayY / scale);
  if (fx < 0 || fy < 0 || fx >= frameSize || fy >= frameSize) {
    return null;
  }
  return { x: Math.floor(fx / 4), y: Math.floor(fy / 4) };
}

/** Top-left display pixel of a cell, for overlay rendering. */
export function cellToDisplay(
  cell: Cell,
  scale: number = 1,
): { x: number; y: number; size: number } {
  return { x: cell.x * 4 * scale, y: cell.y * 4 * scale, size: 4 * scale };
}
