/** Project array-relative world coordinates (meters; the hydrophone line is
 * y = 0, sources have y >= 0) onto a pixel viewport for the 2D map view. */

export interface Viewport {
  width: number;
  height: number;
  margin: number;
}

export interface WorldWindow {
  xMin: number;
  xMax: number;
  yMax: number;  // yMin is always the wall at 0
}

export function worldWindow(hydrophoneXs: number[], pad = 10): WorldWindow {
  const xMin = Math.min(...hydrophoneXs) - pad;
  const xMax = Math.max(...hydrophoneXs) + pad;
  return { xMin, xMax, yMax: pad * 3 };
}

export function project(world: WorldWindow, view: Viewport,
                        point: [number, number]): [number, number] {
  const [x, y] = point;
  const innerW = view.width - 2 * view.margin;
  const innerH = view.height - 2 * view.margin;
  const px = view.margin + ((x - world.xMin) / (world.xMax - world.xMin)) * innerW;
  // the wall (y = 0) sits at the bottom edge
  const py = view.height - view.margin - (Math.min(y, world.yMax) / world.yMax) * innerH;
  return [px, py];
}
