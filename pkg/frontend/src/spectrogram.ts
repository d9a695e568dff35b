/** Render a service-provided spectrogram matrix (values in [-1, 1], band 0 at
 * the bottom) into an RGBA pixel buffer, one pixel per cell. The console does
 * no client-side signal processing: the matrix arrives fully computed. */

export interface PixelImage {
  width: number;   // frames
  height: number;  // bands
  data: Uint8ClampedArray<ArrayBuffer>;  // RGBA rows, top row first
}

/** Piecewise-linear dark-blue -> teal -> yellow colormap over [0, 1]. */
export function colormap(t: number): [number, number, number] {
  const x = Math.min(1, Math.max(0, t));
  const stops: Array<[number, [number, number, number]]> = [
    [0.0, [13, 8, 135]],
    [0.35, [30, 110, 161]],
    [0.7, [53, 183, 121]],
    [1.0, [253, 231, 37]],
  ];
  for (let i = 1; i < stops.length; i++) {
    const [t1, c1] = stops[i - 1];
    const [t2, c2] = stops[i];
    if (x <= t2) {
      const f = (x - t1) / (t2 - t1);
      return [
        Math.round(c1[0] + f * (c2[0] - c1[0])),
        Math.round(c1[1] + f * (c2[1] - c1[1])),
        Math.round(c1[2] + f * (c2[2] - c1[2])),
      ];
    }
  }
  return stops[stops.length - 1][1];
}

export function renderSpectrogram(values: number[][]): PixelImage {
  const height = values.length;
  const width = height > 0 ? values[0].length : 0;
  const data = new Uint8ClampedArray(width * height * 4);
  for (let row = 0; row < height; row++) {
    // band 0 is the lowest frequency; draw it at the bottom
    const band = height - 1 - row;
    for (let col = 0; col < width; col++) {
      const [r, g, b] = colormap((values[band][col] + 1) / 2);
      const o = (row * width + col) * 4;
      data[o] = r;
      data[o + 1] = g;
      data[o + 2] = b;
      data[o + 3] = 255;
    }
  }
  return { width, height, data };
}
