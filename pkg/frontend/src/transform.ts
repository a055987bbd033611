// Canvas <-> image coordinate mapping. The canvas shows the image scaled by
// `zoom` and shifted by `(panX, panY)` canvas pixels:
//   canvas = image * zoom + pan

export interface Point {
  x: number;
  y: number;
}

export interface ViewTransform {
  zoom: number;
  panX: number;
  panY: number;
}

export const IDENTITY: ViewTransform = { zoom: 1, panX: 0, panY: 0 };

export function canvasFromImage(t: ViewTransform, p: Point): Point {
  return { x: p.x * t.zoom + t.panX, y: p.y * t.zoom + t.panY };
}

export function imageFromCanvas(t: ViewTransform, p: Point): Point {
  return { x: (p.x - t.panX) / t.zoom, y: (p.y - t.panY) / t.zoom };
}

/** Change zoom while keeping the given canvas point fixed on the image. */
export function zoomAt(t: ViewTransform, factor: number, anchor: Point): ViewTransform {
  const zoom = t.zoom * factor;
  const fixed = imageFromCanvas(t, anchor);
  return {
    zoom,
    panX: anchor.x - fixed.x * zoom,
    panY: anchor.y - fixed.y * zoom,
  };
}

export function panBy(t: ViewTransform, dx: number, dy: number): ViewTransform {
  return { zoom: t.zoom, panX: t.panX + dx, panY: t.panY + dy };
}
