import { describe, expect, it } from "vitest";

import { canvasFromImage, IDENTITY, imageFromCanvas, panBy, zoomAt } from "../src/transform.js";

describe("view transform", () => {
  it("is exact at 1x zoom", () => {
    const p = { x: 390, y: 420 };
    expect(imageFromCanvas(IDENTITY, p)).toEqual(p);
    expect(canvasFromImage(IDENTITY, p)).toEqual(p);
  });

  it("is exact at 2x zoom", () => {
    const t = zoomAt(IDENTITY, 2, { x: 0, y: 0 });
    expect(t).toEqual({ zoom: 2, panX: 0, panY: 0 });
    expect(imageFromCanvas(t, { x: 780, y: 840 })).toEqual({ x: 390, y: 420 });
    expect(canvasFromImage(t, { x: 250, y: 170 })).toEqual({ x: 500, y: 340 });
  });

  it("round-trips through arbitrary zoom and pan", () => {
    let t = zoomAt(IDENTITY, 2, { x: 100, y: 50 });
    t = panBy(t, -30, 12);
    t = zoomAt(t, 2, { x: 40, y: 200 });
    const p = { x: 123.25, y: 67.5 };
    const roundTripped = imageFromCanvas(t, canvasFromImage(t, p));
    expect(roundTripped.x).toBeCloseTo(p.x, 10);
    expect(roundTripped.y).toBeCloseTo(p.y, 10);
  });

  it("keeps the anchor point fixed while zooming", () => {
    const anchor = { x: 120, y: 90 };
    const before = imageFromCanvas(IDENTITY, anchor);
    const t = zoomAt(IDENTITY, 2, anchor);
    const after = imageFromCanvas(t, anchor);
    expect(after.x).toBeCloseTo(before.x, 10);
    expect(after.y).toBeCloseTo(before.y, 10);
  });
});
