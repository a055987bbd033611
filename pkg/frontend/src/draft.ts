// Local annotation draft: score selections plus circle drafts, kept in image
// pixel coordinates regardless of the current canvas zoom/pan.

import { AnnotationDocument, SCORE_KEYS, ScoreKey, validateDocument } from "./schema.js";
import { imageFromCanvas, Point, ViewTransform } from "./transform.js";

export interface CircleDraft {
  center: Point;
  rim: Point;
}

export function circleDraftRadius(circle: CircleDraft): number {
  return Math.hypot(circle.center.x - circle.rim.x, circle.center.y - circle.rim.y);
}

export class AnnotationDraft {
  readonly tripletId: string;
  scores: Partial<Record<ScoreKey, number>> = {};
  circles: CircleDraft[] = [];
  dirty = false;

  constructor(tripletId: string) {
    this.tripletId = tripletId;
  }

  /** Pre-populate from an existing record (review mode). */
  static fromDocument(tripletId: string, doc: AnnotationDocument): AnnotationDraft {
    const draft = new AnnotationDraft(tripletId);
    for (const key of SCORE_KEYS) {
      if (doc.scores[key] !== undefined) {
        draft.scores[key] = doc.scores[key];
      }
    }
    draft.circles = doc.shapes.map((shape) => ({
      center: { x: shape.points[0][0], y: shape.points[0][1] },
      rim: { x: shape.points[1][0], y: shape.points[1][1] },
    }));
    return draft;
  }

  setScore(key: ScoreKey, value: number): void {
    if (!Number.isInteger(value) || value < 1 || value > 5) {
      throw new Error(`score ${key} must be an integer in 1..5, got ${value}`);
    }
    this.scores[key] = value;
    this.dirty = true;
  }

  /**
   * Record a press-center / release-rim gesture given in canvas coordinates;
   * both points are mapped back to image pixels through the view transform.
   * A zero-radius release is discarded and returns null.
   */
  addCircleFromGesture(transform: ViewTransform, pressCanvas: Point, releaseCanvas: Point): CircleDraft | null {
    const center = imageFromCanvas(transform, pressCanvas);
    const rim = imageFromCanvas(transform, releaseCanvas);
    const circle: CircleDraft = { center, rim };
    if (circleDraftRadius(circle) <= 0) {
      return null;
    }
    this.circles.push(circle);
    this.dirty = true;
    return circle;
  }

  removeCircle(index: number): void {
    this.circles.splice(index, 1);
    this.dirty = true;
  }

  /** Submit is enabled only once every score dimension is set. */
  canSubmit(): boolean {
    return SCORE_KEYS.every((key) => this.scores[key] !== undefined);
  }

  toDocument(annotator?: string): AnnotationDocument {
    const scores = {} as Record<ScoreKey, number>;
    for (const key of SCORE_KEYS) {
      const value = this.scores[key];
      if (value === undefined) {
        throw new Error(`score ${key} is not set`);
      }
      scores[key] = value;
    }
    const doc: AnnotationDocument = {
      scores,
      shapes: this.circles.map((circle) => ({
        label: "Artifacts",
        points: [
          [circle.center.x, circle.center.y],
          [circle.rim.x, circle.rim.y],
        ] as [[number, number], [number, number]],
        shape_type: "circle" as const,
      })),
    };
    if (annotator) {
      doc.annotator = annotator;
    }
    const errors = validateDocument(doc);
    if (errors.length > 0) {
      throw new Error(`draft does not validate: ${errors.join("; ")}`);
    }
    return doc;
  }
}
