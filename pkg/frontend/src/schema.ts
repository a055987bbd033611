// Annotation document schema shared with the service: five named 1-5 scores
// plus two-point circles (center, rim) in image pixel coordinates.

export const SCORE_KEYS = [
  "Thermal Retention",
  "Texture Preservation",
  "Artifacts",
  "Sharpness",
  "Overall Score",
] as const;

export type ScoreKey = (typeof SCORE_KEYS)[number];

export interface CircleShape {
  label: string;
  points: [[number, number], [number, number]];
  shape_type: "circle";
}

export interface AnnotationDocument {
  scores: Record<ScoreKey, number>;
  shapes: CircleShape[];
  annotator?: string;
  auto?: boolean;
}

export function circleRadius(shape: CircleShape): number {
  const [[cx, cy], [rx, ry]] = shape.points;
  return Math.hypot(cx - rx, cy - ry);
}

/** Validate a document locally before it is allowed to leave the client. */
export function validateDocument(doc: AnnotationDocument): string[] {
  const errors: string[] = [];
  for (const key of SCORE_KEYS) {
    const value = doc.scores[key];
    if (value === undefined || Number.isNaN(value)) {
      errors.push(`missing score ${key}`);
    } else if (value < 1 || value > 5) {
      errors.push(`score ${key} = ${value} outside the 1-5 range`);
    }
  }
  doc.shapes.forEach((shape, index) => {
    if (shape.shape_type !== "circle") {
      errors.push(`shape #${index} is not a circle`);
    } else if (shape.points.length !== 2) {
      errors.push(`shape #${index} needs exactly 2 points`);
    } else if (circleRadius(shape) <= 0) {
      errors.push(`shape #${index} has zero radius`);
    }
  });
  return errors;
}

export function serializeDocument(doc: AnnotationDocument): string {
  return JSON.stringify(doc);
}

export function parseDocument(text: string): AnnotationDocument {
  const data = JSON.parse(text) as AnnotationDocument;
  const errors = validateDocument(data);
  if (errors.length > 0) {
    throw new Error(`invalid annotation document: ${errors.join("; ")}`);
  }
  return data;
}
