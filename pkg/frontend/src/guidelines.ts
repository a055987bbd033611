// Hover text for the score controls: what each 1-5 dimension evaluates.

import { ScoreKey } from "./schema.js";

export const GUIDELINES: Record<ScoreKey, string[]> = {
  "Thermal Retention": [
    "Preservation of heat sources' intensity, distribution, and position",
    "High-heat signatures (humans, vehicles) from the infrared input",
    "Structural thermal patterns in low light (e.g. buildings)",
    "Environmental texture retention",
  ],
  "Texture Preservation": [
    "Fidelity of visible-light details and textures",
    "Surface/edge clarity of objects",
    "Resistance to visible information occlusion by infrared data",
    "Structural integrity of fine-grained patterns",
  ],
  Artifacts: [
    "Unnatural distortions, rated high when absent",
    "Bright spots",
    "Ghost shadows",
    "Physically implausible anomalies",
  ],
  Sharpness: [
    "Overall visual coherence",
    "Edge definition precision",
    "Detail completeness",
    "Perceptual clarity",
  ],
  "Overall Score": ["Total average impression across all dimensions"],
};

export const CIRCLE_HINT =
  "Encircle anomalous regions: press at the circle center, release on the circumference. " +
  "Approximate elongated artifacts with minimally sized circles.";
