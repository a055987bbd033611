// Typed client for the annotation service HTTP API.

import { AnnotationDocument } from "./schema.js";

export type TaskStatus = "pending" | "auto_annotated" | "in_review" | "accepted";

export interface TaskSummary {
  triplet_id: string;
  status: TaskStatus;
  assigned_to: string | null;
  record: AnnotationDocument | null;
}

export interface TaskDetail extends TaskSummary {
  width: number;
  height: number;
  images: { visible: string; infrared: string; fused: string };
}

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

async function jsonOrThrow(response: Response): Promise<any> {
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new ApiError(response.status, body.error ?? response.statusText);
  }
  return body;
}

export class AnnotationApi {
  readonly baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  async listTasks(status?: TaskStatus): Promise<TaskSummary[]> {
    const query = status ? `?status=${status}` : "";
    const body = await jsonOrThrow(await fetch(`${this.baseUrl}/tasks${query}`));
    return body.tasks;
  }

  async getTask(tripletId: string): Promise<TaskDetail> {
    return jsonOrThrow(await fetch(`${this.baseUrl}/tasks/${tripletId}`));
  }

  async submitAnnotation(tripletId: string, doc: AnnotationDocument): Promise<TaskDetail> {
    const body = await jsonOrThrow(
      await fetch(`${this.baseUrl}/tasks/${tripletId}/annotation`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(doc),
      }),
    );
    return body.task;
  }

  async submitReview(
    tripletId: string,
    action: "accept" | "reject",
    record?: AnnotationDocument,
  ): Promise<TaskDetail> {
    const body = await jsonOrThrow(
      await fetch(`${this.baseUrl}/tasks/${tripletId}/review`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(record ? { action, record } : { action }),
      }),
    );
    return body.task;
  }

  imageUrl(relative: string): string {
    return `${this.baseUrl}${relative}`;
  }
}
