// Task-queue session: walks pending tasks, holds the active draft, and keeps
// the draft alive when the server rejects a submission.

import { AnnotationApi, ApiError, TaskDetail } from "./api.js";
import { AnnotationDraft } from "./draft.js";
import { validateDocument } from "./schema.js";

export class AnnotationSession {
  readonly api: AnnotationApi;
  annotator: string;
  task: TaskDetail | null = null;
  draft: AnnotationDraft | null = null;
  lastError: string | null = null;

  constructor(api: AnnotationApi, annotator = "") {
    this.api = api;
    this.annotator = annotator;
  }

  async openTask(tripletId: string): Promise<TaskDetail> {
    const task = await this.api.getTask(tripletId);
    this.task = task;
    this.draft = task.record
      ? AnnotationDraft.fromDocument(task.triplet_id, task.record)
      : new AnnotationDraft(task.triplet_id);
    this.lastError = null;
    return task;
  }

  /** Open the next pending task; returns null when the queue is empty. */
  async loadNextPending(): Promise<TaskDetail | null> {
    const pending = await this.api.listTasks("pending");
    if (pending.length === 0) {
      this.task = null;
      this.draft = null;
      return null;
    }
    return this.openTask(pending[0].triplet_id);
  }

  /**
   * Validate locally, POST, and advance to the next pending task on success.
   * On 400/409 the draft is retained and the server message surfaced.
   */
  async submitCurrent(): Promise<boolean> {
    if (!this.task || !this.draft) {
      throw new Error("no task open");
    }
    if (!this.draft.canSubmit()) {
      this.lastError = "all five scores must be set before submitting";
      return false;
    }
    const doc = this.draft.toDocument(this.annotator);
    const localErrors = validateDocument(doc);
    if (localErrors.length > 0) {
      this.lastError = localErrors.join("; ");
      return false;
    }
    try {
      await this.api.submitAnnotation(this.task.triplet_id, doc);
    } catch (err) {
      if (err instanceof ApiError) {
        this.lastError = `server rejected annotation (${err.status}): ${err.message}`;
        return false; // draft stays intact for correction/retry
      }
      this.lastError = `network failure: ${String(err)}`;
      return false;
    }
    this.lastError = null;
    await this.loadNextPending();
    return true;
  }
}
