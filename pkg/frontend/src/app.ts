// Browser entry: three synchronized image panes, score controls with
// guideline tooltips, circle drawing on the fused pane, and the submit /
// review workflow against the annotation service.

import { AnnotationApi } from "./api.js";
import { AnnotationDraft, CircleDraft, circleDraftRadius } from "./draft.js";
import { CIRCLE_HINT, GUIDELINES } from "./guidelines.js";
import { SCORE_KEYS, ScoreKey } from "./schema.js";
import { AnnotationSession } from "./session.js";
import { canvasFromImage, IDENTITY, Point, ViewTransform, zoomAt } from "./transform.js";

interface Pane {
  canvas: HTMLCanvasElement;
  image: HTMLImageElement;
  kind: "visible" | "infrared" | "fused";
}

class AnnotationApp {
  private readonly session: AnnotationSession;
  private readonly api: AnnotationApi;
  private transform: ViewTransform = { ...IDENTITY };
  private panes: Pane[] = [];
  private pressPoint: Point | null = null;
  private hoverPoint: Point | null = null;

  constructor(baseUrl: string) {
    this.api = new AnnotationApi(baseUrl);
    this.session = new AnnotationSession(this.api, "ui");
  }

  async start(): Promise<void> {
    this.buildLayout();
    const task = await this.session.loadNextPending();
    if (task) {
      await this.showTask();
    } else {
      this.setStatus("no pending tasks");
    }
  }

  private el<T extends HTMLElement>(id: string): T {
    return document.getElementById(id) as T;
  }

  private buildLayout(): void {
    const root = this.el<HTMLDivElement>("app");
    root.innerHTML = `
      <div id="banner" class="banner hidden"></div>
      <div id="status" class="status"></div>
      <div class="panes">
        ${["visible", "infrared", "fused"]
          .map(
            (kind) => `
          <figure class="pane">
            <figcaption>${kind}</figcaption>
            <canvas id="canvas-${kind}" width="480" height="360"></canvas>
          </figure>`,
          )
          .join("")}
      </div>
      <p class="hint" title="${CIRCLE_HINT}">draw artifact circles on the fused pane; scroll to zoom</p>
      <div id="scores" class="scores"></div>
      <div class="actions">
        <button id="submit" disabled>submit</button>
        <button id="accept" class="hidden">accept</button>
        <button id="reject" class="hidden">reject</button>
        <button id="undo">undo circle</button>
      </div>`;

    const scores = this.el<HTMLDivElement>("scores");
    for (const key of SCORE_KEYS) {
      const group = document.createElement("div");
      group.className = "score-group";
      group.title = GUIDELINES[key].join("\n");
      group.innerHTML =
        `<span>${key}</span>` +
        [1, 2, 3, 4, 5]
          .map(
            (v) =>
              `<label><input type="radio" name="score-${key}" value="${v}">${v}</label>`,
          )
          .join("");
      group.addEventListener("change", (event) => {
        const target = event.target as HTMLInputElement;
        this.session.draft?.setScore(key, Number(target.value));
        this.refreshControls();
      });
      scores.appendChild(group);
    }

    this.panes = (["visible", "infrared", "fused"] as const).map((kind) => ({
      kind,
      canvas: this.el<HTMLCanvasElement>(`canvas-${kind}`),
      image: new Image(),
    }));
    for (const pane of this.panes) {
      pane.canvas.addEventListener("wheel", (event) => {
        event.preventDefault();
        const factor = event.deltaY < 0 ? 2 : 0.5;
        this.transform = zoomAt(this.transform, factor, this.canvasPoint(pane.canvas, event));
        this.redraw();
      });
    }
    const fused = this.panes[2];
    fused.canvas.addEventListener("pointerdown", (event) => {
      this.pressPoint = this.canvasPoint(fused.canvas, event);
    });
    fused.canvas.addEventListener("pointermove", (event) => {
      if (this.pressPoint) {
        this.hoverPoint = this.canvasPoint(fused.canvas, event);
        this.redraw();
      }
    });
    fused.canvas.addEventListener("pointerup", (event) => {
      if (!this.pressPoint || !this.session.draft) {
        return;
      }
      this.session.draft.addCircleFromGesture(
        this.transform,
        this.pressPoint,
        this.canvasPoint(fused.canvas, event),
      );
      this.pressPoint = null;
      this.hoverPoint = null;
      this.refreshControls();
      this.redraw();
    });

    this.el<HTMLButtonElement>("submit").addEventListener("click", () => void this.submit());
    this.el<HTMLButtonElement>("undo").addEventListener("click", () => {
      const draft = this.session.draft;
      if (draft && draft.circles.length > 0) {
        draft.removeCircle(draft.circles.length - 1);
        this.redraw();
      }
    });
    this.el<HTMLButtonElement>("accept").addEventListener("click", () => void this.review("accept"));
    this.el<HTMLButtonElement>("reject").addEventListener("click", () => void this.review("reject"));
  }

  private canvasPoint(canvas: HTMLCanvasElement, event: MouseEvent): Point {
    const rect = canvas.getBoundingClientRect();
    return { x: event.clientX - rect.left, y: event.clientY - rect.top };
  }

  private async showTask(): Promise<void> {
    const task = this.session.task;
    if (!task) {
      this.setStatus("no pending tasks");
      return;
    }
    this.transform = { ...IDENTITY };
    this.setStatus(`task ${task.triplet_id} (${task.status})`);
    await Promise.all(
      this.panes.map(
        (pane) =>
          new Promise<void>((resolve, reject) => {
            pane.image.onload = () => resolve();
            pane.image.onerror = () => reject(new Error(`failed to load ${pane.kind} image`));
            pane.image.src = this.api.imageUrl(task.images[pane.kind]);
          }),
      ),
    ).catch((err) => this.showError(`${err}; reload to retry`));
    this.syncScoreControls();
    this.refreshControls();
    this.redraw();
  }

  private syncScoreControls(): void {
    const draft = this.session.draft;
    for (const key of SCORE_KEYS) {
      const value = draft?.scores[key];
      const inputs = document.querySelectorAll<HTMLInputElement>(`input[name="score-${key}"]`);
      inputs.forEach((input) => {
        input.checked = value !== undefined && Number(input.value) === value;
      });
    }
  }

  private refreshControls(): void {
    const draft = this.session.draft;
    this.el<HTMLButtonElement>("submit").disabled = !draft || !draft.canSubmit();
    const reviewable = this.session.task?.status === "auto_annotated" || this.session.task?.status === "in_review";
    this.el<HTMLButtonElement>("accept").classList.toggle("hidden", !reviewable);
    this.el<HTMLButtonElement>("reject").classList.toggle("hidden", this.session.task?.status !== "in_review");
  }

  private redraw(): void {
    for (const pane of this.panes) {
      const ctx = pane.canvas.getContext("2d");
      if (!ctx) {
        continue;
      }
      ctx.clearRect(0, 0, pane.canvas.width, pane.canvas.height);
      if (pane.image.complete && pane.image.naturalWidth > 0) {
        ctx.save();
        ctx.setTransform(this.transform.zoom, 0, 0, this.transform.zoom, this.transform.panX, this.transform.panY);
        ctx.drawImage(pane.image, 0, 0);
        ctx.restore();
      }
      if (pane.kind === "fused") {
        this.drawCircles(ctx);
      }
    }
  }

  private drawCircles(ctx: CanvasRenderingContext2D): void {
    const draft = this.session.draft;
    ctx.strokeStyle = "red";
    ctx.lineWidth = 1.5;
    const drawOne = (circle: CircleDraft) => {
      const center = canvasFromImage(this.transform, circle.center);
      const radius = circleDraftRadius(circle) * this.transform.zoom;
      ctx.beginPath();
      ctx.arc(center.x, center.y, radius, 0, 2 * Math.PI);
      ctx.stroke();
    };
    draft?.circles.forEach(drawOne);
    if (this.pressPoint && this.hoverPoint) {
      // live preview while dragging
      const radius = Math.hypot(this.hoverPoint.x - this.pressPoint.x, this.hoverPoint.y - this.pressPoint.y);
      ctx.setLineDash([4, 3]);
      ctx.beginPath();
      ctx.arc(this.pressPoint.x, this.pressPoint.y, radius, 0, 2 * Math.PI);
      ctx.stroke();
      ctx.setLineDash([]);
    }
  }

  private async submit(): Promise<void> {
    const ok = await this.session.submitCurrent();
    if (!ok) {
      this.showError(this.session.lastError ?? "submit failed");
      return;
    }
    this.hideError();
    await this.showTask();
  }

  private async review(action: "accept" | "reject"): Promise<void> {
    const task = this.session.task;
    const draft = this.session.draft;
    if (!task) {
      return;
    }
    try {
      await this.api.submitReview(
        task.triplet_id,
        action,
        action === "accept" && draft?.canSubmit() ? draft.toDocument(this.session.annotator) : undefined,
      );
      this.hideError();
      await this.session.loadNextPending();
      await this.showTask();
    } catch (err) {
      this.showError(String(err));
    }
  }

  private setStatus(text: string): void {
    this.el<HTMLDivElement>("status").textContent = text;
  }

  private showError(text: string): void {
    const banner = this.el<HTMLDivElement>("banner");
    banner.textContent = text;
    banner.classList.remove("hidden");
  }

  private hideError(): void {
    this.el<HTMLDivElement>("banner").classList.add("hidden");
  }
}

const params = new URLSearchParams(window.location.search);
const app = new AnnotationApp(params.get("service") ?? "http://127.0.0.1:8731");
void app.start();
