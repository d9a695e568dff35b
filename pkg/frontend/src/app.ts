/** Browser entry point: wires the typed client, the state reducers and the
 * render helpers to the DOM. All updates funnel through `dispatch`, which
 * serializes state transitions on the single UI event loop. */
import { HydrowatchClient, ServiceError } from "./client.js";
import { project, worldWindow } from "./map.js";
import {
  clonePolicy, flaggedCount, isZeroDelta, validateDraft,
} from "./policy.js";
import { renderSpectrogram } from "./spectrogram.js";
import { SseParser } from "./sse.js";
import {
  ConsoleState, feedEvent, initialState, labelAcknowledged, labelFailed,
  labelSubmitted, mergeQueue, selectObservation, setPolicyDraft, setWhatIf,
} from "./state.js";
import type { Assessment, Observation, Policy } from "./types.js";
import { RISK_LEVELS } from "./types.js";

const CLASSES = [
  "bubbles_large", "bubbles_small", "high_risk_danger", "knocking_concrete",
  "knocking_plastic", "knocking_wood", "metal_clank",
  "normal_environmental_noise", "plastic_scratching",
  "plastic_scratching_knocking",
];

const HYDROPHONE_XS = [-50, 0, 50];

type Transition = (state: ConsoleState) => ConsoleState;

export class ConsoleApp {
  private state = initialState();
  private readonly updates: Transition[] = [];
  private flushing = false;

  constructor(
    private readonly client: HydrowatchClient,
    private readonly root: Document,
    private readonly operator: string = "operator",
  ) {}

  /** Serialized update queue: background tasks post transitions here. */
  dispatch(transition: Transition): void {
    this.updates.push(transition);
    if (this.flushing) return;
    this.flushing = true;
    while (this.updates.length > 0) {
      const next = this.updates.shift()!;
      this.state = next(this.state);
    }
    this.flushing = false;
    this.render();
  }

  async start(): Promise<void> {
    await this.refreshQueue();
    const policy = await this.client.getPolicy();
    this.dispatch((s) => setPolicyDraft(s, clonePolicy(policy)));
    void this.followEvents();
  }

  async refreshQueue(): Promise<void> {
    const page = await this.client.listObservations({ flag: "anomaly" });
    this.dispatch((s) => mergeQueue(s, page.observations));
  }

  async select(id: string): Promise<void> {
    this.dispatch((s) => selectObservation(s, id));
    const mel = await this.client.getMel(id);
    const canvas = this.root.getElementById("spectrogram") as
      HTMLCanvasElement | null;
    if (canvas) {
      const image = renderSpectrogram(mel.values);
      canvas.width = image.width;
      canvas.height = image.height;
      canvas.getContext("2d")?.putImageData(
        new ImageData(image.data, image.width, image.height), 0, 0);
    }
    const audio = this.root.getElementById("playback") as
      HTMLAudioElement | null;
    if (audio) audio.src = this.client.audioUrl(id);
  }

  async submitLabel(id: string, label: string): Promise<void> {
    this.dispatch((s) => labelSubmitted(s, id, label, this.operator));
    try {
      await this.client.submitLabel(id, label, this.operator);
      this.dispatch((s) => labelAcknowledged(s, id));
    } catch (err) {
      const message = err instanceof ServiceError
        ? err.message : "service unreachable — retry";
      this.dispatch((s) => labelFailed(s, id, message));
    }
  }

  async runWhatIf(draft: Policy): Promise<void> {
    const errors = validateDraft(draft);
    if (errors.length > 0) {
      this.renderFieldErrors(errors.map((e) => `${e.field}: ${e.message}`));
      return;
    }
    const result = await this.client.whatIf(draft);
    this.dispatch((s) => setWhatIf(s, result));
  }

  async activateDraft(draft: Policy): Promise<void> {
    const errors = validateDraft(draft);
    if (errors.length > 0) {
      this.renderFieldErrors(errors.map((e) => `${e.field}: ${e.message}`));
      return;
    }
    const { version } = await this.client.updatePolicy(draft);
    const active = await this.client.getPolicy();
    this.dispatch((s) => setPolicyDraft(s, clonePolicy(active)));
    this.setText("policy-version", `active policy v${version}`);
  }

  private async followEvents(): Promise<void> {
    const resp = await fetch(this.client.eventsUrl());
    const reader = resp.body?.getReader();
    if (!reader) return;
    const parser = new SseParser();
    const decoder = new TextDecoder();
    for (;;) {
      const { value, done } = await reader.read();
      if (done) break;
      for (const payload of parser.feed(decoder.decode(value))) {
        const event = JSON.parse(payload) as Assessment;
        this.dispatch((s) => feedEvent(s, event));
      }
    }
  }

  private setText(id: string, text: string): void {
    const el = this.root.getElementById(id);
    if (el) el.textContent = text;
  }

  private renderFieldErrors(messages: string[]): void {
    this.setText("policy-errors", messages.join("; "));
  }

  private render(): void {
    const queueEl = this.root.getElementById("queue");
    if (queueEl) {
      queueEl.replaceChildren(...this.state.queue.map((obs) =>
        this.renderQueueItem(obs)));
    }
    const feedEl = this.root.getElementById("feed");
    if (feedEl) {
      feedEl.replaceChildren(...this.state.feed.slice(0, 50).map((event) => {
        const li = this.root.createElement("li");
        li.textContent =
          `${event.observation_id ?? "?"} — ${event.level}` +
          ` (${event.notification})`;
        li.className = `level-${event.level.toLowerCase()}`;
        return li;
      }));
    }
    this.renderMap();
    this.renderWhatIf();
    this.renderPending();
  }

  private renderQueueItem(obs: Observation): HTMLElement {
    const li = this.root.createElement("li");
    const button = this.root.createElement("button");
    button.textContent =
      `${obs.observation_id} · score ${obs.anomaly_score.toFixed(3)} · ` +
      obs.assessment.level;
    button.addEventListener("click", () => void this.select(obs.observation_id));
    li.appendChild(button);
    const labels = this.root.createElement("select");
    labels.replaceChildren(...CLASSES.map((cls) => {
      const option = this.root.createElement("option") as HTMLOptionElement;
      option.value = cls;
      option.textContent = cls;
      return option;
    }));
    const submit = this.root.createElement("button");
    submit.textContent = "label";
    submit.addEventListener("click", () => void this.submitLabel(
      obs.observation_id, (labels as HTMLSelectElement).value));
    li.append(labels, submit);
    return li;
  }

  private renderMap(): void {
    const svg = this.root.getElementById("map");
    if (!svg) return;
    const world = worldWindow(HYDROPHONE_XS);
    const view = { width: 600, height: 220, margin: 16 };
    const marks: string[] = HYDROPHONE_XS.map((x) => {
      const [px, py] = project(world, view, [x, 0]);
      return `<rect x="${px - 4}" y="${py - 4}" width="8" height="8" />`;
    });
    for (const obs of this.state.queue) {
      if (!obs.location) continue;
      const [px, py] = project(world, view,
                               obs.location.position as [number, number]);
      marks.push(`<circle cx="${px}" cy="${py}" r="5" ` +
                 `class="level-${obs.assessment.level.toLowerCase()}" />`);
    }
    svg.innerHTML = `<line x1="0" y1="${view.height - view.margin}" ` +
      `x2="${view.width}" y2="${view.height - view.margin}" ` +
      `stroke="currentColor" />` + marks.join("");
  }

  private renderWhatIf(): void {
    const el = this.root.getElementById("whatif");
    if (!el || !this.state.whatIf) return;
    const { baseline, draft, delta } = this.state.whatIf;
    const rows = RISK_LEVELS.map((level) =>
      `<tr><td>${level}</td><td>${baseline[level]}</td>` +
      `<td>${draft[level]}</td><td>${delta[level] >= 0 ? "+" : ""}` +
      `${delta[level]}</td></tr>`).join("");
    const summary = isZeroDelta(this.state.whatIf)
      ? "draft matches the active policy"
      : `flagged: ${flaggedCount(baseline)} → ${flaggedCount(draft)}`;
    el.innerHTML = `<table><tr><th>level</th><th>active</th><th>draft</th>` +
      `<th>Δ</th></tr>${rows}</table><p>${summary}</p>`;
  }

  private renderPending(): void {
    const el = this.root.getElementById("pending");
    if (!el) return;
    el.replaceChildren(...this.state.pendingLabels
      .filter((p) => p.error !== "")
      .map((p) => {
        const li = this.root.createElement("li");
        li.textContent =
          `${p.observationId}: ${p.error} (attempt ${p.attempts})`;
        const retry = this.root.createElement("button");
        retry.textContent = "retry";
        retry.addEventListener("click",
          () => void this.submitLabel(p.observationId, p.label));
        li.appendChild(retry);
        return li;
      }));
  }
}

declare global {
  interface Window { hydrowatchConsole?: ConsoleApp }
}

if (typeof window !== "undefined" && typeof document !== "undefined" &&
    document.getElementById("queue")) {
  const base = (window as Window & { HYDROWATCH_URL?: string })
    .HYDROWATCH_URL ?? "http://127.0.0.1:8000";
  const app = new ConsoleApp(new HydrowatchClient(base), document);
  window.hydrowatchConsole = app;
  void app.start();
}
