/** Browser bootstrap: wires the state machine to the service and the DOM.
 *  All game knowledge lives server-side; this file only shuttles events. */

import { ServiceError, SessionApi } from "./api.js";
import { render } from "./render.js";
import { initialScreen, reduce, type Event, type Screen, type SetupForm } from "./state.js";

export class App {
  private screen: Screen = initialScreen();
  private totalGames = 0;

  constructor(
    private api: SessionApi,
    private root: { innerHTML: string },
    private hooks: { onRender?: (html: string) => void } = {},
  ) {}

  current(): Screen {
    return this.screen;
  }

  private apply(event: Event): void {
    this.screen = reduce(this.screen, event);
    const html = render(this.screen);
    this.root.innerHTML = html;
    this.hooks.onRender?.(html);
  }

  start(): void {
    this.screen = initialScreen();
    this.root.innerHTML = render(this.screen);
    this.hooks.onRender?.(this.root.innerHTML);
  }

  async submitSetup(form: SetupForm): Promise<void> {
    this.apply({ type: "form_submitted", form });
  }

  async beginSession(): Promise<void> {
    if (this.screen.kind !== "instructions") return;
    const form = this.screen.form;
    try {
      const created = await this.api.createSession(
        form.role,
        form.checkpoint,
        form.games,
        form.seed ?? undefined,
      );
      this.totalGames = created.games;
      this.apply({ type: "session_created", sessionId: created.session_id });
      await this.refreshPrompt(created.session_id);
    } catch (e) {
      this.apply({ type: "network_fault", message: describe(e) });
    }
  }

  async refreshPrompt(sessionId: string): Promise<void> {
    try {
      const prompt = await this.api.prompt(sessionId);
      this.apply({
        type: "prompt_loaded",
        sessionId,
        prompt,
        totalGames: prompt.total_games ?? this.totalGames,
      });
    } catch (e) {
      this.apply({ type: "network_fault", message: describe(e) });
    }
  }

  selectCard(card: string): void {
    this.apply({ type: "card_selected", card });
  }

  async submitChoice(): Promise<void> {
    if (this.screen.kind !== "playing" || this.screen.selection === null || this.screen.submitting) {
      return;
    }
    const { sessionId, prompt, selection } = this.screen;
    this.apply({ type: "submit_started" });
    try {
      await this.api.submit(sessionId, prompt.game_index ?? 0, selection);
      this.apply({ type: "submit_ok" });
      await this.refreshPrompt(sessionId);
    } catch (e) {
      if (e instanceof ServiceError && e.status === 409) {
        // already answered (e.g. double-submit race): just advance
        this.apply({ type: "submit_ok" });
        await this.refreshPrompt(sessionId);
      } else if (e instanceof ServiceError) {
        this.apply({ type: "submit_rejected", message: e.body.message });
      } else {
        this.apply({ type: "network_fault", message: describe(e) });
      }
    }
  }

  async retry(): Promise<void> {
    if (this.screen.kind !== "fault") return;
    const previous = this.screen.retry;
    this.screen = previous;
    if (previous.kind === "playing" || previous.kind === "loading") {
      await this.refreshPrompt(previous.sessionId);
    } else {
      this.root.innerHTML = render(this.screen);
      this.hooks.onRender?.(this.root.innerHTML);
    }
  }
}

function describe(e: unknown): string {
  return e instanceof Error ? e.message : String(e);
}

/** DOM glue; kept out of tests (renderers and the reducer carry the logic). */
export function mount(rootId = "app", base = ""): App {
  const root = document.getElementById(rootId)!;
  const app = new App(new SessionApi(base), root);
  app.start();

  root.addEventListener("click", (ev) => {
    const el = ev.target as HTMLElement;
    const card = el.closest<HTMLElement>("[data-card]")?.dataset.card;
    if (card) {
      app.selectCard(card);
      return;
    }
    if (el.id === "begin") void app.beginSession();
    if (el.id === "submit") void app.submitChoice();
    if (el.id === "retry") void app.retry();
  });

  root.addEventListener("submit", (ev) => {
    const form = ev.target as HTMLFormElement;
    if (form.id !== "setup") return;
    ev.preventDefault();
    const data = new FormData(form);
    const seedRaw = String(data.get("seed") ?? "").trim();
    void app.submitSetup({
      role: (data.get("role") as "hinter" | "guesser") ?? "hinter",
      checkpoint: String(data.get("checkpoint") ?? ""),
      games: Number(data.get("games") ?? 15),
      seed: seedRaw === "" ? null : Number(seedRaw),
    });
  });

  return app;
}
