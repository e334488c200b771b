/** Session screen state machine. UI state is a pure function of the last
 *  server response; the reducer never invents game information. */

import type { Prompt, Role } from "./api.js";

export interface SetupForm {
  role: Role;
  checkpoint: string;
  games: number;
  seed: number | null;
}

export type Screen =
  | { kind: "setup"; form: SetupForm; error?: string }
  | { kind: "instructions"; form: SetupForm }
  | { kind: "loading"; sessionId: string }
  | {
      kind: "playing";
      sessionId: string;
      prompt: Prompt;
      selection: string | null;
      submitting: boolean;
      error?: string;
    }
  | { kind: "complete"; sessionId: string; games: number }
  | { kind: "fault"; message: string; retry: Screen };

export const DEFAULT_FORM: SetupForm = {
  role: "hinter",
  checkpoint: "",
  games: 15,
  seed: null,
};

export function initialScreen(): Screen {
  return { kind: "setup", form: DEFAULT_FORM };
}

export function validateForm(form: SetupForm): string | null {
  if (!form.checkpoint.trim()) return "a checkpoint path is required";
  if (!Number.isInteger(form.games) || form.games < 1) {
    return "game count must be a positive integer";
  }
  return null;
}

export type Event =
  | { type: "form_submitted"; form: SetupForm }
  | { type: "session_created"; sessionId: string }
  | { type: "prompt_loaded"; sessionId: string; prompt: Prompt; totalGames: number }
  | { type: "card_selected"; card: string }
  | { type: "submit_started" }
  | { type: "submit_ok" }
  | { type: "submit_rejected"; message: string }
  | { type: "network_fault"; message: string };

export function reduce(screen: Screen, event: Event): Screen {
  switch (event.type) {
    case "form_submitted": {
      const error = validateForm(event.form);
      if (error) return { kind: "setup", form: event.form, error };
      return { kind: "instructions", form: event.form };
    }
    case "session_created":
      return { kind: "loading", sessionId: event.sessionId };
    case "prompt_loaded":
      if (event.prompt.complete) {
        return { kind: "complete", sessionId: event.sessionId, games: event.totalGames };
      }
      return {
        kind: "playing",
        sessionId: event.sessionId,
        prompt: event.prompt,
        selection: null,
        submitting: false,
      };
    case "card_selected": {
      if (screen.kind !== "playing" || screen.submitting) return screen;
      const legal = screen.prompt.legal_actions ?? [];
      if (!legal.includes(event.card)) return screen; // clickable set == legal set
      return { ...screen, selection: event.card, error: undefined };
    }
    case "submit_started": {
      // double-click guard: a submitting screen ignores further submits
      if (screen.kind !== "playing" || screen.selection === null || screen.submitting) {
        return screen;
      }
      return { ...screen, submitting: true };
    }
    case "submit_ok":
      if (screen.kind !== "playing") return screen;
      return { kind: "loading", sessionId: screen.sessionId };
    case "submit_rejected":
      if (screen.kind !== "playing") return screen;
      return { ...screen, submitting: false, selection: null, error: event.message };
    case "network_fault":
      return { kind: "fault", message: event.message, retry: screen };
  }
}

export function canSubmit(screen: Screen): boolean {
  return (
    screen.kind === "playing" &&
    screen.selection !== null &&
    !screen.submitting &&
    (screen.prompt.legal_actions ?? []).includes(screen.selection)
  );
}
