import { describe, expect, it } from "vitest";

import type { Prompt } from "../src/api.js";
import {
  DEFAULT_FORM,
  canSubmit,
  initialScreen,
  reduce,
  validateForm,
  type Screen,
} from "../src/state.js";

const prompt: Prompt = {
  session_id: "s",
  complete: false,
  game_index: 0,
  total_games: 3,
  role: "guesser",
  hinter_hand: ["1A"],
  guesser_hand: ["2B", "1C"],
  query: { kind: "hint", card: "1A" },
  legal_actions: ["2B", "1C"],
};

function playing(): Screen {
  return reduce(reduce(initialScreen(), { type: "session_created", sessionId: "s" }), {
    type: "prompt_loaded",
    sessionId: "s",
    prompt,
    totalGames: 3,
  });
}

describe("setup validation", () => {
  it("requires a checkpoint and a positive game count", () => {
    expect(validateForm({ ...DEFAULT_FORM, checkpoint: "" })).toMatch(/checkpoint/);
    expect(validateForm({ ...DEFAULT_FORM, checkpoint: "x", games: 0 })).toMatch(/positive/);
    expect(validateForm({ ...DEFAULT_FORM, checkpoint: "x", games: 2.5 })).toMatch(/positive/);
    expect(validateForm({ ...DEFAULT_FORM, checkpoint: "x", games: 15 })).toBeNull();
  });

  it("invalid form stays on setup with an error", () => {
    const next = reduce(initialScreen(), {
      type: "form_submitted",
      form: { ...DEFAULT_FORM, checkpoint: "x", games: 0 },
    });
    expect(next.kind).toBe("setup");
    expect((next as { error?: string }).error).toMatch(/positive/);
  });

  it("valid form advances to the instructions screen", () => {
    const next = reduce(initialScreen(), {
      type: "form_submitted",
      form: { ...DEFAULT_FORM, checkpoint: "runs/a/h.json" },
    });
    expect(next.kind).toBe("instructions");
  });
});

describe("playing transitions", () => {
  it("selection is restricted to the legal set", () => {
    let screen = playing();
    screen = reduce(screen, { type: "card_selected", card: "9Z" });
    expect((screen as { selection: string | null }).selection).toBeNull();
    screen = reduce(screen, { type: "card_selected", card: "2B" });
    expect((screen as { selection: string | null }).selection).toBe("2B");
    expect(canSubmit(screen)).toBe(true);
  });

  it("double submits are ignored while one is in flight", () => {
    let screen = playing();
    screen = reduce(screen, { type: "card_selected", card: "2B" });
    screen = reduce(screen, { type: "submit_started" });
    expect((screen as { submitting: boolean }).submitting).toBe(true);
    const again = reduce(screen, { type: "submit_started" });
    expect(again).toBe(screen);
    // selection clicks are also frozen mid-flight
    expect(reduce(screen, { type: "card_selected", card: "1C" })).toBe(screen);
  });

  it("submit without selection is a no-op", () => {
    const screen = playing();
    expect(reduce(screen, { type: "submit_started" })).toBe(screen);
    expect(canSubmit(screen)).toBe(false);
  });

  it("rejection re-enables the screen with a message", () => {
    let screen = playing();
    screen = reduce(screen, { type: "card_selected", card: "2B" });
    screen = reduce(screen, { type: "submit_started" });
    screen = reduce(screen, { type: "submit_rejected", message: "not in your hand" });
    expect(screen.kind).toBe("playing");
    expect((screen as { submitting: boolean }).submitting).toBe(false);
    expect((screen as { error?: string }).error).toBe("not in your hand");
  });

  it("a complete prompt lands on the completion screen", () => {
    const done = reduce(playing(), {
      type: "prompt_loaded",
      sessionId: "s",
      prompt: { session_id: "s", complete: true },
      totalGames: 3,
    });
    expect(done).toEqual({ kind: "complete", sessionId: "s", games: 3 });
  });

  it("network faults preserve the previous screen for retry", () => {
    const screen = playing();
    const fault = reduce(screen, { type: "network_fault", message: "boom" });
    expect(fault.kind).toBe("fault");
    expect((fault as { retry: Screen }).retry).toBe(screen);
  });
});
