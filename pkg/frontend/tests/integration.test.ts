/** End-to-end protocol check against the real service: a full session played
 *  through the UI controller, outcome-free screens throughout, exactly one
 *  server record per game, and offline scoring of a scripted optimal hinter. */

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { SessionApi } from "../src/api.js";
import { App } from "../src/app.js";
import { selectableCards } from "../src/render.js";

const PY = process.env.PYTHON ?? "python3";
const PORT = 8700 + (process.pid % 200);
const BASE = `http://127.0.0.1:${PORT}`;
const RUN_ID = "web-demo";
const OUTCOME_MARKERS = [/reward/i, /score/i, /correct/i, /\bwin\b/i, /\bwon\b/i, /\blost\b/i];

let store: string;
let server: ChildProcess | undefined;

function cli(...args: string[]): string {
  return execFileSync(PY, ["-m", "hintguess.cli", "--store", store, ...args], {
    encoding: "utf-8",
    env: { ...process.env, OMP_NUM_THREADS: "1", OPENBLAS_NUM_THREADS: "1" },
  });
}

async function waitHealthy(): Promise<void> {
  for (let i = 0; i < 120; i++) {
    try {
      const r = await fetch(`${BASE}/health`);
      if (r.ok) return;
    } catch {
      // server not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 500));
  }
  throw new Error("service never became healthy");
}

function sessionEvents(sessionId: string): Array<Record<string, unknown>> {
  const raw = readFileSync(join(store, "sessions", `${sessionId}.jsonl`), "utf-8");
  return raw
    .trim()
    .split("\n")
    .map((line) => JSON.parse(line));
}

beforeAll(async () => {
  store = mkdtempSync(join(tmpdir(), "hintguess-web-"));
  // a same-hand run converges to the copy-the-hint convention, which makes
  // the scripted-optimal scoring below exact
  cli(
    "train", "--preset", "n3-desk", "--arch", "mlp", "--same-hand",
    "--episodes", "150000", "--seed", "1", "--run-id", RUN_ID,
  );
  server = spawn(PY, ["-m", "hintguess.cli", "--store", store, "serve", "--port", String(PORT)], {
    stdio: "ignore",
  });
  await waitHealthy();
}, 600_000);

afterAll(() => {
  server?.kill();
});

describe("live session through the UI controller", () => {
  it(
    "completes 15 games with outcome-free screens and 15 server records",
    async () => {
      const snapshots: string[] = [];
      const root = { innerHTML: "" };
      const app = new App(new SessionApi(BASE), root, {
        onRender: (html) => snapshots.push(html),
      });
      app.start();

      await app.submitSetup({
        role: "guesser",
        checkpoint: `runs/${RUN_ID}/hinter.ckpt.json`,
        games: 15,
        seed: 2024,
      });
      expect(app.current().kind).toBe("instructions");
      await app.beginSession();

      let sessionId = "";
      let guard = 0;
      while (app.current().kind === "playing" && guard < 40) {
        guard += 1;
        const screen = app.current();
        if (screen.kind !== "playing") break;
        sessionId = screen.sessionId;
        // the clickable set must equal the prompt's legal set on every screen
        expect(selectableCards(root.innerHTML)).toEqual(screen.prompt.legal_actions);
        const pick = screen.prompt.legal_actions![guard % screen.prompt.legal_actions!.length];
        app.selectCard(pick);
        await app.submitChoice();
      }

      expect(app.current().kind).toBe("complete");
      expect(root.innerHTML).toContain("Session complete");
      // every rendered screen, completion included, stays outcome-free
      for (const html of snapshots) {
        for (const marker of OUTCOME_MARKERS) {
          expect(html).not.toMatch(marker);
        }
      }
      const actions = sessionEvents(sessionId).filter((e) => e.event === "action");
      expect(actions.length).toBe(15);
      const closed = sessionEvents(sessionId).some((e) => e.event === "closed");
      expect(closed).toBe(true);
    },
    240_000,
  );

  it(
    "rejects an illegal submission with the legal set and recovers",
    async () => {
      const api = new SessionApi(BASE);
      const created = await api.createSession("guesser", `runs/${RUN_ID}/hinter.ckpt.json`, 2, 7);
      const prompt = await api.prompt(created.session_id);
      const legal = prompt.legal_actions!;
      const all = ["1A", "1B", "1C", "2A", "2B", "2C", "3A", "3B", "3C"];
      const illegal = all.find((c) => !legal.includes(c))!;
      await expect(api.submit(created.session_id, 0, illegal)).rejects.toMatchObject({
        status: 400,
        body: { code: "illegal_action" },
      });
      const ack = await api.submit(created.session_id, 0, legal[0]);
      expect(ack.acknowledged).toBe(true);
      expect(Object.keys(ack).sort()).toEqual(["acknowledged", "game_index"]);
    },
    120_000,
  );

  it(
    "scripted optimal hinter session scores 1.0 through session-score",
    async () => {
      const api = new SessionApi(BASE);
      const created = await api.createSession("hinter", `runs/${RUN_ID}/guesser.ckpt.json`, 10, 31);
      const sid = created.session_id;
      const createdEvent = sessionEvents(sid)[0] as {
        games: Array<{ index: number; target: string }>;
      };
      const targets = new Map(createdEvent.games.map((g) => [g.index, g.target]));

      let prompt = await api.prompt(sid);
      while (!prompt.complete) {
        // same-hand game: hinting the target itself is always legal
        await api.submit(sid, prompt.game_index!, targets.get(prompt.game_index!)!);
        prompt = await api.prompt(sid);
      }
      const out = cli(
        "session-score",
        "--session", join(store, "sessions", `${sid}.jsonl`),
        "--checkpoints", join(store, "runs", RUN_ID, "guesser.ckpt.json"),
      );
      const scored = JSON.parse(out);
      expect(scored.per_checkpoint[0].mean_score).toBe(1.0);
    },
    240_000,
  );
});
