/** Pure renderers: screen state in, HTML string out. No outcome information
 *  exists in any screen before the completion screen, and even that one only
 *  says the session is over. */

import type { Prompt } from "./api.js";
import type { Screen, SetupForm } from "./state.js";
import { canSubmit } from "./state.js";

function esc(text: string): string {
  return text.replace(/[&<>"']/g, (c) => `&#${c.charCodeAt(0)};`);
}

/** Stable hue class from the first feature character, so equal features
 *  share a color without the UI knowing feature semantics. */
function hueClass(card: string): string {
  return `hue-${card.charCodeAt(0) % 6}`;
}

interface Tile {
  card: string;
  count: number;
}

export function groupTiles(hand: string[]): Tile[] {
  const tiles: Tile[] = [];
  for (const card of hand) {
    const existing = tiles.find((t) => t.card === card);
    if (existing) {
      existing.count += 1;
    } else {
      tiles.push({ card, count: 1 });
    }
  }
  return tiles;
}

function cardTile(tile: Tile, opts: { selectable: boolean; selected: boolean; highlight: boolean }): string {
  const classes = ["card", hueClass(tile.card)];
  if (opts.selectable) classes.push("selectable");
  if (opts.selected) classes.push("selected");
  if (opts.highlight) classes.push("query");
  const badge = tile.count > 1 ? `<span class="badge">&times;${tile.count}</span>` : "";
  const attr = opts.selectable ? ` data-card="${esc(tile.card)}"` : "";
  return `<div class="${classes.join(" ")}"${attr}>${esc(tile.card)}${badge}</div>`;
}

function handRow(label: string, hand: string[], opts: { selectable: boolean; selection: string | null; highlight?: string }): string {
  const tiles = groupTiles(hand)
    .map((t) =>
      cardTile(t, {
        selectable: opts.selectable,
        selected: opts.selection === t.card,
        highlight: opts.highlight === t.card,
      }),
    )
    .join("");
  return `<section class="hand"><h3>${esc(label)}</h3><div class="cards">${tiles}</div></section>`;
}

export function renderSetup(form: SetupForm, error?: string): string {
  return `
<form id="setup" class="panel">
  <h2>New session</h2>
  <label>Your role
    <select name="role">
      <option value="hinter"${form.role === "hinter" ? " selected" : ""}>hinter</option>
      <option value="guesser"${form.role === "guesser" ? " selected" : ""}>guesser</option>
    </select>
  </label>
  <label>Agent checkpoint <input name="checkpoint" value="${esc(form.checkpoint)}" placeholder="runs/&lt;id&gt;/guesser.ckpt.json"></label>
  <label>Games <input name="games" type="number" min="1" value="${form.games}"></label>
  <label>Seed (optional) <input name="seed" type="number" value="${form.seed ?? ""}"></label>
  ${error ? `<p class="form-error">${esc(error)}</p>` : ""}
  <button type="submit">Continue</button>
</form>`;
}

export function renderInstructions(form: SetupForm): string {
  return `
<div class="panel" id="instructions">
  <h2>How the session works</h2>
  <ul>
    <li>You and a partner each hold a hand of cards; every card is a feature combination such as 2B. Both hands are fully visible to both of you.</li>
    <li>One of the <em>guesser's</em> cards is secretly chosen as the goal. The hinter sees it and shows one card from its own hand; the guesser then names the card it believes is the goal. You both succeed when the named features match the goal exactly.</li>
    <li>Play as if your partner is an ordinary person seeing the same rules.</li>
    <li>Card positions are shuffled on every screen, so position carries no meaning - only the features on the cards do.</li>
    <li>Cards with identical features are interchangeable; they appear as one tile with a multiplicity badge.</li>
    <li>You will get no feedback of any kind until the session is over, so there is nothing to learn about your partner mid-session - just play each game on its own.</li>
  </ul>
  <button id="begin">Start ${form.games} games</button>
</div>`;
}

export function renderPrompt(prompt: Prompt, selection: string | null, submitting: boolean, error?: string): string {
  const role = prompt.role ?? "hinter";
  const ownLabel = role === "hinter" ? "Your hand (pick a hint)" : "Your hand (pick your guess)";
  const partnerLabel = role === "hinter" ? "Guesser's hand" : "Hinter's hand";
  const queryLabel = prompt.query?.kind === "target" ? "Goal card (only you see this)" : "Hint you received";
  const own = role === "hinter" ? prompt.hinter_hand ?? [] : prompt.guesser_hand ?? [];
  const partner = role === "hinter" ? prompt.guesser_hand ?? [] : prompt.hinter_hand ?? [];
  const partnerHighlight = role === "hinter" ? prompt.query?.card : undefined;
  const progress = `Game ${(prompt.game_index ?? 0) + 1} of ${prompt.total_games ?? "?"}`;
  return `
<div class="panel" id="play" data-game="${prompt.game_index}">
  <header><h2>${esc(progress)}</h2><span class="role-banner">you are the ${esc(role)}</span></header>
  <section class="query"><h3>${esc(queryLabel)}</h3>${cardTile({ card: prompt.query?.card ?? "?", count: 1 }, { selectable: false, selected: false, highlight: true })}</section>
  ${handRow(partnerLabel, partner, { selectable: false, selection: null, highlight: partnerHighlight })}
  ${handRow(ownLabel, own, { selectable: true, selection })}
  ${error ? `<p class="form-error">${esc(error)}</p>` : ""}
  <button id="submit" ${submitting || selection === null ? "disabled" : ""}>${submitting ? "Sending..." : "Submit"}</button>
</div>`;
}

export function renderComplete(games: number): string {
  return `
<div class="panel" id="complete">
  <h2>Session complete</h2>
  <p>All ${games} games are answered and recorded. Thanks for playing.</p>
</div>`;
}

export function renderLoading(): string {
  return `<div class="panel" id="loading"><p>Loading next game&hellip;</p></div>`;
}

export function renderFault(message: string): string {
  return `
<div class="panel" id="fault">
  <h2>Connection problem</h2>
  <p>${esc(message)}</p>
  <button id="retry">Retry</button>
</div>`;
}

export function render(screen: Screen): string {
  switch (screen.kind) {
    case "setup":
      return renderSetup(screen.form, screen.error);
    case "instructions":
      return renderInstructions(screen.form);
    case "loading":
      return renderLoading();
    case "playing":
      return renderPrompt(screen.prompt, screen.selection, screen.submitting, screen.error);
    case "complete":
      return renderComplete(screen.games);
    case "fault":
      return renderFault(screen.message);
  }
}

export function selectableCards(html: string): string[] {
  const out: string[] = [];
  const re = /data-card="([^"]+)"/g;
  let m;
  while ((m = re.exec(html)) !== null) {
    out.push(m[1]);
  }
  return out;
}

export { canSubmit };
