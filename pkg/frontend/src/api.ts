/** Typed client for the session service. The UI never computes game logic;
 *  legality, hands, and prompts all come from the server. */

export type Role = "hinter" | "guesser";

export interface Prompt {
  session_id: string;
  complete: boolean;
  game_index?: number;
  total_games?: number;
  role?: Role;
  hinter_hand?: string[];
  guesser_hand?: string[];
  query?: { kind: "target" | "hint"; card: string };
  legal_actions?: string[];
}

export interface CreateSessionResponse {
  session_id: string;
  games: number;
  role: Role;
}

export interface Ack {
  acknowledged: boolean;
  game_index: number;
}

export interface ApiError {
  code: string;
  message: string;
  legal_actions?: string[];
}

export class ServiceError extends Error {
  constructor(public status: number, public body: ApiError) {
    super(body.message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await response.json();
  if (!response.ok) {
    throw new ServiceError(response.status, body as ApiError);
  }
  return body as T;
}

export class SessionApi {
  constructor(private base: string) {}

  health(): Promise<{ status: string }> {
    return request(this.base, "/health");
  }

  createSession(
    role: Role,
    checkpoint: string,
    games: number,
    seed?: number,
  ): Promise<CreateSessionResponse> {
    return request(this.base, "/sessions", {
      method: "POST",
      body: JSON.stringify({ role, checkpoint, games, seed: seed ?? null }),
    });
  }

  prompt(sessionId: string): Promise<Prompt> {
    return request(this.base, `/sessions/${sessionId}/prompt`);
  }

  submit(sessionId: string, gameIndex: number, action: string): Promise<Ack> {
    return request(this.base, `/sessions/${sessionId}/actions`, {
      method: "POST",
      body: JSON.stringify({ game_index: gameIndex, action }),
    });
  }
}
