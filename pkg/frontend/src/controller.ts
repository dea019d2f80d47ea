// Submission state machine, kept free of DOM references so it can be
// tested against a stub client and a recording view.

import { ApiError, type AskParams, type ContextRow, type QaClient } from "./api.js";
import { turnFromResponse, type ChatTurn } from "./turns.js";

export interface ChatView {
  /** Disable or re-enable the input controls while a request is running. */
  setPending(pending: boolean): void;
  appendTurn(turn: ChatTurn): void;
  showError(message: string): void;
  clearError(): void;
}

type Client = Pick<QaClient, "ask" | "retrieve">;

export class ChatController {
  private pending = false;
  private turns: ChatTurn[] = [];
  // contexts fetched lazily per turn, for the evidence panel
  private contextCache = new Map<ChatTurn, ContextRow[]>();

  constructor(private client: Client, private view: ChatView) {}

  get isPending(): boolean {
    return this.pending;
  }

  get history(): readonly ChatTurn[] {
    return this.turns;
  }

  /**
   * Submit a question with the current control values. Returns false when
   * the submission is blocked (blank input or a request already running).
   */
  async submit(question: string, params: AskParams = {}): Promise<boolean> {
    const trimmed = question.trim();
    if (!trimmed || this.pending) return false;
    this.pending = true;
    this.view.setPending(true);
    this.view.clearError();
    try {
      const response = await this.client.ask(trimmed, params);
      const turn = turnFromResponse(trimmed, response);
      turn.params = params;
      this.turns.push(turn);
      this.view.appendTurn(turn);
      return true;
    } catch (err) {
      this.view.showError(describeError(err));
      return false;
    } finally {
      this.pending = false;
      this.view.setPending(false);
    }
  }

  /**
   * Full context rows (with article text) for a turn, fetched once with
   * the same question and parameters the turn was asked with.
   */
  async contextsFor(turn: ChatTurn): Promise<ContextRow[]> {
    const cached = this.contextCache.get(turn);
    if (cached) return cached;
    const result = await this.client.retrieve(turn.question, turn.params ?? {});
    this.contextCache.set(turn, result.contexts);
    return result.contexts;
  }
}

export function describeError(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  return "Could not reach the answering service. Check the connection and try again.";
}
