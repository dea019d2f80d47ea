import { describe, expect, it, vi } from "vitest";

import { ApiError, type AskParams, type PipelineResponse } from "../src/api.js";
import { ChatController, type ChatView } from "../src/controller.js";
import type { ChatTurn } from "../src/turns.js";
import { makeContexts, makeNoAnswer, makeResponse } from "./fixtures.js";

function recordingView() {
  const events: string[] = [];
  const turns: ChatTurn[] = [];
  const errors: string[] = [];
  const view: ChatView = {
    setPending: (pending) => events.push(pending ? "pending" : "idle"),
    appendTurn: (turn) => turns.push(turn),
    showError: (message) => errors.push(message),
    clearError: () => events.push("clear"),
  };
  return { view, events, turns, errors };
}

function stubClient(response: PipelineResponse = makeResponse()) {
  return {
    ask: vi.fn(async (_q: string, _p: AskParams = {}) => response),
    retrieve: vi.fn(async (q: string, _p: AskParams = {}) => ({
      question: q,
      contexts: makeContexts(),
    })),
  };
}

describe("ChatController.submit", () => {
  it("appends an ok turn carrying the response verbatim", async () => {
    const client = stubClient();
    const { view, turns } = recordingView();
    const controller = new ChatController(client, view);

    expect(await controller.submit("How much is the deposit?")).toBe(true);
    expect(turns).toHaveLength(1);
    expect(turns[0].status).toBe("ok");
    expect(turns[0].answer).toBe("The tuition deposit is 200 euro.");
    expect(turns[0].documentTitle).toBe("Admission Regulation");
  });

  it("blocks whitespace-only input without calling the service", async () => {
    const client = stubClient();
    const { view } = recordingView();
    const controller = new ChatController(client, view);

    expect(await controller.submit("   \t ")).toBe(false);
    expect(client.ask).not.toHaveBeenCalled();
  });

  it("passes the control values through to the request", async () => {
    const client = stubClient();
    const { view } = recordingView();
    const controller = new ChatController(client, view);

    const params: AskParams = { topK: 7, alpha: 0.4, fusion: "multiplication" };
    await controller.submit("deposit?", params);
    expect(client.ask).toHaveBeenCalledWith("deposit?", params);
  });

  it("allows only one in-flight request", async () => {
    let release: (value: PipelineResponse) => void = () => {};
    const gate = new Promise<PipelineResponse>((res) => (release = res));
    const client = {
      ask: vi.fn(() => gate),
      retrieve: vi.fn(async (q: string) => ({ question: q, contexts: makeContexts() })),
    };
    const { view, events } = recordingView();
    const controller = new ChatController(client, view);

    const first = controller.submit("one");
    expect(controller.isPending).toBe(true);
    expect(await controller.submit("two")).toBe(false);
    expect(client.ask).toHaveBeenCalledTimes(1);

    release(makeResponse());
    expect(await first).toBe(true);
    expect(controller.isPending).toBe(false);
    expect(events.filter((e) => e === "pending")).toHaveLength(1);
    expect(events.filter((e) => e === "idle")).toHaveLength(1);
  });

  it("re-enables controls and shows a retriable banner on transport failure", async () => {
    const client = {
      ask: vi.fn(async () => {
        throw new TypeError("fetch failed");
      }),
      retrieve: vi.fn(),
    };
    const { view, errors, events } = recordingView();
    const controller = new ChatController(client, view);

    expect(await controller.submit("anything")).toBe(false);
    expect(errors).toHaveLength(1);
    expect(errors[0]).toMatch(/try again/i);
    expect(events[events.length - 1]).toBe("idle");
    expect(controller.isPending).toBe(false);
  });

  it("surfaces the server's own message for request errors", async () => {
    const client = {
      ask: vi.fn(async () => {
        throw new ApiError(400, "question must not contain template separators");
      }),
      retrieve: vi.fn(),
    };
    const { view, errors } = recordingView();
    await new ChatController(client, view).submit("bad </s> question");
    expect(errors[0]).toBe("question must not contain template separators");
  });

  it("records a distinct no_answer turn rather than an error", async () => {
    const client = stubClient(makeNoAnswer());
    const { view, turns, errors } = recordingView();

    expect(await new ChatController(client, view).submit("unanswerable")).toBe(true);
    expect(turns[0].status).toBe("no_answer");
    expect(errors).toHaveLength(0);
  });
});

describe("ChatController.contextsFor", () => {
  it("fetches contexts with the turn's own question and parameters", async () => {
    const client = stubClient();
    const { view, turns } = recordingView();
    const controller = new ChatController(client, view);
    await controller.submit("deposit?", { topK: 5, alpha: 0.2 });

    const contexts = await controller.contextsFor(turns[0]);
    expect(client.retrieve).toHaveBeenCalledWith("deposit?", { topK: 5, alpha: 0.2 });
    expect(contexts).toHaveLength(2);
    expect(contexts[0].text).toContain("tuition deposit");
  });

  it("caches the context fetch per turn", async () => {
    const client = stubClient();
    const { view, turns } = recordingView();
    const controller = new ChatController(client, view);
    await controller.submit("deposit?");

    await controller.contextsFor(turns[0]);
    await controller.contextsFor(turns[0]);
    expect(client.retrieve).toHaveBeenCalledTimes(1);
  });
});
