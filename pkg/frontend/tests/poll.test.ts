import { afterEach, describe, expect, it, vi } from "vitest";

import { createPoller } from "../src/poll";

function deferred<T>() {
  let resolve!: (value: T) => void;
  let reject!: (err: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

afterEach(() => {
  vi.useRealTimers();
});

describe("createPoller", () => {
  it("a slow stale response never clobbers a newer applied one", async () => {
    const slow = deferred<string>();
    const fast = deferred<string>();
    const responses = [slow.promise, fast.promise];
    const applied: string[] = [];
    const poller = createPoller(
      () => responses.shift()!,
      (data) => applied.push(data),
      () => applied.push("error"),
    );

    const first = poller.tick(); // epoch 1, still pending
    const second = poller.tick(); // epoch 2
    fast.resolve("fresh");
    await second;
    slow.resolve("stale");
    await first;

    expect(applied).toEqual(["fresh"]);
  });

  it("an error from a stale epoch is swallowed once data arrived", async () => {
    const slow = deferred<string>();
    const fast = deferred<string>();
    const responses = [slow.promise, fast.promise];
    const applied: string[] = [];
    const errors: unknown[] = [];
    const poller = createPoller(
      () => responses.shift()!,
      (data) => applied.push(data),
      (err) => errors.push(err),
    );

    const first = poller.tick();
    const second = poller.tick();
    fast.resolve("fresh");
    await second;
    slow.reject(new Error("network down"));
    await first;

    expect(applied).toEqual(["fresh"]);
    expect(errors).toEqual([]);
  });

  it("a current failure reaches the error handler", async () => {
    const errors: unknown[] = [];
    const poller = createPoller(
      () => Promise.reject(new Error("boom")),
      () => {},
      (err) => errors.push(err),
    );
    await poller.tick();
    expect(errors).toHaveLength(1);
    expect((errors[0] as Error).message).toBe("boom");
  });

  it("start polls immediately and then on the interval; stop halts it", async () => {
    vi.useFakeTimers();
    let calls = 0;
    const poller = createPoller(
      async () => ++calls,
      () => {},
      () => {},
      5000,
    );
    poller.start();
    expect(calls).toBe(1);
    await vi.advanceTimersByTimeAsync(10_000);
    expect(calls).toBe(3);
    poller.stop();
    await vi.advanceTimersByTimeAsync(10_000);
    expect(calls).toBe(3);
  });
});
