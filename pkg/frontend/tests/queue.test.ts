import { describe, expect, it } from "vitest";

import { LatestWinsQueue } from "../src/queue.js";

function deferred<T>() {
  let resolve!: (value: T) => void;
  let reject!: (reason?: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

describe("latest-wins queue", () => {
  it("runs immediately when idle", async () => {
    const results: string[] = [];
    const queue = new LatestWinsQueue<string, string>(
      async (x) => x.toUpperCase(),
      (_input, result) => results.push(result),
    );
    queue.submit("a");
    await new Promise((r) => setTimeout(r, 0));
    expect(results).toEqual(["A"]);
    expect(queue.busy).toBe(false);
  });

  it("drops intermediate submissions while in flight", async () => {
    const gate = deferred<string>();
    const ran: string[] = [];
    const results: string[] = [];
    const queue = new LatestWinsQueue<string, string>(
      async (x) => {
        ran.push(x);
        return x === "first" ? gate.promise : x;
      },
      (_input, result) => results.push(result),
    );
    queue.submit("first");
    queue.submit("dropped-1");
    queue.submit("dropped-2");
    queue.submit("last");
    expect(queue.busy).toBe(true);
    gate.resolve("first-done");
    await new Promise((r) => setTimeout(r, 0));
    expect(ran).toEqual(["first", "last"]);
    expect(results).toEqual(["first-done", "last"]);
    expect(queue.busy).toBe(false);
  });

  it("a failed run reports the error and does not wedge the queue", async () => {
    const errors: unknown[] = [];
    const results: string[] = [];
    const queue = new LatestWinsQueue<string, string>(
      async (x) => {
        if (x === "bad") throw new Error("nope");
        return x;
      },
      (_input, result) => results.push(result),
      (_input, error) => errors.push(error),
    );
    queue.submit("bad");
    await new Promise((r) => setTimeout(r, 0));
    queue.submit("good");
    await new Promise((r) => setTimeout(r, 0));
    expect(errors).toHaveLength(1);
    expect(results).toEqual(["good"]);
  });
});
