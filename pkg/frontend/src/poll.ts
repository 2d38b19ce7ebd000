/** Interval poller with last-write-wins on fetch epoch: a slow response
 * from an earlier tick can never clobber data a later tick already applied. */

export interface Poller {
  start(): void;
  stop(): void;
  /** one manual poll cycle; exposed for wiring and tests */
  tick(): Promise<void>;
}

export function createPoller<T>(
  fetcher: () => Promise<T>,
  apply: (data: T) => void,
  onError: (err: unknown) => void,
  intervalMs = 5000,
): Poller {
  let epoch = 0;
  let applied = 0;
  let timer: ReturnType<typeof setInterval> | null = null;

  async function tick(): Promise<void> {
    const mine = ++epoch;
    try {
      const data = await fetcher();
      if (mine > applied) {
        applied = mine;
        apply(data);
      }
    } catch (err) {
      if (mine > applied) {
        applied = mine;
        onError(err);
      }
    }
  }

  return {
    start() {
      void tick();
      timer = setInterval(() => void tick(), intervalMs);
    },
    stop() {
      if (timer !== null) clearInterval(timer);
      timer = null;
    },
    tick,
  };
}
