import {
  RankingPayload,
  ServiceClient,
  ServiceError,
  ServiceResponse,
} from "./api.js";

interface Snapshot {
  char: string;
  response: ServiceResponse;
}

export interface ControllerEvents {
  onUpdate(payload: RankingPayload, raw: string, typed: string): void;
  onError?(message: string): void;
}

/**
 * Owns the typed buffer and the server-side session behind it.
 *
 * Operations run through a single-in-flight queue so rankings always land
 * in keystroke order. Backspace has no server endpoint: it resets the
 * session and replays the remaining characters, which reproduces the
 * ranking previously shown for that prefix.
 */
export class SessionController {
  readonly sessionId: string;
  private typedText = "";
  private snapshots: Snapshot[] = [];
  private tail: Promise<void> = Promise.resolve();

  constructor(
    private client: ServiceClient,
    private events: ControllerEvents,
    sessionId?: string
  ) {
    this.sessionId =
      sessionId ?? `ui-${Math.random().toString(36).slice(2, 10)}`;
  }

  get typed(): string {
    return this.typedText;
  }

  /** Fetch the no-context ranking so the strip is live before any key. */
  start(): Promise<void> {
    return this.enqueue(() => this.showBaseline());
  }

  keystroke(char: string): Promise<void> {
    return this.enqueue(() => this.sendKeystroke(char.toLowerCase()));
  }

  backspace(): Promise<void> {
    return this.enqueue(() => this.replayWithoutLast());
  }

  /** Resolves once every operation queued so far has settled. */
  idle(): Promise<void> {
    return this.enqueue(async () => {});
  }

  private enqueue(op: () => Promise<void>): Promise<void> {
    // ops report their own errors and never reject, so the chain survives
    const next = this.tail.then(op);
    this.tail = next;
    return next;
  }

  private report(err: unknown): void {
    const message =
      err instanceof ServiceError
        ? `service error ${err.status}: ${err.message}`
        : String(err);
    this.events.onError?.(message);
  }

  private async showBaseline(): Promise<void> {
    try {
      const response = await this.client.predict("");
      this.events.onUpdate(response.payload, response.raw, this.typedText);
    } catch (err) {
      this.report(err);
    }
  }

  private async sendKeystroke(char: string): Promise<void> {
    try {
      const response = await this.client.keystroke(this.sessionId, char);
      this.typedText += char;
      this.snapshots.push({ char, response });
      this.events.onUpdate(response.payload, response.raw, this.typedText);
    } catch (err) {
      this.report(err);
    }
  }

  private async replayWithoutLast(): Promise<void> {
    if (this.snapshots.length === 0) {
      return;
    }
    const keep = this.snapshots.slice(0, -1);
    try {
      await this.client.reset(this.sessionId);
      const replayed: Snapshot[] = [];
      let last: ServiceResponse | null = null;
      for (const snap of keep) {
        last = await this.client.keystroke(this.sessionId, snap.char);
        replayed.push({ char: snap.char, response: last });
      }
      this.snapshots = replayed;
      this.typedText = replayed.map((s) => s.char).join("");
      if (last) {
        this.events.onUpdate(last.payload, last.raw, this.typedText);
      } else {
        await this.showBaseline();
      }
    } catch (err) {
      this.report(err);
    }
  }
}
