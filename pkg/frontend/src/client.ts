// Session client. Commands are serialized: at most one request is in flight,
// later sends wait their turn, and responses apply in submission order.

import type { Command, Snapshot, WireError } from "./types";

export interface TransportResponse {
  status: number;
  body: string;
}

export type Transport = (
  method: string,
  url: string,
  body: string | null
) => Promise<TransportResponse>;

const fetchTransport: Transport = async (method, url, body) => {
  const response = await fetch(url, {
    method,
    body: body ?? undefined,
    headers: body !== null ? { "Content-Type": "application/json" } : undefined,
  });
  return { status: response.status, body: await response.text() };
};

export class ServiceError extends Error {
  constructor(public code: string, message: string) {
    super(message);
  }
}

function parseSnapshot(response: TransportResponse): Snapshot {
  const payload = JSON.parse(response.body) as Snapshot | WireError;
  if (response.status !== 200) {
    const wire = payload as WireError;
    throw new ServiceError(wire.error?.code ?? "unknown", wire.error?.message ?? response.body);
  }
  return payload as Snapshot;
}

export class SessionClient {
  private tail: Promise<unknown> = Promise.resolve();
  private inFlight = 0;

  private constructor(
    readonly baseUrl: string,
    readonly sessionId: string,
    private readonly transport: Transport
  ) {}

  static async create(
    baseUrl: string,
    kbText: string,
    transport: Transport = fetchTransport
  ): Promise<{ client: SessionClient; snapshot: Snapshot }> {
    const response = await transport("POST", `${baseUrl}/session`, kbText);
    const payload = JSON.parse(response.body) as
      | { sessionId: string; snapshot: Snapshot }
      | WireError;
    if (response.status !== 200) {
      const wire = payload as WireError;
      throw new ServiceError(wire.error?.code ?? "unknown", wire.error?.message ?? response.body);
    }
    const created = payload as { sessionId: string; snapshot: Snapshot };
    return {
      client: new SessionClient(baseUrl, created.sessionId, transport),
      snapshot: created.snapshot,
    };
  }

  get pending(): boolean {
    return this.inFlight > 0;
  }

  /** Queue a command; resolves with the post-command snapshot. */
  send(command: Command): Promise<Snapshot> {
    this.inFlight += 1;
    const run = this.tail.then(async () => {
      const response = await this.transport(
        "POST",
        `${this.baseUrl}/session/${this.sessionId}/command`,
        JSON.stringify(command)
      );
      return parseSnapshot(response);
    });
    // keep the chain alive after failures so later commands still run
    this.tail = run.catch(() => undefined).finally(() => {
      this.inFlight -= 1;
    });
    return run;
  }

  async refresh(): Promise<Snapshot> {
    const response = await this.transport(
      "GET",
      `${this.baseUrl}/session/${this.sessionId}/snapshot`,
      null
    );
    return parseSnapshot(response);
  }

  async close(): Promise<void> {
    await this.transport("DELETE", `${this.baseUrl}/session/${this.sessionId}`, null);
  }
}
