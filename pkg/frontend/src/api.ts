/**
 * Gateway client: the only way the UI talks to the system.
 *
 * Every displayed set (tree children, candidates, retrieval groups) comes
 * straight out of a gateway response; nothing is filtered or intersected
 * on the client.
 */

export interface KnowledgeProperties {
  data_type: string;
  dimension: number;
  mining_task: string;
  data_size_bytes: number;
  quality?: number;
}

export interface MappingSummary {
  site_id: string;
  knowledge_id: string;
  properties: KnowledgeProperties;
  description: string;
  revision: number;
}

export interface NavigatePayload {
  path: string[];
  children: string[];
  mappings: MappingSummary[];
}

export interface PlanPayload {
  candidates: MappingSummary[];
}

export interface ElementRecord {
  eid: number;
  content: string;
  attributes: Record<string, number>;
}

export type GroupStatus = "ok" | "site-unreachable" | "knowledge-missing";

export interface TargetGroup {
  site_id: string;
  knowledge_id: string;
  status: GroupStatus;
  elements: ElementRecord[];
}

export interface RetrievePayload {
  groups: TargetGroup[];
}

export interface TargetRef {
  site_id: string;
  knowledge_id: string;
}

export class GatewayError extends Error {
  constructor(public code: string, message: string) {
    super(message || code);
  }
}

/** Canonical JSON: sorted keys, compact separators (matches the wire and
 * the CLI's --json output, which makes parity checks byte-comparable). */
export function stableStringify(value: unknown): string {
  if (value === null || typeof value !== "object") {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(stableStringify).join(",") + "]";
  }
  const entries = Object.keys(value as Record<string, unknown>)
    .sort()
    .map((k) => JSON.stringify(k) + ":" + stableStringify((value as Record<string, unknown>)[k]));
  return "{" + entries.join(",") + "}";
}

export type FetchLike = (url: string, init: RequestInit) => Promise<Response>;

export class GatewayClient {
  private counter = 0;

  constructor(
    private url: string,
    private fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  nextRequestId(): string {
    this.counter += 1;
    return `u${String(this.counter).padStart(6, "0")}`;
  }

  async send<T>(kind: string, payload: Record<string, unknown>): Promise<T> {
    const requestId = this.nextRequestId();
    const body = stableStringify({
      version: 1,
      request_id: requestId,
      kind,
      payload,
    });
    const response = await this.fetchImpl(this.url, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body,
    });
    if (!response.ok) {
      throw new GatewayError("HttpError", `gateway answered ${response.status}`);
    }
    const parsed = await response.json();
    if (parsed.request_id !== requestId) {
      throw new GatewayError("ProtocolError", "response id does not match request");
    }
    if (parsed.status === "ok") {
      return parsed.payload as T;
    }
    const err = parsed.error ?? {};
    throw new GatewayError(err.code ?? "InternalError", err.message ?? "");
  }

  navigate(path: string[]): Promise<NavigatePayload> {
    return this.send<NavigatePayload>("Navigate", { path });
  }

  planRetrieval(paths: string[][]): Promise<PlanPayload> {
    return this.send<PlanPayload>("PlanRetrieval", { paths });
  }

  retrieve(targets: TargetRef[], keywords: string[]): Promise<RetrievePayload> {
    return this.send<RetrievePayload>("Retrieve", { targets, keywords });
  }
}
