/**
 * Gateway client: the only way the UI talks to the system.
 *
 * Every displayed set (tree children, candidates, retrieval groups) comes
 * straight out of a gateway response; nothing is filtered or intersected
 * on the client.
 */
export class GatewayError extends Error {
    constructor(code, message) {
        super(message || code);
        this.code = code;
    }
}
/** Canonical JSON: sorted keys, compact separators (matches the wire and
 * the CLI's --json output, which makes parity checks byte-comparable). */
export function stableStringify(value) {
    if (value === null || typeof value !== "object") {
        return JSON.stringify(value);
    }
    if (Array.isArray(value)) {
        return "[" + value.map(stableStringify).join(",") + "]";
    }
    const entries = Object.keys(value)
        .sort()
        .map((k) => JSON.stringify(k) + ":" + stableStringify(value[k]));
    return "{" + entries.join(",") + "}";
}
export class GatewayClient {
    constructor(url, fetchImpl = (u, i) => fetch(u, i)) {
        this.url = url;
        this.fetchImpl = fetchImpl;
        this.counter = 0;
    }
    nextRequestId() {
        this.counter += 1;
        return `u${String(this.counter).padStart(6, "0")}`;
    }
    async send(kind, payload) {
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
            return parsed.payload;
        }
        const err = parsed.error ?? {};
        throw new GatewayError(err.code ?? "InternalError", err.message ?? "");
    }
    navigate(path) {
        return this.send("Navigate", { path });
    }
    planRetrieval(paths) {
        return this.send("PlanRetrieval", { paths });
    }
    retrieve(targets, keywords) {
        return this.send("Retrieve", { targets, keywords });
    }
}
