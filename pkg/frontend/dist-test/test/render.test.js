import assert from "node:assert/strict";
import { test } from "node:test";
import { renderApp, renderCandidates, renderResults, renderTree } from "../src/render.js";
import { newSession, recordChildren, setCandidates, setResult } from "../src/session.js";
function sessionWithResult(result) {
    const s = newSession();
    setResult(s, result);
    s.pendingKeywords = "pressure cloud";
    return s;
}
test("rendering the same state twice yields identical strings", () => {
    const s = newSession();
    recordChildren(s, [], ["meteorology"]);
    setCandidates(s, [{
            site_id: "siteX", knowledge_id: "16",
            properties: { data_type: "numeric-interval", dimension: 12,
                mining_task: "association-rules", data_size_bytes: 64424509440 },
            description: "isabel", revision: 0,
        }]);
    setResult(s, { groups: [{ site_id: "siteX", knowledge_id: "16", status: "ok",
                elements: [{ eid: 171, content: "IF x THEN y",
                        attributes: { support: 0.6 } }] }] });
    assert.equal(renderApp(s), renderApp(s));
});
test("empty catalog shows the empty-state hint", () => {
    const s = newSession();
    recordChildren(s, [], []);
    assert.match(renderTree(s), /catalog is empty/);
});
test("tree lists fetched children as enterable links", () => {
    const s = newSession();
    recordChildren(s, [], ["climate", "storm"]);
    const html = renderTree(s);
    assert.match(html, /data-name="climate"/);
    assert.match(html, /data-name="storm"/);
});
test("empty intersection gets an explicit notice", () => {
    const s = newSession();
    setCandidates(s, []);
    assert.match(renderCandidates(s), /empty intersection/i);
});
test("candidate table shows the metadata columns", () => {
    const s = newSession();
    setCandidates(s, [{
            site_id: "prgcluster.ucd.ie", knowledge_id: "16",
            properties: { data_type: "numeric-interval", dimension: 12,
                mining_task: "association-rules", data_size_bytes: 64424509440,
                quality: 0.9 },
            description: "hurricane isabel", revision: 3,
        }]);
    const html = renderCandidates(s);
    for (const expected of ["prgcluster.ucd.ie", "16", "association-rules",
        "numeric-interval", "12", "64424509440", "0.9",
        "hurricane isabel"]) {
        assert.ok(html.includes(expected), expected);
    }
});
test("per-target failure badges", () => {
    const s = sessionWithResult({ groups: [
            { site_id: "a", knowledge_id: "1", status: "ok",
                elements: [{ eid: 171, content: "IF p THEN q", attributes: { support: 0.6 } }] },
            { site_id: "b", knowledge_id: "2", status: "site-unreachable", elements: [] },
            { site_id: "c", knowledge_id: "3", status: "knowledge-missing", elements: [] },
        ] });
    const html = renderResults(s);
    assert.match(html, /badge-ok/);
    assert.match(html, /badge-site-unreachable/);
    assert.match(html, /badge-knowledge-missing/);
    assert.match(html, /171/);
    assert.match(html, /support=0.6/);
});
test("empty keyword retrieval warns that everything is shown", () => {
    const s = sessionWithResult({ groups: [] });
    s.pendingKeywords = "  ";
    assert.match(renderResults(s), /no keywords/);
});
test("element content is HTML-escaped", () => {
    const s = sessionWithResult({ groups: [
            { site_id: "a", knowledge_id: "1", status: "ok",
                elements: [{ eid: 1, content: "IF a<b THEN c>d & \"e\"", attributes: {} }] },
        ] });
    const html = renderResults(s);
    assert.ok(html.includes("IF a&lt;b THEN c&gt;d &amp; &quot;e&quot;"));
    assert.ok(!html.includes("a<b"));
});
