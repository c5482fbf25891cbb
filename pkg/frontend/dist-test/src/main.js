/**
 * Browser bootstrap: wires DOM events to the session transitions and the
 * gateway client. All data flows through the gateway; in-flight responses
 * are dropped when the user has already changed the selection (the
 * generation counter supersedes them).
 */
import { GatewayClient } from "./api.js";
import { renderApp } from "./render.js";
import { enterChild, goTo, goUp, newSession, pathKey, recordChildren, setCandidates, setResult, togglePathSelection, toggleTarget, } from "./session.js";
const client = new GatewayClient(`${location.origin}/v1/message`);
const session = newSession();
const app = document.getElementById("app");
let generation = 0;
function redraw() {
    app.innerHTML = renderApp(session);
}
async function fetchChildren() {
    const gen = ++generation;
    const view = await client.navigate(session.currentPath);
    if (gen !== generation)
        return;
    recordChildren(session, session.currentPath, view.children);
    redraw();
}
async function refreshCandidates() {
    const gen = ++generation;
    if (session.selectedPaths.length === 0) {
        session.candidates = null;
        redraw();
        return;
    }
    const plan = await client.planRetrieval(session.selectedPaths);
    if (gen !== generation)
        return;
    setCandidates(session, plan.candidates);
    redraw();
}
async function runRetrieval() {
    const gen = ++generation;
    const keywords = session.pendingKeywords.split(/\s+/).filter((k) => k.length > 0);
    const result = await client.retrieve(session.selectedTargets, keywords);
    if (gen !== generation)
        return;
    setResult(session, result);
    redraw();
}
function currentChildren() {
    return session.childrenByPath[pathKey(session.currentPath)] ?? [];
}
app.addEventListener("click", (event) => {
    const el = event.target;
    if (el.classList.contains("enter")) {
        event.preventDefault();
        enterChild(session, el.dataset.name);
        redraw();
        void fetchChildren();
    }
    else if (el.classList.contains("crumb")) {
        event.preventDefault();
        const depth = Number(el.dataset.depth);
        if (depth === 0) {
            goTo(session, []);
        }
        else {
            goTo(session, session.currentPath.slice(0, depth));
        }
        redraw();
        void fetchChildren();
    }
    else if (el.id === "run-retrieval") {
        if (session.selectedTargets.length > 0) {
            void runRetrieval();
        }
    }
});
app.addEventListener("change", (event) => {
    const el = event.target;
    if (el.classList.contains("pick-path")) {
        const name = el.dataset.name;
        if (currentChildren().includes(name)) {
            togglePathSelection(session, [...session.currentPath, name]);
            void refreshCandidates();
        }
    }
    else if (el.classList.contains("pick-here")) {
        togglePathSelection(session, session.currentPath);
        void refreshCandidates();
    }
    else if (el.classList.contains("pick-target")) {
        toggleTarget(session, {
            site_id: el.dataset.site,
            knowledge_id: el.dataset.kid,
        });
        redraw();
    }
    else if (el.id === "keywords") {
        session.pendingKeywords = el.value;
    }
});
app.addEventListener("keydown", (event) => {
    const el = event.target;
    if (el.id === "keywords") {
        session.pendingKeywords = el.value;
        if (event.key === "Enter" && session.selectedTargets.length > 0) {
            void runRetrieval();
        }
    }
});
// re-fetch on focus so stale selections get flagged after catalog maintenance
window.addEventListener("focus", () => {
    void fetchChildren();
    if (session.selectedPaths.length > 0) {
        void refreshCandidates();
    }
});
document.addEventListener("keyup", (event) => {
    if (event.target.id === "keywords") {
        session.pendingKeywords = event.target.value;
    }
});
const upButton = document.getElementById("up");
if (upButton) {
    upButton.addEventListener("click", () => {
        goUp(session);
        redraw();
        void fetchChildren();
    });
}
redraw();
void fetchChildren();
