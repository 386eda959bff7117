import { ApiClient, ApiError, AuthorStartResponse } from "../api.js";
import { renderHighlighted } from "../highlight.js";
import { debounce, el } from "../util.js";

export interface WriteHandlers {
  onDone: () => void;
}

/** Client-side span check: 1 or 2 non-empty spans, nothing more. */
export function validateSpans(spans: string[]): { ok: boolean; message?: string } {
  const filled = spans.map((s) => s.trim()).filter((s) => s.length > 0);
  if (filled.length === 0) {
    return { ok: false, message: "Mark at least one evidence span." };
  }
  if (filled.length > 2) {
    return { ok: false, message: "At most two evidence spans are allowed." };
  }
  return { ok: true };
}

/**
 * The authoring screen: the sampled page on one side, the live-retrieval
 * list on the other. Draft edits call the service after a 300 ms debounce;
 * matching tokens are highlighted and a badge shows where the marked gold
 * passage ranks. Authors mark one or two evidence spans and submit.
 */
export function renderWrite(
  container: HTMLElement,
  api: ApiClient,
  start: AuthorStartResponse,
  handlers: WriteHandlers,
): void {
  container.textContent = "";
  let goldPassageId: string | null = null;
  let lastDraft = "";

  const heading = el("h1", {}, `Write a claim about: ${start.page.title}`);
  const status = el("div", { id: "write-status", role: "status" });

  const pagePanel = el("section", { id: "page-panel" });
  pagePanel.appendChild(el("h2", {}, "Source passages"));
  for (const passage of start.page.passages) {
    const block = el("div", { class: "passage", "data-passage-id": passage.id });
    block.appendChild(el("p", {}, passage.text));
    const markGold = el(
      "button",
      { class: "mark-gold", "data-passage-id": passage.id },
      "Mark as gold evidence",
    );
    markGold.addEventListener("click", () => {
      goldPassageId = passage.id;
      status.textContent = `Gold evidence: ${passage.id}`;
      retrieve(lastDraft);
    });
    block.appendChild(markGold);
    pagePanel.appendChild(block);
  }

  const draft = el("textarea", {
    id: "draft",
    rows: "3",
    "aria-label": "Claim draft",
    placeholder: "Write a claim this page entails or refutes…",
  });
  const hitsPanel = el("section", { id: "hits-panel" });
  hitsPanel.appendChild(el("h2", {}, "What retrieval sees"));
  const goldBadge = el("div", { id: "gold-badge", hidden: "" });
  const hitList = el("ol", { id: "hits" });
  hitsPanel.append(goldBadge, hitList);

  function retrieve(text: string): void {
    lastDraft = text;
    if (!text.trim()) {
      hitList.textContent = "";
      goldBadge.hidden = true;
      return;
    }
    api.authorRetrieve(start.session_id, text, goldPassageId).then((response) => {
      hitList.textContent = "";
      goldBadge.hidden = response.gold_rank === null;
      if (response.gold_rank !== null) {
        goldBadge.textContent = `Gold evidence retrieved at rank ${response.gold_rank}`;
      }
      for (const hit of response.hits) {
        const item = el("li", { class: "hit", "data-passage-id": hit.passage_id });
        item.appendChild(el("strong", {}, `#${hit.rank} ${hit.page_title}`));
        if (goldPassageId === hit.passage_id) {
          item.appendChild(el("span", { class: "gold-marker" }, " (your gold)"));
        }
        const body = el("p", { class: "hit-text" });
        renderHighlighted(body, hit.text, hit.highlights);
        item.appendChild(body);
        hitList.appendChild(item);
      }
    });
  }

  const debouncedRetrieve = debounce((text: string) => retrieve(text), 300);
  draft.addEventListener("input", () => debouncedRetrieve(draft.value));

  const spanOne = el("input", { id: "span-1", "aria-label": "Evidence span 1" });
  const spanTwo = el("input", { id: "span-2", "aria-label": "Evidence span 2 (optional)" });
  const labelSelect = el("select", { id: "label", "aria-label": "Claim label" });
  labelSelect.appendChild(el("option", { value: "entailed" }, "Entailed (true)"));
  labelSelect.appendChild(el("option", { value: "refuted" }, "Refuted (false)"));
  const submit = el("button", { id: "submit-claim" }, "Submit claim");

  submit.addEventListener("click", () => {
    const spans = [spanOne.value, spanTwo.value].map((s) => s.trim()).filter(Boolean);
    const verdict = validateSpans(spans);
    if (!verdict.ok) {
      status.textContent = verdict.message ?? "Invalid spans.";
      return;
    }
    api
      .authorSubmit(
        start.session_id,
        draft.value,
        labelSelect.value as "entailed" | "refuted",
        spans,
      )
      .then((response) => {
        status.textContent = `Claim ${response.claim_id} submitted.`;
        submit.disabled = true;
        const back = el("button", { id: "back-to-menu" }, "Back to menu");
        back.addEventListener("click", handlers.onDone);
        container.appendChild(back);
      })
      .catch((err: ApiError) => {
        status.textContent = err.message;
      });
  });

  container.append(heading, status, pagePanel, draft, hitsPanel, spanOne, spanTwo, labelSelect, submit);
}
