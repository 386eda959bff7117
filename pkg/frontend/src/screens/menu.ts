import { ApiClient, ApiError, AuthorStartResponse, VoteStartResponse } from "../api.js";
import { el } from "../util.js";

export interface MenuHandlers {
  onAuthor: (started: AuthorStartResponse) => void;
  onVote: (started: VoteStartResponse) => void;
}

/**
 * Category picker plus the author/vote role choice. Errors from the service
 * surface verbatim; connectivity failures show a retryable banner.
 */
export function renderMenu(container: HTMLElement, api: ApiClient, handlers: MenuHandlers): void {
  container.textContent = "";
  const banner = el("div", { class: "banner", role: "alert", hidden: "" });
  const heading = el("h1", {}, "Pick a topic, then write or vote");
  const select = el("select", { id: "category", "aria-label": "Category" });
  select.appendChild(el("option", { value: "" }, "All categories"));
  const authorButton = el("button", { id: "start-author" }, "Write a claim");
  const voteButton = el("button", { id: "start-vote" }, "Spot the false claim");

  const showError = (message: string, retryable: boolean) => {
    banner.hidden = false;
    banner.textContent = message;
    if (retryable) {
      const retry = el("button", { id: "retry" }, "Retry");
      retry.addEventListener("click", () => renderMenu(container, api, handlers));
      banner.appendChild(retry);
    }
  };

  api
    .categories()
    .then(({ categories }) => {
      for (const category of categories) {
        select.appendChild(el("option", { value: category }, category));
      }
    })
    .catch((err: unknown) => {
      const apiErr = err instanceof ApiError ? err : new ApiError(String(err), 0, true);
      showError(apiErr.message, apiErr.retryable);
    });

  const chosen = () => (select.value === "" ? null : select.value);

  authorButton.addEventListener("click", () => {
    api
      .authorStart(chosen())
      .then(handlers.onAuthor)
      .catch((err: ApiError) => showError(err.message, err.retryable));
  });
  voteButton.addEventListener("click", () => {
    api
      .voteStart(chosen())
      .then(handlers.onVote)
      .catch((err: ApiError) => showError(err.message, err.retryable));
  });

  container.append(heading, banner, select, authorButton, voteButton);
}
