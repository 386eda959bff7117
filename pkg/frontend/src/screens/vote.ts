import { AnswerResponse, ApiClient, ScoreView, VoteStartResponse } from "../api.js";
import { CountdownTimer } from "../timer.js";
import { el } from "../util.js";

export interface VoteHandlers {
  onDone: () => void;
}

function formatAuthorPoints(score: ScoreView): string {
  const parts = Object.entries(score.author_points)
    .sort()
    .map(([author, points]) => `${author} +${points}`);
  return parts.join(", ");
}

/**
 * The voting round: both claims in the server's display order, a countdown
 * that re-syncs to the server's remaining pot on every response, clue
 * purchases, and the final point split exactly as the server reports it.
 */
export function renderVote(
  container: HTMLElement,
  api: ApiClient,
  start: VoteStartResponse,
  handlers: VoteHandlers,
): void {
  container.textContent = "";
  const timer = new CountdownTimer(start.remaining);
  let resolved = false;

  const timerView = el("div", { id: "timer", "aria-live": "polite" }, String(timer.seconds));
  const prompt = el("h1", {}, "Which claim is false?");
  const claimList = el("div", { id: "claims" });
  const claimButtons: HTMLButtonElement[] = [];
  for (const claim of start.claims) {
    const button = el("button", { class: "claim", "data-claim-id": claim.id }, claim.text);
    button.addEventListener("click", () => answer(claim.id));
    claimButtons.push(button);
    claimList.appendChild(button);
  }
  const clueButton = el("button", { id: "get-clue" }, "Get clue (-30s)");
  const evidenceList = el("ul", { id: "revealed-evidence" });
  const result = el("div", { id: "result", role: "status" });

  const interval = setInterval(() => {
    if (resolved) {
      return;
    }
    timerView.textContent = String(timer.tick());
    if (timer.expired) {
      resolveExpired();
    }
  }, 1000);

  const stop = () => {
    resolved = true;
    clearInterval(interval);
    clueButton.disabled = true;
    for (const button of claimButtons) {
      button.disabled = true;
    }
  };

  function showScore(response: AnswerResponse): void {
    stop();
    const score = response.score;
    if (response.unanswered) {
      result.append(
        el("p", { id: "outcome" }, "Time is up! The authors take the pot."),
        el("p", { id: "voter-points" }, "0 points"),
      );
    } else if (response.correct) {
      result.append(
        el("p", { id: "outcome" }, "Correct!"),
        el("p", { id: "voter-points" }, `+${score.voter_points} points`),
      );
    } else {
      const refuted = claimButtons.find(
        (b) => b.dataset.claimId === response.refuted_claim_id,
      );
      result.append(
        el("p", { id: "outcome" }, "Wrong! The false claim was highlighted."),
        el("p", { id: "voter-points" }, "0 points"),
      );
      refuted?.classList.add("refuted-reveal");
    }
    result.appendChild(el("p", { id: "author-points" }, formatAuthorPoints(score)));
    const likePrompt = el("p", {}, "Which claim did you like more?");
    result.appendChild(likePrompt);
    for (const claim of start.claims) {
      const like = el(
        "button",
        { class: "like", "data-claim-id": claim.id },
        `Like: ${claim.text.slice(0, 40)}`,
      );
      like.addEventListener("click", () => {
        api.voteLike(start.round_id, claim.id).then(({ bonus }) => {
          likePrompt.textContent = `Liked! Author gets +${bonus}.`;
          result.querySelectorAll("button.like").forEach((b) => {
            (b as HTMLButtonElement).disabled = true;
          });
        });
      });
      result.appendChild(like);
    }
    const back = el("button", { id: "back-to-menu" }, "Back to menu");
    back.addEventListener("click", handlers.onDone);
    result.appendChild(back);
  }

  function answer(claimId: string | null): void {
    if (resolved) {
      return;
    }
    api.voteAnswer(start.round_id, claimId).then((response) => {
      timer.sync(0);
      timerView.textContent = "0";
      showScore(response);
    });
  }

  function resolveExpired(): void {
    answer(null);
  }

  clueButton.addEventListener("click", () => {
    if (resolved) {
      return;
    }
    api.voteHint(start.round_id).then((response) => {
      if (response.expired && response.score) {
        timerView.textContent = "0";
        showScore({
          correct: null,
          unanswered: true,
          refuted_claim_id: "",
          score: response.score,
        });
        return;
      }
      if (response.remaining !== undefined) {
        timerView.textContent = String(timer.sync(response.remaining));
      }
      if (response.passage) {
        evidenceList.appendChild(
          el("li", { class: "evidence" }, `${response.passage.title}: ${response.passage.text}`),
        );
      }
      if (timer.expired) {
        resolveExpired();
      }
    });
  });

  container.append(prompt, timerView, claimList, clueButton, evidenceList, result);
}
