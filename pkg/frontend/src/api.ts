/**
 * Typed client for the game service endpoints. All scores and timings shown
 * in the UI come from these responses; the client never computes points.
 */

export interface PassageView {
  id: string;
  text: string;
}

export interface PageView {
  title: string;
  category: string;
  passages: PassageView[];
}

export interface AuthorStartResponse {
  session_id: string;
  page: PageView;
}

export interface HitView {
  passage_id: string;
  page_title: string;
  text: string;
  score: number;
  rank: number;
  highlights: [number, number][];
}

export interface RetrieveResponse {
  hits: HitView[];
  gold_rank: number | null;
}

export interface EvidenceSpanView {
  page: string;
  text: string;
  passage_id: string | null;
  precision: number;
}

export interface SubmitResponse {
  claim_id: string;
  label: string;
  gold_evidence: EvidenceSpanView[];
}

export interface ClaimView {
  id: string;
  text: string;
}

export interface VoteStartResponse {
  round_id: string;
  pot: number;
  remaining: number;
  claims: ClaimView[];
}

export interface ScoreView {
  round_id: string;
  voter_points: number;
  author_points: Record<string, number>;
  claim_ids: string[];
  liked: string | null;
}

export interface HintResponse {
  passage?: { id: string; title: string; text: string };
  hints_taken?: number;
  remaining?: number;
  expired?: boolean;
  score?: ScoreView;
}

export interface AnswerResponse {
  correct: boolean | null;
  unanswered: boolean;
  refuted_claim_id: string;
  score: ScoreView;
}

export interface LikeResponse {
  score: ScoreView;
  bonus: number;
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number, readonly retryable: boolean) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly playerId: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method,
        headers: {
          "Content-Type": "application/json",
          "X-Player-Id": this.playerId,
        },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(`service unreachable: ${String(err)}`, 0, true);
    }
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      const message =
        typeof payload?.error === "string" ? payload.error : `HTTP ${response.status}`;
      throw new ApiError(message, response.status, response.status >= 500);
    }
    return payload as T;
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request("GET", "/health");
  }

  categories(): Promise<{ categories: string[] }> {
    return this.request("GET", "/categories");
  }

  authorStart(category: string | null): Promise<AuthorStartResponse> {
    return this.request("POST", "/author/start", { category });
  }

  authorRetrieve(
    sessionId: string,
    draft: string,
    goldPassageId: string | null,
  ): Promise<RetrieveResponse> {
    return this.request("POST", "/author/retrieve", {
      session_id: sessionId,
      draft,
      gold_passage_id: goldPassageId,
    });
  }

  authorSubmit(
    sessionId: string,
    text: string,
    label: "entailed" | "refuted",
    spans: string[],
  ): Promise<SubmitResponse> {
    return this.request("POST", "/author/submit", {
      session_id: sessionId,
      text,
      label,
      spans,
    });
  }

  voteStart(category: string | null): Promise<VoteStartResponse> {
    return this.request("POST", "/vote/start", { category });
  }

  voteHint(roundId: string): Promise<HintResponse> {
    return this.request("POST", "/vote/hint", { round_id: roundId });
  }

  voteAnswer(roundId: string, claimId: string | null): Promise<AnswerResponse> {
    return this.request("POST", "/vote/answer", { round_id: roundId, claim_id: claimId });
  }

  voteLike(roundId: string, claimId: string): Promise<LikeResponse> {
    return this.request("POST", "/vote/like", { round_id: roundId, claim_id: claimId });
  }
}
