import { ApiClient, AuthorStartResponse, VoteStartResponse } from "./api.js";
import { renderMenu } from "./screens/menu.js";
import { renderVote } from "./screens/vote.js";
import { renderWrite } from "./screens/write.js";

export interface ScreenState {
  screen: "menu" | "vote" | "write";
  sessionId: string | null;
  roundId: string | null;
  remainingSeconds: number;
  revealedEvidence: string[];
}

/** Single-page flow across the three screens; one session per browser tab. */
export class App {
  readonly state: ScreenState = {
    screen: "menu",
    sessionId: null,
    roundId: null,
    remainingSeconds: 0,
    revealedEvidence: [],
  };

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {}

  start(): void {
    this.showMenu();
  }

  showMenu(): void {
    this.state.screen = "menu";
    this.state.sessionId = null;
    this.state.roundId = null;
    renderMenu(this.root, this.api, {
      onAuthor: (started) => this.showWrite(started),
      onVote: (started) => this.showVote(started),
    });
  }

  showWrite(started: AuthorStartResponse): void {
    this.state.screen = "write";
    this.state.sessionId = started.session_id;
    renderWrite(this.root, this.api, started, { onDone: () => this.showMenu() });
  }

  showVote(started: VoteStartResponse): void {
    this.state.screen = "vote";
    this.state.roundId = started.round_id;
    this.state.remainingSeconds = started.remaining;
    renderVote(this.root, this.api, started, { onDone: () => this.showMenu() });
  }
}
