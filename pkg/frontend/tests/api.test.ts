import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

describe("ApiClient", () => {
  it("sends the player id header and JSON bodies", async () => {
    let seen: { url: string; init?: RequestInit } | undefined;
    const client = new ApiClient("http://svc", "player-7", async (url, init) => {
      seen = { url, init };
      return new Response(JSON.stringify({ categories: [] }), { status: 200 });
    });
    await client.categories();
    expect(seen?.url).toBe("http://svc/categories");
    const headers = seen?.init?.headers as Record<string, string>;
    expect(headers["X-Player-Id"]).toBe("player-7");
  });

  it("surfaces server error messages verbatim as non-retryable 4xx", async () => {
    const client = new ApiClient("", "p", async () =>
      new Response(JSON.stringify({ error: "no eligible refuted claims" }), { status: 409 }),
    );
    await expect(client.voteStart(null)).rejects.toMatchObject({
      message: "no eligible refuted claims",
      retryable: false,
    });
  });

  it("marks connectivity failures retryable", async () => {
    const client = new ApiClient("", "p", async () => {
      throw new TypeError("fetch failed");
    });
    const err = await client.health().catch((e: ApiError) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).retryable).toBe(true);
  });
});
