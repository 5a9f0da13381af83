/**
 * Contract tests against recorded service responses. The fixture files
 * under tests/fixtures/ hold byte-for-byte JSON bodies captured from a
 * live annotation service; the dashboard must display exactly the
 * fields the service sent, never a locally recomputed value.
 */

import { readFileSync } from "node:fs";

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionController } from "../src/controller.js";
import { formatStat, joinSegments, sentenceSegments } from "../src/render.js";
import type { AgreementStats, TaskBody } from "../src/types.js";

function fixtureText(name: string): string {
  return readFileSync(new URL(`./fixtures/${name}`, import.meta.url), "utf-8");
}

/** Serve each fixture body verbatim, keyed by path prefix. */
function fetchFromFixtures(routes: Record<string, string>) {
  return async (input: string): Promise<Response> => {
    for (const [prefix, body] of Object.entries(routes)) {
      if (input.includes(prefix)) {
        return new Response(body, {
          status: 200,
          headers: { "Content-Type": "application/json" },
        });
      }
    }
    return new Response(JSON.stringify({ detail: `no fixture for ${input}` }),
                        { status: 404 });
  };
}

describe("dashboard numbers against recorded responses", () => {
  it("mirrors a pilot-phase agreement response field for field", async () => {
    const raw = fixtureText("agreement_pilot.json");
    const recorded = JSON.parse(raw) as AgreementStats;
    const client = new ApiClient("http://service",
                                 fetchFromFixtures({ "/stats/agreement": raw }));
    const controller = new SessionController(client);

    await controller.refreshAgreement();
    const shown = controller.getState().agreement;

    expect(shown).not.toBeNull();
    expect(shown!.n).toBe(recorded.n);
    expect(shown!.p_o).toBe(recorded.p_o);
    expect(shown!.kappa).toBe(recorded.kappa);
    expect(shown).toEqual(recorded);
    // This capture has one agreeing and one disagreeing pilot pair;
    // kappa 0.0 sits far below the 0.80 default, so the badge is red.
    expect(controller.getState().badge).toBe("red");
  });

  it("shows placeholders for the pre-pilot empty response", async () => {
    const raw = fixtureText("agreement_empty.json");
    const recorded = JSON.parse(raw) as AgreementStats;
    const client = new ApiClient("http://service",
                                 fetchFromFixtures({ "/stats/agreement": raw }));
    const controller = new SessionController(client);

    await controller.refreshAgreement();
    const shown = controller.getState().agreement;

    expect(shown).toEqual(recorded);
    expect(shown!.n).toBe(0);
    expect(shown!.p_o).toBeNull();
    expect(shown!.kappa).toBeNull();
    expect(controller.getState().badge).toBe("none");
    expect(formatStat(shown!.p_o)).toBe("-");
    expect(formatStat(shown!.kappa)).toBe("-");
  });

  it("renders a recorded task body without altering its text", async () => {
    const raw = fixtureText("task_next.json");
    const recorded = JSON.parse(raw) as TaskBody;
    const client = new ApiClient("http://service",
                                 fetchFromFixtures({ "/tasks/next": raw }));

    const received = await client.nextTask("ann-001");

    expect(received).toEqual(recorded);
    const segments = sentenceSegments(received!);
    expect(joinSegments(segments)).toBe(recorded.text);
    expect(segments.marked.length).toBeGreaterThan(0);
  });
});
