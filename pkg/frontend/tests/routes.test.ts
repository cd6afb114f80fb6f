// Hash routes: every view is addressable, so a refresh rebuilds it
// from GETs alone.

import { describe, expect, it } from "vitest";
import { parseRoute } from "../src/main.js";

describe("parseRoute", () => {
  it("defaults to the workspace list", () => {
    expect(parseRoute("")).toEqual({ kind: "list" });
    expect(parseRoute("#/")).toEqual({ kind: "list" });
    expect(parseRoute("#/unknown")).toEqual({ kind: "list" });
  });

  it("routes to the review view for a workspace", () => {
    expect(parseRoute("#/w/demo")).toEqual({ kind: "review", workspace: "demo" });
    expect(parseRoute("#/w/my%20ws")).toEqual({ kind: "review", workspace: "my ws" });
  });

  it("routes to the round comparison view", () => {
    expect(parseRoute("#/w/demo/compare/0/1")).toEqual({
      kind: "compare",
      workspace: "demo",
      before: 0,
      after: 1,
    });
  });

  it("falls back to review when round indices are not integers", () => {
    expect(parseRoute("#/w/demo/compare/a/b")).toEqual({
      kind: "review",
      workspace: "demo",
    });
  });
});
