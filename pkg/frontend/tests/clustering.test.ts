import { describe, expect, it } from "vitest";

import {
  boundsOf,
  cellSizeForZoom,
  clusterByGrid,
  project,
  type MapPoint,
} from "../src/clustering.js";

function point(id: string, lat: number, lon: number): MapPoint {
  return { id, lat, lon, color: "green" };
}

describe("clusterByGrid", () => {
  it("merges co-located palms into one cluster with the full count", () => {
    const points = [0, 1, 2, 3, 4].map((i) =>
      point(`palm-${i}`, 24.71 + i * 1e-5, 46.62 + i * 1e-5),
    );
    const items = clusterByGrid(points, cellSizeForZoom(0));
    expect(items).toHaveLength(1);
    expect(items[0]!.kind).toBe("cluster");
    expect(items[0]!.members).toHaveLength(5);
  });

  it("keeps distant palms as single markers", () => {
    const items = clusterByGrid(
      [point("a", 24.0, 46.0), point("b", 25.0, 47.0)],
      cellSizeForZoom(0),
    );
    expect(items).toHaveLength(2);
    expect(items.every((i) => i.kind === "single")).toBe(true);
  });

  it("splits clusters apart as the zoom increases", () => {
    const points = [
      point("a", 24.7100, 46.6200),
      point("b", 24.7101, 46.6201),
      point("c", 24.7160, 46.6260),
    ];
    const zoomedOut = clusterByGrid(points, cellSizeForZoom(0));
    expect(zoomedOut.some((i) => i.kind === "cluster")).toBe(true);
    // zoom 8 shrinks cells to ~7.8e-5 deg, below the 1e-4 deg spacing
    const zoomedIn = clusterByGrid(points, cellSizeForZoom(8));
    expect(zoomedIn.filter((i) => i.kind === "single")).toHaveLength(3);
  });

  it("uses the member centroid for the cluster position", () => {
    const items = clusterByGrid(
      [point("a", 24.7100, 46.6200), point("b", 24.7102, 46.6204)],
      cellSizeForZoom(0),
    );
    expect(items[0]!.lat).toBeCloseTo(24.7101, 8);
    expect(items[0]!.lon).toBeCloseTo(46.6202, 8);
  });
});

describe("projection", () => {
  it("maps bounds corners to the viewport corners", () => {
    const bounds = { minLat: 24.0, maxLat: 25.0, minLon: 46.0, maxLon: 47.0 };
    expect(project(24.0, 46.0, bounds, 640, 400)).toEqual({ x: 0, y: 400 });
    expect(project(25.0, 47.0, bounds, 640, 400)).toEqual({ x: 640, y: 0 });
  });

  it("boundsOf pads the extremes", () => {
    const bounds = boundsOf([point("a", 24.0, 46.0)], 0.001);
    expect(bounds.minLat).toBeLessThan(24.0);
    expect(bounds.maxLat).toBeGreaterThan(24.0);
  });
});
