// Grid clustering for the farm map. Palms within the same grid cell merge
// into one grey cluster icon labelled with the palm count; the cell size
// shrinks as the user zooms in until markers stand alone.

export interface MapPoint {
  id: string;
  lat: number;
  lon: number;
  color: string;
}

export interface MapItem {
  kind: "single" | "cluster";
  lat: number; // centroid
  lon: number;
  members: MapPoint[];
}

export function clusterByGrid(points: MapPoint[], cellDegrees: number): MapItem[] {
  if (cellDegrees <= 0) {
    return points.map((p) => ({ kind: "single", lat: p.lat, lon: p.lon, members: [p] }));
  }
  const cells = new Map<string, MapPoint[]>();
  for (const point of points) {
    const key = `${Math.floor(point.lat / cellDegrees)}:${Math.floor(point.lon / cellDegrees)}`;
    const bucket = cells.get(key);
    if (bucket) bucket.push(point);
    else cells.set(key, [point]);
  }
  const items: MapItem[] = [];
  for (const members of cells.values()) {
    const lat = members.reduce((acc, p) => acc + p.lat, 0) / members.length;
    const lon = members.reduce((acc, p) => acc + p.lon, 0) / members.length;
    items.push({ kind: members.length > 1 ? "cluster" : "single", lat, lon, members });
  }
  items.sort((a, b) => a.lon - b.lon || a.lat - b.lat);
  return items;
}

/** Cell size for a zoom level: zoom 0 is fully out, each step halves it. */
export function cellSizeForZoom(zoom: number): number {
  return 0.02 / 2 ** zoom;
}

export interface Bounds {
  minLat: number;
  maxLat: number;
  minLon: number;
  maxLon: number;
}

export function boundsOf(points: MapPoint[], padding = 0.001): Bounds {
  if (points.length === 0) {
    return { minLat: -1, maxLat: 1, minLon: -1, maxLon: 1 };
  }
  const lats = points.map((p) => p.lat);
  const lons = points.map((p) => p.lon);
  return {
    minLat: Math.min(...lats) - padding,
    maxLat: Math.max(...lats) + padding,
    minLon: Math.min(...lons) - padding,
    maxLon: Math.max(...lons) + padding,
  };
}

/** Project lat/lon into [0, width] x [0, height] with y flipped. */
export function project(
  lat: number, lon: number, bounds: Bounds, width: number, height: number,
): { x: number; y: number } {
  const spanLon = bounds.maxLon - bounds.minLon || 1;
  const spanLat = bounds.maxLat - bounds.minLat || 1;
  return {
    x: ((lon - bounds.minLon) / spanLon) * width,
    y: height - ((lat - bounds.minLat) / spanLat) * height,
  };
}
