// Minimal SVG charts: no canvas, no chart library, renders fine headless.

export const DEFAULT_MAX_POINTS = 2000;

/** Rolling series with a FIFO cap so long-lived live charts stay bounded. */
export class RollingSeries {
  readonly xs: number[] = [];
  readonly ys: number[] = [];

  constructor(readonly maxPoints: number = DEFAULT_MAX_POINTS) {}

  push(x: number, y: number): void {
    this.xs.push(x);
    this.ys.push(y);
    if (this.xs.length > this.maxPoints) {
      this.xs.splice(0, this.xs.length - this.maxPoints);
      this.ys.splice(0, this.ys.length - this.maxPoints);
    }
  }

  get length(): number {
    return this.xs.length;
  }
}

export interface ChartOptions {
  width?: number;
  height?: number;
  stroke?: string;
  yLabel?: string;
}

export function polylinePoints(
  xs: readonly number[], ys: readonly number[], width: number, height: number,
): string {
  const n = Math.min(xs.length, ys.length);
  if (n === 0) return "";
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin || 1;
  const coords: string[] = [];
  for (let i = 0; i < n; i++) {
    const x = ((xs[i]! - xMin) / xSpan) * width;
    const y = height - ((ys[i]! - yMin) / ySpan) * height;
    coords.push(`${x.toFixed(2)},${y.toFixed(2)}`);
  }
  return coords.join(" ");
}

export function renderLineChart(
  target: HTMLElement, xs: readonly number[], ys: readonly number[],
  options: ChartOptions = {},
): void {
  const width = options.width ?? 600;
  const height = options.height ?? 160;
  const stroke = options.stroke ?? "#2563eb";
  if (xs.length === 0) {
    target.innerHTML = `<div class="chart-empty">no data yet</div>`;
    return;
  }
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  target.innerHTML = `
    <svg viewBox="0 0 ${width} ${height}" class="line-chart" preserveAspectRatio="none">
      <polyline fill="none" stroke="${stroke}" stroke-width="1.5"
        points="${polylinePoints(xs, ys, width, height)}" />
    </svg>
    <div class="chart-scale">
      <span>${options.yLabel ?? ""}</span>
      <span>min ${yMin.toFixed(3)} / max ${yMax.toFixed(3)}</span>
    </div>`;
}

export function renderBars(
  target: HTMLElement, labels: string[], values: number[], colors: string[],
): void {
  const total = values.reduce((a, b) => a + b, 0) || 1;
  target.innerHTML = labels
    .map((label, i) => {
      const value = values[i] ?? 0;
      const pct = (100 * value) / total;
      return `
        <div class="bar-row">
          <span class="bar-label">${label}</span>
          <div class="bar-track">
            <div class="bar-fill" style="width:${pct.toFixed(1)}%;background:${colors[i] ?? "#888"}"></div>
          </div>
          <span class="bar-value">${value}</span>
        </div>`;
    })
    .join("");
}
