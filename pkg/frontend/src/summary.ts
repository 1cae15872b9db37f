/** End-of-session view: a per-round feedback chart plus a gallery of the
 *  images the user marked relevant.
 *
 *  The chart (relevant count per round as bars, cumulative precision as a
 *  line) only exists when the engine knew the ground-truth target category;
 *  otherwise the gallery stands alone.  A session with no completed rounds
 *  renders an empty-state message. */

import type { SessionSummary } from "./api.js";

export interface FoundImage {
  id: string;
  url: string;
}

const CHART_WIDTH = 480;
const CHART_HEIGHT = 160;
const SVG_NS = "http://www.w3.org/2000/svg";

export function renderSummary(
  container: HTMLElement,
  summary: SessionSummary | null,
  found: FoundImage[],
  options: { assetBase?: string } = {},
): HTMLElement {
  container.replaceChildren();
  const view = document.createElement("section");
  view.className = "summary-view";

  if (!summary || summary.rounds_completed === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "This session ended before any feedback was given.";
    view.appendChild(empty);
    container.appendChild(view);
    return view;
  }

  const heading = document.createElement("h2");
  heading.textContent = `Session finished: ${summary.rounds_completed} rounds, ` +
    `${summary.n_images_shown} images shown`;
  view.appendChild(heading);

  if (summary.precision_curve && summary.precision_curve.length > 0) {
    view.appendChild(
      buildChart(summary.precision_curve, summary.relevant_per_round ?? []),
    );
  }

  view.appendChild(buildGallery(found, options.assetBase ?? ""));
  container.appendChild(view);
  return view;
}

function buildChart(
  precisionCurve: number[],
  relevantPerRound: number[],
): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "precision-chart");
  svg.setAttribute("viewBox", `0 0 ${CHART_WIDTH} ${CHART_HEIGHT}`);
  svg.setAttribute("width", String(CHART_WIDTH));
  svg.setAttribute("height", String(CHART_HEIGHT));

  const n = precisionCurve.length;
  const slot = CHART_WIDTH / n;
  const maxRelevant = Math.max(1, ...relevantPerRound);

  relevantPerRound.forEach((count, i) => {
    const bar = document.createElementNS(SVG_NS, "rect");
    const height = (count / maxRelevant) * (CHART_HEIGHT - 20);
    bar.setAttribute("class", "relevant-bar");
    bar.setAttribute("x", String(i * slot + slot * 0.2));
    bar.setAttribute("y", String(CHART_HEIGHT - height));
    bar.setAttribute("width", String(slot * 0.6));
    bar.setAttribute("height", String(height));
    svg.appendChild(bar);
  });

  const points = precisionCurve.map((p, i) => {
    const x = i * slot + slot / 2;
    const y = CHART_HEIGHT - 10 - p * (CHART_HEIGHT - 20);
    return { x, y, p };
  });

  const line = document.createElementNS(SVG_NS, "polyline");
  line.setAttribute("class", "precision-line");
  line.setAttribute("fill", "none");
  line.setAttribute(
    "points",
    points.map(({ x, y }) => `${x},${y}`).join(" "),
  );
  svg.appendChild(line);

  for (const { x, y, p } of points) {
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("class", "chart-point");
    dot.setAttribute("cx", String(x));
    dot.setAttribute("cy", String(y));
    dot.setAttribute("r", "3");
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `precision ${p.toFixed(3)}`;
    dot.appendChild(title);
    svg.appendChild(dot);
  }
  return svg;
}

function buildGallery(found: FoundImage[], assetBase: string): HTMLElement {
  const gallery = document.createElement("div");
  gallery.className = "found-gallery";

  const heading = document.createElement("h3");
  heading.textContent = `Marked relevant (${found.length})`;
  gallery.appendChild(heading);

  if (found.length === 0) {
    const note = document.createElement("p");
    note.className = "gallery-empty";
    note.textContent = "No images were marked relevant.";
    gallery.appendChild(note);
    return gallery;
  }

  const grid = document.createElement("div");
  grid.className = "gallery-grid";
  for (const image of found) {
    const img = document.createElement("img");
    img.src = assetBase + image.url;
    img.alt = image.id;
    img.title = image.id;
    grid.appendChild(img);
  }
  gallery.appendChild(grid);
  return gallery;
}
