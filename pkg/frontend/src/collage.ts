/** Interactive 5×3 collage grid.
 *
 *  Cells are positioned with exactly the geometry the server reports, so the
 *  hover-dwell coordinates fed to the recorder land in the same rectangles
 *  the engine uses to attribute gaze to images.  Clicking a cell toggles its
 *  selection; the submit button hands the selected ids to the caller.  A
 *  broken asset degrades to a labelled placeholder that stays clickable.
 */

import type { CollagePayload } from "./api.js";
import { DwellRecorder } from "./dwell.js";

export interface CollageOptions {
  round: number;
  rounds: number;
  target?: string | null;
  assetBase?: string;
  recorder?: DwellRecorder;
  /** Milliseconds-now source for dwell timestamps (defaults to
   *  performance.now); samples are stamped relative to render time. */
  clock?: () => number;
  onSubmit: (clicks: string[]) => void;
}

export interface CollageHandle {
  element: HTMLElement;
  selected(): string[];
  /** Toggle a cell's selection programmatically (same path as a click). */
  toggleCell(imageId: string): void;
  submit(): void;
}

export function renderCollage(
  container: HTMLElement,
  payload: CollagePayload,
  options: CollageOptions,
): CollageHandle {
  const clock = options.clock ?? (() => performance.now());
  const renderedAt = clock();
  const selected = new Set<string>();
  const cellButtons = new Map<string, HTMLButtonElement>();

  container.replaceChildren();
  const view = document.createElement("section");
  view.className = "collage-view";

  if (options.target) {
    const banner = document.createElement("p");
    banner.className = "target-banner";
    banner.textContent = `Find: ${options.target}`;
    view.appendChild(banner);
  }

  const indicator = document.createElement("p");
  indicator.className = "round-indicator";
  indicator.textContent = `Round ${options.round + 1} of ${options.rounds}`;
  view.appendChild(indicator);

  const board = document.createElement("div");
  board.className = "collage-board";
  board.style.position = "relative";
  board.style.width = `${payload.grid.cols * payload.grid.cell_w}px`;
  board.style.height = `${payload.grid.rows * payload.grid.cell_h}px`;
  view.appendChild(board);

  for (const image of payload.images) {
    const button = document.createElement("button");
    button.type = "button";
    button.className = "cell";
    button.dataset.imageId = image.id;
    button.style.position = "absolute";
    button.style.left = `${image.cell.x}px`;
    button.style.top = `${image.cell.y}px`;
    button.style.width = `${image.cell.w}px`;
    button.style.height = `${image.cell.h}px`;

    const img = document.createElement("img");
    img.src = (options.assetBase ?? "") + image.url;
    img.alt = image.id;
    img.draggable = false;
    img.addEventListener("error", () => {
      const placeholder = document.createElement("div");
      placeholder.className = "placeholder";
      placeholder.textContent = image.id;
      img.replaceWith(placeholder);
      button.classList.add("broken");
    });
    button.appendChild(img);

    button.addEventListener("click", () => {
      if (selected.has(image.id)) {
        selected.delete(image.id);
        button.classList.remove("selected");
      } else {
        selected.add(image.id);
        button.classList.add("selected");
      }
    });

    if (options.recorder) {
      const recorder = options.recorder;
      const toLogical = (event: MouseEvent): [number, number] => {
        // Map the pointer's fraction of the displayed cell onto the
        // server's logical rectangle, so CSS scaling never skews gaze.
        const rect = button.getBoundingClientRect();
        const fx = rect.width > 0 ? (event.clientX - rect.left) / rect.width : 0;
        const fy = rect.height > 0 ? (event.clientY - rect.top) / rect.height : 0;
        const clamp = (v: number) => Math.min(1, Math.max(0, v));
        return [
          image.cell.x + clamp(fx) * image.cell.w,
          image.cell.y + clamp(fy) * image.cell.h,
        ];
      };
      const report = (event: Event) => {
        const [lx, ly] = toLogical(event as MouseEvent);
        recorder.update(image.id, lx, ly, clock() - renderedAt);
      };
      button.addEventListener("pointerenter", report);
      button.addEventListener("pointermove", report);
      button.addEventListener("pointerleave", () => {
        recorder.leave(clock() - renderedAt);
      });
    }

    cellButtons.set(image.id, button);
    board.appendChild(button);
  }

  const submitButton = document.createElement("button");
  submitButton.type = "button";
  submitButton.className = "submit";
  submitButton.textContent = "Send feedback";
  const submit = () => {
    options.recorder?.flush(clock() - renderedAt);
    options.onSubmit([...selected]);
  };
  submitButton.addEventListener("click", submit);
  view.appendChild(submitButton);

  container.appendChild(view);

  return {
    element: view,
    selected: () => [...selected],
    toggleCell: (imageId: string) => {
      cellButtons.get(imageId)?.click();
    },
    submit,
  };
}
