/** Session loop: create a session, then alternate between showing the
 *  current collage and posting the user's feedback until the engine says
 *  the session is done, at which point the summary replaces the grid.
 *
 *  The loop is strictly sequential — each round blocks on the server's next
 *  collage — and issues exactly one feedback post per round.  One tab runs
 *  one session. */

import {
  ApiClient,
  type CollagePayload,
  type SessionRequest,
  type SessionSummary,
} from "./api.js";
import { renderCollage, type CollageHandle } from "./collage.js";
import { DwellRecorder } from "./dwell.js";
import { renderSummary, type FoundImage } from "./summary.js";

export type SessionScript = (
  collage: CollagePayload,
  round: number,
  handle: CollageHandle,
) => void | Promise<void>;

export interface RunOptions {
  api: ApiClient;
  root: HTMLElement;
  request: SessionRequest;
  /** Banner text describing what the user is searching for. */
  targetDescription?: string | null;
  clock?: () => number;
  /** Drives scripted sessions (tests, demos): inspect the collage, toggle
   *  cells through the handle, and call handle.submit().  Without a script
   *  the loop waits for the human to press the submit button. */
  script?: SessionScript;
}

export interface RunResult {
  sessionId: string;
  feedbackPosts: number;
  clicked: string[];
  summary: SessionSummary | null;
}

export async function runSession(options: RunOptions): Promise<RunResult> {
  const { api, root, request } = options;
  const recorder = new DwellRecorder();
  const created = await api.createSession(request);
  const sessionId = created.session_id;
  const rounds = created.rounds;
  const target =
    options.targetDescription ??
    (typeof request.target_category === "string"
      ? request.target_category
      : null);

  let collage = created.collage;
  let round = created.round;
  let summary: SessionSummary | null = null;
  let posts = 0;
  const found: FoundImage[] = [];
  const clickedIds: string[] = [];

  while (collage !== null) {
    recorder.reset();
    const urlOf = new Map(collage.images.map((img) => [img.id, img.url]));

    let handle!: CollageHandle;
    const submitted = new Promise<string[]>((resolve) => {
      handle = renderCollage(root, collage as CollagePayload, {
        round,
        rounds,
        target,
        assetBase: api.baseUrl,
        recorder,
        clock: options.clock,
        onSubmit: resolve,
      });
    });
    if (options.script) await options.script(collage, round, handle);
    const clicks = await submitted;

    const response = await api.postFeedback(sessionId, {
      round,
      clicks,
      gaze: recorder.drain(),
    });
    posts += 1;
    for (const id of clicks) {
      clickedIds.push(id);
      found.push({ id, url: urlOf.get(id) ?? "" });
    }

    round = response.next_round;
    collage = response.collage;
    if (response.done) summary = response.summary;
  }

  renderSummary(root, summary, found, { assetBase: api.baseUrl });
  return { sessionId, feedbackPosts: posts, clicked: clickedIds, summary };
}

/** Browser entry point: read the session setup from query parameters
 *  (?api=…&corpus=…&modality=…&rounds=…&seed=…&target=…) and run one
 *  session inside the given root element. */
export async function main(root: HTMLElement): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const api = new ApiClient(params.get("api") ?? "");

  const corpus = params.get("corpus");
  if (!corpus) {
    const corpora = await api.listCorpora();
    const list = corpora.map((c) => c.name).join(", ") || "(none)";
    root.textContent =
      `Pick a corpus via query parameters, e.g. ?corpus=NAME&rounds=8. ` +
      `Available: ${list}`;
    return;
  }

  const request: SessionRequest = { corpus };
  const modality = params.get("modality");
  if (modality) request.modality = modality;
  const rounds = params.get("rounds");
  if (rounds) request.rounds = Number(rounds);
  const seed = params.get("seed");
  if (seed) request.seed = Number(seed);
  const target = params.get("target");
  if (target) request.target_category = target;

  try {
    await runSession({ api, root, request, targetDescription: target });
  } catch (error) {
    const message = document.createElement("p");
    message.className = "error";
    message.textContent = `Session failed: ${String(error)}`;
    root.appendChild(message);
  }
}
