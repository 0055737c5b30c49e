import { ApiClient, ApiError } from "./api.js";
import { collectPrefsForm, render } from "./render.js";
import type { Handlers } from "./render.js";
import {
  applyAck,
  applyEventUpdate,
  applyPrefsEcho,
  applySync,
  applySyncFailure,
  beginMutation,
  clearCardError,
  endMutation,
  initialState,
  setCardError,
  setPrefsError,
} from "./state.js";
import type { Priority, ViewState } from "./types.js";

export class App {
  state: ViewState = initialState();
  private timer: ReturnType<typeof setInterval> | null = null;
  private readonly handlers: Handlers;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    private readonly pollMs: number = 10_000,
  ) {
    this.handlers = {
      onAck: (id) => void this.ack(id),
      onFeedback: (eventId, priority) => void this.feedback(eventId, priority),
      onSavePrefs: () => void this.savePrefs(),
    };
  }

  private commit(state: ViewState): void {
    this.state = state;
    render(this.root, this.state, this.handlers);
  }

  /** One poll cycle. Failure keeps the current view and flags it stale. */
  async refresh(): Promise<void> {
    try {
      const payload = await this.client.sync();
      this.commit(applySync(this.state, payload, new Date().toISOString()));
    } catch {
      this.commit(applySyncFailure(this.state));
    }
  }

  start(): void {
    void this.refresh();
    this.timer = setInterval(() => void this.refresh(), this.pollMs);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  /** Ack with the button disabled in flight; a 404 means our view was
   * behind, so resync instead of guessing. */
  async ack(notificationId: string): Promise<void> {
    if (this.state.inFlight.has(notificationId)) return;
    this.commit(beginMutation(this.state, notificationId));
    try {
      await this.client.ack(notificationId);
      this.commit(applyAck(this.state, notificationId));
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        await this.refresh();
      }
      // other failures: the card stays; the re-enabled button is the retry
    } finally {
      this.commit(endMutation(this.state, notificationId));
    }
  }

  async feedback(eventId: string, priority: Priority): Promise<void> {
    if (this.state.inFlight.has(eventId)) return;
    this.commit(clearCardError(beginMutation(this.state, eventId), eventId));
    try {
      const updated = await this.client.submitFeedback(eventId, priority);
      this.commit(applyEventUpdate(this.state, updated));
    } catch (error) {
      const message =
        error instanceof ApiError ? error.message : "network error, try again";
      this.commit(setCardError(this.state, eventId, message));
    } finally {
      this.commit(endMutation(this.state, eventId));
    }
  }

  async savePrefs(): Promise<void> {
    if (!this.state.prefs) return;
    const collected = collectPrefsForm(this.root, this.state.prefs);
    if (!collected.ok) {
      this.commit(setPrefsError(this.state, collected.error));
      return;
    }
    try {
      const echo = await this.client.putPreferences(collected.prefs);
      this.commit(applyPrefsEcho(this.state, echo));
    } catch (error) {
      const message =
        error instanceof ApiError ? error.message : "network error, try again";
      this.commit(setPrefsError(this.state, message));
    }
  }
}
