import type {
  EventRow,
  NotificationRow,
  Preferences,
  SyncPayload,
  ViewState,
} from "./types.js";

export function initialState(): ViewState {
  return {
    pending: [],
    events: [],
    prefs: null,
    lastSync: null,
    stale: false,
    inFlight: new Set(),
    cardErrors: {},
    prefsError: null,
  };
}

function byEventTime(a: NotificationRow, b: NotificationRow): number {
  if (a.occurs_at !== b.occurs_at) return a.occurs_at < b.occurs_at ? -1 : 1;
  if (a.fire_at !== b.fire_at) return a.fire_at < b.fire_at ? -1 : 1;
  return a.id < b.id ? -1 : 1;
}

/** A successful poll replaces the lists wholesale and clears staleness. */
export function applySync(state: ViewState, payload: SyncPayload, at: string): ViewState {
  return {
    ...state,
    pending: [...payload.pending].sort(byEventTime),
    events: payload.events,
    prefs: payload.prefs,
    lastSync: at,
    stale: false,
  };
}

/** A failed poll keeps everything on screen and raises the stale banner. */
export function applySyncFailure(state: ViewState): ViewState {
  return { ...state, stale: true };
}

export function beginMutation(state: ViewState, id: string): ViewState {
  const inFlight = new Set(state.inFlight);
  inFlight.add(id);
  return { ...state, inFlight };
}

export function endMutation(state: ViewState, id: string): ViewState {
  const inFlight = new Set(state.inFlight);
  inFlight.delete(id);
  return { ...state, inFlight };
}

export function applyAck(state: ViewState, notificationId: string): ViewState {
  return {
    ...state,
    pending: state.pending.filter((row) => row.id !== notificationId),
  };
}

/**
 * Fold a fresh event body (the feedback response) back into the view:
 * the event row is replaced and its pinned cards are rebuilt from the
 * body's embedded notifications so the new schedule shows immediately.
 */
export function applyEventUpdate(state: ViewState, event: EventRow): ViewState {
  const events = state.events.map((row) => (row.id === event.id ? event : row));
  const rebuilt: NotificationRow[] = event.notifications
    .filter((n) => n.state !== "acknowledged")
    .map((n) => ({
      ...n,
      event_type: event.event_type,
      occurs_at: event.occurs_at,
      sender: event.sender,
      participants: event.participants,
    }));
  const pending = state.pending
    .filter((row) => row.event_id !== event.id)
    .concat(rebuilt)
    .sort(byEventTime);
  return { ...state, events, pending };
}

export function setCardError(state: ViewState, eventId: string, message: string): ViewState {
  return { ...state, cardErrors: { ...state.cardErrors, [eventId]: message } };
}

export function clearCardError(state: ViewState, eventId: string): ViewState {
  const cardErrors = { ...state.cardErrors };
  delete cardErrors[eventId];
  return { ...state, cardErrors };
}

export function setPrefsError(state: ViewState, message: string | null): ViewState {
  return { ...state, prefsError: message };
}

export function applyPrefsEcho(state: ViewState, prefs: Preferences): ViewState {
  return { ...state, prefs, prefsError: null };
}

/** Timeline grouping: day string (YYYY-MM-DD) to its events, days ascending. */
export function groupEventsByDay(events: EventRow[]): Array<[string, EventRow[]]> {
  const groups = new Map<string, EventRow[]>();
  for (const event of [...events].sort((a, b) => (a.occurs_at < b.occurs_at ? -1 : 1))) {
    const day = event.occurs_at.slice(0, 10);
    const bucket = groups.get(day);
    if (bucket) bucket.push(event);
    else groups.set(day, [event]);
  }
  return [...groups.entries()];
}

/** Reminders still to fire, soonest first. Fired or acked ones are history. */
export function upcomingReminders(event: EventRow) {
  return event.notifications
    .filter((n) => n.kind === "reminder" && n.state === "pending")
    .sort((a, b) => (a.fire_at < b.fire_at ? -1 : 1));
}

export type WeightCheck = { ok: true; value: number } | { ok: false; error: string };

/** Weights live in [0, 1]; everything else is rejected before any PUT. */
export function validateWeight(raw: string): WeightCheck {
  const trimmed = raw.trim();
  if (trimmed === "") return { ok: false, error: "weight is required" };
  const value = Number(trimmed);
  if (!Number.isFinite(value)) return { ok: false, error: `not a number: ${raw}` };
  if (value < 0 || value > 1) return { ok: false, error: `weight ${value} outside [0, 1]` };
  return { ok: true, value };
}

export function validateQuietHour(raw: string): { ok: true; value: number } | { ok: false; error: string } {
  const value = Number(raw);
  if (!Number.isInteger(value) || value < 0 || value > 23) {
    return { ok: false, error: `hour ${raw} outside 0..23` };
  }
  return { ok: true, value };
}
