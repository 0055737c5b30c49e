export type Priority = "High" | "Medium" | "Low";

export type NotificationState = "pending" | "delivered" | "acknowledged";

/** One row of GET /notifications: a notification joined with its event. */
export interface NotificationRow {
  id: string;
  event_id: string;
  fire_at: string;
  kind: "detection" | "reminder";
  priority: Priority;
  state: NotificationState;
  event_type: string;
  occurs_at: string;
  sender: string;
  participants: string[];
}

export interface EmbeddedNotification {
  id: string;
  event_id: string;
  fire_at: string;
  kind: "detection" | "reminder";
  priority: Priority;
  state: NotificationState;
}

/** One row of GET /events. */
export interface EventRow {
  id: string;
  chat_id: string;
  sender: string;
  event_type: string;
  occurs_at: string;
  participants: string[];
  confidence: number;
  is_group: boolean;
  sent_at: string;
  status: "active" | "acknowledged" | "expired";
  priority: Priority;
  notifications: EmbeddedNotification[];
}

export interface Preferences {
  event_type_weights: Record<string, number>;
  sender_affinity: Record<string, number>;
  lead_schedule: Record<string, number[]>;
  quiet_hours: [number, number] | null;
}

/**
 * Everything the dashboard shows is derived from this plus nothing else:
 * the last successful server responses and per-card in-flight flags.
 */
export interface ViewState {
  pending: NotificationRow[];
  events: EventRow[];
  prefs: Preferences | null;
  lastSync: string | null;
  stale: boolean;
  inFlight: ReadonlySet<string>;
  cardErrors: Readonly<Record<string, string>>;
  prefsError: string | null;
}

export interface SyncPayload {
  pending: NotificationRow[];
  events: EventRow[];
  prefs: Preferences;
}
