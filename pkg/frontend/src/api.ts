import type { EventRow, NotificationRow, Preferences, Priority, SyncPayload } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (typeof body?.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, detail);
}

/** Thin typed wrapper over the notifier's HTTP API. */
export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) throw await parseError(response);
    return response;
  }

  async getPending(): Promise<NotificationRow[]> {
    const response = await this.request("/notifications?state=pending");
    return response.json();
  }

  async getEvents(): Promise<EventRow[]> {
    const response = await this.request("/events");
    return response.json();
  }

  async getPreferences(): Promise<Preferences> {
    const response = await this.request("/preferences");
    return response.json();
  }

  async putPreferences(prefs: Preferences): Promise<Preferences> {
    const response = await this.request("/preferences", {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(prefs),
    });
    return response.json();
  }

  async ack(notificationId: string): Promise<void> {
    await this.request(`/notifications/${notificationId}/ack`, { method: "POST" });
  }

  async submitFeedback(eventId: string, priority: Priority): Promise<EventRow> {
    const response = await this.request(`/events/${eventId}/feedback`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ priority }),
    });
    return response.json();
  }

  /** The three reads every poll cycle needs, fetched together. */
  async sync(): Promise<SyncPayload> {
    const [pending, events, prefs] = await Promise.all([
      this.getPending(),
      this.getEvents(),
      this.getPreferences(),
    ]);
    return { pending, events, prefs };
  }
}
