import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiError } from "../src/api.js";
import type { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import type { EventRow, NotificationRow, Preferences, SyncPayload } from "../src/types.js";

const PREFS: Preferences = {
  event_type_weights: {},
  sender_affinity: {},
  lead_schedule: {},
  quiet_hours: null,
};

function notification(overrides: Partial<NotificationRow> = {}): NotificationRow {
  return {
    id: "n1",
    event_id: "e1",
    fire_at: "2023-07-01T10:00",
    kind: "detection",
    priority: "High",
    state: "delivered",
    event_type: "dinner",
    occurs_at: "2023-07-05T20:00",
    sender: "Priya",
    participants: [],
    ...overrides,
  };
}

function event(overrides: Partial<EventRow> = {}): EventRow {
  return {
    id: "e1",
    chat_id: "c",
    sender: "Priya",
    event_type: "dinner",
    occurs_at: "2023-07-05T20:00",
    participants: [],
    confidence: 1.0,
    is_group: false,
    sent_at: "2023-07-01T09:00",
    status: "active",
    priority: "Medium",
    notifications: [],
    ...overrides,
  };
}

interface FakeClient {
  sync: ReturnType<typeof vi.fn>;
  ack: ReturnType<typeof vi.fn>;
  submitFeedback: ReturnType<typeof vi.fn>;
  putPreferences: ReturnType<typeof vi.fn>;
}

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
  root = document.getElementById("app")!;
});

function makeApp(payload: SyncPayload) {
  const client: FakeClient = {
    sync: vi.fn().mockResolvedValue(payload),
    ack: vi.fn().mockResolvedValue(undefined),
    submitFeedback: vi.fn(),
    putPreferences: vi.fn(),
  };
  const app = new App(root, client as unknown as ApiClient, 60_000);
  return { app, client };
}

describe("refresh", () => {
  it("renders fetched rows and clears staleness", async () => {
    const { app } = makeApp({ pending: [notification()], events: [event()], prefs: PREFS });
    await app.refresh();
    expect(root.querySelectorAll("#pinned .card")).toHaveLength(1);
    expect(root.querySelector(".banner.stale")).toBeNull();
  });

  it("keeps the previous view and shows the banner when the server is down", async () => {
    const { app, client } = makeApp({ pending: [notification()], events: [], prefs: PREFS });
    await app.refresh();
    client.sync.mockRejectedValue(new TypeError("fetch failed"));
    await app.refresh();
    expect(root.querySelectorAll("#pinned .card")).toHaveLength(1);
    expect(root.querySelector(".banner.stale")).not.toBeNull();
  });
});

describe("ack", () => {
  it("removes the card after a 204", async () => {
    const { app, client } = makeApp({ pending: [notification({ id: "n9" })], events: [], prefs: PREFS });
    await app.refresh();
    await app.ack("n9");
    expect(client.ack).toHaveBeenCalledWith("n9");
    expect(root.querySelectorAll("#pinned .card")).toHaveLength(0);
  });

  it("resyncs the whole list on a 404", async () => {
    const { app, client } = makeApp({ pending: [notification({ id: "gone" })], events: [], prefs: PREFS });
    await app.refresh();
    client.ack.mockRejectedValue(new ApiError(404, "unknown notification"));
    client.sync.mockResolvedValue({ pending: [], events: [], prefs: PREFS });
    await app.ack("gone");
    expect(client.sync).toHaveBeenCalledTimes(2);
    expect(root.querySelectorAll("#pinned .card")).toHaveLength(0);
  });

  it("keeps the card and re-enables the button on a network failure", async () => {
    const { app, client } = makeApp({ pending: [notification({ id: "n9" })], events: [], prefs: PREFS });
    await app.refresh();
    client.ack.mockRejectedValue(new TypeError("fetch failed"));
    await app.ack("n9");
    expect(root.querySelectorAll("#pinned .card")).toHaveLength(1);
    expect((root.querySelector(".ack-button") as HTMLButtonElement).disabled).toBe(false);
  });

  it("sends a single request for overlapping clicks", async () => {
    const { app, client } = makeApp({ pending: [notification({ id: "n9" })], events: [], prefs: PREFS });
    await app.refresh();
    let release: () => void = () => {};
    client.ack.mockImplementation(
      () => new Promise<void>((resolve) => (release = resolve)),
    );
    const first = app.ack("n9");
    const second = app.ack("n9"); // in flight, must be a no-op
    release();
    await Promise.all([first, second]);
    expect(client.ack).toHaveBeenCalledTimes(1);
  });
});

describe("feedback", () => {
  it("re-renders the event with the returned priority and schedule", async () => {
    const { app, client } = makeApp({ pending: [], events: [event({ id: "e1", priority: "Low" })], prefs: PREFS });
    await app.refresh();
    client.submitFeedback.mockResolvedValue(
      event({
        id: "e1",
        priority: "High",
        notifications: [
          { id: "r1", event_id: "e1", fire_at: "2023-06-28T20:00", kind: "reminder", priority: "High", state: "pending" },
          { id: "r2", event_id: "e1", fire_at: "2023-07-04T20:00", kind: "reminder", priority: "High", state: "pending" },
          { id: "r3", event_id: "e1", fire_at: "2023-07-05T17:00", kind: "reminder", priority: "High", state: "pending" },
        ],
      }),
    );
    await app.feedback("e1", "High");
    expect(client.submitFeedback).toHaveBeenCalledWith("e1", "High");
    expect(root.querySelector(".event .priority")?.textContent).toBe("High");
    expect((root.querySelector(".schedule") as HTMLElement).dataset.reminderCount).toBe("3");
  });

  it("shows API rejections inline on the card", async () => {
    const { app, client } = makeApp({ pending: [], events: [event({ id: "e1" })], prefs: PREFS });
    await app.refresh();
    client.submitFeedback.mockRejectedValue(new ApiError(409, "event is not active"));
    await app.feedback("e1", "High");
    expect(root.querySelector(".card-error")?.textContent).toBe("event is not active");
  });
});

describe("savePrefs", () => {
  it("PUTs the collected document and adopts the echo", async () => {
    const prefs: Preferences = { ...PREFS, event_type_weights: { wedding: 0.8 } };
    const { app, client } = makeApp({ pending: [], events: [], prefs });
    await app.refresh();
    (root.querySelector('input[data-name="wedding"]') as HTMLInputElement).value = "0.9";
    const echo = { ...prefs, event_type_weights: { wedding: 0.9 } };
    client.putPreferences.mockResolvedValue(echo);
    await app.savePrefs();
    expect(client.putPreferences).toHaveBeenCalledWith(
      expect.objectContaining({ event_type_weights: { wedding: 0.9 } }),
    );
    expect(app.state.prefs).toEqual(echo);
    expect((root.querySelector('input[data-name="wedding"]') as HTMLInputElement).value).toBe("0.9");
  });

  it("blocks an out-of-range weight before any request", async () => {
    const prefs: Preferences = { ...PREFS, event_type_weights: { wedding: 0.8 } };
    const { app, client } = makeApp({ pending: [], events: [], prefs });
    await app.refresh();
    (root.querySelector('input[data-name="wedding"]') as HTMLInputElement).value = "1.5";
    await app.savePrefs();
    expect(client.putPreferences).not.toHaveBeenCalled();
    expect(root.querySelector(".prefs-error")?.textContent).toContain("outside [0, 1]");
  });
});
