import { dayHeading, formatStamp, reminderSummary } from "./format.js";
import { groupEventsByDay, upcomingReminders, validateQuietHour, validateWeight } from "./state.js";
import type { EventRow, NotificationRow, Priority, ViewState } from "./types.js";

export interface Handlers {
  onAck(notificationId: string): void;
  onFeedback(eventId: string, priority: Priority): void;
  onSavePrefs(): void;
}

const PRIORITIES: Priority[] = ["High", "Medium", "Low"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function priorityBadge(priority: Priority): HTMLSpanElement {
  return el("span", `priority priority-${priority.toLowerCase()}`, priority);
}

function buildBanner(state: ViewState): HTMLElement {
  const header = el("header");
  header.appendChild(el("h1", undefined, "chatminder"));
  if (state.stale) {
    const banner = el("div", "banner stale");
    banner.setAttribute("role", "alert");
    banner.textContent = state.lastSync
      ? `Server unreachable; showing data from ${formatStamp(state.lastSync)}`
      : "Server unreachable";
    header.appendChild(banner);
  } else if (state.lastSync) {
    header.appendChild(el("p", "last-sync", `Updated ${formatStamp(state.lastSync)}`));
  }
  return header;
}

function buildCard(row: NotificationRow, state: ViewState, handlers: Handlers): HTMLElement {
  const card = el("article", "card");
  card.dataset.notificationId = row.id;
  card.dataset.eventId = row.event_id;

  const head = el("div", "card-head");
  head.appendChild(el("strong", "event-type", row.event_type));
  head.appendChild(priorityBadge(row.priority));
  head.appendChild(el("span", `badge kind-${row.kind}`, row.kind));
  if (row.state === "delivered") {
    head.appendChild(el("span", "badge state-delivered", "delivered"));
  }
  card.appendChild(head);

  card.appendChild(el("p", "occurs", formatStamp(row.occurs_at)));
  card.appendChild(el("p", "meta", `from ${row.sender}`));

  const ack = el("button", "ack-button", "Acknowledge");
  ack.type = "button";
  ack.disabled = state.inFlight.has(row.id);
  ack.addEventListener("click", () => handlers.onAck(row.id));
  card.appendChild(ack);
  return card;
}

function buildPinned(state: ViewState, handlers: Handlers): HTMLElement {
  const section = el("section");
  section.id = "pinned";
  section.appendChild(el("h2", undefined, "Pinned"));
  if (state.pending.length === 0) {
    section.appendChild(el("p", "empty", "Nothing pinned. All caught up."));
    return section;
  }
  for (const row of state.pending) {
    section.appendChild(buildCard(row, state, handlers));
  }
  return section;
}

function buildEventRow(event: EventRow, state: ViewState, handlers: Handlers): HTMLElement {
  const item = el("li", "event");
  item.dataset.eventId = event.id;

  const head = el("div", "event-head");
  head.appendChild(el("strong", "event-type", event.event_type));
  head.appendChild(priorityBadge(event.priority));
  head.appendChild(el("span", `badge status-${event.status}`, event.status));
  item.appendChild(head);

  item.appendChild(
    el("p", "meta", `${formatStamp(event.occurs_at)} · from ${event.sender}`),
  );

  const reminders = upcomingReminders(event);
  const schedule = el("p", "schedule", reminderSummary(reminders.length));
  schedule.dataset.reminderCount = String(reminders.length);
  if (reminders.length > 0) {
    schedule.textContent += ` (next ${formatStamp(reminders[0]!.fire_at)})`;
  }
  item.appendChild(schedule);

  const controls = el("div", "feedback");
  controls.appendChild(el("span", "feedback-label", "Priority:"));
  for (const priority of PRIORITIES) {
    const button = el("button", "feedback-button", priority);
    button.type = "button";
    button.dataset.priority = priority;
    button.disabled = event.status !== "active" || state.inFlight.has(event.id);
    if (priority === event.priority) button.classList.add("current");
    button.addEventListener("click", () => handlers.onFeedback(event.id, priority));
    controls.appendChild(button);
  }
  item.appendChild(controls);

  const error = state.cardErrors[event.id];
  if (error) {
    item.appendChild(el("p", "card-error", error));
  }
  return item;
}

function buildTimeline(state: ViewState, handlers: Handlers): HTMLElement {
  const section = el("section");
  section.id = "timeline";
  section.appendChild(el("h2", undefined, "Upcoming"));
  const groups = groupEventsByDay(state.events);
  if (groups.length === 0) {
    section.appendChild(el("p", "empty", "No events yet. Ingest a chat export and scan."));
    return section;
  }
  for (const [day, events] of groups) {
    section.appendChild(el("h3", "day-heading", dayHeading(day)));
    const list = el("ul", "event-list");
    for (const event of events) {
      list.appendChild(buildEventRow(event, state, handlers));
    }
    section.appendChild(list);
  }
  return section;
}

function weightRow(group: string, name: string, value: number): HTMLElement {
  const row = el("div", "weight-row");
  row.dataset.group = group;
  row.appendChild(el("label", undefined, name));
  const input = el("input");
  input.type = "number";
  input.min = "0";
  input.max = "1";
  input.step = "0.05";
  input.value = String(value);
  input.dataset.name = name;
  row.appendChild(input);
  return row;
}

function addRow(group: string, placeholder: string): HTMLElement {
  const row = el("div", "weight-row add-row");
  row.dataset.group = group;
  const name = el("input");
  name.type = "text";
  name.placeholder = placeholder;
  name.className = "new-name";
  const value = el("input");
  value.type = "number";
  value.min = "0";
  value.max = "1";
  value.step = "0.05";
  value.placeholder = "0.5";
  value.className = "new-value";
  row.append(name, value);
  return row;
}

function buildPrefs(state: ViewState, handlers: Handlers): HTMLElement {
  const section = el("section");
  section.id = "prefs";
  section.appendChild(el("h2", undefined, "Preferences"));
  if (!state.prefs) {
    section.appendChild(el("p", "empty", "Preferences not loaded yet."));
    return section;
  }

  const form = el("form", "prefs-form");
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    handlers.onSavePrefs();
  });

  const typeGroup = el("fieldset");
  typeGroup.appendChild(el("legend", undefined, "Event type weights"));
  for (const [name, value] of Object.entries(state.prefs.event_type_weights)) {
    typeGroup.appendChild(weightRow("event_type_weights", name, value));
  }
  typeGroup.appendChild(addRow("event_type_weights", "event type"));
  form.appendChild(typeGroup);

  const senderGroup = el("fieldset");
  senderGroup.appendChild(el("legend", undefined, "Sender affinity"));
  for (const [name, value] of Object.entries(state.prefs.sender_affinity)) {
    senderGroup.appendChild(weightRow("sender_affinity", name, value));
  }
  senderGroup.appendChild(addRow("sender_affinity", "sender"));
  form.appendChild(senderGroup);

  const quiet = el("fieldset", "quiet-hours");
  quiet.appendChild(el("legend", undefined, "Quiet hours"));
  const enabled = el("input");
  enabled.type = "checkbox";
  enabled.id = "quiet-enabled";
  enabled.checked = state.prefs.quiet_hours !== null;
  const enabledLabel = el("label", undefined, "enabled");
  enabledLabel.htmlFor = "quiet-enabled";
  const start = el("input");
  start.type = "number";
  start.id = "quiet-start";
  start.min = "0";
  start.max = "23";
  start.value = String(state.prefs.quiet_hours?.[0] ?? 22);
  const end = el("input");
  end.type = "number";
  end.id = "quiet-end";
  end.min = "0";
  end.max = "23";
  end.value = String(state.prefs.quiet_hours?.[1] ?? 7);
  quiet.append(enabled, enabledLabel, el("span", undefined, "from"), start, el("span", undefined, "to"), end);
  form.appendChild(quiet);

  const save = el("button", "save-prefs", "Save preferences");
  save.type = "submit";
  form.appendChild(save);

  if (state.prefsError) {
    form.appendChild(el("p", "prefs-error", state.prefsError));
  }
  section.appendChild(form);
  return section;
}

export type PrefsCollection =
  | { ok: true; prefs: import("./types.js").Preferences }
  | { ok: false; error: string };

/** Read the preferences form back into a full document, or explain why not.
 * Weights outside [0, 1] never leave the client. */
export function collectPrefsForm(root: HTMLElement, base: import("./types.js").Preferences): PrefsCollection {
  const groups: Record<string, Record<string, number>> = {
    event_type_weights: {},
    sender_affinity: {},
  };
  for (const row of root.querySelectorAll<HTMLElement>("#prefs .weight-row")) {
    const group = groups[row.dataset.group ?? ""];
    if (!group) continue;
    const isAdd = row.classList.contains("add-row");
    const name = isAdd
      ? row.querySelector<HTMLInputElement>(".new-name")?.value.trim() ?? ""
      : row.querySelector<HTMLInputElement>("input[data-name]")?.dataset.name ?? "";
    if (!name) continue; // empty add-row
    const input = isAdd
      ? row.querySelector<HTMLInputElement>(".new-value")
      : row.querySelector<HTMLInputElement>("input[data-name]");
    const check = validateWeight(input?.value ?? "");
    if (!check.ok) return { ok: false, error: `${name}: ${check.error}` };
    group[name] = check.value;
  }

  let quietHours: [number, number] | null = null;
  const enabled = root.querySelector<HTMLInputElement>("#quiet-enabled");
  if (enabled?.checked) {
    const start = validateQuietHour(root.querySelector<HTMLInputElement>("#quiet-start")?.value ?? "");
    const end = validateQuietHour(root.querySelector<HTMLInputElement>("#quiet-end")?.value ?? "");
    if (!start.ok) return { ok: false, error: `quiet hours start: ${start.error}` };
    if (!end.ok) return { ok: false, error: `quiet hours end: ${end.error}` };
    quietHours = [start.value, end.value];
  }

  return {
    ok: true,
    prefs: {
      event_type_weights: groups["event_type_weights"] ?? {},
      sender_affinity: groups["sender_affinity"] ?? {},
      lead_schedule: base.lead_schedule,
      quiet_hours: quietHours,
    },
  };
}

function swapSection(root: HTMLElement, id: string, next: HTMLElement): void {
  next.id = id;
  const existing = root.querySelector(`#${id}`);
  if (existing) existing.replaceWith(next);
  else root.appendChild(next);
}

/** Rebuild the page from state. The preferences section is left alone while
 * the user is editing it so a background poll cannot eat a half-typed form;
 * everything else is replaced wholesale. */
export function render(root: HTMLElement, state: ViewState, handlers: Handlers): void {
  swapSection(root, "app-header", buildBanner(state));
  swapSection(root, "pinned", buildPinned(state, handlers));
  swapSection(root, "timeline", buildTimeline(state, handlers));
  const existingPrefs = root.querySelector("#prefs");
  const editing =
    existingPrefs !== null &&
    document.activeElement !== null &&
    existingPrefs.contains(document.activeElement);
  if (!editing) swapSection(root, "prefs", buildPrefs(state, handlers));
}
