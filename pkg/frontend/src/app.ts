// DOM glue. Pure logic lives in model.ts / diagram.ts; this file only wires
// events to the ViewSession and renders its state.

import { ApiClient, ApiError } from "./api.js";
import { classCardSvg } from "./diagram.js";
import { ViewSession } from "./model.js";
import type { ParamsPayload } from "./types.js";

const $ = <T extends HTMLElement>(sel: string): T => {
  const el = document.querySelector(sel);
  if (!el) throw new Error(`missing element: ${sel}`);
  return el as T;
};

const api = new ApiClient("");
const session = new ViewSession(api);

const statusBox = $("#status");
const errorBox = $("#error");
const unsupportedBox = $("#unsupported");
const gridBox = $("#class-grid");
const editorBox = $("#editor");
const violationsBox = $("#violations");
const diffBox = $("#diff");
const downloadsBox = $("#downloads");
const conflictToggle = $<HTMLInputElement>("#conflict-toggle");

function setStatus(): void {
  statusBox.textContent = session.sessionId
    ? `session ${session.sessionId.slice(0, 8)} | stage: ${session.stage}`
    : "no session";
}

function showError(err: unknown): void {
  if (err instanceof ApiError) {
    errorBox.textContent = `${err.envelope.code}: ${err.envelope.message}`;
  } else {
    errorBox.textContent = String(err);
  }
}

function clearError(): void {
  errorBox.textContent = "";
}

function renderGrid(): void {
  gridBox.innerHTML = "";
  if (!session.classes.length) {
    gridBox.innerHTML = session.stage
      ? '<p class="empty">No classes yet. Enumerate to see the logical scenarios.</p>'
      : "";
    return;
  }
  const highlight = conflictToggle.checked ? ["crossing"] : undefined;
  for (const cls of session.classes) {
    const card = document.createElement("div");
    card.className = "card" + (session.selectedIndex === cls.index ? " selected" : "");
    card.innerHTML =
      classCardSvg(cls, 180, highlight) +
      `<div class="caption">${cls.pattern} &middot; ${cls.members} raw</div>`;
    card.addEventListener("click", () => {
      void run(async () => {
        const seed = Number($<HTMLInputElement>("#seed").value) || 0;
        await session.select(cls.index, { seed });
        renderAll();
      });
    });
    gridBox.appendChild(card);
  }
}

function renderEditor(): void {
  editorBox.innerHTML = "";
  violationsBox.textContent = "";
  if (!session.params) return;
  const table = document.createElement("table");
  table.innerHTML =
    "<tr><th>car</th><th>type</th><th>init_pos</th><th>init_speed</th>" +
    "<th>turning_pos</th><th>final_pos</th></tr>";
  session.params.cars.forEach((car, i) => {
    const row = document.createElement("tr");
    row.innerHTML =
      `<td>${car.name}</td><td>${car.type}</td>` +
      ["init_pos", "init_speed", "turning_pos", "final_pos"]
        .map(
          (field) =>
            `<td><input data-car="${i}" data-field="${field}" ` +
            `value="${(car as unknown as Record<string, number>)[field].toFixed(2)}"/></td>`,
        )
        .join("");
    table.appendChild(row);
  });
  const submit = document.createElement("button");
  submit.textContent = "Re-validate edits";
  submit.addEventListener("click", () => {
    void run(async () => {
      const edited: ParamsPayload = JSON.parse(JSON.stringify(session.params));
      editorBox.querySelectorAll("input[data-car]").forEach((el) => {
        const input = el as HTMLInputElement;
        const car = edited.cars[Number(input.dataset.car)] as unknown as Record<string, number>;
        car[input.dataset.field!] = Number(input.value);
      });
      const result = await session.submitEdit(edited);
      violationsBox.innerHTML = result.accepted
        ? '<span class="ok">accepted</span>'
        : result.violations
            .map((v) => `<div class="violation">${v.path}: ${v.rule} (got ${v.observed})</div>`)
            .join("");
      renderDownloads();
    });
  });
  editorBox.appendChild(table);
  editorBox.appendChild(submit);
}

function renderDiff(): void {
  const rows = session.diffRows();
  diffBox.innerHTML = rows.length
    ? "<tr><th>field</th><th>before</th><th>after</th></tr>" +
      rows
        .map((r) => `<tr><td>${r.field}</td><td>${r.before}</td><td>${r.after}</td></tr>`)
        .join("")
    : "";
  $("#rationale").textContent = session.rationale;
}

function renderDownloads(): void {
  downloadsBox.innerHTML = "";
  const links = session.downloadLinks();
  if (!links.length) {
    downloadsBox.innerHTML = '<p class="empty">Downloads unlock after a class is selected.</p>';
    return;
  }
  for (const link of links) {
    const a = document.createElement("a");
    a.href = link.url;
    a.textContent = link.label;
    a.className = "download";
    downloadsBox.appendChild(a);
  }
}

function renderAll(): void {
  setStatus();
  unsupportedBox.innerHTML = session.unsupported.length
    ? "Unsupported requests: " + session.unsupported.map((s) => `<em>${s}</em>`).join("; ")
    : "";
  renderGrid();
  renderEditor();
  renderDiff();
  renderDownloads();
}

async function run(action: () => Promise<void>): Promise<void> {
  clearError();
  try {
    await action();
  } catch (err) {
    showError(err);
    setStatus();
  }
}

$("#parse").addEventListener("click", () => {
  void run(async () => {
    await session.start($<HTMLTextAreaElement>("#description").value);
    renderAll();
  });
});

$("#enumerate").addEventListener("click", () => {
  void run(async () => {
    const reduction = $<HTMLSelectElement>("#reduction").value;
    await session.enumerate(reduction);
    renderAll();
  });
});

$("#mutate-heuristic").addEventListener("click", () => {
  void run(async () => {
    await session.mutate({ mode: "heuristic" });
    renderAll();
  });
});

$("#mutate-llm").addEventListener("click", () => {
  void run(async () => {
    await session.mutate({ mode: "llm", seed: Number($<HTMLInputElement>("#seed").value) || 0 });
    renderAll();
  });
});

conflictToggle.addEventListener("change", renderGrid);

renderAll();
