// Single-page UI over the datalake API. Hash-routed; every displayed fact
// is fetched from the server (the client keeps no authoritative state).

import { ApiClient, ApiError } from "./api.js";
import { ChartBuilder, CHART_KINDS, type Binding } from "./chartBuilder.js";
import { MergeWizard } from "./merge.js";
import { countNodes, layoutTree, treeToSvg } from "./provenance.js";
import {
  choroplethRows,
  renderHeatmap,
  renderScatter2d,
  renderScatter3d,
  renderSeries,
} from "./render.js";
import type { ChartDataDoc, ItemSummary, Workspace } from "./types.js";
import { UploadWizard } from "./upload.js";

let api = new ApiClient("", localStorage.getItem("lake_token"));

function h<K extends keyof HTMLElementTagNameMap>(
  tag: K, attrs: Record<string, string | ((e: Event) => void)> = {},
  ...children: (Node | string | null)[]
): HTMLElementTagNameMap[K] {
  const el = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (typeof v === "function") el.addEventListener(k, v);
    else if (k === "class") el.className = v;
    else el.setAttribute(k, v);
  }
  for (const c of children) {
    if (c !== null) el.append(c);
  }
  return el;
}

const root = () => document.getElementById("app")!;

function setView(...nodes: (Node | string | null)[]) {
  root().replaceChildren(...nodes.filter((n): n is Node | string => n !== null));
}

function errorBox(err: unknown): HTMLElement {
  const msg = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  return h("div", { class: "error" }, msg);
}

function link(href: string, label: string): HTMLElement {
  return h("a", { href }, label);
}

// ----------------------------------------------------------------------
// login and chrome
// ----------------------------------------------------------------------

function navBar(): HTMLElement {
  const search = h("input", { type: "search", placeholder: "search the lake…" }) as HTMLInputElement;
  search.addEventListener("keydown", (e) => {
    if ((e as KeyboardEvent).key === "Enter" && search.value.trim()) {
      location.hash = `#/search/${encodeURIComponent(search.value.trim())}`;
    }
  });
  return h("nav", {},
    h("b", {}, link("#/workspaces", "Datalake")),
    link("#/workspaces", "workspaces"),
    link("#/datalib", "data library"),
    search,
    h("button", {
      class: "linkish",
      click: () => { localStorage.removeItem("lake_token"); location.hash = "#/login"; },
    }, "sign out"),
  );
}

function loginView() {
  const tokenInput = h("input", { type: "password", placeholder: "bearer token" }) as HTMLInputElement;
  const status = h("div", {});
  setView(h("div", { class: "login" },
    h("h1", {}, "Datalake"),
    h("p", {}, "Paste an access token minted by your workspace admin. ",
      "Leave empty to browse public items anonymously."),
    tokenInput,
    h("button", {
      click: async () => {
        const token = tokenInput.value.trim() || null;
        api = new ApiClient("", token);
        try {
          const who = await api.whoami();
          if (token) localStorage.setItem("lake_token", token);
          else localStorage.removeItem("lake_token");
          status.replaceChildren(`signed in as ${who.user ?? "anonymous"}`);
          location.hash = "#/workspaces";
        } catch (err) {
          status.replaceChildren(errorBox(err));
        }
      },
    }, "sign in"),
    status,
  ));
}

// ----------------------------------------------------------------------
// workspaces and items
// ----------------------------------------------------------------------

async function workspacesView() {
  try {
    const workspaces = await api.listWorkspaces();
    const nameInput = h("input", { placeholder: "new workspace name" }) as HTMLInputElement;
    const out = h("div", {});
    setView(navBar(),
      h("h2", {}, "Workspaces"),
      h("ul", {}, ...workspaces.map((w: Workspace) =>
        h("li", {}, link(`#/ws/${w.id}`, w.path ?? w.name)))),
      h("div", { class: "row" }, nameInput, h("button", {
        click: async () => {
          try {
            await api.createWorkspace(nameInput.value.trim());
            workspacesView();
          } catch (err) { out.replaceChildren(errorBox(err)); }
        },
      }, "create"), out),
    );
  } catch (err) {
    setView(navBar(), errorBox(err));
  }
}

async function workspaceView(wsId: string) {
  try {
    const items = await api.workspaceItems(wsId);
    setView(navBar(),
      h("h2", {}, "Workspace items"),
      h("div", { class: "row" },
        link(`#/upload/${wsId}`, "⬆ upload CSV"),
        link(`#/merge/${wsId}`, "⋈ merge tables"),
        link(`#/datalib?ws=${wsId}`, "🌐 import from data library")),
      h("table", { class: "items" },
        h("tr", {}, h("th", {}, "name"), h("th", {}, "kind"), h("th", {}, "visibility"),
          h("th", {}, "versions"), h("th", {}, "description")),
        ...items.map((i: ItemSummary) => h("tr", {},
          h("td", {}, link(`#/item/${i.id}`, i.name)),
          h("td", {}, i.kind), h("td", {}, i.visibility),
          h("td", {}, String(i.versions)), h("td", {}, i.description)))),
    );
  } catch (err) {
    setView(navBar(), errorBox(err));
  }
}

async function itemView(itemId: string) {
  try {
    const item = await api.itemDetail(itemId);
    const versions = await api.listVersions(itemId);
    const actions = h("div", { class: "row" },
      link(`#/prov/${item.id}`, "provenance"),
      item.kind === "table" ? link(`#/chart/${item.id}`, "build chart") : null,
      h("button", {
        click: async () => {
          try {
            await api.setVisibility(item.id,
              item.visibility === "public" ? "private" : "public");
            itemView(itemId);
          } catch (err) { extra.replaceChildren(errorBox(err)); }
        },
      }, item.visibility === "public" ? "make private" : "make public"),
      h("button", {
        click: async () => {
          try {
            const replayed = await api.replay(item.id);
            location.hash = `#/item/${replayed.id}`;
          } catch (err) { extra.replaceChildren(errorBox(err)); }
        },
      }, "replay"),
    );
    const extra = h("div", {});
    const preview = h("div", { class: "preview" });
    if (item.kind === "table") {
      const csv = await api.itemContent(item.id);
      preview.append(tablePreview(csv));
    } else {
      const doc = await api.chartData(item.id);
      preview.append(chartView(doc));
    }
    setView(navBar(),
      h("h2", {}, item.name),
      h("p", {}, item.description || "(no description)"),
      h("p", { class: "meta" },
        `${item.kind} · ${item.visibility} · ${item.workspace_path ?? ""} · `,
        h("a", { href: `/p/${item.permalink_token}` }, "permalink")),
      actions, extra, preview,
      h("h3", {}, "Versions"),
      h("ul", {}, ...versions.map((v) => h("li", {},
        `v${v.number} — ${v.created_at} by ${v.created_by}` +
        (v.stale ? ` — STALE: ${v.stale_reason}` : "")))),
    );
  } catch (err) {
    setView(navBar(), errorBox(err));
  }
}

function tablePreview(csv: string, maxRows = 15): HTMLElement {
  const lines = csv.trim().split("\n").slice(0, maxRows + 1);
  const cells = lines.map((l) => l.split(","));  // preview only; quoting ignored
  return h("table", { class: "items" },
    ...cells.map((row, i) => h("tr", {},
      ...row.map((c) => h(i === 0 ? "th" : "td", {}, c)))));
}

// ----------------------------------------------------------------------
// upload wizard
// ----------------------------------------------------------------------

function uploadView(wsId: string) {
  const file = h("input", { type: "file", accept: ".csv,text/csv" }) as HTMLInputElement;
  const name = h("input", { placeholder: "item name" }) as HTMLInputElement;
  const description = h("input", { placeholder: "description" }) as HTMLInputElement;
  const out = h("div", {});
  setView(navBar(),
    h("h2", {}, "Upload CSV"),
    h("div", { class: "col" }, file, name, description,
      h("button", {
        click: async () => {
          if (!file.files?.length || !name.value.trim()) {
            out.replaceChildren(errorBox("choose a file and a name"));
            return;
          }
          try {
            const staged = await api.stageUpload(
              wsId, name.value.trim(), description.value, file.files[0], file.files[0].name);
            reviewStep(new UploadWizard(staged));
          } catch (err) { out.replaceChildren(errorBox(err)); }
        },
      }, "infer schema"), out),
  );

  function reviewStep(wizard: UploadWizard) {
    const table = h("table", { class: "items" },
      h("tr", {}, h("th", {}, "column"), h("th", {}, "inferred"), h("th", {}, "type"),
        h("th", {}, "confidence"), h("th", {}, "samples"), h("th", {}, "")),
      ...wizard.rows.map((row) => {
        const select = h("select", {
          change: (e) => wizard.setType(row.name, (e.target as HTMLSelectElement).value as never),
        }, ...wizard.typeOptions().map((t) =>
          h("option", row.chosen === t ? { value: t, selected: "selected" } : { value: t }, t)),
        );
        return h("tr", {},
          h("td", {}, row.name), h("td", {}, row.inferred), h("td", {}, select),
          h("td", {}, `${Math.round(row.confidence * 100)}%`),
          h("td", {}, row.samples.slice(0, 3).join(", ")),
          h("td", { class: "error" }, row.error ?? ""));
      }));
    const out2 = h("div", {});
    setView(navBar(),
      h("h2", {}, "Approve inferred schema"),
      ...(wizard.warnings.length ? [h("p", { class: "warn" }, wizard.warnings.join("; "))] : []),
      table,
      h("div", { class: "row" },
        h("button", {
          click: async () => {
            try {
              const item = await api.approveSchema(wizard.stagedId, wizard.corrections());
              location.hash = `#/item/${item.id}`;
            } catch (err) {
              if (err instanceof ApiError) {
                wizard.applyApiError(err.code, err.message);
                reviewStep(wizard);  // form preserved, errors inline
                if (wizard.formError) out2.replaceChildren(errorBox(wizard.formError));
              } else out2.replaceChildren(errorBox(err));
            }
          },
        }, "approve & ingest"),
        h("button", {
          click: async () => {
            await api.cancelUpload(wizard.stagedId);
            location.hash = `#/ws/${wsId}`;
          },
        }, "cancel"),
        out2),
    );
  }
}

// ----------------------------------------------------------------------
// merge wizard
// ----------------------------------------------------------------------

async function mergeView(wsId: string) {
  try {
    const items = (await api.workspaceItems(wsId)).filter((i) => i.kind === "table");
    const chosen = new Set<string>();
    const out = h("div", {});
    setView(navBar(),
      h("h2", {}, "Merge tables — pick two or more"),
      h("ul", {}, ...items.map((i) => h("li", {},
        h("label", {},
          h("input", {
            type: "checkbox",
            change: (e) => {
              if ((e.target as HTMLInputElement).checked) chosen.add(i.id);
              else chosen.delete(i.id);
            },
          }),
          ` ${i.name}`)))),
      h("button", {
        click: async () => {
          if (chosen.size < 2) { out.replaceChildren(errorBox("pick at least two tables")); return; }
          const details = await Promise.all([...chosen].map((id) => api.itemDetail(id)));
          keyStep(new MergeWizard(details), 0);
        },
      }, "continue"), out,
    );
  } catch (err) { setView(navBar(), errorBox(err)); }

  async function keyStep(wizard: MergeWizard, index: number) {
    if (wizard.keySteps[index].pairs.length === 0) {
      // pre-fill from the server's key inference for this adjacent pair
      try {
        const inferred = await api.inferKeys(wizard.items[index === 0 ? 0 : index].id,
                                             wizard.items[index + 1].id);
        wizard.prefill(index, inferred);
      } catch { /* inference is advisory; the user can add pairs manually */ }
    }
    const step = wizard.keySteps[index];
    const leftSel = h("select", {}, ...step.leftColumns.map((c) => h("option", { value: c }, c))) as HTMLSelectElement;
    const rightSel = h("select", {}, ...step.rightColumns.map((c) => h("option", { value: c }, c))) as HTMLSelectElement;
    const render = () => {
      const pairList = h("ul", {}, ...step.pairs.map((p, i) => h("li", {},
        `${p.left} = ${p.right} `,
        h("button", { click: () => { wizard.removePair(index, i); render(); } }, "remove"))));
      const out2 = h("div", {});
      setView(navBar(),
        h("h2", {}, `Join keys — step ${index + 1} of ${wizard.stepCount}`),
        h("p", {}, `Joining with ${wizard.items[index + 1].name}`),
        pairList,
        h("div", { class: "row" }, leftSel, "=", rightSel,
          h("button", { click: () => { wizard.addPair(index, leftSel.value, rightSel.value); render(); } }, "add pair")),
        h("div", { class: "row" },
          index > 0 ? h("button", { click: () => keyStep(wizard, index - 1) }, "back") : null,
          h("button", {
            click: () => {
              if (!step.pairs.length) { out2.replaceChildren(errorBox("add at least one key pair")); return; }
              if (index + 1 < wizard.keySteps.length) keyStep(wizard, index + 1);
              else columnStep(wizard);
            },
          }, "next"), out2),
      );
    };
    render();
  }

  function columnStep(wizard: MergeWizard) {
    const name = h("input", { placeholder: "merged item name" }) as HTMLInputElement;
    const out2 = h("div", {});
    const submit = h("button", {
      click: async () => {
        wizard.name = name.value.trim();
        if (!wizard.submittable) { out2.replaceChildren(errorBox("name the output and keep at least one column")); return; }
        try {
          const item = await api.merge(wizard.plan());
          location.hash = `#/item/${item.id}`;
        } catch (err) { out2.replaceChildren(errorBox(err)); }
      },
    }, "merge") as HTMLButtonElement;
    const refresh = () => { submit.disabled = wizard.selectedColumns.size === 0; };
    setView(navBar(),
      h("h2", {}, `Output columns — step ${wizard.stepCount} of ${wizard.stepCount}`),
      h("ul", {}, ...wizard.outputColumns().map((c) => h("li", {}, h("label", {},
        h("input", {
          type: "checkbox", checked: "checked",
          change: () => { wizard.toggleColumn(c); refresh(); },
        }), ` ${c}`)))),
      h("div", { class: "row" }, name, submit, out2),
    );
    refresh();
  }
}

// ----------------------------------------------------------------------
// chart builder
// ----------------------------------------------------------------------

async function chartBuilderView(itemId: string) {
  try {
    const item = await api.itemDetail(itemId);
    const schema = item.versions[item.versions.length - 1].schema ?? [];
    const builder = new ChartBuilder(schema);
    const render = () => {
      const bindingRows = builder.requiredBindings().map((b: Binding) => {
        const allowed = builder.allowedColumns(b);
        const sel = h("select", {
          change: (e) => builder.bind(b, (e.target as HTMLSelectElement).value),
        }, h("option", { value: "" }, "—"),
          ...schema.map((c) => {
            const opts: Record<string, string> = { value: c.name };
            if (!allowed.includes(c.name)) opts.disabled = "disabled";
            if (builder.bindings[b] === c.name) opts.selected = "selected";
            return h("option", opts, `${c.name} (${c.type})`);
          }));
        return h("div", { class: "row" }, h("label", {}, `${b}: `), sel);
      });
      const name = h("input", { placeholder: "chart name", value: builder.name }) as HTMLInputElement;
      const out = h("div", {});
      const preview = h("div", { class: "preview" });
      setView(navBar(),
        h("h2", {}, `Chart over ${item.name}`),
        h("div", { class: "row" }, h("label", {}, "kind: "),
          h("select", {
            change: (e) => { builder.setKind((e.target as HTMLSelectElement).value as never); render(); },
          }, ...CHART_KINDS.map((k) =>
            h("option", builder.kind === k ? { value: k, selected: "selected" } : { value: k }, k)))),
        ...bindingRows,
        builder.kind === "heatmap2d" ? h("div", { class: "row" },
          h("label", {}, "interpolation: "),
          h("select", {
            change: (e) => { builder.interpolation = (e.target as HTMLSelectElement).value as never; },
          }, h("option", { value: "linear", selected: "selected" }, "linear"),
            h("option", { value: "none" }, "none"))) : null,
        h("div", { class: "row" }, name,
          h("button", {
            click: async () => {
              builder.name = name.value.trim();
              if (!builder.submittable) { out.replaceChildren(errorBox("bind all columns and name the chart")); return; }
              try {
                const chart = await api.createChart(item.id, builder.request());
                const doc = await api.chartData(chart.id);
                preview.replaceChildren(h("h3", {}, "Preview"), chartView(doc),
                  h("p", {}, link(`#/item/${chart.id}`, "open chart item")));
              } catch (err) { out.replaceChildren(errorBox(err)); }
            },
          }, "create & preview"), out),
        preview,
      );
    };
    render();
  } catch (err) { setView(navBar(), errorBox(err)); }
}

function chartView(doc: ChartDataDoc): HTMLElement {
  const box = h("div", { class: "chart" });
  const canvas = h("canvas", { width: "640", height: "360" }) as HTMLCanvasElement;
  if (doc.kind === "heatmap2d") {
    renderHeatmap(canvas, doc);
    box.append(canvas, scaleLegend(doc));
  } else if (doc.kind === "scatter2d") {
    renderScatter2d(canvas, doc);
    box.append(canvas);
  } else if (doc.kind === "scatter3d") {
    let yaw = 0.7, pitch = 0.5;
    renderScatter3d(canvas, doc, yaw, pitch);
    const rotate = (dy: number, dp: number) => () => {
      yaw += dy; pitch += dp;
      renderScatter3d(canvas, doc, yaw, pitch);
    };
    box.append(canvas, h("div", { class: "row" },
      h("button", { click: rotate(-0.3, 0) }, "⟲"),
      h("button", { click: rotate(0.3, 0) }, "⟳"),
      h("button", { click: rotate(0, 0.25) }, "↑"),
      h("button", { click: rotate(0, -0.25) }, "↓")));
  } else if (doc.kind === "bar" || doc.kind === "line") {
    renderSeries(canvas, doc, doc.kind);
    box.append(canvas);
  } else {
    const rows = choroplethRows(doc);
    box.append(h("table", { class: "items" },
      h("tr", {}, h("th", {}, "region"), h("th", {}, "value"), h("th", {}, "")),
      ...rows.map((r) => h("tr", {},
        h("td", {}, r.code), h("td", {}, r.value.toFixed(3)),
        h("td", { style: `background:${r.color};width:80px` }, "")))));
    if (doc.data.unmatched?.length) {
      box.append(h("p", { class: "warn" }, `unmatched regions: ${doc.data.unmatched.join(", ")}`));
    }
  }
  return box;
}

function scaleLegend(doc: ChartDataDoc): HTMLElement {
  const domain = doc.data.color_domain;
  if (!domain) return h("div", {});
  return h("p", { class: "meta" },
    `${domain[0].toFixed(2)} (blue) → ${domain[1].toFixed(2)} (red)`);
}

// ----------------------------------------------------------------------
// provenance view
// ----------------------------------------------------------------------

async function provenanceView(itemId: string) {
  try {
    const tree = await api.lineage(itemId);
    const layout = layoutTree(tree);
    const holder = h("div", { class: "prov" });
    holder.innerHTML = treeToSvg(layout);
    holder.querySelectorAll<SVGGElement>("g.prov-node[data-item]").forEach((g) => {
      g.style.cursor = "pointer";
      g.addEventListener("click", () => {
        location.hash = `#/item/${g.dataset.item}`;
      });
    });
    setView(navBar(),
      h("h2", {}, `Provenance — ${countNodes(tree)} entities`),
      h("p", { class: "meta" },
        "solid lines: lineage · dotted lines: attributes · gray: not visible to you"),
      holder);
  } catch (err) { setView(navBar(), errorBox(err)); }
}

// ----------------------------------------------------------------------
// search and data library
// ----------------------------------------------------------------------

async function searchView(query: string) {
  try {
    const hits = await api.search(query, 50);
    setView(navBar(),
      h("h2", {}, `Search: ${query}`),
      hits.length === 0 ? h("p", {}, "no results") :
        h("ul", {}, ...hits.map((hit) => h("li", {},
          link(`#/item/${hit.item}`, hit.name),
          h("span", { class: "meta" }, ` ${hit.kind} · score ${hit.score.toFixed(3)} — ${hit.snippet}`)))));
  } catch (err) { setView(navBar(), errorBox(err)); }
}

async function datalibView(wsId: string | null) {
  try {
    const sources = await api.sources();
    const query = h("input", { placeholder: "keywords, e.g. family planning" }) as HTMLInputElement;
    const results = h("div", {});
    const checks = sources.map((s) => {
      const box = h("input", { type: "checkbox", checked: "checked" }) as HTMLInputElement;
      return { source: s, box };
    });
    setView(navBar(),
      h("h2", {}, "Data library"),
      h("p", {}, "Search external open-data sources and import datasets directly."),
      h("div", { class: "row" }, ...checks.flatMap(({ source, box }) =>
        [h("label", {}, box, ` ${source.display_name}`)])),
      h("div", { class: "row" }, query, h("button", {
        click: async () => {
          results.replaceChildren("searching…");
          const lists = await Promise.all(checks.filter((c) => c.box.checked).map(async ({ source }) => {
            try {
              return await api.datalibSearch(source.id, query.value);
            } catch (err) {
              results.append(errorBox(err));
              return [];
            }
          }));
          const rows = lists.flat();
          results.replaceChildren(h("table", { class: "items" },
            h("tr", {}, h("th", {}, "source"), h("th", {}, "dataset"), h("th", {}, "title"), h("th", {}, "")),
            ...rows.map((d) => h("tr", {},
              h("td", {}, d.source), h("td", {}, d.dataset), h("td", {}, d.title),
              h("td", {}, h("button", {
                click: async () => {
                  if (!wsId) { results.append(errorBox("open the data library from a workspace to import")); return; }
                  try {
                    const item = await api.datalibImport(d.source, d.dataset, wsId);
                    location.hash = `#/item/${item.id}`;
                  } catch (err) { results.append(errorBox(err)); }
                },
              }, "import"))))));
        },
      }, "search")),
      results);
  } catch (err) { setView(navBar(), errorBox(err)); }
}

// ----------------------------------------------------------------------
// router
// ----------------------------------------------------------------------

function route() {
  const hash = location.hash || "#/workspaces";
  const [path, qs] = hash.slice(2).split("?");
  const parts = path.split("/");
  const params = new URLSearchParams(qs ?? "");
  if (parts[0] === "login") return loginView();
  if (parts[0] === "workspaces" || parts[0] === "") return workspacesView();
  if (parts[0] === "ws") return workspaceView(parts[1]);
  if (parts[0] === "item") return itemView(parts[1]);
  if (parts[0] === "upload") return uploadView(parts[1]);
  if (parts[0] === "merge") return mergeView(parts[1]);
  if (parts[0] === "chart") return chartBuilderView(parts[1]);
  if (parts[0] === "prov") return provenanceView(parts[1]);
  if (parts[0] === "search") return searchView(decodeURIComponent(parts[1] ?? ""));
  if (parts[0] === "datalib") return datalibView(params.get("ws"));
  return loginView();
}

window.addEventListener("hashchange", route);
window.addEventListener("DOMContentLoaded", () => {
  if (!localStorage.getItem("lake_token") && !location.hash) location.hash = "#/login";
  route();
});
