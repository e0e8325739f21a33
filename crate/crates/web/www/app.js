import init, { Demo } from "./pkg/kbsel_web.js";

const $ = (id) => document.getElementById(id);
let demo;

// Solver calls block the page, so show the marker and yield a frame first.
async function busy(f) {
  $("busy").hidden = false;
  await new Promise((r) => setTimeout(r, 20));
  try {
    return f();
  } catch (e) {
    alert(e.message ?? e);
  } finally {
    $("busy").hidden = true;
  }
}

function el(tag, attrs = {}, ...kids) {
  const n = document.createElement(tag);
  Object.assign(n, attrs);
  n.append(...kids);
  return n;
}

function range(b) {
  if (!b) return "";
  const lo = b.lo === null ? "-∞" : b.lo, hi = b.hi === null ? "∞" : b.hi;
  return `${b.lo_strict ? "(" : "["}${lo} .. ${hi}${b.hi_strict ? ")" : "]"}`;
}

function describe(a) {
  return `${a.label} = ${a.value ?? range(a.bounds)}`;
}

function showExplanation(e) {
  const lines = [];
  if (e.target) lines.push(`Why ${describe(e.target)}?`);
  for (const a of e.assignments) lines.push(`  because you chose ${describe(a)}`);
  for (const l of e.laws) lines.push(`  law ${l.id}: ${l.label}`);
  return lines.join("\n");
}

function tile(t, explain) {
  const cls = ["tile", t.origin ?? "", t.relevant ? "" : "irrelevant"].join(" ");
  const box = el("div", { className: cls }, el("b", {}, t.label), " ");
  const set = (v) => busy(() => render(demo.set(t.symbol, v)));
  if (t.origin === "user") {
    box.append(t.value, el("button", { className: "link", textContent: "retract",
      onclick: () => busy(() => render(demo.retract(t.symbol))) }));
  } else if (t.kind === "number") {
    const input = el("input", { size: 8, placeholder: t.value ?? "" });
    input.onchange = () => input.value && set(input.value);
    box.append(input);
  } else {
    const sel = el("select", {}, el("option", { textContent: t.value ?? "–" }));
    for (const c of t.candidates ?? []) if (c !== t.value) sel.append(el("option", { textContent: c }));
    sel.onchange = () => set(sel.value);
    box.append(sel);
  }
  const derived = t.origin === "propagated" || (t.kind === "number" && !t.origin && t.bounds);
  box.append(el("small", {}, t.kind === "number" ? range(t.bounds) : ""));
  if (derived) {
    box.append(el("button", { className: "link", textContent: "why?", onclick: () => busy(() => explain(t.symbol)) }));
  }
  return box;
}

function render(json) {
  const v = JSON.parse(json);
  $("status").textContent = v.status;
  $("status").className = v.status;
  $("count").textContent = v.remaining.count;
  $("ids").textContent = v.remaining.ids.join(", ");
  $("core").replaceChildren();
  if (v.inconsistency) {
    $("core").append(el("pre", { className: "bad", textContent: "Inconsistent:\n" + showExplanation(v.inconsistency) }));
  }
  const explain = (s) => {
    try {
      $("explain-out").textContent = showExplanation(JSON.parse(demo.explain(s)));
    } catch (e) {
      $("explain-out").textContent = e.message;
    }
  };
  const groups = new Map();
  for (const t of v.tiles) {
    if (!groups.has(t.category)) groups.set(t.category, []);
    groups.get(t.category).push(tile(t, explain));
  }
  $("tiles").replaceChildren();
  for (const [cat, tiles] of groups) {
    $("tiles").append(el("h2", { textContent: cat }), el("div", { className: "grid" }, ...tiles));
  }
}

async function main() {
  await init();
  await busy(() => {
    demo = new Demo(1);
    const schema = JSON.parse(demo.schema());
    for (const s of schema.symbols) {
      if (s.kind === "number") $("opt-symbol").append(el("option", { value: s.symbol, textContent: s.label }));
    }
    $("opt-symbol").value = "Price";
    render(demo.view());
  });
  $("opt-run").onclick = () =>
    busy(() => {
      const out = $("opt-out");
      out.hidden = false;
      try {
        const r = JSON.parse(demo.optimize($("opt-symbol").value, $("opt-direction").value));
        out.textContent = `${r.direction} ${r.symbol}: ${r.value}\nadhesive: ${r.adhesive ?? "–"}`;
      } catch (e) {
        out.textContent = e.message;
      }
    });
}

main();
