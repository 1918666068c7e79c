// Glue generated by `wasm-bindgen --target web --out-dir www/pkg`.
import init, { gateBudget, findUnity, pathProfile } from "./pkg/unicirc_web.js";

const $ = (id) => document.getElementById(id);
const int = (id) => Number.parseInt($(id).value, 10);

function guarded(out, run) {
  return () => {
    out.classList.remove("error");
    out.textContent = "running...";
    // Let the page repaint before the synchronous computation starts.
    setTimeout(() => {
      try {
        run();
      } catch (e) {
        out.classList.add("error");
        out.textContent = String(e.message ?? e);
      }
    }, 0);
  };
}

function table(rows) {
  const body = rows.map(([k, v]) => `<tr><th>${k}</th><td>${v}</td></tr>`).join("");
  return `<table>${body}</table>`;
}

// Line plot of `ys` against `xs`, in log scale when asked.
function plot(canvas, xs, ys, log) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 30;
  ctx.clearRect(0, 0, w, h);
  const ty = ys.map((y) => (log ? Math.log10(Math.max(y, 1e-300)) : y));
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ty), Math.max(...ty)];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0 || 1)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.fillText(log ? `1e${y1.toFixed(1)}` : y1.toPrecision(3), 2, pad);
  ctx.fillText(log ? `1e${y0.toFixed(1)}` : y0.toPrecision(3), 2, h - pad);
  ctx.strokeStyle = "#1f5fbf";
  ctx.beginPath();
  ty.forEach((y, k) => (k ? ctx.lineTo(sx(xs[k]), sy(y)) : ctx.moveTo(sx(xs[k]), sy(y))));
  ctx.stroke();
}

// Eigenphases as points on the unit circle.
function phases(canvas, angles) {
  const ctx = canvas.getContext("2d");
  const c = canvas.width / 2, r = c - 20;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.arc(c, c, r, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.fillStyle = "#c0392b";
  for (const a of angles) {
    ctx.beginPath();
    ctx.arc(c + r * Math.cos(a), c - r * Math.sin(a), 4, 0, 2 * Math.PI);
    ctx.fill();
  }
}

await init();

$("budget-run").onclick = guarded($("budget-out"), () => {
  const b = JSON.parse(gateBudget(int("budget-n")));
  $("budget-out").innerHTML = table([
    ["CNOTs per unit", b.min_cnots_per_unit],
    ["CNOT lower bound", b.min_cnots_total],
    ["total CNOTs", b.total_cnots],
    ["rotations per unit", b.chosen_rots_per_unit],
    ["total rotations", b.total_rots],
  ]);
});

$("unity-run").onclick = guarded($("unity-out"), () => {
  const r = JSON.parse(findUnity($("unity-preset").value, int("unity-seed"), int("unity-restarts")));
  $("unity-out").innerHTML = table([
    ["restarts used", r.restarts_used],
    ["residual", r.residual_cost.toExponential(2)],
    ["chi", r.chi.toFixed(4)],
    ["D(U^N, I)", r.power_distance.toExponential(2)],
    ["descent steps", r.trace.at(-1)[0] + (r.polished ? " + polish" : "")],
  ]);
  phases($("unity-phases"), r.eigenphases);
  plot($("unity-trace"), r.trace.map((p) => p[0]), r.trace.map((p) => p[1]), true);
});

$("path-run").onclick = guarded($("path-out"), () => {
  const p = JSON.parse(pathProfile(int("path-n"), int("path-seed"), int("path-steps")));
  const js = p.distances.map((_, k) => k + 1);
  $("path-out").innerHTML = table([
    ["D at j = 1", p.distances[0].toFixed(4)],
    ["D at j = M", p.distances.at(-1).toFixed(4)],
    ["eigenphase near the branch cut", p.branch_cut_warning ? "yes" : "no"],
  ]);
  plot($("path-plot"), js, p.distances, false);
});
