import init, { fuse, densityGrid, lossCurve } from "./pkg/evifuse_wasm.js";

const $ = (id) => document.getElementById(id);
const parseVec = (s) => new Float64Array(s.split(",").map((x) => Number(x.trim())));

function showFuse() {
  try {
    const r = JSON.parse(fuse(parseVec($("ea").value), parseVec($("eb").value)));
    const fmt = (v) => Array.from(v, (x) => x.toFixed(4)).join("  ");
    $("fuse-out").textContent = ["a", "b", "fused"]
      .map((k) => `${k.padEnd(6)} c = [${fmt(r[k].credibility)}]  u = ${r[k].uncertainty.toFixed(4)}  class ${r[k].predicted_class}`)
      .join("\n");
  } catch (e) {
    $("fuse-out").textContent = String(e.message ?? e);
  }
}

function showDensity() {
  const canvas = $("simplex");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  $("density-err").textContent = "";
  const n = Number($("res").value);
  let grid;
  try {
    grid = densityGrid(parseVec($("alpha").value), n);
  } catch (e) {
    $("density-err").textContent = String(e.message ?? e);
    return;
  }
  const max = grid.reduce((m, v) => Math.max(m, v), 0) || 1;
  // vertices for classes 0, 1, 2
  const v = [[210, 10], [10, 356], [410, 356]];
  const cell = 400 / n;
  let idx = 0;
  for (let i = 0; i <= n; i++) {
    for (let j = 0; j <= n - i; j++) {
      const k = n - i - j;
      const x = (i * v[0][0] + j * v[1][0] + k * v[2][0]) / n;
      const y = (i * v[0][1] + j * v[1][1] + k * v[2][1]) / n;
      const t = Math.sqrt(grid[idx++] / max);
      ctx.fillStyle = `rgb(${Math.round(255 * t)}, ${Math.round(80 * t)}, ${Math.round(255 * (1 - t))})`;
      ctx.fillRect(x - cell / 2, y - cell / 2, cell + 0.5, cell + 0.5);
    }
  }
  ctx.fillStyle = "#000";
  ["class 0", "class 1", "class 2"].forEach((s, c) => ctx.fillText(s, v[c][0] - 16, v[c][1] + (c ? 12 : -1)));
}

function plot(ctx, xs, ys, lo, hi, color, w, h) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  xs.forEach((x, i) => {
    const px = 40 + (x / xs[xs.length - 1]) * (w - 80);
    const py = h - 20 - ((ys[i] - lo) / (hi - lo || 1)) * (h - 40);
    i ? ctx.lineTo(px, py) : ctx.moveTo(px, py);
  });
  ctx.stroke();
}

function showLoss() {
  const canvas = $("curve");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  $("loss-err").textContent = "";
  let r;
  try {
    r = JSON.parse(lossCurve(parseVec($("base").value), Number($("label").value), Number($("sweep").value), Number($("maxe").value), 200));
  } catch (e) {
    $("loss-err").textContent = String(e.message ?? e);
    return;
  }
  const all = [...r.total, ...r.positive, ...r.negative];
  const lo = Math.min(0, ...all);
  const hi = Math.max(...all);
  plot(ctx, r.x, r.total, lo, hi, "#000", w, h);
  plot(ctx, r.x, r.positive, lo, hi, "#1f5fd0", w, h);
  plot(ctx, r.x, r.negative, lo, hi, "#c82020", w, h);
  plot(ctx, r.x, r.uncertainty, 0, 1, "#999", w, h);
  ctx.fillStyle = "#000";
  ctx.fillText(hi.toFixed(2), 2, 24);
  ctx.fillText(lo.toFixed(2), 2, h - 20);
  ctx.fillText("0", 36, h - 6);
  ctx.fillText(String(r.x[r.x.length - 1]), w - 50, h - 6);
}

await init();
for (const id of ["ea", "eb"]) $(id).addEventListener("input", showFuse);
for (const id of ["alpha", "res"]) $(id).addEventListener("input", showDensity);
for (const id of ["base", "label", "sweep", "maxe"]) $(id).addEventListener("input", showLoss);
showFuse();
showDensity();
showLoss();
