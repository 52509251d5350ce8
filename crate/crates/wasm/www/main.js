import init, { hitting_curve, skew_sweep, digital_smile } from "./pkg/firsthit_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);
const PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"];

function market() {
  return {
    spot: num("spot"),
    bf: num("bf"),
    mat: num("mat"),
    atm: num("atm"),
    slope: num("slope"),
    rate: num("rate"),
    steps: Math.round(num("steps")),
  };
}

// Minimal line chart: series = [{ xs, ys, color, axis: "left" | "right" }].
function plot(canvas, series, { xlabel = "", ylabel = "", y2label = "" } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, L = 56, R = y2label ? 56 : 16, T = 12, B = 34;
  ctx.clearRect(0, 0, W, H);
  ctx.font = "11px system-ui";
  const all = (k, side) => series.filter((s) => (s.axis || "left") === side).flatMap((s) => s[k]);
  const xs = series.flatMap((s) => s.xs);
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const range = (side) => {
    const ys = all("ys", side).filter(Number.isFinite);
    if (!ys.length) return null;
    let lo = Math.min(0, ...ys), hi = Math.max(...ys);
    if (hi === lo) hi = lo + 1;
    return [lo, hi];
  };
  const ranges = { left: range("left"), right: range("right") };
  const sx = (x) => L + ((x - x0) / (x1 - x0 || 1)) * (W - L - R);
  const sy = (y, side) => {
    const [lo, hi] = ranges[side];
    return H - B - ((y - lo) / (hi - lo)) * (H - T - B);
  };

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.beginPath();
  ctx.moveTo(L, T); ctx.lineTo(L, H - B); ctx.lineTo(W - R, H - B);
  if (ranges.right) ctx.lineTo(W - R, T);
  ctx.stroke();
  for (let i = 0; i <= 4; i++) {
    const x = x0 + ((x1 - x0) * i) / 4;
    ctx.fillText(x.toPrecision(3), sx(x) - 10, H - B + 14);
    for (const side of ["left", "right"]) {
      if (!ranges[side]) continue;
      const [lo, hi] = ranges[side];
      const y = lo + ((hi - lo) * i) / 4;
      ctx.fillText(y.toPrecision(3), side === "left" ? 4 : W - R + 4, sy(y, side) + 4);
    }
  }
  ctx.fillText(xlabel, W / 2 - 20, H - 4);
  ctx.save(); ctx.translate(12, H / 2); ctx.rotate(-Math.PI / 2); ctx.fillText(ylabel, 0, 0); ctx.restore();

  for (const s of series) {
    const side = s.axis || "left";
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 1.6;
    ctx.beginPath();
    let pen = false;
    s.xs.forEach((x, i) => {
      const y = s.ys[i];
      if (!Number.isFinite(y)) { pen = false; return; }
      pen ? ctx.lineTo(sx(x), sy(y, side)) : ctx.moveTo(sx(x), sy(y, side));
      pen = true;
    });
    ctx.stroke();
  }
}

function guarded(errorId, fn) {
  try {
    fn();
    $(errorId).textContent = "";
  } catch (e) {
    $(errorId).textContent = String(e.message || e);
  }
}

function drawCurve() {
  guarded("curve-error", () => {
    const m = market();
    const r = JSON.parse(hitting_curve(m.spot, m.bf, m.mat, m.atm, m.slope, m.rate, m.steps, num("fvol"), num("fskew")));
    $("price").textContent = `${(1e4 * r.price).toFixed(1)} bp`;
    plot($("curve"), [
      { xs: r.times, ys: r.density, color: PALETTE[0] },
      { xs: r.times, ys: r.cumulative, color: PALETTE[1], axis: "right" },
    ], { xlabel: "hit time t", ylabel: "ρ(t)", y2label: "cumulative" });
  });
}

function drawSweep() {
  guarded("sweep-error", () => {
    const m = market();
    const values = $("values").value.split(/[\s,]+/).filter(Boolean).map(Number);
    if (values.some((v) => !Number.isFinite(v))) throw new Error("values must be numbers");
    const r = JSON.parse(skew_sweep(m.spot, m.bf, m.mat, m.atm, m.slope, m.rate, m.steps, $("axis").value, new Float64Array(values)));
    const series = r.points
      .filter((p) => p.cumulative)
      .map((p, i) => ({ xs: r.times, ys: p.cumulative, color: PALETTE[i % PALETTE.length] }));
    if (series.length) plot($("sweep"), series, { xlabel: "hit time t", ylabel: "cumulative" });
    const rows = r.points.map((p, i) => {
      const swatch = `<span style="color:${PALETTE[i % PALETTE.length]}">■</span>`;
      const cell = p.error ? `<span class="error">${p.error}</span>` : `${(1e4 * p.price).toFixed(1)} bp`;
      return `<tr><td>${swatch} ${p.value}</td><td>${cell}</td></tr>`;
    });
    $("sweep-table").innerHTML = `<tr><th>value</th><th>price</th></tr>${rows.join("")}`;
  });
}

function drawSmile() {
  guarded("smile-error", () => {
    const m = market();
    const forward = m.spot * Math.exp(m.rate * m.mat);
    const strikes = Array.from({ length: 81 }, (_, i) => forward * (0.5 + i / 80));
    const rows = JSON.parse(digital_smile(forward, m.atm, m.slope, m.mat, new Float64Array(strikes)));
    const ks = rows.map((r) => r.strike);
    plot($("smile"), [
      { xs: ks, ys: rows.map((r) => r.flat), color: PALETTE[0] },
      { xs: ks, ys: rows.map((r) => (r.skewed === null ? NaN : r.skewed)), color: PALETTE[3] },
      { xs: ks, ys: rows.map((r) => r.vol), color: "#aaa", axis: "right" },
    ], { xlabel: "strike (blue flat, red skewed)", ylabel: "digital put", y2label: "vol" });
  });
}

function redraw() {
  for (const o of document.querySelectorAll("output")) o.textContent = $(o.htmlFor).value;
  drawCurve();
  drawSweep();
  drawSmile();
}

await init();
for (const el of document.querySelectorAll("input, select")) el.addEventListener("input", redraw);
redraw();
