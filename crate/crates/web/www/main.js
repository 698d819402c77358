// Built with: wasm-pack build crates/web --target web --out-dir www/pkg
import init, { budget, merit, synthAndFit } from "./pkg/optonoise_web.js";

const $ = (id) => document.getElementById(id);
const POINTS = 400;

function plot(canvas, x, series, yLabel) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 55;
  ctx.clearRect(0, 0, w, h);
  const lx = x.map(Math.log10);
  const ly = series.flatMap((s) => Array.from(s.y, Math.log10)).filter(Number.isFinite);
  const [x0, x1] = [Math.min(...lx), Math.max(...lx)];
  const y0 = Math.floor(Math.min(...ly)), y1 = Math.ceil(Math.max(...ly));
  const px = (v) => pad + ((v - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (v) => h - pad + ((y0 - v) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#eee";
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  for (let d = y0; d <= y1; d++) {
    ctx.beginPath(); ctx.moveTo(pad, py(d)); ctx.lineTo(w - pad, py(d)); ctx.stroke();
    ctx.fillText(`1e${d}`, 4, py(d) + 4);
  }
  for (let d = Math.ceil(x0); d <= Math.floor(x1); d++) {
    ctx.beginPath(); ctx.moveTo(px(d), pad); ctx.lineTo(px(d), h - pad); ctx.stroke();
    ctx.fillText(`${10 ** (d - 6)} MHz`, px(d) - 12, h - pad + 16);
  }
  ctx.fillText(yLabel, pad, pad - 10);

  series.forEach((s, k) => {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = s.width ?? 1.5;
    ctx.beginPath();
    s.y.forEach((v, i) => {
      const [a, b] = [px(lx[i]), py(Math.log10(v))];
      i ? ctx.lineTo(a, b) : ctx.moveTo(a, b);
    });
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.name, w - pad - 120, pad + 14 * k);
  });
}

function updateBudget() {
  const g = +$("g").value, p = 10 ** +$("p").value, t = +$("t").value;
  $("g-val").textContent = g;
  $("p-val").textContent = p.toPrecision(3);
  $("t-val").textContent = t;
  try {
    const v = budget(g, p, t, POINTS);
    const n = POINTS, row = (k) => v.subarray(k * n, (k + 1) * n);
    const sql = new Float64Array(n).fill(v[5 * n]);
    plot($("budget"), Array.from(row(0)), [
      { name: "thermal (string)", y: row(1), color: "#888" },
      { name: "shot", y: row(2), color: "#1f77b4" },
      { name: "thermorefractive", y: row(3), color: "#d62728" },
      { name: "total", y: row(4), color: "#000", width: 2 },
      { name: "SQL", y: sql, color: "#2ca02c" },
    ], "displacement PSD (m^2/Hz)");
    const [psql, pcc, pth, ratio, imp, db] = merit(g, p);
    $("merit").textContent =
      `P_SQL = ${(psql * 1e6).toFixed(3)} uW   P_SQL(critical) = ${(pcc * 1e6).toFixed(3)} uW   P_th = ${(pth * 1e6).toFixed(3)} uW\n` +
      `P_in/P_SQL = ${ratio.toFixed(2)}   shot imprecision = ${imp.toFixed(4)} x SQL (${db.toFixed(2)} dB)`;
    $("merit").className = "out";
  } catch (e) {
    $("merit").textContent = String(e);
    $("merit").className = "out err";
  }
}

function updateFit() {
  const sb = +$("sb").value, sd = +$("sd").value, navg = Math.round(10 ** +$("n").value);
  $("sb-val").textContent = sb.toFixed(2);
  $("sd-val").textContent = sd.toFixed(2);
  $("n-val").textContent = navg;
  try {
    const v = synthAndFit(sb, sd, navg, +$("seed").value >>> 0, POINTS);
    const n = v[4], at = (k) => v.subarray(5 + k * n, 5 + (k + 1) * n);
    plot($("fit"), Array.from(at(0)), [
      { name: "synthetic", y: at(1), color: "#aaa", width: 1 },
      { name: "fit", y: at(2), color: "#d62728", width: 2 },
    ], "frequency noise PSD ((rad/s)^2/Hz)");
    $("fit-out").textContent =
      `fitted s_b = ${v[0].toFixed(4)}  s_d = ${v[1].toFixed(4)}  iterations = ${v[2]}  converged = ${v[3] === 1}`;
    $("fit-out").className = "out";
  } catch (e) {
    $("fit-out").textContent = String(e);
    $("fit-out").className = "out err";
  }
}

await init();
for (const id of ["g", "p", "t"]) $(id).addEventListener("input", updateBudget);
for (const id of ["sb", "sd", "n", "seed"]) $(id).addEventListener("input", updateFit);
updateBudget();
updateFit();
