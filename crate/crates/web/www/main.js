import init, { Selector, curriculum_curve, train_regression } from "./pkg/adaselection_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"];

function plot(canvas, xs, series, { logX = false, logY = false, names = [] } = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 36;
  ctx.clearRect(0, 0, w, h);
  const fx = logX ? Math.log10 : (v) => v;
  const fy = logY ? (v) => Math.log10(Math.max(v, 1e-12)) : (v) => v;
  const X = xs.map(fx);
  const all = series.flat().map(fy);
  const [x0, x1] = [Math.min(...X), Math.max(...X)];
  let [y0, y1] = [Math.min(...all), Math.max(...all)];
  if (y0 === y1) { y0 -= 0.5; y1 += 0.5; }
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const py = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  ctx.fillText((logY ? 10 ** y1 : y1).toPrecision(3), 2, pad + 4);
  ctx.fillText((logY ? 10 ** y0 : y0).toPrecision(3), 2, h - pad);
  ctx.fillText(String(xs[0]), pad, h - pad + 14);
  ctx.fillText(String(xs[xs.length - 1]), w - pad - 30, h - pad + 14);
  series.forEach((ys, s) => {
    ctx.strokeStyle = COLORS[s % COLORS.length];
    ctx.beginPath();
    ys.forEach((y, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, px(X[i]), py(fy(y))));
    ctx.stroke();
    if (names[s]) {
      ctx.fillStyle = ctx.strokeStyle;
      ctx.fillText(names[s], w - pad - 120, pad + 14 * (s + 1));
    }
  });
}

function transpose(rows) {
  return rows[0].map((_, j) => rows.map((r) => r[j]));
}

let selector = null;
function resetSelector() {
  selector = new Selector(JSON.stringify({
    candidates: $("sel-cands").value,
    beta: num("sel-beta"),
    rate: num("sel-rate"),
    kappa: num("sel-kappa"),
  }));
}

function stepSelector() {
  const out = $("sel-out");
  try {
    if (!selector) resetSelector();
    const r = JSON.parse(selector.step($("sel-losses").value));
    const losses = $("sel-losses").value.split(/[\s,]+/).filter(Boolean).map(Number);
    const head = r.methods.map((m) => `<th>&alpha; ${m}</th>`).join("");
    const rows = losses.map((l, i) => {
      const alphas = r.per_method_alpha.map((a) => `<td>${a[i].toFixed(4)}</td>`).join("");
      const cls = r.indicators[i] ? ' class="chosen"' : "";
      return `<tr${cls}><td>${i}</td><td>${l}</td>${alphas}<td>${r.reward[i].toFixed(4)}</td><td>${r.scores[i].toFixed(4)}</td></tr>`;
    }).join("");
    const weights = r.methods.map((m, j) => `${m}=${r.weights[j].toFixed(4)}`).join(", ");
    out.innerHTML = `<p>t = ${r.t}; weights: ${weights}</p>
      <table><tr><th>i</th><th>loss</th>${head}<th>reward</th><th>score</th></tr>${rows}</table>`;
  } catch (e) {
    out.innerHTML = `<p class="err">${e}</p>`;
  }
}

function drawCurriculum() {
  $("cur-err").textContent = "";
  try {
    const r = JSON.parse(curriculum_curve($("cur-losses").value, num("cur-kappa"), BigInt(num("cur-tmax")), 60));
    const names = $("cur-losses").value.split(/[\s,]+/).filter(Boolean).map((l) => `loss ${l}`);
    plot($("cur-plot"), r.t, transpose(r.reward), { logX: true, names });
  } catch (e) {
    $("cur-err").textContent = e;
  }
}

function runTraining() {
  $("tr-err").textContent = "";
  $("tr-info").textContent = "training...";
  setTimeout(() => {
    try {
      const r = JSON.parse(train_regression(JSON.stringify({
        strategy: $("tr-strategy").value,
        rate: num("tr-rate"),
        beta: num("tr-beta"),
        epochs: num("tr-epochs"),
        seed: num("tr-seed"),
      })));
      const epochs = r.epochs.map((e) => e.epoch);
      plot($("tr-loss"), epochs, [r.epochs.map((e) => e.train_loss), r.epochs.map((e) => e.test_loss)],
        { logY: true, names: ["train loss", "test loss"] });
      const last = r.epochs[r.epochs.length - 1];
      $("tr-info").textContent = `${r.strategy}: final test MSE ${last.test_mse.toPrecision(4)}, ` +
        `${r.backward_samples} samples backpropagated`;
      const wc = $("tr-weights");
      if (r.weight_trace.length) {
        plot(wc, r.weight_trace.map((w) => w.t), transpose(r.weight_trace.map((w) => w.weights)), { names: r.methods });
      } else {
        wc.getContext("2d").clearRect(0, 0, wc.width, wc.height);
      }
    } catch (e) {
      $("tr-info").textContent = "";
      $("tr-err").textContent = e;
    }
  }, 10);
}

await init();
$("sel-step").onclick = stepSelector;
$("sel-reset").onclick = () => { selector = null; $("sel-out").innerHTML = ""; };
$("cur-go").onclick = drawCurriculum;
$("tr-go").onclick = runTraining;
drawCurriculum();
