import init, { Demo, trafficCurve } from "./pkg/warehouse_web.js";

const $ = (id) => document.getElementById(id);
const grid = $("grid").getContext("2d");
const curve = $("curve").getContext("2d");
let demo = null;
let timer = null;
let pick = null;
let preview = [];

function hue(i) {
  return `hsl(${(i * 137) % 360} 65% 48%)`;
}

function draw() {
  if (!demo) return;
  const w = demo.width(), h = demo.height();
  const s = Math.floor(Math.min(480 / w, 480 / h));
  grid.clearRect(0, 0, 480, 480);
  grid.strokeStyle = "#ddd";
  for (let x = 0; x < w; x++) for (let y = 0; y < h; y++) grid.strokeRect(x * s, y * s, s, s);
  const blocked = demo.blocked();
  grid.fillStyle = "#444";
  for (let i = 0; i < blocked.length; i += 2) grid.fillRect(blocked[i] * s, blocked[i + 1] * s, s, s);
  grid.fillStyle = "rgba(30, 120, 255, 0.35)";
  for (let i = 0; i < preview.length; i += 2) grid.fillRect(preview[i] * s, preview[i + 1] * s, s, s);
  const goals = demo.goals();
  for (let r = 0; r < goals.length / 3; r++) {
    grid.strokeStyle = hue(r);
    grid.strokeRect(goals[3 * r] * s + 2, goals[3 * r + 1] * s + 2, s - 4, s - 4);
  }
  const pos = demo.positions();
  const arrow = [null, [0, -1], [1, 0], [0, 1], [-1, 0]];
  for (let r = 0; r < pos.length / 4; r++) {
    const cx = (pos[4 * r] + 0.5) * s, cy = (pos[4 * r + 1] + 0.5) * s;
    grid.fillStyle = hue(r);
    grid.beginPath();
    grid.arc(cx, cy, s * 0.35, 0, 2 * Math.PI);
    grid.fill();
    const d = arrow[pos[4 * r + 2]];
    if (d) {
      grid.strokeStyle = "#fff";
      grid.beginPath();
      grid.moveTo(cx, cy);
      grid.lineTo(cx + d[0] * s * 0.35, cy + d[1] * s * 0.35);
      grid.stroke();
    }
  }
  $("scrub").value = demo.cursor();
  const span = demo.makespan();
  $("status").textContent = `tick ${demo.tick()} of ${demo.frame_count() - 1}, make-span ${span < 0 ? "not reached" : span}`;
}

function run() {
  stop();
  const size = Number($("size").value);
  try {
    if (demo) demo.free();
    demo = new Demo(size, size, Number($("robots").value), $("algo").value, $("regime").value, BigInt($("seed").value));
  } catch (e) {
    demo = null;
    $("status").textContent = String(e);
    return;
  }
  preview = [];
  $("scrub").max = demo.frame_count() - 1;
  draw();
}

function stop() {
  if (timer) clearInterval(timer);
  timer = null;
  $("play").textContent = "Play";
}

function play() {
  if (!demo) return;
  if (timer) return stop();
  $("play").textContent = "Pause";
  timer = setInterval(() => {
    const before = demo.cursor();
    demo.step(1);
    draw();
    if (demo.cursor() === before) stop();
  }, 60);
}

function clickCell(ev) {
  if (!demo) return;
  const s = Math.floor(Math.min(480 / demo.width(), 480 / demo.height()));
  const rect = ev.target.getBoundingClientRect();
  const x = Math.floor((ev.clientX - rect.left) / s), y = Math.floor((ev.clientY - rect.top) / s);
  if (x >= demo.width() || y >= demo.height()) return;
  if (!pick) {
    pick = [x, y];
    $("plan-status").textContent = ` start (${x}, ${y}), pick a goal`;
    return;
  }
  try {
    preview = demo.planPreview(pick[0], pick[1], 2, x, y, 2);
    $("plan-status").textContent = ` ${preview.length / 2 - 1} moves from (${pick[0]}, ${pick[1]}) to (${x}, ${y})`;
  } catch (e) {
    preview = [];
    $("plan-status").textContent = ` ${e}`;
  }
  pick = null;
  draw();
}

function drawCurve() {
  const n = 40;
  const ys = trafficCurve($("kind").value, Number($("dist").value), Number($("count").value), n);
  const top = Math.max(1e-9, ...ys);
  curve.clearRect(0, 0, 480, 200);
  curve.strokeStyle = "#999";
  curve.strokeRect(0, 0, 480, 200);
  curve.strokeStyle = "#c33";
  curve.beginPath();
  ys.forEach((y, i) => {
    const px = (i / (n - 1)) * 470 + 5, py = 195 - (y / top) * 185;
    i === 0 ? curve.moveTo(px, py) : curve.lineTo(px, py);
  });
  curve.stroke();
  curve.fillStyle = "#333";
  curve.fillText(`peak ${top.toFixed(3)}`, 8, 14);
}

await init();
$("run").onclick = run;
$("play").onclick = play;
$("back").onclick = () => { stop(); demo?.step(-1); draw(); };
$("fwd").onclick = () => { stop(); demo?.step(1); draw(); };
$("scrub").oninput = (e) => { stop(); demo?.seek(Number(e.target.value)); draw(); };
$("grid").onclick = clickCell;
for (const id of ["kind", "dist", "count"]) $(id).oninput = drawCurve;
run();
drawCurve();
