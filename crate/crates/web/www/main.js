import init, { WebSim, checkProgram, compileNet, evalNet } from "../pkg/tr_web.js";

await init();

// ---- amble world

const canvas = document.getElementById("world");
const ctx = canvas.getContext("2d");
const SCALE = 20, ORIGIN = { x: 160, y: 420 };
const toScreen = (p) => ({ x: ORIGIN.x + p.x * SCALE, y: ORIGIN.y - p.y * SCALE });
const toWorld = (s) => ({ x: (s.x - ORIGIN.x) / SCALE, y: (ORIGIN.y - s.y) / SCALE });

let sim, world, record, goal, trail, running = true, dragging = null;

function reset() {
  sim = WebSim.ambleDemo();
  world = JSON.parse(sim.worldJson());
  record = null;
  goal = { x: 10, y: 10 };
  trail = [];
  draw();
}

function tick(n) {
  try {
    record = JSON.parse(sim.step(n));
    world = JSON.parse(sim.worldJson());
    const r = world.robots[0];
    trail.push({ x: r.position.x, y: r.position.y });
    if (trail.length > 2000) trail.shift();
    document.getElementById("simerr").textContent = "";
  } catch (e) {
    running = false;
    document.getElementById("simerr").textContent = String(e);
  }
  draw();
}

function draw() {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  trail.forEach((p, i) => { const s = toScreen(p); i ? ctx.lineTo(s.x, s.y) : ctx.moveTo(s.x, s.y); });
  ctx.stroke();
  for (const o of world.obstacles) {
    const c = toScreen(o.center);
    ctx.fillStyle = "#8a9bb0";
    ctx.beginPath(); ctx.arc(c.x, c.y, o.radius * SCALE, 0, 2 * Math.PI); ctx.fill();
  }
  const g = toScreen(goal);
  ctx.strokeStyle = "#2a8a2a";
  ctx.beginPath(); ctx.moveTo(g.x - 6, g.y - 6); ctx.lineTo(g.x + 6, g.y + 6);
  ctx.moveTo(g.x + 6, g.y - 6); ctx.lineTo(g.x - 6, g.y + 6); ctx.stroke();
  for (const r of world.robots) {
    const c = toScreen(r.position), h = r.heading, s = r.radius * SCALE;
    ctx.fillStyle = "#c0392b";
    ctx.beginPath();
    ctx.moveTo(c.x + Math.cos(h) * s * 1.4, c.y - Math.sin(h) * s * 1.4);
    ctx.lineTo(c.x + Math.cos(h + 2.4) * s, c.y - Math.sin(h + 2.4) * s);
    ctx.lineTo(c.x + Math.cos(h - 2.4) * s, c.y - Math.sin(h - 2.4) * s);
    ctx.fill();
  }
  document.getElementById("tick").textContent = sim.tick();
  const levels = document.getElementById("levels");
  levels.replaceChildren();
  for (const l of record ? record.robots[0].activation : []) {
    const row = document.createElement("div");
    const dots = l.truth.map((t, i) => {
      const mark = t === null ? "·" : t ? "●" : "○";
      return i === l.selected ? `[${mark}]` : ` ${mark} `;
    }).join("");
    row.textContent = `${l.callee}#${l.instance_id}  ${dots}`;
    levels.append(row);
  }
}

canvas.addEventListener("mousedown", (ev) => {
  const p = toWorld({ x: ev.offsetX, y: ev.offsetY });
  if (ev.shiftKey) {
    try { sim.setGoal(p.x, p.y); goal = p; } catch (e) { document.getElementById("simerr").textContent = String(e); }
    return;
  }
  dragging = world.obstacles.find((o) => Math.hypot(o.center.x - p.x, o.center.y - p.y) <= o.radius) || null;
});
canvas.addEventListener("mousemove", (ev) => {
  if (!dragging) return;
  const p = toWorld({ x: ev.offsetX, y: ev.offsetY });
  dragging.center = p;
  try { sim.moveObject(dragging.id, p.x, p.y); } catch (e) { document.getElementById("simerr").textContent = String(e); }
  draw();
});
window.addEventListener("mouseup", () => { dragging = null; });

document.getElementById("run").onclick = (ev) => {
  running = !running;
  ev.target.textContent = running ? "pause" : "run";
};
document.getElementById("step").onclick = () => tick(1);
document.getElementById("reset").onclick = reset;

reset();
setInterval(() => { if (running) tick(1); }, 50);

// ---- static check

document.getElementById("check").onclick = () => {
  const out = document.getElementById("report");
  try {
    out.textContent = JSON.parse(checkProgram(document.getElementById("prog").value,
                                              document.getElementById("models").value)).text;
    out.className = "";
  } catch (e) {
    out.textContent = String(e);
    out.className = "err";
  }
};

// ---- threshold net

let compiled = null;

function showNet() {
  const bits = [...document.querySelectorAll("#inputs input")];
  const state = bits.reduce((m, b, i) => m | (b.checked ? 1 << i : 0), 0);
  const a = JSON.parse(evalNet(JSON.stringify(compiled.net), state));
  const row = (xs) => xs.map((b) => (b ? "1" : "0")).join(" ");
  document.getElementById("net").textContent =
    `conditions  ${row(a.layer1)}\nfirst-true  ${row(a.layer2)}\nactions     ${row(a.layer3)}  (${compiled.net.action_names.join(", ")})\n` +
    `-> ${a.action ?? "none"}\n\nexhaustively equivalent: ${compiled.equivalent} (${compiled.inputs_checked} inputs)`;
}

document.getElementById("compile").onclick = () => {
  const inputs = document.getElementById("inputs");
  inputs.replaceChildren();
  try {
    compiled = JSON.parse(compileNet(document.getElementById("netprog").value));
  } catch (e) {
    document.getElementById("net").textContent = String(e);
    return;
  }
  compiled.features.forEach((f) => {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.onchange = showNet;
    label.append(box, ` ${f} `);
    inputs.append(label);
  });
  showNet();
};
