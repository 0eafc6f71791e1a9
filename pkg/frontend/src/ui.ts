/** Browser view: renders PlayController state into the DOM and forwards
 * input events back to it.  No game logic lives here. */

import { Polarity, Workspace } from "./api.js";
import { cellToDisplay } from "./cellmap.js";
import { PlayController } from "./controller.js";

const SCALE: Record<Workspace, number> = { table: 2, hand: 2 };

export function mount(root: HTMLElement, controller: PlayController): void {
  root.innerHTML = `
    <div class="bar">
      <span id="phase"></span>
      <span id="steps"></span>
      <label><input type="checkbox" id="overlay" checked> snap overlay</label>
      <select id="mode">
        <option value="disassemble">disassemble</option>
        <option value="assemble">assemble</option>
        <option value="assemble-origin">assemble at origin</option>
        <option value="rotate">rotate brick</option>
      </select>
      <select id="tablePol"><option>+</option><option>-</option></select>
      <select id="angle"><option>90</option><option>180</option><option>270</option></select>
      <button id="switch">switch phase</button>
      <button id="end">end</button>
    </div>
    <div class="bar">
      <select id="shape"><option value="">shape...</option></select>
      <select id="color"><option value="">color...</option></select>
      <button id="pick" disabled>pick</button>
    </div>
    <div id="banners"></div>
    <div class="frames">
      <div>
        <div class="cam" data-ws="table"></div>
        <div class="frame" id="tableWrap"><img id="tableImg"><canvas id="tableOv"></canvas></div>
      </div>
      <div>
        <div class="cam" data-ws="hand"></div>
        <div class="frame" id="handWrap"><img id="handImg"><canvas id="handOv"></canvas></div>
      </div>
    </div>
    <div id="score"></div>
  `;

  for (const bar of root.querySelectorAll<HTMLElement>(".cam")) {
    const ws = bar.dataset.ws as Workspace;
    for (const dir of ["left", "right", "up", "down", "frame"] as const) {
      const b = document.createElement("button");
      b.textContent = `${ws} ${dir}`;
      b.onclick = () => controller.rotateCamera(ws, dir);
      bar.appendChild(b);
    }
  }

  const el = <T extends HTMLElement>(id: string): T =>
    root.querySelector(`#${id}`) as T;

  el<HTMLSelectElement>("mode").onchange = (e) => {
    controller.controls.mode = (e.target as HTMLSelectElement)
      .value as typeof controller.controls.mode;
    controller.controls.pendingHandCell = null;
  };
  el<HTMLSelectElement>("tablePol").onchange = (e) => {
    const v = (e.target as HTMLSelectElement).value as Polarity;
    controller.controls.tablePolarity = v;
    controller.controls.handPolarity = v === "+" ? "-" : "+";
    render(controller);
  };
  el<HTMLSelectElement>("angle").onchange = (e) => {
    controller.controls.rotateAngle = Number(
      (e.target as HTMLSelectElement).value,
    ) as 90 | 180 | 270;
  };
  el<HTMLInputElement>("overlay").onchange = (e) => {
    controller.controls.overlay = (e.target as HTMLInputElement).checked;
    render(controller);
  };
  el<HTMLButtonElement>("switch").onclick = () => controller.pressSwitchPhase();
  el<HTMLButtonElement>("end").onclick = () => controller.pressEnd();
  el<HTMLSelectElement>("shape").onchange = (e) => {
    const v = (e.target as HTMLSelectElement).value;
    controller.controls.selectedShape = v ? Number(v) : null;
    render(controller);
  };
  el<HTMLSelectElement>("color").onchange = (e) => {
    const v = (e.target as HTMLSelectElement).value;
    controller.controls.selectedColor = v ? Number(v) : null;
    render(controller);
  };
  el<HTMLButtonElement>("pick").onclick = () => controller.pick();

  for (const ws of ["table", "hand"] as Workspace[]) {
    const wrap = el<HTMLElement>(`${ws}Wrap`);
    wrap.addEventListener("click", (ev) => {
      const rect = wrap.getBoundingClientRect();
      controller.clickFrame(
        ws,
        ev.clientX - rect.left,
        ev.clientY - rect.top,
        SCALE[ws],
      );
    });
  }

  function render(c: PlayController): void {
    const s = c.state;
    el<HTMLElement>("phase").textContent = `phase: ${s.phase}`;
    el<HTMLElement>("steps").textContent = `step ${s.stepCount}/${s.maxSteps}`;
    el<HTMLButtonElement>("pick").disabled = !c.canPick;

    const shapeSel = el<HTMLSelectElement>("shape");
    if (shapeSel.options.length <= 1 && s.shapes.length) {
      for (const sh of s.shapes) {
        const o = document.createElement("option");
        o.value = String(sh.id);
        o.textContent = `${sh.id} (${sh.name})`;
        shapeSel.appendChild(o);
      }
    }
    const colorSel = el<HTMLSelectElement>("color");
    if (colorSel.options.length <= 1 && s.colors.length) {
      for (const co of s.colors) {
        const o = document.createElement("option");
        o.value = String(co.id);
        o.textContent = co.name;
        colorSel.appendChild(o);
      }
    }

    const banners = el<HTMLElement>("banners");
    banners.innerHTML = "";
    for (const b of s.banners) {
      const d = document.createElement("div");
      d.className = `banner ${b.kind}`;
      d.textContent = b.text;
      banners.appendChild(d);
    }

    for (const ws of ["table", "hand"] as Workspace[]) {
      const frame = s.frames[ws];
      const img = el<HTMLImageElement>(`${ws}Img`);
      const size = ws === "table" ? s.tableSize : s.handSize;
      img.width = size * SCALE[ws];
      img.height = size * SCALE[ws];
      if (frame) {
        const blob = new Blob([frame.bytes], { type: "image/png" });
        const url = URL.createObjectURL(blob);
        const old = img.src;
        img.onload = () => old && URL.revokeObjectURL(old);
        img.src = url;
      }
      const canvas = el<HTMLCanvasElement>(`${ws}Ov`);
      canvas.width = size * SCALE[ws];
      canvas.height = size * SCALE[ws];
      const ctx = canvas.getContext("2d");
      if (!ctx) continue;
      ctx.clearRect(0, 0, canvas.width, canvas.height);
      if (c.controls.overlay && !s.terminal) {
        const pol =
          ws === "table" ? c.controls.tablePolarity : c.controls.handPolarity;
        ctx.fillStyle =
          pol === "+" ? "rgba(80,200,120,0.45)" : "rgba(120,160,255,0.45)";
        for (const cell of s.snaps[ws][pol]) {
          const d = cellToDisplay(cell, SCALE[ws]);
          ctx.fillRect(d.x, d.y, d.size, d.size);
        }
        if (ws === "hand" && c.controls.pendingHandCell) {
          const d = cellToDisplay(c.controls.pendingHandCell, SCALE[ws]);
          ctx.strokeStyle = "rgba(255,80,80,0.9)";
          ctx.strokeRect(d.x, d.y, d.size, d.size);
        }
      }
    }

    const scoreEl = el<HTMLElement>("score");
    if (s.terminal && s.score) {
      scoreEl.textContent =
        `episode over — F1_b ${s.score.f1_b.toFixed(3)}  ` +
        `F1_a ${s.score.f1_a.toFixed(3)}  F1_e ${s.score.f1_e.toFixed(3)}  ` +
        `AED ${s.score.aed.toFixed(3)}`;
    } else {
      scoreEl.textContent = "";
    }
  }

  controller.onChange = render;
  render(controller);
}
