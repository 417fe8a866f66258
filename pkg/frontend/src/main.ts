/** Browser entry point: three.js viewport plus the refinement panels. */

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";
import { GLTFLoader } from "three/examples/jsm/loaders/GLTFLoader.js";

import { SceneApi } from "./api";
import { sceneAmbient } from "./glb";
import { ViewerSession } from "./session";

const api = new SceneApi("/api/v1");
const session = new ViewerSession(api);

const canvas = document.getElementById("viewport") as HTMLCanvasElement;
const renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
const camera = new THREE.PerspectiveCamera(55, 1, 0.5, 50000);
const controls = new OrbitControls(camera, canvas);
const three = new THREE.Scene();
three.background = new THREE.Color(0x10141a);
three.add(new THREE.HemisphereLight(0xffffff, 0x334455, 1.0));
const sun = new THREE.DirectionalLight(0xffffff, 1.4);
sun.position.set(400, 700, 300);
three.add(sun);
let model: THREE.Group | null = null;

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

function resize() {
  const w = canvas.clientWidth || canvas.parentElement!.clientWidth;
  const h = canvas.clientHeight || canvas.parentElement!.clientHeight;
  renderer.setSize(w, h, false);
  camera.aspect = w / h;
  camera.updateProjectionMatrix();
}
window.addEventListener("resize", resize);

function animate() {
  requestAnimationFrame(animate);
  controls.update();
  renderer.render(three, camera);
}

function setBanner(text: string | null) {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = text ?? "";
  banner.style.display = text ? "block" : "none";
}

function applyVisibility() {
  if (!model) return;
  model.traverse((obj) => {
    const cls = (obj.userData as { semantic_class?: string }).semantic_class;
    if (cls) obj.visible = session.state.visibility[cls] ?? true;
  });
}

async function showModel(raw: ArrayBuffer) {
  const loader = new GLTFLoader();
  const gltf = await loader.parseAsync(raw.slice(0), "");
  if (model) three.remove(model);
  model = gltf.scene;
  three.add(model);
  const box = new THREE.Box3().setFromObject(model);
  const center = box.getCenter(new THREE.Vector3());
  const size = box.getSize(new THREE.Vector3()).length() || 100;
  controls.target.copy(center);
  camera.position.set(center.x + size * 0.6, center.y + size * 0.5, center.z + size * 0.6);
  camera.far = size * 20;
  camera.updateProjectionMatrix();
  applyVisibility();
}

function renderPanels() {
  const s = session.state;
  setBanner(s.error);
  const report = s.report;
  el<HTMLDivElement>("meta").textContent = report
    ? `${report.scene_id} — ${report.object_count} objects — ` +
      `revision ${s.shown?.revision ?? "-"} of ${report.revisions.length - 1}` +
      (session.readOnly ? " (read-only)" : "")
    : "no scene loaded";

  const history = el<HTMLUListElement>("history");
  history.innerHTML = "";
  for (const rev of session.history) {
    const li = document.createElement("li");
    const a = document.createElement("a");
    a.href = "#";
    a.textContent = `#${rev.revision} ${rev.instruction}`;
    if (rev.revision === s.shown?.revision) li.className = "current";
    a.onclick = async (ev) => {
      ev.preventDefault();
      await session.showRevision(rev.revision);
      if (session.state.shown) await showModel(session.state.shown.raw);
      renderPanels();
    };
    li.appendChild(a);
    history.appendChild(li);
  }

  const evalPanel = el<HTMLDivElement>("evaluation");
  const shownReport = report?.revisions[s.shown?.revision ?? -1]?.report;
  if (shownReport) {
    const ious = Object.entries(shownReport.per_class_iou)
      .map(([k, v]) => `${k}: ${v.toFixed(3)}`)
      .join("  ");
    evalPanel.innerHTML =
      `<b>${shownReport.passed ? "passed" : "failed"}</b> ` +
      (ious ? `IoU ${ious}<br/>` : "<br/>") +
      shownReport.violations.map((v) => `<span class="violation">${v}</span>`).join("<br/>");
  } else {
    evalPanel.textContent = "";
  }

  const layers = el<HTMLDivElement>("layers");
  layers.innerHTML = "";
  for (const [cls, visible] of Object.entries(s.visibility)) {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.checked = visible;
    box.onchange = () => {
      session.toggleLayer(cls);
      applyVisibility();
    };
    label.appendChild(box);
    label.appendChild(document.createTextNode(" " + cls));
    layers.appendChild(label);
  }

  const ambient = s.shown ? sceneAmbient(s.shown.doc) : {};
  el<HTMLDivElement>("ambient").textContent = Object.entries(ambient)
    .map(([k, v]) => `${k}=${v}`)
    .join("  ");
}

el<HTMLButtonElement>("load").onclick = async () => {
  const sceneId = el<HTMLInputElement>("scene-id").value.trim();
  if (!sceneId) return;
  await session.load(sceneId);
  if (session.state.shown) await showModel(session.state.shown.raw);
  renderPanels();
};

el<HTMLFormElement>("instruction-form").onsubmit = async (ev) => {
  ev.preventDefault();
  const input = el<HTMLInputElement>("instruction");
  const text = input.value.trim();
  if (!text || session.readOnly) return;
  await session.submitInstruction(text);
  if (session.state.shown) await showModel(session.state.shown.raw);
  renderPanels();
  if (!session.state.error) input.value = "";
};

resize();
animate();
renderPanels();
