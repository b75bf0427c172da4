/**
 * Browser entry point: binds the controller to the DOM. Everything
 * interesting lives in controller.ts / state.ts / sphere.ts; this file
 * is intentionally just wiring.
 */

import { ServiceClient } from "./api.js";
import { EditorController } from "./controller.js";
import { renderSphereView } from "./sphere.js";
import type { Anchor } from "./types.js";

const SERVICE_URL = (window as unknown as { PANOCLONE_URL?: string }).PANOCLONE_URL ?? "";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function blobToImage(blob: Uint8Array): Promise<ImageBitmap> {
  const part = blob.slice().buffer as ArrayBuffer;
  return createImageBitmap(new Blob([part], { type: "image/png" }));
}

function toast(message: string): void {
  const box = el<HTMLDivElement>("toast");
  box.textContent = message;
  box.style.opacity = "1";
  setTimeout(() => (box.style.opacity = "0"), 3200);
}

async function start(): Promise<void> {
  const sourceInput = el<HTMLInputElement>("source-file");
  const targetInput = el<HTMLInputElement>("target-file");
  const canvas = el<HTMLCanvasElement>("editor");
  const sphereCanvas = el<HTMLCanvasElement>("sphere");
  const latency = el<HTMLSpanElement>("latency");
  const ctx = canvas.getContext("2d")!;

  let sourceBlob: Blob | null = null;
  let targetBlob: Blob | null = null;
  let targetBitmap: ImageBitmap | null = null;
  let compositeBitmap: ImageBitmap | null = null;
  let sphereDirty = true;
  let yaw = 0;
  let pitch = 0;

  const api = new ServiceClient(SERVICE_URL);
  // boundary vertices live in canvas coordinates; only the ratios reach
  // the service (converted to radians), so canvas space is fine
  const controller = new EditorController(api, canvas.width, canvas.height, {
    onComposite: (blob) => {
      void blobToImage(blob).then((img) => {
        compositeBitmap = img;
        sphereDirty = true;
        paint();
      });
    },
    onLatency: (t) => {
      latency.textContent = `membrane ${t.membraneMs.toFixed(1)} ms + raster ${t.rasterMs.toFixed(1)} ms`;
    },
    onToast: toast,
  });

  function paint(): void {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const shown = compositeBitmap ?? targetBitmap;
    if (shown) ctx.drawImage(shown, 0, 0, canvas.width, canvas.height);
    // boundary overlay
    ctx.strokeStyle = "#ffd400";
    ctx.lineWidth = 1.5;
    const verts = controller.boundary.list();
    if (verts.length) {
      ctx.beginPath();
      verts.forEach((v, k) => {
        const x = (v.x / controller.boundary.imageWidth) * canvas.width;
        const y = (v.y / controller.boundary.imageHeight) * canvas.height;
        if (k === 0) ctx.moveTo(x, y);
        else ctx.lineTo(x, y);
      });
      if (controller.boundary.closed) ctx.closePath();
      ctx.stroke();
    }
    // split-path overlay from the plan export
    const plan = controller.session?.split_plan;
    if (plan) {
      ctx.fillStyle = "#ff3030";
      ctx.fillText(`split: ${plan.method}${plan.flagged ? " (flagged)" : ""}`, 8, 14);
    }
    paintSphere();
  }

  function paintSphere(): void {
    if (!sphereDirty || !compositeBitmap) return;
    const off = document.createElement("canvas");
    off.width = compositeBitmap.width;
    off.height = compositeBitmap.height;
    const octx = off.getContext("2d");
    if (!octx) return; // no 2d context: flat view only
    octx.drawImage(compositeBitmap, 0, 0);
    const img = octx.getImageData(0, 0, off.width, off.height);
    const view = renderSphereView(
      { width: img.width, height: img.height, data: img.data },
      yaw,
      pitch,
      sphereCanvas.width,
    );
    const rgba = new Uint8ClampedArray(view.slice().buffer as ArrayBuffer);
    sphereCanvas
      .getContext("2d")!
      .putImageData(new ImageData(rgba, sphereCanvas.width, sphereCanvas.height), 0, 0);
    sphereDirty = false;
  }

  function canvasAnchor(ev: PointerEvent): Anchor {
    const rect = canvas.getBoundingClientRect();
    const x = (ev.clientX - rect.left) / rect.width;
    const y = (ev.clientY - rect.top) / rect.height;
    return { phi: x * 2 * Math.PI, theta: y * Math.PI };
  }

  sourceInput.addEventListener("change", () => {
    sourceBlob = sourceInput.files?.[0] ?? null;
  });
  targetInput.addEventListener("change", async () => {
    targetBlob = targetInput.files?.[0] ?? null;
    if (targetBlob) {
      targetBitmap = await createImageBitmap(targetBlob);
      paint();
    }
  });

  let mode: "draw" | "drag" = "draw";
  el<HTMLButtonElement>("close-boundary").addEventListener("click", async () => {
    if (!controller.boundary.close()) {
      toast("need at least 3 vertices");
      return;
    }
    if (!sourceBlob || !targetBlob) {
      toast("load source and target first");
      return;
    }
    const info = await controller.createSession(sourceBlob, targetBlob);
    toast(`session ${info.session_id}: ${info.mesh_stats.vertices} mesh vertices`);
    mode = "drag";
  });
  el<HTMLButtonElement>("undo").addEventListener("click", () => {
    controller.boundary.undo();
    paint();
  });

  canvas.addEventListener("pointerdown", (ev) => {
    if (mode === "draw") {
      const rect = canvas.getBoundingClientRect();
      controller.boundary.addVertex(
        ((ev.clientX - rect.left) / rect.width) * controller.boundary.imageWidth,
        ((ev.clientY - rect.top) / rect.height) * controller.boundary.imageHeight,
      );
      paint();
    } else {
      controller.dragAnchor(canvasAnchor(ev));
    }
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (mode === "drag" && ev.buttons === 1) controller.dragAnchor(canvasAnchor(ev));
  });
  canvas.addEventListener("pointerup", () => {
    if (mode === "drag") controller.releaseAnchor();
  });

  sphereCanvas.addEventListener("pointermove", (ev) => {
    if (ev.buttons !== 1) return;
    yaw += ev.movementX * 0.01;
    pitch = Math.max(-1.4, Math.min(1.4, pitch + ev.movementY * 0.01));
    sphereDirty = true;
    paintSphere();
  });

  paint();
}

void start();
