/** DOM assembly for the studio page. All elements carry data-test hooks. */

import { ApiClient, type TransferRequest, type TransferResponse } from "./api.js";
import { ObjViewer, parseObj } from "./objviewer.js";
import { LatestWinsQueue } from "./queue.js";
import { GATE_LABELS, StudioStore, toRequest } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

export interface Studio {
  store: StudioStore;
  generate: () => void;
  root: HTMLElement;
}

export function buildStudio(root: HTMLElement, client: ApiClient): Studio {
  const store = new StudioStore();

  const gallery = el("div", { class: "gallery", "data-test": "gallery" });
  const sourceLabel = el("span", { "data-test": "source-label" }, "source: –");
  const targetLabel = el("span", { "data-test": "target-label" }, "target: –");

  const alphaSlider = el("input", {
    type: "range",
    min: "-1",
    max: "1",
    step: "0.05",
    value: "0",
    "data-test": "alpha-slider",
  });
  const alphaReadout = el("span", { "data-test": "alpha-readout" }, "0.00");

  const gateToggles = GATE_LABELS.map((label, i) => {
    const box = el("input", { type: "checkbox", "data-test": `gate-${label}` });
    box.addEventListener("change", () => store.toggleGate(i as 0 | 1 | 2 | 3));
    return box;
  });

  const methodSelect = el("select", { "data-test": "method-select" });
  for (const method of ["sadain", "slst", "sefdm"]) {
    methodSelect.append(el("option", { value: method }, method));
  }
  methodSelect.addEventListener("change", () => {
    store.update({ method: methodSelect.value as "sadain" | "slst" | "sefdm" });
  });

  const generateButton = el("button", { "data-test": "generate" }, "Generate");
  const status = el("span", { "data-test": "status" }, "idle");

  const renderImg = el("img", { "data-test": "render", alt: "rendered view" });
  const textureImg = el("img", { "data-test": "texture", alt: "UV texture" });
  const viewerCanvas = el("canvas", {
    width: "320",
    height: "320",
    "data-test": "mesh-viewer",
  });
  const viewerFallback = el("img", {
    "data-test": "mesh-fallback",
    alt: "render fallback",
    hidden: "",
  });
  const viewer = new ObjViewer(viewerCanvas);

  const historyStrip = el("div", { class: "history", "data-test": "history" });

  alphaSlider.addEventListener("input", () => {
    store.update({ alpha: Number(alphaSlider.value) });
    alphaReadout.textContent = Number(alphaSlider.value).toFixed(2);
  });
  // auto-generate on slider release
  alphaSlider.addEventListener("change", () => generate());

  const queue = new LatestWinsQueue<TransferRequest, TransferResponse>(
    (request) => client.transfer(request),
    (request, response) => {
      store.recordResult(request, response);
      status.textContent = `done in ${response.timing_ms} ms`;
      showResult(response);
    },
    (_request, error) => {
      status.textContent = `error: ${error instanceof Error ? error.message : error}`;
    },
  );

  function generate(): void {
    try {
      const request = toRequest(store.controls);
      status.textContent = "generating…";
      queue.submit(request);
    } catch (error) {
      status.textContent = error instanceof Error ? error.message : String(error);
    }
  }
  generateButton.addEventListener("click", () => generate());

  function showResult(response: TransferResponse): void {
    renderImg.src = `data:image/png;base64,${response.render_png_b64}`;
    textureImg.src = `data:image/png;base64,${response.texture_png_b64}`;
    client
      .fetchMesh(response.mesh_url)
      .then((text) => {
        viewer.setMesh(parseObj(text));
        viewerCanvas.hidden = false;
        viewerFallback.hidden = true;
      })
      .catch(() => {
        // degrade to the static render when the OBJ cannot be parsed
        viewerFallback.src = renderImg.src;
        viewerCanvas.hidden = true;
        viewerFallback.hidden = false;
      });
  }

  function syncControls(): void {
    alphaSlider.value = String(store.controls.alpha);
    alphaReadout.textContent = store.controls.alpha.toFixed(2);
    gateToggles.forEach((box, i) => (box.checked = store.controls.gates[i] ?? false));
    methodSelect.value = store.controls.method;
    sourceLabel.textContent = `source: ${store.controls.sourceId ?? "–"}`;
    targetLabel.textContent = `target: ${store.controls.targetId ?? "–"}`;
  }

  function renderHistory(): void {
    historyStrip.replaceChildren();
    store.history.forEach((entry, index) => {
      const thumb = el("img", {
        class: "history-thumb",
        "data-test": `history-${index}`,
        src: `data:image/png;base64,${entry.response.render_png_b64}`,
        title: `α=${entry.request.alpha} ${entry.request.texture_method}`,
      });
      thumb.addEventListener("click", () => {
        store.restore(index);
        showResult(entry.response);
      });
      historyStrip.append(thumb);
    });
  }

  store.subscribe(() => {
    syncControls();
    renderHistory();
  });

  void client.listAssets().then((assets) => {
    for (const asset of assets) {
      const card = el("div", { class: "asset", "data-test": `asset-${asset.id}` });
      card.append(
        el("img", { src: asset.thumbnail_url, alt: asset.id }),
        el("div", {}, asset.id),
      );
      const pickSource = el("button", { "data-test": `pick-source-${asset.id}` }, "source");
      const pickTarget = el("button", { "data-test": `pick-target-${asset.id}` }, "target");
      pickSource.addEventListener("click", () => store.update({ sourceId: asset.id }));
      pickTarget.addEventListener("click", () => store.update({ targetId: asset.id }));
      card.append(pickSource, pickTarget);
      gallery.append(card);
    }
  });

  const controlsPanel = el("div", { class: "controls" });
  controlsPanel.append(sourceLabel, targetLabel, alphaSlider, alphaReadout);
  gateToggles.forEach((box, i) => {
    const wrap = el("label", {}, GATE_LABELS[i]);
    wrap.prepend(box);
    controlsPanel.append(wrap);
  });
  controlsPanel.append(methodSelect, generateButton, status);

  const resultPane = el("div", { class: "result" });
  resultPane.append(renderImg, textureImg, viewerCanvas, viewerFallback);

  root.append(gallery, controlsPanel, resultPane, historyStrip);
  return { store, generate, root };
}
