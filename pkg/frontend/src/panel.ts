import { Canvas, createCanvas } from "@napi-rs/canvas";

import { diverging, sequential } from "./colormap";
import { Snapshot } from "./pfield";

export type ColorScale = "fixed" | "auto";

export interface FieldPanelOptions {
    /** "fixed" clamps to [-1.1, 1.1] (two-phase fields); "auto" spans the data. */
    scale?: ColorScale;
    /** pixels per grid cell */
    cell?: number;
    columns?: number;
}

const LABEL_H = 22;
const GAP = 8;

/** Render snapshots as a grid of heatmaps sharing one color scale. */
export function drawFieldPanel(snaps: Snapshot[], options: FieldPanelOptions = {}): Canvas {
    if (snaps.length === 0) throw new Error("no snapshots to plot");
    const scale = options.scale ?? "fixed";
    const columns = options.columns ?? snaps.length;
    const rows = Math.ceil(snaps.length / columns);

    let lo = -1.1;
    let hi = 1.1;
    if (scale === "auto") {
        lo = Infinity;
        hi = -Infinity;
        for (const s of snaps) {
            for (const v of s.values) {
                if (v < lo) lo = v;
                if (v > hi) hi = v;
            }
        }
        if (!(hi > lo)) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
    const cmap = scale === "fixed" ? diverging : sequential;

    const maxN = Math.max(...snaps.map((s) => Math.max(s.nx, s.ny)));
    const cell = options.cell ?? Math.max(1, Math.floor(256 / maxN) * 2);
    const tileW = Math.max(...snaps.map((s) => s.nx)) * cell;
    const tileH = Math.max(...snaps.map((s) => s.ny)) * cell;
    const width = GAP + columns * (tileW + GAP);
    const height = GAP + rows * (tileH + LABEL_H + GAP);

    const canvas = createCanvas(width, height);
    const ctx = canvas.getContext("2d");
    ctx.fillStyle = "#ffffff";
    ctx.fillRect(0, 0, width, height);
    ctx.font = "13px sans-serif";
    ctx.textAlign = "center";

    snaps.forEach((snap, idx) => {
        const col = idx % columns;
        const row = Math.floor(idx / columns);
        const x0 = GAP + col * (tileW + GAP);
        const y0 = GAP + row * (tileH + LABEL_H + GAP);

        const img = ctx.createImageData(snap.nx * cell, snap.ny * cell);
        for (let j = 0; j < snap.ny; j++) {
            // grid y increases upward, image y downward
            const py = snap.ny - 1 - j;
            for (let i = 0; i < snap.nx; i++) {
                const t = (snap.values[i * snap.ny + j] - lo) / (hi - lo);
                const [r, g, b] = cmap(t);
                for (let dy = 0; dy < cell; dy++) {
                    const rowOff = ((py * cell + dy) * snap.nx * cell + i * cell) * 4;
                    for (let dx = 0; dx < cell; dx++) {
                        const o = rowOff + dx * 4;
                        img.data[o] = r;
                        img.data[o + 1] = g;
                        img.data[o + 2] = b;
                        img.data[o + 3] = 255;
                    }
                }
            }
        }
        ctx.putImageData(img, x0, y0);
        ctx.strokeStyle = "#666666";
        ctx.strokeRect(x0 + 0.5, y0 + 0.5, snap.nx * cell - 1, snap.ny * cell - 1);
        ctx.fillStyle = "#222222";
        ctx.fillText(`t = ${trimFloat(snap.time)}`, x0 + (snap.nx * cell) / 2, y0 + snap.ny * cell + 15);
    });
    return canvas;
}

function trimFloat(v: number): string {
    return String(parseFloat(v.toPrecision(6)));
}
