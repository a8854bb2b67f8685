import { Canvas, createCanvas, SKRSContext2D } from "@napi-rs/canvas";

import { SeriesFrame } from "./series";

const RUN_COLORS = ["#c23b22", "#1f5fa8", "#2e8540", "#8031a7", "#b8860b", "#008080"];

const MARGIN = { left: 72, right: 16, top: 20, bottom: 46 };

export interface EnergyChartOptions {
    width?: number;
    height?: number;
    title?: string;
}

interface Extent {
    min: number;
    max: number;
}

function extend(e: Extent, values: number[]): void {
    for (const v of values) {
        if (v < e.min) e.min = v;
        if (v > e.max) e.max = v;
    }
}

function niceTicks(min: number, max: number, count = 5): number[] {
    if (!(max > min)) {
        const pad = Math.abs(min) > 0 ? Math.abs(min) * 0.1 : 1;
        return [min - pad, min, min + pad];
    }
    const raw = (max - min) / count;
    const mag = Math.pow(10, Math.floor(Math.log10(raw)));
    const step = [1, 2, 2.5, 5, 10].map((s) => s * mag).find((s) => s >= raw) ?? 10 * mag;
    const ticks: number[] = [];
    for (let v = Math.ceil(min / step) * step; v <= max + 1e-12 * step; v += step) {
        ticks.push(v);
    }
    return ticks;
}

function fmtTick(v: number): string {
    if (v === 0) return "0";
    const a = Math.abs(v);
    if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
    return String(parseFloat(v.toPrecision(4)));
}

/**
 * Overlay the dissipated (quadratic) and original energy curves of one or
 * more runs on a single chart: per run, E_modified is drawn solid and
 * F_original dashed, in the same color.
 */
export function drawEnergyChart(
    frames: SeriesFrame[],
    labels: string[],
    options: EnergyChartOptions = {}
): Canvas {
    if (frames.length === 0) throw new Error("no series to plot");
    if (labels.length !== frames.length) {
        throw new Error(`got ${frames.length} series but ${labels.length} labels`);
    }
    const width = options.width ?? 900;
    const height = options.height ?? 560;
    const canvas = createCanvas(width, height);
    const ctx = canvas.getContext("2d");

    ctx.fillStyle = "#ffffff";
    ctx.fillRect(0, 0, width, height);

    const xExt: Extent = { min: Infinity, max: -Infinity };
    const yExt: Extent = { min: Infinity, max: -Infinity };
    for (const f of frames) {
        extend(xExt, f.time);
        extend(yExt, f.E_modified);
        extend(yExt, f.F_original);
    }
    const ySpan = yExt.max - yExt.min || Math.abs(yExt.max) || 1;
    yExt.min -= 0.05 * ySpan;
    yExt.max += 0.05 * ySpan;

    const plotW = width - MARGIN.left - MARGIN.right;
    const plotH = height - MARGIN.top - MARGIN.bottom;
    const toX = (t: number) => MARGIN.left + ((t - xExt.min) / (xExt.max - xExt.min || 1)) * plotW;
    const toY = (e: number) => MARGIN.top + (1 - (e - yExt.min) / (yExt.max - yExt.min)) * plotH;

    drawAxes(ctx, xExt, yExt, toX, toY, width, height, options.title);

    frames.forEach((frame, i) => {
        const color = RUN_COLORS[i % RUN_COLORS.length];
        drawLine(ctx, frame.time, frame.E_modified, toX, toY, color, []);
        drawLine(ctx, frame.time, frame.F_original, toX, toY, color, [7, 5]);
    });

    drawLegend(ctx, labels);
    return canvas;
}

function drawAxes(
    ctx: SKRSContext2D,
    xExt: Extent,
    yExt: Extent,
    toX: (t: number) => number,
    toY: (e: number) => number,
    width: number,
    height: number,
    title?: string
): void {
    ctx.strokeStyle = "#444444";
    ctx.lineWidth = 1;
    ctx.strokeRect(MARGIN.left, MARGIN.top, width - MARGIN.left - MARGIN.right, height - MARGIN.top - MARGIN.bottom);

    ctx.fillStyle = "#222222";
    ctx.font = "13px sans-serif";
    ctx.textAlign = "center";
    for (const t of niceTicks(xExt.min, xExt.max, 6)) {
        const x = toX(t);
        ctx.strokeStyle = "#dddddd";
        ctx.beginPath();
        ctx.moveTo(x, MARGIN.top);
        ctx.lineTo(x, height - MARGIN.bottom);
        ctx.stroke();
        ctx.fillText(fmtTick(t), x, height - MARGIN.bottom + 18);
    }
    ctx.textAlign = "right";
    for (const e of niceTicks(yExt.min, yExt.max, 5)) {
        const y = toY(e);
        ctx.strokeStyle = "#dddddd";
        ctx.beginPath();
        ctx.moveTo(MARGIN.left, y);
        ctx.lineTo(width - MARGIN.right, y);
        ctx.stroke();
        ctx.fillText(fmtTick(e), MARGIN.left - 8, y + 4);
    }

    ctx.textAlign = "center";
    ctx.font = "14px sans-serif";
    ctx.fillText("time", MARGIN.left + (width - MARGIN.left - MARGIN.right) / 2, height - 10);
    ctx.save();
    ctx.translate(16, MARGIN.top + (height - MARGIN.top - MARGIN.bottom) / 2);
    ctx.rotate(-Math.PI / 2);
    ctx.fillText("energy", 0, 0);
    ctx.restore();
    if (title) {
        ctx.font = "15px sans-serif";
        ctx.fillText(title, width / 2, 14);
    }
}

function drawLine(
    ctx: SKRSContext2D,
    xs: number[],
    ys: number[],
    toX: (t: number) => number,
    toY: (e: number) => number,
    color: string,
    dash: number[]
): void {
    ctx.strokeStyle = color;
    ctx.lineWidth = 1.8;
    ctx.setLineDash(dash);
    ctx.beginPath();
    ctx.moveTo(toX(xs[0]), toY(ys[0]));
    for (let i = 1; i < xs.length; i++) {
        ctx.lineTo(toX(xs[i]), toY(ys[i]));
    }
    ctx.stroke();
    ctx.setLineDash([]);
}

function drawLegend(ctx: SKRSContext2D, labels: string[]): void {
    ctx.font = "13px sans-serif";
    ctx.textAlign = "left";
    const entries = labels.flatMap((label, i) => [
        { text: `${label} (quadratic E)`, color: RUN_COLORS[i % RUN_COLORS.length], dash: [] as number[] },
        { text: `${label} (original F)`, color: RUN_COLORS[i % RUN_COLORS.length], dash: [7, 5] },
    ]);
    const boxW = Math.max(...entries.map((e) => ctx.measureText(e.text).width)) + 54;
    const boxH = entries.length * 18 + 10;
    const x0 = ctx.canvas.width - MARGIN.right - boxW - 8;
    const y0 = MARGIN.top + 8;
    ctx.fillStyle = "rgba(255,255,255,0.92)";
    ctx.fillRect(x0, y0, boxW, boxH);
    ctx.strokeStyle = "#999999";
    ctx.lineWidth = 1;
    ctx.setLineDash([]);
    ctx.strokeRect(x0, y0, boxW, boxH);
    entries.forEach((e, i) => {
        const y = y0 + 14 + i * 18;
        ctx.strokeStyle = e.color;
        ctx.lineWidth = 2;
        ctx.setLineDash(e.dash);
        ctx.beginPath();
        ctx.moveTo(x0 + 8, y - 4);
        ctx.lineTo(x0 + 40, y - 4);
        ctx.stroke();
        ctx.setLineDash([]);
        ctx.fillStyle = "#222222";
        ctx.fillText(e.text, x0 + 46, y);
    });
}
