#!/usr/bin/env node
import fs from "fs";
import path from "path";

import { drawEnergyChart } from "./chart";
import { drawFieldPanel, ColorScale } from "./panel";
import { readSnapshot } from "./pfield";
import { readSeries } from "./series";

const USAGE = `usage:
  eqflow-plots plot-energy --out FIG.png [--labels a,b,...] [--title T] SERIES.csv [SERIES.csv ...]
  eqflow-plots plot-field  --out FIG.png [--scale fixed|auto] [--cols N] SNAP.pfield [SNAP.pfield ...]

plot-energy overlays the quadratic (solid) and original (dashed) energy
curves of each series file. plot-field renders snapshots as heatmap tiles;
the fixed scale clamps colors to [-1.1, 1.1] for two-phase fields, auto
spans the data range.`;

interface Parsed {
    command: string;
    positional: string[];
    flags: Map<string, string>;
}

function parseArgs(argv: string[]): Parsed {
    if (argv.length === 0) throw new Error(USAGE);
    const [command, ...rest] = argv;
    const positional: string[] = [];
    const flags = new Map<string, string>();
    for (let i = 0; i < rest.length; i++) {
        const arg = rest[i];
        if (arg.startsWith("--")) {
            const value = rest[i + 1];
            if (value === undefined) throw new Error(`missing value for ${arg}`);
            flags.set(arg.slice(2), value);
            i++;
        } else {
            positional.push(arg);
        }
    }
    return { command, positional, flags };
}

function requireOut(parsed: Parsed): string {
    const out = parsed.flags.get("out");
    if (!out) throw new Error(`--out is required\n${USAGE}`);
    return out;
}

function writePng(canvas: { toBuffer(mime: "image/png"): Buffer }, out: string): void {
    const dir = path.dirname(out);
    if (dir && dir !== ".") fs.mkdirSync(dir, { recursive: true });
    fs.writeFileSync(out, canvas.toBuffer("image/png"));
    console.log(`wrote ${out}`);
}

export function main(argv: string[]): number {
    let parsed: Parsed;
    try {
        parsed = parseArgs(argv);
    } catch (err) {
        console.error((err as Error).message);
        return 2;
    }

    try {
        if (parsed.command === "plot-energy") {
            if (parsed.positional.length === 0) throw new Error(`no series files given\n${USAGE}`);
            const out = requireOut(parsed);
            const frames = parsed.positional.map((p) => readSeries(p));
            const labels = parsed.flags.has("labels")
                ? parsed.flags.get("labels")!.split(",")
                : parsed.positional.map((p) => path.basename(p, ".csv"));
            if (labels.length !== frames.length) {
                throw new Error(`got ${frames.length} series but ${labels.length} labels`);
            }
            const canvas = drawEnergyChart(frames, labels, { title: parsed.flags.get("title") });
            writePng(canvas, out);
            return 0;
        }
        if (parsed.command === "plot-field") {
            if (parsed.positional.length === 0) throw new Error(`no snapshots given\n${USAGE}`);
            const out = requireOut(parsed);
            const scaleFlag = parsed.flags.get("scale") ?? "fixed";
            if (scaleFlag !== "fixed" && scaleFlag !== "auto") {
                throw new Error(`--scale must be "fixed" or "auto", got "${scaleFlag}"`);
            }
            const snaps = parsed.positional.map((p) => readSnapshot(p));
            const canvas = drawFieldPanel(snaps, {
                scale: scaleFlag as ColorScale,
                columns: parsed.flags.has("cols") ? Number(parsed.flags.get("cols")) : undefined,
            });
            writePng(canvas, out);
            return 0;
        }
        console.error(`unknown command "${parsed.command}"\n${USAGE}`);
        return 2;
    } catch (err) {
        console.error((err as Error).message);
        return 1;
    }
}

if (require.main === module) {
    process.exit(main(process.argv.slice(2)));
}
