import fs from "fs";

// column layout written by the solver; parsing is strict so that format
// drift between the packages surfaces immediately
export const SERIES_HEADER =
    "step,time,E_modified,F_original,mass,xi0,dissipation,solver_iters,q_consistency";

export interface SeriesFrame {
    step: number[];
    time: number[];
    E_modified: number[];
    F_original: number[];
    mass: number[];
    xi0: number[];
    dissipation: number[];
    solver_iters: number[];
    q_consistency: number[];
}

const COLUMNS = SERIES_HEADER.split(",") as (keyof SeriesFrame)[];

export function parseSeries(text: string, source = "<string>"): SeriesFrame {
    const lines = text.split("\n").filter((l) => l.trim().length > 0);
    if (lines.length === 0) {
        throw new Error(`${source}: empty file`);
    }
    if (lines[0].trim() !== SERIES_HEADER) {
        throw new Error(
            `${source}: unexpected series header "${lines[0].trim()}" ` +
            `(expected "${SERIES_HEADER}")`
        );
    }
    if (lines.length === 1) {
        throw new Error(`${source}: series has a header but no rows`);
    }
    const frame: SeriesFrame = {
        step: [], time: [], E_modified: [], F_original: [], mass: [],
        xi0: [], dissipation: [], solver_iters: [], q_consistency: [],
    };
    for (let i = 1; i < lines.length; i++) {
        const parts = lines[i].split(",");
        if (parts.length !== COLUMNS.length) {
            throw new Error(`${source}:${i + 1}: expected ${COLUMNS.length} columns, got ${parts.length}`);
        }
        for (let c = 0; c < COLUMNS.length; c++) {
            const value = Number(parts[c]);
            if (!Number.isFinite(value)) {
                throw new Error(`${source}:${i + 1}: non-numeric value "${parts[c]}" in ${COLUMNS[c]}`);
            }
            frame[COLUMNS[c]].push(value);
        }
    }
    return frame;
}

export function readSeries(path: string): SeriesFrame {
    return parseSeries(fs.readFileSync(path, "utf-8"), path);
}
