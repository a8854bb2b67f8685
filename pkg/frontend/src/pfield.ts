import fs from "fs";

// binary snapshot layout: a 64-byte space-padded ascii line
// "PFIELD v1 nx ny lx ly time\n" followed by nx*ny little-endian float64
// in row-major order (x index outer, y index inner)
export const HEADER_LEN = 64;

export interface Snapshot {
    nx: number;
    ny: number;
    lx: number;
    ly: number;
    time: number;
    values: Float64Array;
}

export function readSnapshot(path: string): Snapshot {
    const buf = fs.readFileSync(path);
    if (buf.length < HEADER_LEN || buf[HEADER_LEN - 1] !== 0x0a) {
        throw new Error(`${path}: truncated or malformed snapshot header`);
    }
    const parts = buf.subarray(0, HEADER_LEN).toString("ascii").trim().split(/\s+/);
    if (parts.length !== 7 || parts[0] !== "PFIELD" || parts[1] !== "v1") {
        throw new Error(`${path}: bad snapshot magic "${parts.slice(0, 2).join(" ")}"`);
    }
    const nx = Number(parts[2]);
    const ny = Number(parts[3]);
    const lx = Number(parts[4]);
    const ly = Number(parts[5]);
    const time = Number(parts[6]);
    if (!Number.isInteger(nx) || !Number.isInteger(ny) || nx <= 0 || ny <= 0) {
        throw new Error(`${path}: bad grid size ${parts[2]} x ${parts[3]}`);
    }
    if (![lx, ly, time].every(Number.isFinite)) {
        throw new Error(`${path}: non-numeric domain lengths or time`);
    }
    const expected = nx * ny * 8;
    if (buf.length - HEADER_LEN < expected) {
        throw new Error(`${path}: payload truncated (${buf.length - HEADER_LEN} of ${expected} bytes)`);
    }
    const values = new Float64Array(nx * ny);
    for (let i = 0; i < nx * ny; i++) {
        values[i] = buf.readDoubleLE(HEADER_LEN + 8 * i);
    }
    return { nx, ny, lx, ly, time, values };
}

/** Discrete integral of the field: cell weight times the value sum. */
export function mass(snap: Snapshot): number {
    let total = 0;
    for (let i = 0; i < snap.values.length; i++) total += snap.values[i];
    return ((snap.lx * snap.ly) / (snap.nx * snap.ny)) * total;
}
