export type Rgb = [number, number, number];

function lerp(a: number, b: number, t: number): number {
    return a + (b - a) * t;
}

function sample(stops: Rgb[], t: number): Rgb {
    const x = Math.min(1, Math.max(0, t)) * (stops.length - 1);
    const i = Math.min(stops.length - 2, Math.floor(x));
    const f = x - i;
    return [
        Math.round(lerp(stops[i][0], stops[i + 1][0], f)),
        Math.round(lerp(stops[i][1], stops[i + 1][1], f)),
        Math.round(lerp(stops[i][2], stops[i + 1][2], f)),
    ];
}

// blue -> white -> red, the usual two-phase rendering
const DIVERGING: Rgb[] = [
    [33, 58, 158],
    [108, 148, 221],
    [245, 245, 245],
    [223, 109, 88],
    [158, 24, 37],
];

// compact perceptual ramp for auto-scaled fields
const SEQUENTIAL: Rgb[] = [
    [68, 1, 84],
    [59, 82, 139],
    [33, 145, 140],
    [94, 201, 98],
    [253, 231, 37],
];

export function diverging(t: number): Rgb {
    return sample(DIVERGING, t);
}

export function sequential(t: number): Rgb {
    return sample(SEQUENTIAL, t);
}
