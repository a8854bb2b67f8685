export { SERIES_HEADER, SeriesFrame, parseSeries, readSeries } from "./series";
export { HEADER_LEN, Snapshot, readSnapshot, mass } from "./pfield";
export { drawEnergyChart, EnergyChartOptions } from "./chart";
export { drawFieldPanel, FieldPanelOptions, ColorScale } from "./panel";
export { main } from "./cli";
