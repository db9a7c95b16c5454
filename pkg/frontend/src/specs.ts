import { basename } from "path";
import { Table } from "./csv";
import { PlotKind, PlotSpec } from "./render";

/** Per-figure column selections; anything unknown falls back to plotting
 * every numeric column against the first one. */
const FIGURES: Record<string, Partial<PlotSpec>> = {
  "fig-intro-kickbacks": {
    kind: "line",
    x: "n_operators",
    series: {
      errorfree: "error free",
      serial_expected: "serial, noisy",
      parallel_expected: "parallel, noisy",
    },
    yLabel: "expected kickback angle",
  },
  "fig-lowdepth-errorfree": {
    kind: "overlay",
    x: "n_operators",
    series: { mean_freq: "measured", analytic: "predicted" },
    yLabel: "frequency of outcome 1",
  },
  "fig-serial-noisy-lowdepth": {
    kind: "overlay",
    x: "n_operators",
    series: {
      single_run_freq: "single run",
      mean_freq: "mean of runs",
      analytic: "predicted",
    },
    yLabel: "frequency of outcome 1",
  },
  "fig-parallel-vs-serial": {
    kind: "overlay",
    x: "n_operators",
    series: {
      single_run_freq: "single run",
      mean_freq: "mean of runs",
      analytic: "dampened prediction",
    },
    yLabel: "frequency of outcome 1",
  },
  "fig-kickback-angles-serial": {
    kind: "overlay",
    x: "n_operators",
    series: {
      single_run_angle: "single run",
      mean_angle: "mean of runs",
      analytic: "predicted",
      errorfree: "error free",
    },
    yLabel: "kickback angle",
  },
  "fig-kickback-angles-parallel": {
    kind: "overlay",
    x: "n_operators",
    series: {
      single_run_angle: "single run",
      mean_angle: "mean of runs",
      analytic: "predicted",
      errorfree: "error free",
    },
    yLabel: "kickback angle",
  },
  "fig-kickback-variance": {
    kind: "line",
    x: "n_operators",
    series: {
      var_serial_mc: "serial (sampled)",
      var_parallel_mc: "parallel (sampled)",
      var_parallel_formula: "parallel (predicted)",
    },
    yLabel: "variance of kickback angle",
  },
  "fig-fidelities": {
    kind: "line",
    x: "a",
    series: {
      overlap_no_measure: "no measurement",
      overlap_with_measure: "with measurement",
    },
    xLabel: "good-state probability",
    yLabel: "overlap",
  },
  "fig-qae-histograms": {
    kind: "histogram",
    x: "y",
    series: {
      count_superposition_M: "superposition preparation",
      count_exact_eigenvector: "exact eigenvector",
      count_approximation: "approximated eigenvector",
    },
    yLabel: "counts",
  },
  "risk-model": {
    kind: "histogram",
    x: "folded_bin",
    series: {
      count_errorfree: "error free",
      count_corrected: "corrected, noisy",
      count_standard_noisy: "standard, noisy",
    },
    yLabel: "counts",
  },
};

export function specFor(inputPath: string, table: Table, outputPath: string,
                        kindOverride?: PlotKind): PlotSpec {
  const name = basename(inputPath).replace(/\.csv$/, "");
  const known = FIGURES[name];
  if (known) {
    const spec = { inputPath, outputPath, ...known } as PlotSpec;
    if (kindOverride) spec.kind = kindOverride;
    return spec;
  }
  const x = table.columns[0];
  const series: Record<string, string> = {};
  for (const col of table.columns.slice(1)) {
    if (table.rows.length === 0 || typeof table.rows[0][col] === "number") {
      series[col] = col;
    }
  }
  return { inputPath, outputPath, kind: kindOverride ?? "line", x, series };
}
