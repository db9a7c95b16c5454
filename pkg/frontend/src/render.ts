import * as echarts from "echarts";
import { CsvError, Table, numericColumn } from "./csv";

export type PlotKind = "line" | "overlay" | "histogram";

export interface PlotSpec {
  inputPath: string;
  kind: PlotKind;
  x: string;
  series: Record<string, string>; // column -> legend label
  xLabel?: string;
  yLabel?: string;
  title?: string;
  outputPath: string;
}

const WIDTH = 760;
const HEIGHT = 480;

/** Render one spec to an SVG string. Inputs are read-only; missing columns
 * raise CsvError. */
export function renderSvg(spec: PlotSpec, table: Table): string {
  const xs = numericColumn(table, spec.x);
  const seriesCols = Object.keys(spec.series);
  if (seriesCols.length === 0) throw new CsvError("no series columns");
  const series = seriesCols.map((col, i) => {
    const ys = numericColumn(table, col);
    if (spec.kind === "histogram") {
      return { name: spec.series[col], type: "bar" as const, data: ys };
    }
    return {
      name: spec.series[col],
      type: "line" as const,
      showSymbol: spec.kind === "overlay" && i === 0,
      data: xs.map((x, k) => [x, ys[k]]),
    };
  });
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: WIDTH,
    height: HEIGHT,
  });
  try {
    chart.setOption({
      animation: false,
      title: spec.title ? { text: spec.title, left: "center" } : undefined,
      legend: { bottom: 0 },
      grid: { left: 60, right: 20, top: 40, bottom: 60 },
      xAxis:
        spec.kind === "histogram"
          ? { type: "category", data: xs.map(String), name: spec.xLabel ?? spec.x }
          : { type: "value", name: spec.xLabel ?? spec.x },
      yAxis: { type: "value", name: spec.yLabel ?? "" },
      series,
    });
    return chart.renderToSVGString();
  } finally {
    chart.dispose();
  }
}
