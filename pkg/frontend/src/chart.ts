/**
 * SVG rendering through echarts' server-side renderer. No DOM, no canvas:
 * the chart is built headless and serialized to an SVG string, so identical
 * inputs produce identical bytes.
 */

import * as echarts from 'echarts';

import { Metric, Series } from './runlog';

const Y_LABEL: Record<Metric, string> = {
  effective_ratio: 'effective ratio',
  dispersion: 'reward range',
  accuracy: 'greedy accuracy',
  mean_correct_length: 'mean correct length (tokens)',
  bt_divergence: 'max |score|',
};

export function renderSvg(
  metric: Metric,
  series: Series[],
  width = 900,
  height = 540,
): string {
  const chart = echarts.init(null, undefined, {
    renderer: 'svg',
    ssr: true,
    width,
    height,
  });
  chart.setOption({
    animation: false,
    title: { text: metric.replace(/_/g, ' '), left: 'center' },
    legend: { bottom: 0, data: series.map((s) => s.name) },
    grid: { left: 70, right: 30, top: 50, bottom: 60 },
    xAxis: { type: 'value', name: 'step', nameLocation: 'middle', nameGap: 25 },
    yAxis: { type: 'value', name: Y_LABEL[metric] },
    series: series.map((s) => ({
      name: s.name,
      type: 'line',
      showSymbol: false,
      data: s.points,
    })),
  });
  const svg = chart.renderToSVGString();
  chart.dispose();
  return normalizeIds(svg);
}

// echarts derives class and clip-path ids (zr0-cls-4, zr1-c0, ...) from
// process-wide counters, so a second render of the same input gets different
// numbers; renumber tokens by first appearance to make identical inputs give
// identical bytes regardless of how many charts were rendered before
function normalizeIds(svg: string): string {
  const seen = new Map<string, string>();
  return svg.replace(/zr\d+-([a-z]+)-?\d+/g, (match, kind) => {
    let canon = seen.get(match);
    if (canon === undefined) {
      canon = `zr-${kind}-${seen.size}`;
      seen.set(match, canon);
    }
    return canon;
  });
}
