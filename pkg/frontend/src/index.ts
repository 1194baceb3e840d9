export { renderSvg } from './chart';
export { run } from './cli';
export { extractSeries, loadRunLog, METRICS } from './runlog';
export type { Metric, RunLogFile, Series } from './runlog';
