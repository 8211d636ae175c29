"""Metric aggregation over handover records and report latencies."""
import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput


@dataclass(frozen=True)
class MetricsReport:
    per_satellite: dict  # sat -> metrics dict
    aggregate: dict
    cdf_points: dict  # metric name -> [(value, fraction)]


def cdf(values):
    """Empirical CDF: fraction k/n at the k-th smallest value (1-based)."""
    vals = sorted(float(v) for v in values)
    if not vals:
        raise EmptyInput("cdf of no values")
    n = len(vals)
    return [(v, (i + 1) / n) for i, v in enumerate(vals)]


def aggregate(records, report_latencies=None) -> MetricsReport:
    """Exact sums and means per satellite plus fleet totals.

    ``report_latencies`` maps sat -> list of per-report latencies (ms).
    Fleet totals are reported in hours to match daily-overhead tables.
    """
    report_latencies = report_latencies or {}
    sats = sorted({r.sat_id for r in records} | set(report_latencies))
    per_sat = {}
    for s in sats:
        recs = [r for r in records if r.sat_id == s]
        lats = report_latencies.get(s, [])
        per_sat[s] = {
            "handover_count": len(recs),
            "mean_handover_duration_s": (
                sum(r.duration for r in recs) / len(recs) if recs else 0.0
            ),
            "total_invisibility_s": sum(r.invisibility for r in recs),
            "total_pod_unavail_s": sum(r.pod_unavailability for r in recs),
            "mean_report_latency_ms": sum(lats) / len(lats) if lats else 0.0,
        }

    durations = [r.duration for r in records]
    all_lats = [v for s in sats for v in report_latencies.get(s, [])]
    agg = {
        "total_handovers": len(records),
        "mean_duration_s": sum(durations) / len(durations) if durations else 0.0,
        "total_invisibility_h": sum(r.invisibility for r in records) / 3600.0,
        "total_pod_unavail_h": sum(r.pod_unavailability for r in records) / 3600.0,
        "total_handover_time_h": sum(durations) / 3600.0,
        "report_latency_percentiles_ms": _percentiles(all_lats),
    }
    cdfs = {}
    if durations:
        cdfs["handover_duration_s"] = cdf(durations)
    if all_lats:
        cdfs["report_latency_ms"] = cdf(all_lats)
    return MetricsReport(per_satellite=per_sat, aggregate=agg, cdf_points=cdfs)


def _percentiles(values):
    if not values:
        return {"p50": 0.0, "p90": 0.0, "p99": 0.0}
    arr = np.asarray(values, dtype=float)
    p50, p90, p99 = np.percentile(arr, [50.0, 90.0, 99.0])
    return {"p50": float(p50), "p90": float(p90), "p99": float(p99)}


# ---------------------------------------------------------------------------
# writers


def write_records_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["sat_id", "t_start_s", "duration_s", "invisibility_s", "pod_unavail_s",
             "protocol", "source", "target"]
        )
        for r in records:
            w.writerow(
                [r.sat_id, f"{r.t_start:.6f}", f"{r.duration:.6f}", f"{r.invisibility:.6f}",
                 f"{r.pod_unavailability:.6f}", r.protocol.value, r.source_gs, r.target_gs]
            )


def write_report(report: MetricsReport, out_dir, scenario_name="scenario"):
    """report.json, a daily-overhead style table, and CDF CSVs."""
    import os

    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(
            {
                "per_satellite": {str(k): v for k, v in sorted(report.per_satellite.items())},
                "aggregate": report.aggregate,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    with open(os.path.join(out_dir, "report_table.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["scenario", "total_handovers", "avg_duration_s",
             "total_invisibility_h", "total_pod_unavail_h"]
        )
        agg = report.aggregate
        w.writerow(
            [scenario_name, agg["total_handovers"], f"{agg['mean_duration_s']:.2f}",
             f"{agg['total_invisibility_h']:.2f}", f"{agg['total_pod_unavail_h']:.2f}"]
        )
    for name, points in sorted(report.cdf_points.items()):
        with open(os.path.join(out_dir, f"cdf_{name}.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["value", "fraction"])
            for value, fraction in points:
                w.writerow([f"{value:.6f}", f"{fraction:.6f}"])
