"""Monte-Carlo comparison of SC-NOMA, FD-NOMA and FDMA.

Per realization and scheme the driver records feasibility, the minimum
total power, the maximum sum-rate and the maximum energy efficiency.
Realizations are independent and may run on a process pool; results are
collected by index and reduced in index order, so the output does not
depend on the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from ..cluster import feasibility_check
from ..energy import dinkelbach_solve
from ..errors import NomaError
from ..model import SystemParams
from ..sumrate import maximize_sum_rate
from .channel import generate_realization, realization_rng
from .clustering import cluster_users

__all__ = [
    "SchemeOutcome",
    "MetricsRow",
    "CSV_HEADER",
    "evaluate_realization",
    "run_monte_carlo",
    "resolve_workers",
    "format_csv",
]

CSV_HEADER = "scheme,K,r_min_bps,outage,avg_min_power_w,avg_sum_rate_bps,avg_ee,n_feasible"


@dataclass(frozen=True)
class SchemeOutcome:
    feasible: bool
    min_power_w: float
    sum_rate_bps: float
    ee: float
    flagged: bool = False


@dataclass(frozen=True)
class MetricsRow:
    scheme: str
    K: int
    r_min: float
    outage_probability: float
    avg_min_power_w: float
    avg_sum_rate_bps: float
    avg_ee: float
    n_feasible: int
    n_flagged: int = 0

    def csv_line(self) -> str:
        return ",".join(
            [
                self.scheme,
                str(self.K),
                _fmt(self.r_min),
                _fmt(self.outage_probability),
                _fmt(self.avg_min_power_w),
                _fmt(self.avg_sum_rate_bps),
                _fmt(self.avg_ee),
                str(self.n_feasible),
            ]
        )


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else repr(float(x))


def scheme_params(config, spec):
    k = config.n_users
    n = spec.n_clusters(k)
    return SystemParams(
        total_bandwidth_hz=config.total_bandwidth_hz,
        n_subchannels=n,
        p_max_w=config.p_max_w,
        p_mask_w=config.p_mask_w,
        p_circuit_w=config.p_circuit_w,
        u_max=spec.effective_u_max(k),
    )


def evaluate_realization(config, index: int):
    """Outcomes of every scheme for realization ``index``."""
    real = generate_realization(config, realization_rng(config.rng_seed, index))
    demands = config.user_demands()
    out = []
    for spec in config.scheme_specs():
        params = scheme_params(config, spec)
        cnr = real.cnr(config.noise_density_dbm_hz, params.subchannel_bandwidth_hz)
        clusters = cluster_users(cnr, params.u_max, demands)
        status = feasibility_check(clusters, params)
        if not status.feasible:
            out.append(SchemeOutcome(False, status.total_q_min_w, 0.0, 0.0))
            continue
        flagged = False
        try:
            sr = maximize_sum_rate(clusters, params).sum_rate_bps
        except NomaError:
            sr, flagged = 0.0, True
        try:
            ee = dinkelbach_solve(clusters, params, inner=config.inner).ee_bps_per_joule
        except NomaError:
            ee, flagged = 0.0, True
        out.append(SchemeOutcome(True, status.total_q_min_w, sr, ee, flagged))
    return out


def _evaluate_chunk(args):
    config, indices = args
    return [evaluate_realization(config, i) for i in indices]


def resolve_workers(workers=None) -> int:
    """Worker count: explicit value, else ``NOMA_OPT_THREADS``, else 1."""
    if workers is None:
        env = os.environ.get("NOMA_OPT_THREADS", "").strip()
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise ValueError(f"NOMA_OPT_THREADS must be an integer, got {env!r}") from None
        else:
            workers = 1
    if workers < 1:
        raise ValueError("worker count must be at least 1")
    return workers


def _collect(config, workers):
    indices = list(range(config.n_realizations))
    if workers == 1 or len(indices) <= 1:
        return [evaluate_realization(config, i) for i in indices]
    n_chunks = min(len(indices), workers * 4)
    chunks = [indices[j::n_chunks] for j in range(n_chunks)]
    results = [None] * len(indices)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for chunk, res in zip(chunks, pool.map(_evaluate_chunk, [(config, c) for c in chunks])):
            for i, r in zip(chunk, res):
                results[i] = r
    return results


def _reduce(config, results):
    rows = []
    total = len(results)
    for s, spec in enumerate(config.scheme_specs()):
        outcomes = [r[s] for r in results]
        feasible = [o for o in outcomes if o.feasible]
        nf = len(feasible)
        rows.append(
            MetricsRow(
                scheme=spec.label,
                K=config.n_users,
                r_min=config.r_min_label,
                outage_probability=(total - nf) / total,
                avg_min_power_w=math.fsum(o.min_power_w for o in feasible) / nf if nf else math.nan,
                avg_sum_rate_bps=math.fsum(o.sum_rate_bps for o in outcomes) / total,
                avg_ee=math.fsum(o.ee for o in outcomes) / total,
                n_feasible=nf,
                n_flagged=sum(o.flagged for o in outcomes),
            )
        )
    return rows


def run_monte_carlo(config, workers=None):
    """Metrics rows, one per scheme, for a single scenario."""
    return _reduce(config, _collect(config, resolve_workers(workers)))


def format_csv(rows) -> str:
    return "\n".join([CSV_HEADER] + [r.csv_line() for r in rows]) + "\n"
