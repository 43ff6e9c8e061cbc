"""Interval-driven cache allocation controller.

At each interval boundary the controller enumerates candidate color counts
around the current allocation, estimates each candidate's execution time and
energy from the profiling units, drops candidates whose slowdown versus the
full-size cache exceeds the tolerance, and reconfigures to the energy
minimum among the survivors.
"""

from dataclasses import dataclass, field

from .cache import CacheGeometry, CacheState, ReconfigReport, reconfigure
from .energy import CandidateEstimates, EnergyParams, predict_energy
from .profiler import (IntervalStats, ProfilingUnit, estimate_misses,
                       estimate_refreshes, estimate_time)
from .refresh import RefreshConfig


@dataclass
class ControllerConfig:
    c_min: int
    granularity: int = 2
    delta: int = 16
    beta: float = 3.0
    interval_instructions: int = 10_000_000

    def __post_init__(self):
        if self.c_min < 1:
            raise ValueError("c_min must be >= 1")
        if self.delta < self.granularity:
            raise ValueError("delta must be >= granularity")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.interval_instructions < 1:
            raise ValueError("interval_instructions must be >= 1")


def default_config(geometry: CacheGeometry, **overrides) -> ControllerConfig:
    """Default tuning: minimum allocation is a 1/16th slice of the colors."""
    overrides.setdefault("c_min", max(1, geometry.color_count // 16))
    return ControllerConfig(**overrides)


def candidate_space(current: int, total_colors: int, cfg: ControllerConfig) -> list[int]:
    """Allocation candidates: multiples of the granularity within [c_min, M]
    and within delta colors of the current allocation, ascending."""
    lo = max(cfg.c_min, current - cfg.delta)
    hi = min(total_colors, current + cfg.delta)
    first = lo + (-lo) % cfg.granularity  # round up to a multiple
    return list(range(first, hi + 1, cfg.granularity))


def delta_pct(t_i: float, t_0: float) -> float:
    """Percentage extra time of a candidate over the full-size estimate."""
    if t_0 <= 0:
        raise ValueError("full-size time estimate must be > 0")
    return (t_i - t_0) / t_0 * 100.0


@dataclass
class Candidate:
    colors: int
    est_time: float
    delta_pct: float
    est_energy: float
    rejected_by_beta: bool


@dataclass
class Decision:
    chosen: int
    current: int
    candidates: list[Candidate] = field(default_factory=list)
    fail_safe: bool = False


def select(stats: IntervalStats, units: list[ProfilingUnit], state: CacheState,
           refresh_config: RefreshConfig, cfg: ControllerConfig,
           params: EnergyParams) -> Decision:
    """Pick the next interval's color count from the finished interval's stats."""
    geometry = state.geometry
    m_total = geometry.color_count
    current = state.active_count
    space = candidate_space(current, m_total, cfg)

    _, full_load = estimate_misses(units, m_total, geometry)
    t_0 = estimate_time(stats, full_load)

    accesses = stats.l2_hits + stats.l2_misses
    if stats.l2_misses > 0:
        wb_ratio = max(0.0, (stats.dram_accesses - stats.l2_misses) / stats.l2_misses)
    else:
        wb_ratio = 0.0

    candidates = []
    for colors in space:
        est_m, est_load = estimate_misses(units, colors, geometry)
        t_i = estimate_time(stats, est_load)
        d_i = delta_pct(t_i, t_0)
        ests = CandidateEstimates(
            est_m_l2=est_m,
            est_h_l2=max(accesses - est_m, 0.0),
            est_n_r=estimate_refreshes(state.n_valid, colors, geometry,
                                       t_i, refresh_config) if t_i > 0 else 0,
            t_cycles=t_i,
            est_a_dram=est_m * (1.0 + wb_ratio),
            b_blocks=abs(colors - current) * geometry.lines_per_color,
            est_a_prof=stats.prof_accesses,
        )
        energy = predict_energy(colors, m_total, ests, params)
        candidates.append(Candidate(colors, t_i, d_i, energy,
                                    rejected_by_beta=d_i > cfg.beta))

    survivors = [c for c in candidates if not c.rejected_by_beta]
    if survivors:
        best = min(survivors, key=lambda c: (c.est_energy, c.colors))
        return Decision(best.colors, current, candidates, fail_safe=False)
    # every candidate breaches the slowdown bound (possible right after a
    # working-set shift); take the least-bad one instead of stalling
    best = min(candidates, key=lambda c: (c.delta_pct, c.colors))
    return Decision(best.colors, current, candidates, fail_safe=True)


def apply(decision: Decision, state: CacheState) -> ReconfigReport:
    """Realize a decision: drop highest-index active colors when shrinking,
    re-enable lowest-index inactive colors when growing."""
    active = sorted(state.active_colors)
    target = decision.chosen
    if target <= len(active):
        new = active[:target]
    else:
        inactive = sorted(set(range(state.geometry.color_count)) - state.active_colors)
        new = active + inactive[:target - len(active)]
    return reconfigure(state, new)
