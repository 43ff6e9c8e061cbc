"""Set-sampled profiling units and per-interval statistics.

Five tag-only LRU units emulate conventional caches of size X, X/2, X/4, X/8
and X/16 (X = the main cache size) and count misses and load misses on a
sampled subset of sets. All units sample the same set residues so the LRU
stacks stay comparable across sizes. Estimates for intermediate sizes are
interpolated log-linearly between the profiled points.
"""

import math
from dataclasses import dataclass

from .cache import CacheGeometry, lines_at
from .refresh import RefreshConfig

PROFILED_FRACTIONS = (1, 2, 4, 8, 16)  # size = X / fraction


@dataclass
class IntervalStats:
    """Counters accumulated over one controller interval."""

    instructions: int = 0
    l2_hits: int = 0
    l2_misses: int = 0
    load_misses: int = 0
    memory_stall_cycles: int = 0
    refreshed_lines: int = 0
    dram_accesses: int = 0
    active_fraction: float = 1.0
    elapsed_cycles: int = 0
    switched_blocks: int = 0
    prof_accesses: int = 0


class ProfilingUnit:
    """Tag-only LRU emulation of one cache size on sampled sets."""

    def __init__(self, emulated_size: int, geometry: CacheGeometry,
                 sample_ratio_denom: int = 64):
        self.emulated_size = emulated_size
        self.associativity = geometry.associativity
        self.num_sets = emulated_size // (geometry.block_bytes * geometry.associativity)
        if self.num_sets < 1:
            raise ValueError(f"emulated size {emulated_size} too small")
        if self.num_sets % sample_ratio_denom:
            raise ValueError(
                f"sampling 1/{sample_ratio_denom} must divide {self.num_sets} sets")
        self.sample_ratio_denom = sample_ratio_denom
        self.block_bytes = geometry.block_bytes
        # sampled sets are the residue-0 sets; tags keyed by set index, MRU last
        self.tags: dict[int, list[int]] = {
            s: [] for s in range(0, self.num_sets, sample_ratio_denom)}
        self.misses = 0
        self.load_misses = 0
        self.accesses = 0

    @property
    def sampled_set_count(self) -> int:
        return len(self.tags)

    def probe(self, block: int, is_write: bool) -> None:
        set_index = block % self.num_sets
        lst = self.tags.get(set_index)
        if lst is None:
            return
        self.accesses += 1
        if block in lst:
            lst.remove(block)
            lst.append(block)
            return
        self.misses += 1
        if not is_write:
            self.load_misses += 1
        lst.append(block)
        if len(lst) > self.associativity:
            lst.pop(0)

    def reset_counters(self) -> None:
        self.misses = 0
        self.load_misses = 0
        self.accesses = 0


def make_units(geometry: CacheGeometry, sample_ratio_denom: int = 64) -> list[ProfilingUnit]:
    """Build the five standard units (X down to X/16)."""
    return [ProfilingUnit(geometry.size_bytes // f, geometry, sample_ratio_denom)
            for f in PROFILED_FRACTIONS]


def observe(units: list[ProfilingUnit], op_is_write: bool, address: int) -> None:
    """Feed one access to every unit (each applies its own set sampling)."""
    block = address // units[0].block_bytes
    for unit in units:
        unit.probe(block, op_is_write)


def observe_arrays(units: list[ProfilingUnit], arrays) -> None:
    """Bulk observe; same counts as calling observe() per record.

    When every unit's set count is a multiple of the sampling denominator the
    sampling predicate collapses to `block % denom == 0`, shared by all units,
    so unsampled records can be skipped wholesale.
    """
    import numpy as np

    denom = units[0].sample_ratio_denom
    block_bytes = units[0].block_bytes
    blocks = arrays.addrs // np.uint64(block_bytes)
    shared = all(u.num_sets % denom == 0 for u in units)
    if shared and denom > 1:
        sampled = blocks % np.uint64(denom) == 0
        blocks = blocks[sampled]
        ops = arrays.ops[sampled]
    else:
        ops = arrays.ops
    for block, op in zip(blocks.tolist(), ops.tolist()):
        is_write = bool(op)
        for unit in units:
            unit.probe(block, is_write)


def reset_interval(units: list[ProfilingUnit], stats: IntervalStats | None = None) -> None:
    """Zero the interval counters; tag arrays persist (warm profiler)."""
    for unit in units:
        unit.reset_counters()
    if stats is not None:
        for name in ("instructions", "l2_hits", "l2_misses", "load_misses",
                     "memory_stall_cycles", "refreshed_lines", "dram_accesses",
                     "elapsed_cycles", "switched_blocks", "prof_accesses"):
            setattr(stats, name, 0)


def profiler_overhead_bytes(units: list[ProfilingUnit], tag_bits: int = 30) -> float:
    """Storage footprint of all units (tags only; no data is stored)."""
    total_bits = sum(u.sampled_set_count * u.associativity * tag_bits for u in units)
    return total_bits / 8.0


def estimate_misses(units: list[ProfilingUnit], colors: int,
                    geometry: CacheGeometry) -> tuple[float, float]:
    """Estimated (misses, load misses) for a cache of `colors` colors.

    Exact at the five profiled sizes; log-linear in size between them; sizes
    below the smallest unit clamp to its estimate. Counts are scaled by the
    sampling ratio.
    """
    m_total = geometry.color_count
    if not 1 <= colors <= m_total:
        raise ValueError(f"colors must be in [1, {m_total}]")
    size = colors * geometry.size_bytes / m_total
    points = sorted(units, key=lambda u: u.emulated_size)
    scale = points[0].sample_ratio_denom

    def scaled(u):
        return u.misses * scale, u.load_misses * scale

    if size <= points[0].emulated_size:
        return scaled(points[0])
    for unit in points:
        if size == unit.emulated_size:
            return scaled(unit)
    if size >= points[-1].emulated_size:
        return scaled(points[-1])
    for lo, hi in zip(points, points[1:]):
        if lo.emulated_size < size < hi.emulated_size:
            t = ((math.log2(size) - math.log2(lo.emulated_size))
                 / (math.log2(hi.emulated_size) - math.log2(lo.emulated_size)))
            lo_m, lo_l = scaled(lo)
            hi_m, hi_l = scaled(hi)
            return lo_m + t * (hi_m - lo_m), lo_l + t * (hi_l - lo_l)
    raise AssertionError("unreachable")


def estimate_time(stats: IntervalStats, est_load_misses: float) -> float:
    """Interval-time estimate: memory stall cycles scale linearly with load misses."""
    if stats.load_misses > 0:
        stall_per_load_miss = stats.memory_stall_cycles / stats.load_misses
    else:
        stall_per_load_miss = 0.0
    compute = stats.elapsed_cycles - stats.memory_stall_cycles
    return compute + stall_per_load_miss * est_load_misses


def estimate_refreshes(n_valid: int, colors: int, geometry: CacheGeometry,
                       t_cycles: float, config: RefreshConfig) -> int:
    """Lines refreshed over an interval of t_cycles at the given allocation."""
    if t_cycles <= 0:
        raise ValueError("t_cycles must be > 0")
    per_period = min(n_valid, lines_at(geometry, colors))
    periods = int(t_cycles // config.retention_cycles)
    return per_period * periods
