"""Set-associative colored LLC model.

The cache is split into M equally sized colors; memory regions (page number
mod M) map onto the currently active colors through a mapping table.
Shrinking the active set flushes the dropped colors and remaps their regions;
growing rebalances regions onto the new colors. A valid line is always
reachable through the current mapping: whenever a region is remapped, its
resident lines are flushed (dirty ones counted as writebacks), which keeps
lookups consistent and the per-bank valid counters exact.
"""

from dataclasses import dataclass

from .trace import Op, TraceRecord


class GeometryError(ValueError):
    pass


class ReconfigError(ValueError):
    pass


def _is_pow2(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0


@dataclass(frozen=True)
class CacheGeometry:
    """Cache shape: total size, ways, block size, page size, bank size."""

    size_bytes: int
    associativity: int
    block_bytes: int = 64
    page_bytes: int = 4096
    bank_bytes: int = 1 << 20

    def __post_init__(self):
        for name in ("size_bytes", "associativity", "block_bytes", "page_bytes",
                     "bank_bytes"):
            if not _is_pow2(getattr(self, name)):
                raise GeometryError(f"{name} must be a power of two")
        if not self.size_bytes >= self.bank_bytes >= self.block_bytes:
            raise GeometryError("need size_bytes >= bank_bytes >= block_bytes")
        if self.page_bytes < self.block_bytes:
            raise GeometryError("page_bytes must be >= block_bytes")
        denom = self.page_bytes * self.associativity
        if self.size_bytes % denom:
            raise GeometryError("color count is not integral")
        if self.size_bytes // denom < 2:
            raise GeometryError(
                f"need at least 2 colors, got {self.size_bytes // denom}")

    @property
    def color_count(self) -> int:
        return self.size_bytes // (self.page_bytes * self.associativity)

    @property
    def total_lines(self) -> int:
        return self.size_bytes // self.block_bytes

    @property
    def total_sets(self) -> int:
        return self.total_lines // self.associativity

    @property
    def sets_per_color(self) -> int:
        # equals blocks-per-page: the page offset selects the set inside a color
        return self.page_bytes // self.block_bytes

    @property
    def lines_per_color(self) -> int:
        return self.total_lines // self.color_count

    @property
    def num_banks(self) -> int:
        return self.size_bytes // self.bank_bytes

    @property
    def sets_per_bank(self) -> int:
        return self.total_sets // self.num_banks


def color_count(geometry: CacheGeometry) -> int:
    """Maximum number of colors supported by a geometry."""
    return geometry.color_count


def lines_at(geometry: CacheGeometry, colors: int) -> int:
    """Total cache lines available when `colors` colors are active."""
    if not 1 <= colors <= geometry.color_count:
        raise GeometryError(f"colors must be in [1, {geometry.color_count}]")
    return colors * geometry.lines_per_color


@dataclass(frozen=True)
class PhaseClock:
    """Maps cycles to retention-phase indices (used by the polyphase policy)."""

    cycles_per_phase: int
    phases: int

    def phase_of(self, cycle: int) -> int:
        return (cycle // self.cycles_per_phase) % self.phases


@dataclass(slots=True)
class CacheLine:
    valid: bool = False
    dirty: bool = False
    tag: int = 0
    recency: int = 0
    last_update_phase: int | None = None


@dataclass(slots=True)
class AccessResult:
    hit: bool
    evicted_dirty: bool
    is_load_miss: bool
    set_index: int
    way: int


@dataclass
class ReconfigReport:
    flushed_lines: int
    writebacks: int
    switched_blocks: int


class CacheState:
    """Mutable cache state owned by a single simulation instance."""

    def __init__(self, geometry: CacheGeometry, active_colors=None,
                 phase_clock: PhaseClock | None = None, min_colors: int = 1):
        self.geometry = geometry
        self.phase_clock = phase_clock
        self.min_colors = min_colors
        m_total = geometry.color_count
        if active_colors is None:
            active = list(range(m_total))
        else:
            active = sorted(set(active_colors))
            if not active or active[0] < 0 or active[-1] >= m_total:
                raise ReconfigError("active colors out of range")
            if len(active) < min_colors:
                raise ReconfigError(
                    f"need at least {min_colors} active colors")
        self.active_colors: set[int] = set(active)
        # balanced initial mapping: region i -> i-th active color, cycling
        self.mapping: list[int] = [active[i % len(active)] for i in range(m_total)]
        self.sets: list[list[CacheLine]] = [
            [CacheLine() for _ in range(geometry.associativity)]
            for _ in range(geometry.total_sets)
        ]
        self.n_valid = 0
        self.valid_by_bank = [0] * geometry.num_banks
        k = phase_clock.phases if phase_clock else 1
        self.valid_by_bank_phase = [[0] * k for _ in range(geometry.num_banks)]
        self._access_counter = 0
        self._blocks_per_page = geometry.page_bytes // geometry.block_bytes

    @property
    def active_count(self) -> int:
        return len(self.active_colors)

    def bank_of_set(self, set_index: int) -> int:
        return set_index // self.geometry.sets_per_bank

    def region_of_tag(self, tag: int) -> int:
        # tags are full block numbers, so the region is recoverable
        return (tag // self._blocks_per_page) % self.geometry.color_count


def locate(state: CacheState, address: int) -> tuple[int, int, int]:
    """Resolve an address to (color, global set index, tag).

    The region is the page number mod M; the mapping table picks its color;
    the page offset selects the set inside the color. Pure in (mapping, address).
    """
    g = state.geometry
    page = address // g.page_bytes
    region = page % g.color_count
    color = state.mapping[region]
    within = (address % g.page_bytes) // g.block_bytes
    set_index = color * g.sets_per_color + within
    tag = address // g.block_bytes
    return color, set_index, tag


def access(state: CacheState, record: TraceRecord, now_cycle: int) -> AccessResult:
    """Apply one access: LRU probe/fill with valid/dirty/phase bookkeeping."""
    return access_block(state, record.op == Op.WRITE, record.address, now_cycle)


def access_block(state: CacheState, is_write: bool, address: int,
                 now_cycle: int) -> AccessResult:
    """Object-free core of access(); the replay loop calls this directly."""
    color, set_index, tag = locate(state, address)
    if color not in state.active_colors:
        raise AssertionError(
            f"mapping routed address {address:#x} to inactive color {color}")
    ways = state.sets[set_index]
    state._access_counter += 1
    stamp = state._access_counter
    clock = state.phase_clock
    phase = clock.phase_of(now_cycle) if clock else None
    bank = set_index // state.geometry.sets_per_bank

    victim = None
    victim_way = -1
    for way, line in enumerate(ways):
        if line.valid and line.tag == tag:
            line.recency = stamp
            if is_write:
                line.dirty = True
            if phase is not None and line.last_update_phase != phase:
                state.valid_by_bank_phase[bank][line.last_update_phase] -= 1
                state.valid_by_bank_phase[bank][phase] += 1
                line.last_update_phase = phase
            return AccessResult(True, False, False, set_index, way)
        if victim is None and not line.valid:
            victim = line
            victim_way = way

    if victim is None:  # all valid: evict least-recent
        victim_way = 0
        victim = ways[0]
        for way in range(1, len(ways)):
            if ways[way].recency < victim.recency:
                victim = ways[way]
                victim_way = way

    evicted_dirty = False
    if victim.valid:
        evicted_dirty = victim.dirty
        state.n_valid -= 1
        state.valid_by_bank[bank] -= 1
        if victim.last_update_phase is not None:
            state.valid_by_bank_phase[bank][victim.last_update_phase] -= 1

    victim.valid = True
    victim.dirty = is_write
    victim.tag = tag
    victim.recency = stamp
    victim.last_update_phase = phase
    state.n_valid += 1
    state.valid_by_bank[bank] += 1
    if phase is not None:
        state.valid_by_bank_phase[bank][phase] += 1
    return AccessResult(False, evicted_dirty, not is_write, set_index, victim_way)


def _flush_line(state: CacheState, set_index: int, line: CacheLine) -> bool:
    """Invalidate one valid line; returns True if it was dirty."""
    bank = set_index // state.geometry.sets_per_bank
    state.n_valid -= 1
    state.valid_by_bank[bank] -= 1
    if line.last_update_phase is not None:
        state.valid_by_bank_phase[bank][line.last_update_phase] -= 1
    dirty = line.dirty
    line.valid = False
    line.dirty = False
    line.last_update_phase = None
    return dirty


def _flush_color(state: CacheState, color: int) -> tuple[int, int]:
    g = state.geometry
    flushed = writebacks = 0
    start = color * g.sets_per_color
    for set_index in range(start, start + g.sets_per_color):
        for line in state.sets[set_index]:
            if line.valid:
                flushed += 1
                if _flush_line(state, set_index, line):
                    writebacks += 1
    return flushed, writebacks


def _flush_region_from_color(state: CacheState, region: int, color: int) -> tuple[int, int]:
    g = state.geometry
    flushed = writebacks = 0
    start = color * g.sets_per_color
    for set_index in range(start, start + g.sets_per_color):
        for line in state.sets[set_index]:
            if line.valid and state.region_of_tag(line.tag) == region:
                flushed += 1
                if _flush_line(state, set_index, line):
                    writebacks += 1
    return flushed, writebacks


def reconfigure(state: CacheState, new_colors) -> ReconfigReport:
    """Switch the active color set; flush and remap as needed.

    Deactivated colors are flushed wholesale and their regions re-spread
    round-robin over the surviving colors (ascending). Newly activated colors
    pull regions from the most loaded colors until they reach the balanced
    share; pulled regions are flushed from their old color so no stale line
    outlives its mapping entry.
    """
    g = state.geometry
    m_total = g.color_count
    new = sorted(set(new_colors))
    if not new or new[0] < 0 or new[-1] >= m_total:
        raise ReconfigError("new colors out of range")
    if len(new) < state.min_colors:
        raise ReconfigError(
            f"cannot go below {state.min_colors} colors (asked {len(new)})")
    new_set = set(new)
    deactivated = state.active_colors - new_set
    activated = new_set - state.active_colors

    flushed = writebacks = 0

    # 1. flush everything in colors being turned off
    for color in sorted(deactivated):
        f, w = _flush_color(state, color)
        flushed += f
        writebacks += w

    # 2. orphaned regions go round-robin over the new active set
    rr = 0
    for region in range(m_total):
        if state.mapping[region] in deactivated:
            state.mapping[region] = new[rr % len(new)]
            rr += 1

    # 3. rebalance onto newly activated colors
    if activated:
        counts = {c: 0 for c in new}
        for region in range(m_total):
            counts[state.mapping[region]] += 1
        target = m_total // len(new)
        regions_of = {c: [] for c in new}
        for region in range(m_total):
            regions_of[state.mapping[region]].append(region)
        for color in sorted(activated):
            while counts[color] < target:
                donor = max(counts, key=lambda c: (counts[c], -c))
                if counts[donor] <= counts[color]:
                    break
                region = regions_of[donor].pop()  # highest region index
                f, w = _flush_region_from_color(state, region, donor)
                flushed += f
                writebacks += w
                state.mapping[region] = color
                regions_of[color].append(region)
                counts[donor] -= 1
                counts[color] += 1

    switched = (len(deactivated) + len(activated)) * g.lines_per_color
    state.active_colors = new_set
    return ReconfigReport(flushed_lines=flushed, writebacks=writebacks,
                          switched_blocks=switched)
