"""Memory-access traces: record model, binary/CSV file formats, synthetic generators.

Traces carry raw LLC-level accesses (no L1 filtering is simulated; the
generator's accesses_per_kilo_instr knob stands in for L1 intensity).
Instruction positions are stored as deltas so phases concatenate trivially.
"""

import struct
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

MAGIC = b"EDRTRACE"
FORMAT_VERSION = 1

# instr_gap: u32, op: u8, 3 pad bytes, address: u64 -- 16 bytes, little endian
_RECORD = struct.Struct("<IB3xQ")
# magic, version: u32, record_count: u64, page_size_bytes: u32, desc_len: u32
_HEADER = struct.Struct("<8sIQII")

_RECORD_DTYPE = np.dtype([("gap", "<u4"), ("op", "u1"), ("pad", "V3"), ("addr", "<u8")])


class TraceError(ValueError):
    """Malformed trace input (bad magic, truncation, unparsable CSV line)."""


class Op(IntEnum):
    READ = 0
    WRITE = 1


@dataclass(slots=True)
class TraceRecord:
    """One memory access: instructions elapsed since the previous record,
    read/write, and a full byte address."""

    instr_gap: int
    op: Op
    address: int

    def __post_init__(self):
        if self.instr_gap < 0:
            raise TraceError("instr_gap must be >= 0")
        if not 0 <= self.address < 2**64:
            raise TraceError("address must fit in 64 bits")


@dataclass
class TraceHeader:
    version: int = FORMAT_VERSION
    record_count: int = 0
    page_size_bytes: int = 4096
    description: str = ""

    def __post_init__(self):
        p = self.page_size_bytes
        if p <= 0 or p & (p - 1):
            raise TraceError(f"page_size_bytes must be a power of two, got {p}")


@dataclass
class TraceArrays:
    """Column-wise in-memory trace; the representation the simulator replays.

    Semantically identical to a sequence of TraceRecord but without
    per-record object overhead.
    """

    gaps: np.ndarray  # u32
    ops: np.ndarray  # u8 (Op values)
    addrs: np.ndarray  # u64

    def __post_init__(self):
        n = len(self.gaps)
        if len(self.ops) != n or len(self.addrs) != n:
            raise TraceError("trace columns must have equal length")

    def __len__(self):
        return len(self.gaps)

    @property
    def instructions(self) -> int:
        return int(self.gaps.sum())

    def records(self):
        """Iterate as TraceRecord objects."""
        for g, o, a in zip(self.gaps.tolist(), self.ops.tolist(), self.addrs.tolist()):
            yield TraceRecord(g, Op(o), a)

    @staticmethod
    def from_records(records) -> "TraceArrays":
        recs = list(records)
        return TraceArrays(
            gaps=np.array([r.instr_gap for r in recs], dtype=np.uint32),
            ops=np.array([int(r.op) for r in recs], dtype=np.uint8),
            addrs=np.array([r.address for r in recs], dtype=np.uint64),
        )


@dataclass
class PhaseSpec:
    """One program phase for the synthetic generator."""

    instructions: int
    working_set_bytes: int
    write_fraction: float = 0.0
    reuse_locality: float = 0.0

    def __post_init__(self):
        if self.instructions <= 0:
            raise TraceError("phase instructions must be > 0")
        if self.working_set_bytes <= 0:
            raise TraceError("phase working_set_bytes must be > 0")
        if not 0.0 <= self.write_fraction <= 1.0:
            raise TraceError("write_fraction must be in [0, 1]")
        if not 0.0 <= self.reuse_locality <= 1.0:
            raise TraceError("reuse_locality must be in [0, 1]")


@dataclass
class SyntheticTraceSpec:
    phases: list[PhaseSpec] = field(default_factory=list)
    rng_seed: int = 0
    accesses_per_kilo_instr: float = 20.0
    block_bytes: int = 64

    def __post_init__(self):
        if not self.phases:
            raise TraceError("synthetic spec needs at least one phase")
        if self.accesses_per_kilo_instr <= 0:
            raise TraceError("accesses_per_kilo_instr must be > 0")
        b = self.block_bytes
        if b <= 0 or b & (b - 1):
            raise TraceError("block_bytes must be a power of two")


def _pack_header(header: TraceHeader) -> bytes:
    desc = header.description.encode("utf-8")
    return _HEADER.pack(MAGIC, header.version, header.record_count,
                        header.page_size_bytes, len(desc)) + desc


def write_trace(records, header: TraceHeader, sink) -> int:
    """Write header + fixed-width records to a binary stream.

    Returns the number of bytes written. header.record_count must match the
    number of records.
    """
    hdr = _pack_header(header)
    sink.write(hdr)
    written = len(hdr)
    count = 0
    pack = _RECORD.pack
    for rec in records:
        sink.write(pack(rec.instr_gap, int(rec.op), rec.address))
        written += _RECORD.size
        count += 1
    if count != header.record_count:
        raise TraceError(
            f"header says {header.record_count} records, wrote {count}")
    return written


def write_trace_arrays(arrays: TraceArrays, header: TraceHeader, sink) -> int:
    """Bulk writer; emits bytes identical to write_trace on the same records."""
    if header.record_count != len(arrays):
        raise TraceError(
            f"header says {header.record_count} records, have {len(arrays)}")
    hdr = _pack_header(header)
    out = np.zeros(len(arrays), dtype=_RECORD_DTYPE)
    out["gap"] = arrays.gaps
    out["op"] = arrays.ops
    out["addr"] = arrays.addrs
    body = out.tobytes()
    sink.write(hdr)
    sink.write(body)
    return len(hdr) + len(body)


def _read_header(source) -> TraceHeader:
    raw = source.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise TraceError("truncated trace header")
    magic, version, count, page, desc_len = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise TraceError(f"bad magic {magic!r}, expected {MAGIC!r}")
    desc = source.read(desc_len)
    if len(desc) < desc_len:
        raise TraceError("truncated trace description")
    return TraceHeader(version=version, record_count=count,
                       page_size_bytes=page, description=desc.decode("utf-8"))


def read_trace(source):
    """Read a binary trace. Returns (header, lazy record iterator)."""
    header = _read_header(source)

    def _records():
        unpack = _RECORD.unpack
        for i in range(header.record_count):
            raw = source.read(_RECORD.size)
            if len(raw) < _RECORD.size:
                raise TraceError(f"truncated record at index {i}")
            gap, op, addr = unpack(raw)
            yield TraceRecord(gap, Op(op), addr)

    return header, _records()


def read_trace_arrays(source) -> tuple[TraceHeader, TraceArrays]:
    """Bulk reader; semantically identical to read_trace."""
    header = _read_header(source)
    body = source.read(header.record_count * _RECORD.size)
    if len(body) < header.record_count * _RECORD.size:
        got = len(body) // _RECORD.size
        raise TraceError(f"truncated record at index {got}")
    raw = np.frombuffer(body, dtype=_RECORD_DTYPE, count=header.record_count)
    return header, TraceArrays(gaps=raw["gap"].copy(), ops=raw["op"].copy(),
                               addrs=raw["addr"].copy())


def read_csv_trace(source):
    """Parse `instr_gap,op,hex_address` lines (op R or W, # comments skipped)."""
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise TraceError(f"line {lineno}: expected 3 fields, got {len(parts)}")
        gap_s, op_s, addr_s = (p.strip() for p in parts)
        try:
            gap = int(gap_s)
            addr = int(addr_s, 16)
        except ValueError as exc:
            raise TraceError(f"line {lineno}: {exc}") from None
        if op_s == "R":
            op = Op.READ
        elif op_s == "W":
            op = Op.WRITE
        else:
            raise TraceError(f"line {lineno}: op must be R or W, got {op_s!r}")
        yield TraceRecord(gap, op, addr)


_REUSE_WINDOW = 32
# phases live 2^26 blocks (4 GiB at 64 B blocks) apart so their footprints
# never overlap
_PHASE_STRIDE_BLOCKS = 1 << 26


def generate_synthetic(spec: SyntheticTraceSpec) -> TraceArrays:
    """Generate a deterministic trace from a phase-structured spec.

    Each phase draws block addresses from its own working set; with
    probability reuse_locality a recently touched block is re-touched.
    Identical spec + seed reproduce the trace exactly.
    """
    rng = np.random.default_rng(spec.rng_seed)
    block = spec.block_bytes
    gap_chunks = []
    op_chunks = []
    addr_chunks = []

    for phase_idx, phase in enumerate(spec.phases):
        n = max(1, round(phase.instructions * spec.accesses_per_kilo_instr / 1000.0))
        # spread the phase's instructions evenly over its records
        edges = (np.arange(1, n + 1, dtype=np.uint64) * phase.instructions) // n
        gaps = np.diff(edges, prepend=np.uint64(0)).astype(np.uint32)

        ws_blocks = -(-phase.working_set_bytes // block)  # ceil
        base_block = phase_idx * _PHASE_STRIDE_BLOCKS
        uniform = rng.integers(0, ws_blocks, size=n, dtype=np.int64)
        reuse = rng.random(n) < phase.reuse_locality
        widx = rng.integers(0, _REUSE_WINDOW, size=n, dtype=np.int64)
        writes = rng.random(n) < phase.write_fraction

        if phase.reuse_locality == 0.0:
            blocks = uniform
        else:
            blocks = np.empty(n, dtype=np.int64)
            window = [0] * _REUSE_WINDOW
            filled = 0
            wpos = 0
            u_list = uniform.tolist()
            r_list = reuse.tolist()
            w_list = widx.tolist()
            out = blocks  # local alias
            for j in range(n):
                if r_list[j] and filled:
                    b = window[w_list[j] % filled]
                else:
                    b = u_list[j]
                out[j] = b
                window[wpos] = b
                wpos = (wpos + 1) % _REUSE_WINDOW
                if filled < _REUSE_WINDOW:
                    filled += 1

        addrs = (blocks.astype(np.uint64) + np.uint64(base_block)) * np.uint64(block)
        gap_chunks.append(gaps)
        op_chunks.append(writes.astype(np.uint8))
        addr_chunks.append(addrs)

    return TraceArrays(gaps=np.concatenate(gap_chunks),
                       ops=np.concatenate(op_chunks),
                       addrs=np.concatenate(addr_chunks))
