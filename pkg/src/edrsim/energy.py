"""Memory-subsystem energy model.

Per-interval energy is the sum of L2 leakage (scaled by the active fraction),
L2 dynamic (a miss costs twice a hit), L2 refresh (one access-energy per
refreshed line), DRAM leakage + dynamic, and the reconfiguration overhead
(block power transitions plus the profiling units). All accumulation is in
joules; nJ/pJ conversion happens once when parameters are constructed.
"""

from dataclasses import dataclass
from enum import Enum

NANO = 1e-9
PICO = 1e-12


class SchemeKind(Enum):
    BASELINE_EDRAM = "baseline_edram"
    SRAM = "sram"
    RPV = "rpv"
    DCR = "dcr"


class EnergyParamsError(ValueError):
    pass


@dataclass
class EnergyParams:
    """Technology constants. Energies are per access (nJ except e_transition,
    which is pJ per block power transition); leakages are watts."""

    e_dyn_l2: float
    p_leak_l2: float
    e_dyn_dram: float
    p_leak_dram: float
    e_transition: float
    e_dyn_prof: float
    p_leak_prof: float
    clock_ghz: float

    def __post_init__(self):
        for name in ("e_dyn_l2", "p_leak_l2", "e_dyn_dram", "p_leak_dram",
                     "e_transition", "e_dyn_prof", "p_leak_prof"):
            if getattr(self, name) < 0:
                raise EnergyParamsError(f"{name} must be >= 0")
        if self.clock_ghz <= 0:
            raise EnergyParamsError("clock_ghz must be > 0")
        # joule-denominated copies, converted exactly once
        self.e_dyn_l2_j = self.e_dyn_l2 * NANO
        self.e_dyn_dram_j = self.e_dyn_dram * NANO
        self.e_transition_j = self.e_transition * PICO
        self.e_dyn_prof_j = self.e_dyn_prof * NANO


# 45 nm, 2 MB, 1 MB banks; eDRAM access energy matches SRAM, leakage is 1/8th
_BUILTIN = {
    "SRAM_2MB": dict(e_dyn_l2=0.648, p_leak_l2=1.296),
    "EDRAM_2MB": dict(e_dyn_l2=0.648, p_leak_l2=1.296 / 8),
}
_COMMON = dict(e_dyn_dram=70.0, p_leak_dram=0.18, e_transition=2.0,
               e_dyn_prof=0.0031, p_leak_prof=0.0050)


def builtin_params(technology: str, clock_ghz: float = 2.2) -> EnergyParams:
    """Named parameter sets for the 2 MB SRAM and eDRAM configurations."""
    if technology not in _BUILTIN:
        raise EnergyParamsError(
            f"unknown technology {technology!r}; have {sorted(_BUILTIN)}")
    return EnergyParams(**_BUILTIN[technology], **_COMMON, clock_ghz=clock_ghz)


@dataclass
class EnergyBreakdown:
    le_l2: float
    de_l2: float
    re_l2: float
    e_dram: float
    e_algo: float
    e_prof: float
    total: float


def interval_energy(stats, params: EnergyParams, scheme: SchemeKind) -> EnergyBreakdown:
    """Energy of one finished interval, in joules.

    The baseline eDRAM, SRAM and polyphase schemes run the whole cache with
    no algorithm overhead (F_A = 1, E_algo = 0); SRAM never refreshes.
    """
    t = stats.elapsed_cycles / (params.clock_ghz * 1e9)
    f_a = stats.active_fraction if scheme is SchemeKind.DCR else 1.0
    n_r = 0 if scheme is SchemeKind.SRAM else stats.refreshed_lines

    le_l2 = params.p_leak_l2 * f_a * t
    de_l2 = params.e_dyn_l2_j * (2 * stats.l2_misses + stats.l2_hits)
    re_l2 = n_r * params.e_dyn_l2_j
    e_dram = params.p_leak_dram * t + params.e_dyn_dram_j * stats.dram_accesses
    if scheme is SchemeKind.DCR:
        e_prof = params.p_leak_prof * t + params.e_dyn_prof_j * stats.prof_accesses
        e_algo = params.e_transition_j * stats.switched_blocks + e_prof
    else:
        e_prof = 0.0
        e_algo = 0.0
    total = le_l2 + de_l2 + re_l2 + e_dram + e_algo
    return EnergyBreakdown(le_l2, de_l2, re_l2, e_dram, e_algo, e_prof, total)


@dataclass
class CandidateEstimates:
    """Profiler-derived inputs for scoring one candidate allocation."""

    est_m_l2: float
    est_h_l2: float
    est_n_r: float
    t_cycles: float
    est_a_dram: float
    b_blocks: int
    est_a_prof: float = 0.0


def predict_energy(colors: int, total_colors: int, ests: CandidateEstimates,
                   params: EnergyParams) -> float:
    """Predicted next-interval energy for a candidate color count, in joules."""
    if not 1 <= colors <= total_colors:
        raise ValueError(f"colors must be in [1, {total_colors}]")
    t = ests.t_cycles / (params.clock_ghz * 1e9)
    f_a = colors / total_colors
    le_l2 = params.p_leak_l2 * f_a * t
    de_l2 = params.e_dyn_l2_j * (2 * ests.est_m_l2 + ests.est_h_l2)
    re_l2 = ests.est_n_r * params.e_dyn_l2_j
    e_dram = params.p_leak_dram * t + params.e_dyn_dram_j * ests.est_a_dram
    e_prof = params.p_leak_prof * t + params.e_dyn_prof_j * ests.est_a_prof
    e_algo = params.e_transition_j * ests.b_blocks + e_prof
    return le_l2 + de_l2 + re_l2 + e_dram + e_algo
