"""edrsim: trace-driven energy simulator for eDRAM last-level caches.

Models a set-associative colored LLC under four energy schemes (refresh-all
eDRAM baseline, SRAM, polyphase-valid refresh, and dynamic cache
reconfiguration with valid-only refresh) with a cycle-accounting timing model
and a per-interval energy model.
"""

__version__ = "0.1.0"
