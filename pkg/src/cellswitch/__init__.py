"""Energy-aware small-cell switching for a single macro cell."""

from .clustering import Clustering, elbow_k, kmeans, sse
from .metrics import RunReport, avg_throughput, co2_saved, energy_saved
from .netmodel import (
    DEFAULT_PROFILES,
    BSKind,
    InfeasibleDecisionError,
    MacroCell,
    PowerProfile,
    SwitchDecision,
    UsageError,
    bs_power,
    cell_power,
    offload,
    rb_equivalent,
)
from .switching import PolicyInput, PolicyOutput, aao, es_switch, mlc_switch, thesis_switch
from .traffic import GridMapping, TrafficTrace, ingest_cdr, synth_trace

__version__ = "0.1.0"
