"""Base-station power profiles, the macro-cell container and offload arithmetic.

Loads are normalized per base station (fraction of that station's resource
blocks). Traffic moved from a sleeping small cell to the macro is converted
through resource blocks, the only capacity unit shared by all station kinds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

# Absolute slack on every [0, 1] load check and on the macro capacity check.
LOAD_EPS = 1e-9


class UsageError(ValueError):
    """Invalid arguments: unknown ids, out-of-range loads, bad dimensions."""


class InfeasibleDecisionError(RuntimeError):
    """A switch decision violates the macro capacity constraint."""


class BSKind(enum.Enum):
    MACRO = "macro"
    RRH = "rrh"
    MICRO = "micro"
    PICO = "pico"
    FEMTO = "femto"

    @classmethod
    def parse(cls, name: str | BSKind) -> BSKind:
        if isinstance(name, BSKind):
            return name
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise UsageError(f"unknown base-station kind {name!r}") from None


SMALL_KINDS = (BSKind.RRH, BSKind.MICRO, BSKind.PICO, BSKind.FEMTO)


@dataclass(frozen=True)
class PowerProfile:
    p_circuit: float   # W, load-independent
    load_slope: float  # dimensionless
    p_tx: float        # W
    p_sleep: float     # W; macro never sleeps but keeps a placeholder
    n_rb: int

    def __post_init__(self):
        for name in ("p_circuit", "load_slope", "p_tx", "p_sleep", "n_rb"):
            if not getattr(self, name) > 0:
                raise UsageError(f"PowerProfile.{name} must be > 0")
        if not self.p_sleep < self.p_circuit:
            raise UsageError("PowerProfile.p_sleep must be below p_circuit")


# Table of default constants. The macro has no sleep entry, so its p_sleep is
# set to the circuit power minus one watt purely to satisfy the invariant; it
# is never read because the macro is always on.
DEFAULT_PROFILES: Mapping[BSKind, PowerProfile] = {
    BSKind.MACRO: PowerProfile(130.0, 4.7, 20.0, 129.0, 100),
    BSKind.RRH: PowerProfile(84.0, 2.8, 20.0, 56.0, 75),
    BSKind.MICRO: PowerProfile(56.0, 2.6, 6.3, 39.0, 50),
    BSKind.PICO: PowerProfile(6.8, 4.0, 0.13, 4.3, 25),
    BSKind.FEMTO: PowerProfile(4.8, 8.0, 0.05, 2.9, 15),
}


def _check_load(load: float, what: str = "load") -> None:
    if not (-LOAD_EPS <= load <= 1.0 + LOAD_EPS):
        raise UsageError(f"{what} {load!r} outside [0, 1]")


def bs_power(profile: PowerProfile, load: float, active: bool = True) -> float:
    """Power draw in watts of one base station.

    An active station draws ``p_circuit + load * load_slope * p_tx``; a sleeping
    one draws ``p_sleep`` regardless of load.
    """
    _check_load(load)
    if not active:
        return profile.p_sleep
    return profile.p_circuit + load * profile.load_slope * profile.p_tx


def rb_equivalent(load: float, profile: PowerProfile) -> float:
    """Resource blocks occupied by ``load`` on a station with ``profile``."""
    _check_load(load)
    return load * profile.n_rb


def rb_to_load(rb: float, profile: PowerProfile) -> float:
    """Inverse of :func:`rb_equivalent` for the target station."""
    return rb / profile.n_rb


@dataclass(frozen=True)
class SmallCell:
    id: int
    kind: BSKind
    profile: PowerProfile


@dataclass(frozen=True)
class MacroCell:
    """One always-on macro plus its small cells, ids dense ``0..N-1``."""

    mbs_profile: PowerProfile = DEFAULT_PROFILES[BSKind.MACRO]
    small_cells: tuple[SmallCell, ...] = ()
    mbs_max_load: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "small_cells", tuple(self.small_cells))
        if not 0.0 < self.mbs_max_load <= 1.0:
            raise UsageError("mbs_max_load must lie in (0, 1]")
        for pos, sc in enumerate(self.small_cells):
            if sc.id != pos:
                raise UsageError(f"small-cell ids must be dense 0..N-1, got {sc.id} at {pos}")
            if sc.kind is BSKind.MACRO:
                raise UsageError("a macro cannot be registered as a small cell")

    @classmethod
    def from_kinds(cls, kinds: Iterable[BSKind | str], mbs_max_load: float = 1.0,
                   profiles: Mapping[BSKind, PowerProfile] = DEFAULT_PROFILES) -> MacroCell:
        cells = []
        for i, k in enumerate(kinds):
            k = BSKind.parse(k)
            cells.append(SmallCell(i, k, profiles[k]))
        return cls(profiles[BSKind.MACRO], tuple(cells), mbs_max_load)

    @property
    def n_sbs(self) -> int:
        return len(self.small_cells)

    @property
    def kinds(self) -> tuple[BSKind, ...]:
        return tuple(sc.kind for sc in self.small_cells)

    def offload_share(self, sbs_id: int, load: float) -> float:
        """Macro load fraction added when small cell ``sbs_id`` sleeps at ``load``."""
        return rb_to_load(rb_equivalent(load, self.small_cells[sbs_id].profile), self.mbs_profile)


@dataclass(frozen=True)
class SwitchDecision:
    off_set: frozenset[int] = field(default_factory=frozenset)
    mbs_load_after: float = 0.0

    @property
    def n_off(self) -> int:
        return len(self.off_set)


def _check_inputs(cell: MacroCell, sbs_loads: Sequence[float], mbs_load: float) -> None:
    if len(sbs_loads) != cell.n_sbs:
        raise UsageError(f"expected {cell.n_sbs} small-cell loads, got {len(sbs_loads)}")
    for j, x in enumerate(sbs_loads):
        _check_load(x, f"small cell {j} load")
    _check_load(mbs_load, "macro load")


def offload(off_ids: Iterable[int], sbs_loads: Sequence[float], mbs_load: float,
            cell: MacroCell) -> SwitchDecision | None:
    """Move the traffic of ``off_ids`` onto the macro.

    Returns ``None`` when the macro would exceed ``cell.mbs_max_load``.
    """
    _check_inputs(cell, sbs_loads, mbs_load)
    off = frozenset(off_ids)
    for j in off:
        if not (isinstance(j, int) and 0 <= j < cell.n_sbs):
            raise UsageError(f"unknown small-cell id {j!r}")
    after = mbs_load
    for j in sorted(off):
        after += cell.offload_share(j, sbs_loads[j])
    if after > cell.mbs_max_load + LOAD_EPS:
        return None
    return SwitchDecision(off, after)


def is_feasible(decision: SwitchDecision, cell: MacroCell) -> bool:
    return decision.mbs_load_after <= cell.mbs_max_load + LOAD_EPS


def cell_power(cell: MacroCell, sbs_loads: Sequence[float], decision: SwitchDecision) -> float:
    """Total macro-cell power in watts under ``decision``.

    Sums the macro at its post-offload load, then each small cell in id order.
    """
    if not is_feasible(decision, cell):
        raise InfeasibleDecisionError(
            f"macro load {decision.mbs_load_after:.6f} exceeds {cell.mbs_max_load}")
    if len(sbs_loads) != cell.n_sbs:
        raise UsageError(f"expected {cell.n_sbs} small-cell loads, got {len(sbs_loads)}")
    total = bs_power(cell.mbs_profile, decision.mbs_load_after, True)
    for sc in cell.small_cells:
        total += bs_power(sc.profile, sbs_loads[sc.id], sc.id not in decision.off_set)
    return total


def served_rb(cell: MacroCell, sbs_loads: Sequence[float], decision: SwitchDecision) -> float:
    """Traffic carried by every active station, in resource blocks."""
    if not is_feasible(decision, cell):
        raise InfeasibleDecisionError(
            f"macro load {decision.mbs_load_after:.6f} exceeds {cell.mbs_max_load}")
    total = decision.mbs_load_after * cell.mbs_profile.n_rb
    for sc in cell.small_cells:
        if sc.id not in decision.off_set:
            total += rb_equivalent(sbs_loads[sc.id], sc.profile)
    return total
