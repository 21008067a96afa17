"""Traffic traces: CDR grid ingestion and seeded synthetic diurnal load."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .netmodel import LOAD_EPS, BSKind, MacroCell, UsageError

DEFAULT_SLOT_MINUTES = 10
DAY_MINUTES = 24 * 60
CDR_HEADER = ("grid_id", "slot_index", "activity")
TRACE_HEADER = ("slot", "bs_id", "load")
NORMALIZATION_RULE = "per-station peak: series / max(series)"


class FormatError(ValueError):
    """Malformed trace or CDR input."""


@dataclass(frozen=True)
class TrafficTrace:
    slot_minutes: int
    mbs_load: np.ndarray   # (K,)
    sbs_loads: np.ndarray  # (K, N)
    metadata: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        mbs = np.array(self.mbs_load, dtype=float)
        sbs = np.array(self.sbs_loads, dtype=float)
        if sbs.ndim == 1 and sbs.size == 0:
            sbs = sbs.reshape(len(mbs), 0)
        if mbs.ndim != 1 or sbs.ndim != 2 or sbs.shape[0] != mbs.shape[0]:
            raise UsageError(f"trace shapes disagree: mbs {mbs.shape}, sbs {sbs.shape}")
        if len(mbs) == 0:
            raise UsageError("trace needs at least one slot")
        if self.slot_minutes <= 0:
            raise UsageError("slot_minutes must be positive")
        for name, arr in (("mbs_load", mbs), ("sbs_loads", sbs)):
            if arr.size and (arr.min() < -LOAD_EPS or arr.max() > 1 + LOAD_EPS or np.isnan(arr).any()):
                raise UsageError(f"{name} has entries outside [0, 1]")
        mbs.setflags(write=False)
        sbs.setflags(write=False)
        object.__setattr__(self, "mbs_load", mbs)
        object.__setattr__(self, "sbs_loads", sbs)
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def n_slots(self) -> int:
        return len(self.mbs_load)

    @property
    def n_sbs(self) -> int:
        return self.sbs_loads.shape[1]

    @property
    def horizon_minutes(self) -> int:
        return self.n_slots * self.slot_minutes

    def check_horizon(self, horizon_minutes: int) -> None:
        if horizon_minutes % self.slot_minutes or horizon_minutes // self.slot_minutes != self.n_slots:
            raise UsageError(
                f"{self.n_slots} slots of {self.slot_minutes} min do not cover {horizon_minutes} min")


def slots_for(horizon_minutes: int = DAY_MINUTES, slot_minutes: int = DEFAULT_SLOT_MINUTES) -> int:
    if slot_minutes <= 0 or horizon_minutes % slot_minutes:
        raise UsageError(f"horizon {horizon_minutes} min is not a whole number of {slot_minutes} min slots")
    return horizon_minutes // slot_minutes


# --- CDR ingestion -------------------------------------------------------------

@dataclass(frozen=True)
class GridMapping:
    """Which CDR grids feed the macro (two, summed) and each small cell (one)."""

    mbs_grids: tuple[int, int]
    sbs_grids: tuple[int, ...]
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mbs_grids", tuple(int(g) for g in self.mbs_grids))
        object.__setattr__(self, "sbs_grids", tuple(int(g) for g in self.sbs_grids))
        if len(self.mbs_grids) != 2:
            raise UsageError("the macro is fed by exactly two grids")
        every = self.mbs_grids + self.sbs_grids
        if len(set(every)) != len(every):
            raise UsageError("grid ids must be distinct across the mapping")

    @classmethod
    def draw(cls, grid_ids: Iterable[int], n_sbs: int, seed: int) -> GridMapping:
        """Pick ``n_sbs + 2`` distinct grids at random (reproducible for ``seed``)."""
        pool = sorted(set(int(g) for g in grid_ids))
        if len(pool) < n_sbs + 2:
            raise UsageError(f"need {n_sbs + 2} distinct grids, data has {len(pool)}")
        rng = np.random.default_rng(seed)
        picked = [pool[i] for i in rng.choice(len(pool), size=n_sbs + 2, replace=False)]
        return cls((picked[0], picked[1]), tuple(picked[2:]), seed)

    def to_dict(self) -> dict:
        return {"mbs_grids": list(self.mbs_grids), "sbs_grids": list(self.sbs_grids), "seed": self.seed}


def _as_int(value, what) -> int:
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise FormatError(f"{what} {value!r} is not a number") from None
    if not math.isfinite(f) or f != int(f):
        raise FormatError(f"{what} {value!r} is not aligned to a whole slot")
    return int(f)


def read_cdr_csv(path: str | Path) -> list[tuple[int, int, float]]:
    """Read ``grid_id,slot_index,activity`` rows (header required)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CDR_HEADER:
            raise FormatError(f"{path}: expected header {','.join(CDR_HEADER)}, got {header}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 fields, got {len(rec)}")
            try:
                activity = float(rec[2])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: bad activity {rec[2]!r}") from None
            rows.append((_as_int(rec[0], "grid_id"), _as_int(rec[1], "slot_index"), activity))
    return rows


def _grid_series(rows: Iterable, slot_range: range | None) -> tuple[dict[int, np.ndarray], range]:
    by_grid: dict[int, dict[int, float]] = {}
    for row in rows:
        if isinstance(row, Mapping):
            row = (row["grid_id"], row["slot_index"], row["activity"])
        g, s, a = row
        g, s, a = _as_int(g, "grid_id"), _as_int(s, "slot_index"), float(a)
        if not math.isfinite(a) or a < 0:
            raise FormatError(f"grid {g} slot {s}: activity {a!r} must be finite and >= 0")
        series = by_grid.setdefault(g, {})
        if s in series:
            raise FormatError(f"grid {g} has two records for slot {s}")
        series[s] = a
    if slot_range is None:
        every = [s for series in by_grid.values() for s in series]
        if not every:
            raise FormatError("no CDR records")
        slot_range = range(min(every), max(every) + 1)
    grid = np.arange(slot_range.start, slot_range.stop)
    out = {}
    for g, series in by_grid.items():
        known = sorted(s for s in series if s in slot_range)
        if not known:
            continue
        out[g] = np.interp(grid, known, [series[s] for s in known])
    return out, slot_range


def normalize_peak(series: np.ndarray) -> np.ndarray:
    """Scale a non-negative series so its maximum is 1 (all-zero stays zero)."""
    peak = float(np.max(series)) if len(series) else 0.0
    if peak <= 0:
        return np.zeros_like(series, dtype=float)
    return np.asarray(series, dtype=float) / peak


def ingest_cdr(rows: Iterable, mapping: GridMapping, cell: MacroCell,
               slot_minutes: int = DEFAULT_SLOT_MINUTES,
               slot_range: range | None = None) -> TrafficTrace:
    """Build a normalized trace from CDR internet-activity rows.

    Rows are ``(grid_id, slot_index, activity)`` tuples or dicts with those keys.
    The macro series is the sum of its two grids; each small cell takes one grid.
    Gaps inside a grid's series are linearly interpolated, then each station's
    series is divided by its own peak.
    """
    if len(mapping.sbs_grids) != cell.n_sbs:
        raise UsageError(f"mapping covers {len(mapping.sbs_grids)} small cells, cell has {cell.n_sbs}")
    series, slot_range = _grid_series(rows, slot_range)
    for g in mapping.mbs_grids + mapping.sbs_grids:
        if g not in series:
            raise UsageError(f"grid {g} does not occur in the CDR data")
    mbs = normalize_peak(series[mapping.mbs_grids[0]] + series[mapping.mbs_grids[1]])
    sbs = np.column_stack([normalize_peak(series[g]) for g in mapping.sbs_grids]) \
        if cell.n_sbs else np.zeros((len(mbs), 0))
    meta = {
        "source": "cdr",
        "normalization": NORMALIZATION_RULE,
        "mapping": mapping.to_dict(),
        "seed": mapping.seed,
        "first_slot": slot_range.start,
        "slot_minutes": slot_minutes,
    }
    return TrafficTrace(slot_minutes, mbs, sbs, meta)


# --- synthetic traces ----------------------------------------------------------

# (mean load, half swing) per station kind before per-station jitter.
_KIND_LEVELS = {
    BSKind.MACRO: (0.35, 0.25),
    BSKind.RRH: (0.40, 0.30),
    BSKind.MICRO: (0.35, 0.28),
    BSKind.PICO: (0.30, 0.25),
    BSKind.FEMTO: (0.25, 0.22),
}
TROUGH_HOUR = 4.0
PEAK_HOUR = 20.0


def diurnal_shape(hours: np.ndarray) -> np.ndarray:
    """Daily profile in [0, 1]: 0 at 04:00, rising to 1 at 20:00, back by 04:00."""
    rise = PEAK_HOUR - TROUGH_HOUR
    h = np.mod(np.asarray(hours, dtype=float) - TROUGH_HOUR, 24.0)
    phase = np.where(h < rise, 0.5 * h / rise, 0.5 + 0.5 * (h - rise) / (24.0 - rise))
    return 0.5 - 0.5 * np.cos(2 * np.pi * phase)


def _station_series(rng: np.random.Generator, kind: BSKind, hours: np.ndarray,
                    amplitude: float, noise: float) -> np.ndarray:
    mean, swing = _KIND_LEVELS[kind]
    mean *= rng.uniform(0.6, 1.2)
    swing *= rng.uniform(0.7, 1.3)
    eps = rng.standard_normal(len(hours))
    x = mean + amplitude * swing * (2 * diurnal_shape(hours) - 1) + noise * eps
    return np.clip(x, 0.0, 1.0)


def synth_trace(seed: int, n_slots: int, n_sbs: int, kinds: Sequence[BSKind | str] | None = None,
                slot_minutes: int = DEFAULT_SLOT_MINUTES, amplitude: float = 1.0,
                noise: float = 0.05) -> TrafficTrace:
    """Seeded diurnal trace for one macro and ``n_sbs`` small cells.

    Every station draws from its own stream keyed by ``(seed, station index)``,
    so small cell ``j`` gets the same series whatever ``n_sbs`` is.
    """
    if n_slots < 1:
        raise UsageError("n_slots must be >= 1")
    if kinds is None:
        kinds = [BSKind.PICO] * n_sbs
    kinds = [BSKind.parse(k) for k in kinds]
    if len(kinds) != n_sbs:
        raise UsageError(f"{len(kinds)} kinds given for {n_sbs} small cells")
    if any(k is BSKind.MACRO for k in kinds):
        raise UsageError("small cells cannot be of kind macro")
    hours = np.arange(n_slots) * slot_minutes / 60.0
    mbs = _station_series(np.random.default_rng([seed, 0]), BSKind.MACRO, hours, amplitude, noise)
    cols = [_station_series(np.random.default_rng([seed, j + 1]), k, hours, amplitude, noise)
            for j, k in enumerate(kinds)]
    sbs = np.column_stack(cols) if cols else np.zeros((n_slots, 0))
    meta = {
        "source": "synthetic",
        "seed": seed,
        "kinds": [k.value for k in kinds],
        "amplitude": amplitude,
        "noise": noise,
        "slot_minutes": slot_minutes,
        "shape": f"trough {TROUGH_HOUR:g}h, peak {PEAK_HOUR:g}h",
    }
    return TrafficTrace(slot_minutes, mbs, sbs, meta)


# --- trace files -----------------------------------------------------------------

def _meta_path(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


def write_trace_csv(trace: TrafficTrace, path: str | Path) -> None:
    """Write ``slot,bs_id,load`` rows plus a ``<file>.meta.json`` sidecar.

    The macro's ``bs_id`` is ``mbs``; small cells use their integer id.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for t in range(trace.n_slots):
            w.writerow((t, "mbs", repr(float(trace.mbs_load[t]))))
            for j in range(trace.n_sbs):
                w.writerow((t, j, repr(float(trace.sbs_loads[t, j]))))
    meta = dict(trace.metadata, slot_minutes=trace.slot_minutes, n_slots=trace.n_slots,
                n_sbs=trace.n_sbs)
    _meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_trace_csv(path: str | Path) -> TrafficTrace:
    path = Path(path)
    meta_file = _meta_path(path)
    meta = json.loads(meta_file.read_text(encoding="utf-8")) if meta_file.exists() else {}
    mbs: dict[int, float] = {}
    sbs: dict[tuple[int, int], float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRACE_HEADER:
            raise FormatError(f"{path}: expected header {','.join(TRACE_HEADER)}")
        for rec in reader:
            if not rec:
                continue
            t, bs, load = _as_int(rec[0], "slot"), rec[1].strip(), float(rec[2])
            if bs == "mbs":
                mbs[t] = load
            else:
                sbs[(t, _as_int(bs, "bs_id"))] = load
    n_slots = len(mbs)
    if sorted(mbs) != list(range(n_slots)):
        raise FormatError(f"{path}: macro slots are not 0..{n_slots - 1}")
    n_sbs = 1 + max((j for _, j in sbs), default=-1)
    if len(sbs) != n_slots * n_sbs:
        raise FormatError(f"{path}: small-cell rows do not form a full slot x cell grid")
    loads = np.zeros((n_slots, n_sbs))
    for (t, j), v in sbs.items():
        loads[t, j] = v
    slot_minutes = int(meta.get("slot_minutes", DEFAULT_SLOT_MINUTES))
    return TrafficTrace(slot_minutes, np.array([mbs[t] for t in range(n_slots)]), loads, meta)
