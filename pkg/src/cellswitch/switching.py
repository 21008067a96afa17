"""Per-slot small-cell switching policies: AAO, ES, MLC and THESIS.

Every policy returns a feasible :class:`SwitchDecision` together with the cell
power it produces and counters describing how much search it did.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .clustering import cluster_loads
from .netmodel import (
    LOAD_EPS,
    MacroCell,
    SwitchDecision,
    UsageError,
    _check_inputs,
    bs_power,
    cell_power,
    offload,
)

ES_MAX_SBS = 24
DEFAULT_B_TH = 12
MAX_DEPTH = 32
# Subsets whose power is within this many watts of the optimum count as ties.
TIE_EPS = 1e-9
# Subset sums are materialized in blocks of at most 2**_CHUNK_BITS entries.
_CHUNK_BITS = 20


class RecursionDepthError(RuntimeError):
    pass


@dataclass(frozen=True)
class PolicyInput:
    cell: MacroCell
    sbs_loads: tuple[float, ...]
    mbs_load: float

    def __post_init__(self):
        object.__setattr__(self, "sbs_loads", tuple(float(x) for x in self.sbs_loads))
        _check_inputs(self.cell, self.sbs_loads, self.mbs_load)
        if self.mbs_load > self.cell.mbs_max_load + LOAD_EPS:
            raise UsageError(
                f"macro load {self.mbs_load} already exceeds its capacity {self.cell.mbs_max_load}")

    @property
    def n_sbs(self) -> int:
        return self.cell.n_sbs


@dataclass(frozen=True)
class SearchStats:
    candidates_evaluated: int = 0
    recursion_depth: int = 0


@dataclass(frozen=True)
class PolicyOutput:
    decision: SwitchDecision
    power: float
    search_stats: SearchStats


def _output(inp: PolicyInput, off: Iterable[int], candidates: int, depth: int) -> PolicyOutput:
    decision = offload(off, inp.sbs_loads, inp.mbs_load, inp.cell)
    if decision is None:
        raise AssertionError("policy produced an infeasible switch-off set")
    power = cell_power(inp.cell, inp.sbs_loads, decision)
    return PolicyOutput(decision, power, SearchStats(candidates, depth))


def aao(inp: PolicyInput) -> PolicyOutput:
    """All small cells stay on."""
    return _output(inp, (), 1, 0)


# --- exhaustive search -------------------------------------------------------

def _subset_sums(start: float, weights: Sequence[float]) -> np.ndarray:
    # out[m] = start + sum of weights[i] for set bits i, added in bit order.
    out = np.array([start], dtype=float)
    for w in weights:
        out = np.concatenate([out, out + w])
    return out


def _popcounts(n: int) -> np.ndarray:
    out = np.zeros(1, dtype=np.int16)
    for _ in range(n):
        out = np.concatenate([out, out + 1])
    return out


def _lex_key(masks: np.ndarray, n: int) -> np.ndarray:
    # Bit-reverse so that id 0 is the most significant bit; for sets of equal
    # size, the larger key is the lexicographically smaller sorted id tuple.
    key = np.zeros_like(masks)
    for i in range(n):
        key |= ((masks >> i) & 1) << (n - 1 - i)
    return key


def best_subset(cell: MacroCell, sbs_loads: Sequence[float], ids: Sequence[int],
                base_load: float) -> tuple[tuple[int, ...], int]:
    """Exhaustively pick which of ``ids`` to switch off, all other cells fixed.

    ``base_load`` is the macro load before any of ``ids`` is offloaded. The
    chosen subset minimizes cell power subject to macro capacity; near-ties
    (within ``TIE_EPS`` W) go to fewer cells off, then the lexicographically
    smallest id tuple. Returns ``(off_ids, subsets_examined)``.
    """
    ids = sorted(ids)
    n = len(ids)
    mbs = cell.mbs_profile
    per_load = mbs.load_slope * mbs.p_tx
    shares, deltas = [], []
    for j in ids:
        sc = cell.small_cells[j]
        share = cell.offload_share(j, sbs_loads[j])
        shares.append(share)
        deltas.append(sc.profile.p_sleep - bs_power(sc.profile, sbs_loads[j], True) + per_load * share)

    lo = min(n, _CHUNK_BITS)
    hi = n - lo
    lo_pop = _popcounts(lo)
    limit = cell.mbs_max_load + LOAD_EPS

    def chunks():
        lo_load = _subset_sums(base_load, shares[:lo])
        lo_pow = _subset_sums(0.0, deltas[:lo])
        for h in range(1 << hi):
            load, dpow, pop = lo_load, lo_pow, lo_pop
            if h:
                load, dpow, pop = load.copy(), dpow.copy(), pop + bin(h).count("1")
                for b in range(hi):
                    if h >> b & 1:
                        load += shares[lo + b]
                        dpow += deltas[lo + b]
            yield h, load <= limit, dpow, pop

    best_pow = np.inf
    for _, ok, dpow, _ in chunks():
        if ok.any():
            best_pow = min(best_pow, float(dpow[ok].min()))

    chosen = None  # (popcount, -lex_key, mask)
    for h, ok, dpow, pop in chunks():
        cand = np.flatnonzero(ok & (dpow <= best_pow + TIE_EPS))
        if cand.size == 0:
            continue
        c_pop = pop[cand]
        cand = cand[c_pop == c_pop.min()]
        masks = cand.astype(np.int64) | (np.int64(h) << lo)
        keys = _lex_key(masks, n)
        i = int(np.argmax(keys))
        entry = (int(c_pop.min()), -int(keys[i]), int(masks[i]))
        if chosen is None or entry < chosen:
            chosen = entry
    mask = chosen[2] if chosen is not None else 0
    off = tuple(ids[i] for i in range(n) if mask >> i & 1)
    return off, 1 << n


def es_switch(inp: PolicyInput, max_sbs: int = ES_MAX_SBS) -> PolicyOutput:
    """Optimal switch-off set over all 2^N subsets."""
    if inp.n_sbs > max_sbs:
        raise UsageError(
            f"exhaustive search over {inp.n_sbs} small cells exceeds the cap of {max_sbs}; "
            "use thesis_switch for large cells")
    off, count = best_subset(inp.cell, inp.sbs_loads, range(inp.n_sbs), inp.mbs_load)
    return _output(inp, off, count, 0)


# --- clustering-based policies -----------------------------------------------

def _recluster(inp: PolicyInput, group: list[int], seed: int, level: int,
               k_max: int | None, max_size: int | None = None) -> list[list[int]]:
    loads = [inp.sbs_loads[j] for j in group]
    # Below the first level a group is only revisited because it must shrink,
    # so the elbow is not allowed to return it whole.
    parts = cluster_loads(loads, seed, k_max, min_k=1 if level == 1 else 2, max_size=max_size)
    return [[group[i] for i in part] for part in parts]


def _check_depth(level: int) -> None:
    if level > MAX_DEPTH:
        raise RecursionDepthError(f"re-clustering exceeded {MAX_DEPTH} levels")


def mlc_switch(inp: PolicyInput, seed: int = 0, k_max: int | None = None) -> PolicyOutput:
    """Multi-level clustering: switch off the single best whole cluster.

    Clusters whose aggregate traffic fits the macro are scored by the power they
    save and retired; clusters that do not fit are re-clustered, down to
    singletons. Only a strictly positive saving turns anything off.
    """
    base = offload((), inp.sbs_loads, inp.mbs_load, inp.cell)
    p_all = cell_power(inp.cell, inp.sbs_loads, base)
    best_off: list[int] = []
    best_saving = 0.0
    candidates = 0
    pending = [list(range(inp.n_sbs))] if inp.n_sbs else []
    level = 0
    while pending:
        level += 1
        _check_depth(level)
        leftover = []
        for group in pending:
            for ids in _recluster(inp, group, seed, level, k_max):
                candidates += 1
                dec = offload(ids, inp.sbs_loads, inp.mbs_load, inp.cell)
                if dec is None:
                    if len(ids) > 1:
                        leftover.append(ids)
                    continue
                saving = p_all - cell_power(inp.cell, inp.sbs_loads, dec)
                if saving > best_saving:
                    best_off, best_saving = ids, saving
        pending = leftover
    return _output(inp, best_off, candidates, level)


def _thesis_leaves(inp: PolicyInput, b_th: int, seed: int,
                   k_max: int | None) -> tuple[list[list[int]], int]:
    leaves: list[list[int]] = []
    pending = [list(range(inp.n_sbs))] if inp.n_sbs else []
    level = 0
    while pending:
        level += 1
        _check_depth(level)
        oversized = []
        for group in pending:
            for ids in _recluster(inp, group, seed, level, k_max, b_th):
                (leaves if len(ids) <= b_th else oversized).append(ids)
        pending = oversized
    return leaves, level


def thesis_switch(inp: PolicyInput, b_th: int = DEFAULT_B_TH, seed: int = 0,
                  single_cluster: bool = False, k_max: int | None = None) -> PolicyOutput:
    """Cluster, then search exhaustively inside every cluster of at most ``b_th`` cells.

    Oversized clusters are re-clustered until they fit the threshold. Clusters
    are then visited from the lightest mean load upwards; each one's
    exhaustive search runs against the macro capacity left by the clusters
    already committed, so the combined decision is always feasible.

    With ``single_cluster`` every cluster is searched against the macro's
    starting load and only the set saving the most power is applied.
    """
    if b_th < 1:
        raise UsageError("b_th must be >= 1")
    cell, loads = inp.cell, inp.sbs_loads
    leaves, depth = _thesis_leaves(inp, b_th, seed, k_max)
    leaves.sort(key=lambda ids: (sum(loads[j] for j in ids) / len(ids), ids[0]))
    candidates = 0

    if single_cluster:
        p_all = cell_power(cell, loads, offload((), loads, inp.mbs_load, cell))
        best_off: tuple[int, ...] = ()
        best_saving = 0.0
        for ids in leaves:
            off, count = best_subset(cell, loads, ids, inp.mbs_load)
            candidates += count
            if off:
                saving = p_all - cell_power(cell, loads, offload(off, loads, inp.mbs_load, cell))
                if saving > best_saving:
                    best_off, best_saving = off, saving
        return _output(inp, best_off, candidates, depth)

    committed: set[int] = set()
    load_now = inp.mbs_load
    for ids in leaves:
        off, count = best_subset(cell, loads, ids, load_now)
        candidates += count
        if not off:
            continue
        dec = offload(committed.union(off), loads, inp.mbs_load, cell)
        if dec is None:
            # Only reachable through rounding at the capacity boundary.
            continue
        committed.update(off)
        load_now = dec.mbs_load_after
    return _output(inp, committed, candidates, depth)


POLICIES = ("aao", "es", "mlc", "thesis")


def run_policy(name: str, inp: PolicyInput, seed: int = 0, b_th: int = DEFAULT_B_TH,
               es_max_sbs: int = ES_MAX_SBS) -> PolicyOutput:
    if name == "aao":
        return aao(inp)
    if name == "es":
        return es_switch(inp, es_max_sbs)
    if name == "mlc":
        return mlc_switch(inp, seed)
    if name == "thesis":
        return thesis_switch(inp, b_th, seed)
    raise UsageError(f"unknown policy {name!r}; expected one of {', '.join(POLICIES)}")
