"""Independent reference implementations used as test oracles.

None of these import the code under test beyond plain data (profiles, kinds).
"""

from __future__ import annotations

import itertools
import random

TIE_W = 1e-9
CAP_EPS = 1e-9


def brute_force_switch(profiles, sbs_loads, mbs_load, mbs_profile, mbs_max=1.0):
    """Enumerate every switch-off set with itertools and return (off_tuple, power).

    Minimum power among sets keeping the macro within capacity; sets within
    ``TIE_W`` of the minimum are ranked by size, then by sorted id tuple.
    """
    n = len(sbs_loads)
    scored = []
    for r in range(n + 1):
        for combo in itertools.combinations(range(n), r):
            after = mbs_load
            for j in combo:
                after += sbs_loads[j] * profiles[j].n_rb / mbs_profile.n_rb
            if after > mbs_max + CAP_EPS:
                continue
            power = mbs_profile.p_circuit + after * mbs_profile.load_slope * mbs_profile.p_tx
            for j in range(n):
                p = profiles[j]
                if j in combo:
                    power += p.p_sleep
                else:
                    power += p.p_circuit + sbs_loads[j] * p.load_slope * p.p_tx
            scored.append((power, combo))
    best = min(p for p, _ in scored)
    ties = [(len(c), c, p) for p, c in scored if p <= best + TIE_W]
    _, combo, power = min(ties)
    return combo, power


def brute_force_kmeans_sse(points, k):
    """Global minimum SSE over all assignments with k non-empty clusters."""
    best = float("inf")
    n = len(points)
    for labels in itertools.product(range(k), repeat=n):
        if len(set(labels)) != k:
            continue
        total = 0.0
        for c in range(k):
            members = [points[i] for i in range(n) if labels[i] == c]
            mu = sum(members) / len(members)
            total += sum((x - mu) ** 2 for x in members)
        best = min(best, total)
    return best


def random_assignment_sse(points, k, trials, seed):
    """Smallest SSE among ``trials`` random assignments (empty clusters skipped)."""
    rng = random.Random(seed)
    best = float("inf")
    for _ in range(trials):
        labels = [rng.randrange(k) for _ in points]
        total = 0.0
        for c in set(labels):
            members = [x for x, a in zip(points, labels) if a == c]
            mu = sum(members) / len(members)
            total += sum((x - mu) ** 2 for x in members)
        best = min(best, total)
    return best


def linear_fill(values):
    """Fill ``None`` gaps by straight lines between the nearest known neighbours."""
    out = list(values)
    known = [i for i, v in enumerate(out) if v is not None]
    for i, v in enumerate(out):
        if v is not None:
            continue
        left = max((j for j in known if j < i), default=None)
        right = min((j for j in known if j > i), default=None)
        if left is None:
            out[i] = out[right]
        elif right is None:
            out[i] = out[left]
        else:
            w = (i - left) / (right - left)
            out[i] = values[left] * (1 - w) + values[right] * w
    return out
