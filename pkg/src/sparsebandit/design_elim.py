"""Subset elimination with design-based estimates.

Phase 1 estimates one restricted parameter per size-s index subset from a
near-optimal design (a handful of queries each). Phase 2 repeatedly queries
an action on which two surviving subsets' predictions disagree by more than
2*eps*(1+sqrt(2s)) and eliminates the side the observed reward contradicts.
The survivor predicts every reward within 3*eps*(1+sqrt(2s)) using
O(s log s) * (d choose s) queries overall, with no dependence on 1/eps in
the query count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import core_set_bound, design_for_subset, estimate_parameter
from .errors import EmptySurvivorError, GuardExceededError, ValidationError
from .model import BanditInstance, QueryLedger, query, uniform_error
from .param_elim import subsets_of_size

SUBSET_GUARD = 10 ** 5


@dataclass
class SubsetStep:
    step: int
    action: int
    reward: float
    primary: int        # subset index
    rival: int
    killed: tuple       # subset indices removed this step


@dataclass
class DesignElimResult:
    index_set: tuple
    theta_hat: np.ndarray
    queries: int
    phase1_queries: int
    estimates: dict       # subset tuple -> estimate (length s)
    subsets: tuple
    alive: np.ndarray
    log: list
    final_error: float


def first_prediction_gap(preds: np.ndarray, alive: np.ndarray, threshold: float,
                         start: int = 0):
    """First (primary, rival, action) with |preds gap| > threshold.

    Subsets scan in lexicographic order for both roles, actions by row.
    """
    n_sub = preds.shape[0]
    for m in range(start, n_sub):
        if not alive[m]:
            continue
        for mp in range(n_sub):
            if mp == m or not alive[mp]:
                continue
            gaps = np.abs(preds[mp] - preds[m]) > threshold
            if gaps.any():
                return m, mp, int(np.argmax(gaps))
    return None


def run_design_elimination(instance: BanditInstance, ledger: QueryLedger, *,
                           guard: int = SUBSET_GUARD) -> DesignElimResult:
    if not instance.deterministic:
        raise ValidationError("design elimination requires a noiseless instance")
    d, s = instance.d, instance.s
    n_subsets = math.comb(d, s)
    if n_subsets > guard:
        raise GuardExceededError(
            f"{n_subsets} subsets exceed the desk-scale guard {guard}")
    subsets = subsets_of_size(d, s)
    eps = instance.epsilon
    kill_thr = eps * (1.0 + math.sqrt(2.0 * s))
    gap_thr = 2.0 * kill_thr

    preds = np.empty((len(subsets), instance.k))
    estimates: dict = {}
    for m_idx, subset in enumerate(subsets):
        design = design_for_subset(instance.features.matrix, subset)
        theta_m = estimate_parameter(instance, subset, design, ledger)
        estimates[subset] = theta_m
        preds[m_idx] = instance.features.matrix[:, list(subset)] @ theta_m
    phase1_queries = len(ledger)

    alive = np.ones(len(subsets), dtype=bool)
    clean = np.zeros(len(subsets), dtype=bool)
    log: list[SubsetStep] = []
    while True:
        found = None
        for m in range(len(subsets)):
            if not alive[m] or clean[m]:
                continue
            hit = first_prediction_gap(preds, alive, gap_thr, start=m)
            if hit is not None and hit[0] == m:
                found = hit
                break
            # rivals only ever die, so this subset stays violation-free
            clean[m] = True
        if found is None:
            break
        m, mp, x = found
        reward = query(instance, x, ledger)
        killed = []
        if abs(reward - preds[m, x]) <= kill_thr:
            alive[mp] = False
            killed.append(mp)
        else:
            alive[m] = False
            killed.append(m)
            if abs(reward - preds[mp, x]) > kill_thr:
                alive[mp] = False
                killed.append(mp)
        log.append(SubsetStep(step=len(log), action=x, reward=reward,
                              primary=m, rival=mp, killed=tuple(killed)))

    if not alive.any():
        raise EmptySurvivorError(
            "both subsets of the final disagreement were eliminated; "
            "see the run log")
    survivor = int(np.argmax(alive))
    index_set = subsets[survivor]
    theta_hat = estimates[index_set]
    return DesignElimResult(
        index_set=index_set,
        theta_hat=theta_hat,
        queries=len(ledger),
        phase1_queries=phase1_queries,
        estimates=estimates,
        subsets=subsets,
        alive=alive,
        log=log,
        final_error=uniform_error(instance, theta_hat, index_set),
    )


def query_bound(d: int, s: int) -> int:
    """Worst-case ledger length: one design estimate per subset plus one
    elimination query per removed subset."""
    return (core_set_bound(s) + 1) * math.comb(d, s)
