"""Tests for the parameter-elimination algorithm."""

import math

import numpy as np
import pytest

from sparsebandit import (
    QueryLedger,
    build_instance,
    build_separated_net,
    include_point,
    random_sparse_instance,
    uniform_error,
)
from sparsebandit.errors import GuardExceededError
from sparsebandit.param_elim import (
    Violation,
    build_candidate_sets,
    find_violation,
    mark_ground_truth,
    run_parameter_elimination,
)


def brute_force_violation(cand, alive=None):
    """Direct nested-loop scan in the documented order."""
    if alive is None:
        alive = cand.fresh_alive()
    h = 0.5 * cand.epsilon
    thr = 2.5 * cand.epsilon
    P, W = cand.projections, cand.anchors
    k = P.shape[1]
    for m in range(cand.n_subsets):
        for t in range(cand.n_net):
            if not alive[m, t]:
                continue
            for w in range(cand.n_net):
                c = W[w, t]
                for mp in range(cand.n_subsets):
                    for tp in range(cand.n_net):
                        if (mp, tp) == (m, t) or not alive[mp, tp]:
                            continue
                        for x in range(k):
                            if abs(P[m, x, t] - c) <= h and abs(P[mp, x, tp] - c) > thr:
                                return Violation(m, t, w, mp, tp, x)
    return None


def seeded_net_for(instance, seed=0, pool_size=2000):
    net = build_separated_net(instance.s, instance.epsilon, seed, pool_size=pool_size)
    supp = list(instance.theta_star.support)
    restriction = instance.theta_star.coords[supp]
    return include_point(net, restriction)


def test_triple_counting_minimal_case():
    inst = build_instance([[1.0, 0.0], [0.0, 1.0]], [1.0, 0.0], [0.0, 0.0], 1.0)
    net = build_separated_net(1, 1.0, seed=0)
    cand = build_candidate_sets(inst.features, net)
    assert cand.n_subsets == 2 and cand.n_net == 2
    assert cand.n_triples == 8


def test_group_contains_action_matching_anchor():
    inst = random_sparse_instance(4, 2, 16, 0.3, seed=1)
    net = build_separated_net(2, 0.3, seed=2, pool_size=500)
    cand = build_candidate_sets(inst.features, net)
    # plant an action whose restriction equals a net anchor exactly
    w_idx = 3
    m_idx = 1
    subset = cand.subsets[m_idx]
    row = np.zeros(4)
    row[list(subset)] = net.points[w_idx]
    phi = np.vstack([inst.features.matrix, row])
    inst2 = build_instance(phi, inst.theta_star.coords,
                           np.append(inst.misspec, 0.0), inst.epsilon)
    cand2 = build_candidate_sets(inst2.features, net)
    planted = inst2.k - 1
    for t_idx in range(cand2.n_net):
        assert planted in cand2.group(m_idx, t_idx, w_idx)


def test_group_membership_matches_direct_scan():
    inst = random_sparse_instance(5, 2, 14, 0.4, seed=3)
    net = build_separated_net(2, 0.4, seed=4, pool_size=400)
    cand = build_candidate_sets(inst.features, net)
    h = 0.5 * cand.epsilon
    rng = np.random.default_rng(0)
    for _ in range(30):
        m = int(rng.integers(cand.n_subsets))
        t = int(rng.integers(cand.n_net))
        w = int(rng.integers(cand.n_net))
        got = set(cand.group(m, t, w).tolist())
        phi = inst.features.matrix
        want = {x for x in range(inst.k)
                if abs(phi[x, list(cand.subsets[m])] @ net.points[t]
                       - net.points[w] @ net.points[t]) <= h}
        assert got == want


def test_find_violation_none_when_groups_empty():
    # the lone action's restriction is far from every anchor value
    inst = build_instance([[0.6]], [0.9], [0.0], 0.5)
    net = build_separated_net(1, 0.5, seed=0)
    cand = build_candidate_sets(inst.features, net)
    for m in range(cand.n_subsets):
        for t in range(cand.n_net):
            for w in range(cand.n_net):
                assert cand.group(m, t, w).size == 0
    assert find_violation(cand) is None


def test_find_violation_fires_above_threshold():
    # gap between rival predictions is 1.0 > 5*eps/2 = 0.75
    inst = build_instance([[1.0, 0.0], [0.0, 1.0]], [1.0, 0.0], [0.0, 0.0], 0.3)
    net = build_separated_net(1, 0.3, seed=0)
    cand = build_candidate_sets(inst.features, net)
    got = find_violation(cand)
    assert got is not None
    assert got == brute_force_violation(cand)


def test_find_violation_matches_brute_force_scan():
    for seed in range(6):
        inst = random_sparse_instance(4, 1, 10, 0.3, seed=seed)
        net = seeded_net_for(inst, seed=seed)
        cand = build_candidate_sets(inst.features, net)
        assert find_violation(cand) == brute_force_violation(cand)
    for seed in range(3):
        inst = random_sparse_instance(4, 2, 10, 0.7, seed=seed)
        net = seeded_net_for(inst, seed=seed, pool_size=300)
        cand = build_candidate_sets(inst.features, net)
        assert find_violation(cand) == brute_force_violation(cand)


def test_run_with_huge_epsilon_is_vacuous():
    inst = random_sparse_instance(4, 1, 10, 1.9, seed=5)
    net = seeded_net_for(inst, seed=5)
    res = run_parameter_elimination(inst, QueryLedger(), net=net)
    assert res.queries <= 2
    assert res.final_error <= 4 * inst.epsilon + 1e-9


def test_run_guarantees_error_and_query_bounds():
    for seed in range(8):
        inst = random_sparse_instance(4, 1, 12, 0.1, seed=seed)
        net = seeded_net_for(inst, seed=seed)
        ledger = QueryLedger()
        res = run_parameter_elimination(inst, ledger, net=net)
        assert res.final_error <= 4 * inst.epsilon + 1e-9
        assert res.queries == len(ledger)
        assert res.queries <= net.size * math.comb(4, 1)
        assert res.queries <= (4 / inst.epsilon + 1) ** 1 * math.comb(4, 1)
        res = mark_ground_truth(res, inst)
        assert res.ground_truth_alive


def test_run_two_sparse_instance():
    inst = random_sparse_instance(4, 2, 14, 0.2, seed=11)
    net = seeded_net_for(inst, seed=11, pool_size=3000)
    ledger = QueryLedger()
    res = run_parameter_elimination(inst, ledger, net=net)
    assert res.final_error <= 4 * inst.epsilon + 1e-9
    assert res.queries <= net.size * math.comb(4, 2)
    assert mark_ground_truth(res, inst).ground_truth_alive
    # progress invariant: one family killed per query
    assert int(res.alive.sum()) == res.candidates.n_pairs - res.queries


def test_run_norm_point_nine_example():
    # ground truth 0.9*e2; net seeded with the normalized restriction
    rng = np.random.default_rng(7)
    extra = rng.normal(size=(4, 4))
    extra /= np.linalg.norm(extra, axis=1, keepdims=True)
    phi = np.vstack([np.eye(4), -np.eye(4), extra])
    theta = np.array([0.0, 0.9, 0.0, 0.0])
    nu = rng.uniform(-0.1, 0.1, size=12)
    inst = build_instance(phi, theta, nu, 0.1)
    net = include_point(build_separated_net(1, 0.1, seed=0), [1.0])
    res = run_parameter_elimination(inst, QueryLedger(), net=net)
    assert res.final_error <= 0.4
    assert uniform_error(inst, res.theta_hat, res.index_set) == res.final_error


def test_run_is_deterministic():
    inst = random_sparse_instance(5, 1, 12, 0.15, seed=2)
    net = seeded_net_for(inst, seed=2)
    r1 = run_parameter_elimination(inst, QueryLedger(), net=net)
    r2 = run_parameter_elimination(inst, QueryLedger(), net=net)
    assert [(e.action, e.killed) for e in r1.log] == [(e.action, e.killed) for e in r2.log]
    assert r1.index_set == r2.index_set
    assert np.array_equal(r1.theta_hat, r2.theta_hat)


def test_desk_scale_guard():
    inst = random_sparse_instance(16, 2, 34, 0.01, seed=0)
    net = build_separated_net(2, 0.01, seed=0, pool_size=200_000)
    with pytest.raises(GuardExceededError):
        build_candidate_sets(inst.features, net)
