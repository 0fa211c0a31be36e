import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmeasure import (
    BlockSchedule,
    BudgetError,
    ConfigError,
    CouplingState,
    FiniteDist,
    FiniteMemoryModel,
    constant_schedule,
    dbar,
    dn_bruteforce,
    estimate_disagreement,
    maximal_coupling,
    next_block,
    sample_block_coupling,
)
from gmeasure.coupling import TruncationError, _block_conditional
from gmeasure.gmodel import Word, cylinder_prob, decode, encode
from oracles import total_variation


def dist(alphabet, values):
    return FiniteDist(0, alphabet, np.asarray(values, dtype=float))


# --- maximal coupling ---------------------------------------------------------


def test_identical_marginals_fully_diagonal(alphabet):
    mu = dist(alphabet, (0.4, 0.6))
    table = maximal_coupling(mu, mu)
    assert table.disagreement_mass == 0.0
    assert np.abs(table.joint - np.diag((0.4, 0.6))).max() == 0.0


def test_hand_example(alphabet):
    mu = dist(alphabet, (0.5, 0.5))
    nu = dist(alphabet, (0.75, 0.25))
    table = maximal_coupling(mu, nu)
    expect = np.array([[0.5, 0.0], [0.25, 0.25]])
    assert np.abs(table.joint - expect).max() < 1e-15
    assert table.disagreement_mass == pytest.approx(0.25, abs=1e-15)


def test_disjoint_supports(alphabet):
    mu = dist(alphabet, (1.0, 0.0))
    nu = dist(alphabet, (0.0, 1.0))
    assert maximal_coupling(mu, nu).disagreement_mass == pytest.approx(1.0, abs=0)


def test_support_mismatch(alphabet):
    mu = dist(alphabet, (0.5, 0.5))
    nu = FiniteDist(1, alphabet, np.array([0.5, 0.5]))
    with pytest.raises(ConfigError):
        maximal_coupling(mu, nu)


@settings(max_examples=300, deadline=None)
@given(
    st.lists(st.floats(min_value=1e-6, max_value=1.0), min_size=2, max_size=2),
    st.lists(st.floats(min_value=1e-6, max_value=1.0), min_size=2, max_size=2),
    st.integers(min_value=1, max_value=5),
)
def test_coupling_invariants(raw_p, raw_q, log_size):
    # random marginals over 2^log_size outcomes
    rng = np.random.default_rng(int(raw_p[0] * 1e6) + int(raw_q[1] * 1e3))
    size = 2**log_size
    p = rng.random(size) + 1e-9
    q = rng.random(size) + 1e-9
    from gmeasure import binary_alphabet

    alphabet = binary_alphabet()
    mu = FiniteDist(0, alphabet, p / p.sum())
    nu = FiniteDist(0, alphabet, q / q.sum())
    table = maximal_coupling(mu, nu)
    assert (table.joint >= -1e-15).all()
    assert np.abs(table.joint.sum(axis=1) - mu.probs).max() < 1e-12
    assert np.abs(table.joint.sum(axis=0) - nu.probs).max() < 1e-12
    assert table.diagonal_mass == pytest.approx(
        float(np.minimum(mu.probs, nu.probs).sum()), abs=1e-12
    )
    assert table.disagreement_mass == pytest.approx(
        total_variation(mu.probs, nu.probs), abs=1e-12
    )


def test_finite_dist_validation(alphabet):
    with pytest.raises(ConfigError):
        FiniteDist(0, alphabet, np.array([0.5, 0.6]))
    with pytest.raises(ConfigError):
        FiniteDist(0, alphabet, np.array([-0.1, 1.1]))
    with pytest.raises(ConfigError):
        FiniteDist(0, alphabet, np.array([0.5, 0.25, 0.25]))


# --- schedules and the interval recursion --------------------------------------


def test_schedule_partial_sums():
    sched = BlockSchedule((1, 2, 4))
    assert [sched.B(n) for n in range(4)] == [0, 1, 3, 7]
    assert sched.J(1) == (0, 0)
    assert sched.J(2) == (-2, -1)
    assert sched.J(3) == (-6, -3)


def test_schedule_validation():
    with pytest.raises(ConfigError):
        BlockSchedule(())
    with pytest.raises(ConfigError):
        BlockSchedule((1, 0))


def test_schedule_extension_warns():
    sched = BlockSchedule((1, 2))
    with pytest.warns(UserWarning):
        assert sched.b(3) == 2
    assert constant_schedule(1).b(100) == 1  # no warning for constant schedules


def test_all_disagreeing_blocks_use_first_length():
    sched = BlockSchedule((1, 2, 4, 8))
    state = CouplingState(run=0, a=0)
    assert next_block(state, sched) == (0, 0)
    state = CouplingState(x=(0,), y=(1,), run=0, a=-1)
    assert next_block(state, sched) == (-1, -1)


def test_two_agreements_then_third_length():
    sched = BlockSchedule((1, 2, 4, 8))
    state = CouplingState(x=(0, 1, 0), y=(0, 1, 0), run=2, a=-3)
    lo, hi = next_block(state, sched)
    assert hi - lo + 1 == 4


def test_trace_agree_agree_disagree_agree():
    # hand trace: lengths (1, 2, 4, 1, 2) for pattern agree, agree, disagree, agree
    sched = BlockSchedule((1, 2, 4, 8))
    lengths = []
    run, a = 0, 0
    for agreed in (True, True, False, True, True):
        lo, hi = next_block(CouplingState(run=run, a=a), sched)
        lengths.append(hi - lo + 1)
        run = run + 1 if agreed else 0
        a = lo - 1
    assert lengths == [1, 2, 4, 1, 2]


def test_coupling_state_validation():
    with pytest.raises(ConfigError):
        CouplingState(x=(0,), y=(0, 1))
    with pytest.raises(ConfigError):
        CouplingState(run=-1)


# --- block coupling sampler -----------------------------------------------------


def test_iid_identical_contexts_never_disagree(iid):
    sample = sample_block_coupling(iid, constant_schedule(1), 20, "1" * 4, "1" * 4, rng=0)
    assert not sample.disagree.any()
    assert (sample.x == sample.y).all()


def test_iid_any_contexts_never_disagree(iid):
    # i.i.d. conditionals are context-free, so the coupling is always diagonal
    sample = sample_block_coupling(iid, constant_schedule(2), 20, "1" * 4, "0" * 4, rng=0)
    assert not sample.disagree.any()


def test_finite_memory_agreeing_window_couples(mem1):
    # contexts equal on the last memory symbols force agreement a.s.
    sample = sample_block_coupling(mem1, BlockSchedule((1, 2), warn_on_extend=False),
                                   24, "10", "10", rng=7)
    assert not sample.disagree.any()


def test_sample_covers_requested_depth(longrange):
    sample = sample_block_coupling(longrange, BlockSchedule((1, 2, 3), warn_on_extend=False),
                                   15, "1" * 24, "0" * 24, rng=3)
    assert sample.coords[0] <= -15
    assert sample.coords[-1] == 0
    assert len(sample.x) == len(sample.coords) == len(sample.disagree)


def test_block_cap_error(longrange):
    sched = BlockSchedule((20,))
    with pytest.raises(BudgetError):
        sample_block_coupling(longrange, sched, 8, "1" * 4, "0" * 4, rng=0)


def test_truncation_tolerance_error(longrange):
    # empty-ish context at depth forces visible truncation slack
    with pytest.raises(TruncationError):
        sample_block_coupling(longrange, constant_schedule(1), 8, "1", "0",
                              rng=0, trunc_tol=1e-9)


def test_sampler_marginal_law_matches_cylinder_probs(mem1):
    # finite memory: exact conditional block law is available for comparison
    n_traj = 4000
    summary_counts = np.zeros(8)
    children = np.random.SeedSequence(99).spawn(n_traj)
    ctx = "11"
    for child in children:
        s = sample_block_coupling(mem1, constant_schedule(1), 2, ctx, ctx,
                                  rng=np.random.default_rng(child))
        code = encode(tuple(int(v) for v in s.x[-3:]), 2)
        summary_counts[code] += 1
    freq = summary_counts / n_traj
    for code in range(8):
        word = Word(-2, tuple(str(d) for d in decode(code, 2, 3)))
        exact, err = cylinder_prob(mem1, word, Word(1, tuple(ctx)))
        assert err == 0.0
        assert abs(freq[code] - exact) < 4 / np.sqrt(n_traj)


def test_estimate_disagreement_deterministic(longrange):
    a = estimate_disagreement(longrange, constant_schedule(1), 12, "1" * 12, "0" * 12,
                              n_traj=50, seed=5)
    b = estimate_disagreement(longrange, constant_schedule(1), 12, "1" * 12, "0" * 12,
                              n_traj=50, seed=5)
    assert (a.freq == b.freq).all()
    assert a.run_stats == b.run_stats


def test_estimate_disagreement_rate_decreases(longrange):
    summary = estimate_disagreement(longrange, constant_schedule(1), 48,
                                    "1" * 48, "0" * 48, n_traj=400, seed=11)
    near = summary.freq[0:8].mean()
    far = summary.freq[40:49].mean()
    assert far < near


def test_block_conditional_normalised(longrange, rng):
    known = rng.integers(0, 2, 20)
    probs, slack = _block_conditional(longrange, 2, np.asarray(known, dtype=np.intp))
    assert probs.sum() == pytest.approx(1.0, abs=1e-14)
    assert 0 < slack < 0.1


# --- worst-case block total variation -------------------------------------------


def test_dn_zero_for_iid(iid):
    for n in (1, 2, 3):
        assert dn_bruteforce(iid, constant_schedule(1), n, 2) == (0.0, 0.0)


def test_dn_zero_once_memory_covered(alphabet, mem1, rng):
    from conftest import random_positive_table

    assert dn_bruteforce(mem1, constant_schedule(1), 2, 1) == (0.0, 0.0)
    model = FiniteMemoryModel(alphabet, 2, random_positive_table(alphabet, 2, rng))
    sched = BlockSchedule((2, 1, 1), warn_on_extend=False)
    # B_{n-1} = 3 >= memory for n = 3
    assert dn_bruteforce(model, sched, 3, 2) == (0.0, 0.0)


def test_dn_positive_for_longrange(longrange):
    lower, upper = dn_bruteforce(longrange, constant_schedule(1), 2, 3)
    assert 0 < lower <= upper
    assert upper - lower < 0.2


def test_dn_budget_error(longrange):
    with pytest.raises(BudgetError):
        dn_bruteforce(longrange, constant_schedule(1), 20, 12)


def test_dn_monotone_in_tail_length(longrange):
    # deeper enumerated tails can only reveal more oscillation
    lowers = [dn_bruteforce(longrange, constant_schedule(1), 2, L)[0] for L in (1, 2, 3, 4)]
    assert all(lowers[i] <= lowers[i + 1] + 1e-15 for i in range(3))


# --- suffix suprema ----------------------------------------------------------


def test_dbar_examples():
    assert dbar((0.3, 0.1, 0.2), 0.0).tolist() == [0.3, 0.2, 0.2]
    assert dbar((0.5, 0.5), 0.0).tolist() == [0.5, 0.5]
    assert dbar((0.1,), 0.4).tolist() == [0.4]


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(min_value=0, max_value=1), min_size=1, max_size=12),
    st.floats(min_value=0, max_value=1),
)
def test_dbar_properties(values, tail):
    out = dbar(values, tail)
    assert all(out[i] >= out[i + 1] for i in range(len(out) - 1))
    assert all(out[i] >= values[i] for i in range(len(values)))
    assert out[-1] >= tail
