import math

import numpy as np
import pytest

from core.errors import DomainError, IdentifiabilityError, IncompleteDataError, VoteFormatError
from iqa.metrics import Polarity
from iqa.subjective import (
    BT_FLOOR,
    Verdict,
    VoteMatrix,
    VoteRecord,
    binom_cdf,
    bradley_terry,
    classify,
    objective_preference,
    pairwise_preferences,
    pooled_preferences,
    pref_prob,
    preference_agreement,
    read_votes,
    records_by_scene,
    significance_thresholds,
    simulate_votes,
    subjective_preference,
)


def _matrix(methods, wins, ties=None):
    m = len(methods)
    return VoteMatrix(tuple(methods), np.array(wins, dtype=float), np.zeros((m, m)) if ties is None else np.array(ties, dtype=float))


def test_binom_cdf_values():
    assert binom_cdf(0, 20, 0.5) == pytest.approx(0.5 ** 20, rel=1e-12)
    assert binom_cdf(6, 20, 0.5) == pytest.approx(60460 / 2 ** 20, rel=1e-12)
    assert binom_cdf(13, 20, 0.5) == pytest.approx(1.0 - 60460 / 2 ** 20, rel=1e-12)
    assert binom_cdf(20, 20, 0.5) == 1.0
    assert binom_cdf(3, 10, 0.0) == 1.0
    assert binom_cdf(3, 10, 1.0) == 0.0


def test_binom_cdf_validation():
    with pytest.raises(DomainError):
        binom_cdf(21, 20, 0.5)
    with pytest.raises(DomainError):
        binom_cdf(2, 20, 1.5)
    with pytest.raises(DomainError):
        binom_cdf(2.5, 20, 0.5)


def test_significance_thresholds():
    assert significance_thresholds(20, 0.06) == (6, 13)
    assert significance_thresholds(1, 0.06) == (None, 1)
    with pytest.raises(DomainError):
        significance_thresholds(20, 0.5)
    with pytest.raises(DomainError):
        significance_thresholds(0)


def test_thresholds_are_symmetric():
    for n in (10, 20, 31, 50):
        k_lo, k_hi = significance_thresholds(n)
        assert k_lo is not None
        assert k_lo + k_hi == n - 1


def test_pref_prob():
    assert pref_prob(13, 20) == pytest.approx(0.65)
    assert pref_prob(5, 20, 2) == pytest.approx(0.30)
    assert pref_prob(0, 20, 20) == 0.5
    with pytest.raises(DomainError):
        pref_prob(15, 20, 10)
    with pytest.raises(DomainError):
        pref_prob(1, 0)


def test_classify():
    assert classify(13, 20) is Verdict.FAVORED
    assert classify(6, 20) is Verdict.DISFAVORED
    assert classify(10, 20) is Verdict.NEUTRAL
    assert classify(7, 20) is Verdict.NEUTRAL


def test_vote_matrix_validation():
    with pytest.raises(DomainError):
        _matrix(["a", "a"], [[0, 1], [1, 0]])
    with pytest.raises(DomainError):
        _matrix(["a", "b"], [[1, 1], [1, 0]])
    with pytest.raises(DomainError):
        _matrix(["a", "b"], [[0, 1], [1, 0]], ties=[[0, 1], [2, 0]])
    with pytest.raises(DomainError):
        _matrix(["a", "b"], [[0, -1], [1, 0]])


def test_matrix_from_records():
    records = [
        VoteRecord("s1", "a", "b", 8, 10, 2),
        VoteRecord("s2", "a", "b", 5, 4, 1),
        VoteRecord("s1", "b", "c", 12, 8, 0),
    ]
    matrix = VoteMatrix.from_records(records)
    assert matrix.methods == ("a", "b", "c")
    assert matrix.wins[0, 1] == 13
    assert matrix.wins[1, 0] == 14
    assert matrix.ties[0, 1] == matrix.ties[1, 0] == 3
    assert matrix.counts[0, 1] == 30
    assert matrix.counts[0, 2] == 0
    assert matrix.n_per_pair == 30
    with pytest.raises(IncompleteDataError):
        VoteMatrix.from_records(records, ["a", "b"])


def test_pairwise_and_pooled_preferences():
    matrix = _matrix(["a", "b", "c"], [[0, 15, 10], [5, 0, 6], [10, 14, 0]])
    per_pair = {(r.method, r.opponent): r for r in pairwise_preferences(matrix)}
    assert len(per_pair) == 6
    assert per_pair[("a", "b")].pref_prob == pytest.approx(0.75)
    assert per_pair[("a", "b")].verdict is Verdict.FAVORED
    assert per_pair[("b", "a")].verdict is Verdict.DISFAVORED
    assert per_pair[("a", "c")].verdict is Verdict.NEUTRAL

    pooled = {r.method: r for r in pooled_preferences(matrix)}
    assert pooled["a"].pref_prob == pytest.approx((0.75 + 0.5) / 2)
    assert pooled["a"].n == 40
    assert pooled["a"].votes == 25
    assert pooled["b"].verdict is Verdict.DISFAVORED
    assert pooled["a"].opponent is None
    assert "opponent" not in pooled["a"].to_dict()


def test_bradley_terry_two_methods():
    bt = bradley_terry(_matrix(["a", "b"], [[0, 15], [5, 0]]))
    assert bt.converged
    assert bt.strengths == pytest.approx((0.75, 0.25), abs=1e-6)
    assert bt.ranking() == ["a", "b"]
    assert sum(bt.strengths) == pytest.approx(1.0)


def test_bradley_terry_all_ties_is_uniform():
    ties = [[0, 10, 10], [10, 0, 10], [10, 10, 0]]
    bt = bradley_terry(_matrix(["a", "b", "c"], np.zeros((3, 3)), ties))
    assert bt.strengths == pytest.approx((1 / 3, 1 / 3, 1 / 3), abs=1e-9)


def test_bradley_terry_disconnected():
    wins = np.zeros((4, 4))
    wins[0, 1], wins[1, 0] = 6, 4
    wins[2, 3], wins[3, 2] = 3, 7
    with pytest.raises(IdentifiabilityError):
        bradley_terry(_matrix(["a", "b", "c", "d"], wins))


def test_bradley_terry_winless_method_hits_floor():
    bt = bradley_terry(_matrix(["a", "b"], [[0, 10], [0, 0]]))
    assert bt.strengths[1] == pytest.approx(BT_FLOOR, rel=1e-3)
    assert bt.ranking() == ["a", "b"]


def test_bradley_terry_recovers_simulated_ranking():
    methods = ["a", "b", "c", "d"]
    matrix = simulate_votes(methods, [4.0, 2.0, 1.0, 0.5], n_per_pair=200, seed=1)
    bt = bradley_terry(matrix)
    assert bt.ranking() == methods
    assert bt.strengths[0] / bt.strengths[1] == pytest.approx(2.0, rel=0.5)


def test_bradley_terry_ranking_holds_across_seeds():
    methods = ["a", "b", "c", "d"]
    recovered = sum(
        bradley_terry(simulate_votes(methods, [4.0, 2.0, 1.0, 0.5], n_per_pair=200, seed=seed)).ranking() == methods
        for seed in range(100)
    )
    assert recovered >= 99


def test_simulate_votes_is_seeded():
    a = simulate_votes(["x", "y", "z"], [1.0, 2.0, 3.0], 50, seed=9)
    b = simulate_votes(["x", "y", "z"], [1.0, 2.0, 3.0], 50, seed=9)
    assert np.array_equal(a.wins, b.wins)
    assert np.all(a.counts[~np.eye(3, dtype=bool)] == 50)
    with pytest.raises(DomainError):
        simulate_votes(["x", "y"], [1.0, 0.0], 10)


def test_objective_preference():
    even = {"s1": {"a": 0.9, "b": 0.8}, "s2": {"a": 0.7, "b": 0.8}}
    assert objective_preference(even, Polarity.HIGHER_BETTER) == {"a": 50.0, "b": 50.0}

    tie = {"s1": {"a": 0.9, "b": 0.8}, "s2": {"a": 0.5, "b": 0.5}}
    assert objective_preference(tie, Polarity.HIGHER_BETTER) == {"a": 75.0, "b": 25.0}

    lower = {"s1": {"a": 0.1, "b": 0.2}}
    assert objective_preference(lower, Polarity.LOWER_BETTER) == {"a": 100.0, "b": 0.0}


def test_objective_preference_sums_to_hundred():
    scores = {f"s{i}": {m: float((i * 7 + k * 3) % 5) for k, m in enumerate("abcd")} for i in range(6)}
    row = objective_preference(scores, Polarity.LOWER_BETTER)
    assert math.fsum(row.values()) == pytest.approx(100.0)


def test_objective_preference_relative_tie():
    scores = {"s1": {"a": 1.0, "b": 1.0 + 1e-12}}
    assert objective_preference(scores, Polarity.HIGHER_BETTER) == {"a": 50.0, "b": 50.0}


def test_objective_preference_validation():
    with pytest.raises(IncompleteDataError):
        objective_preference({"s1": {"a": 1.0, "b": 2.0}, "s2": {"a": 1.0}}, Polarity.HIGHER_BETTER)
    with pytest.raises(DomainError):
        objective_preference({"s1": {"a": 1.0}}, Polarity.HIGHER_BETTER)
    with pytest.raises(IncompleteDataError):
        objective_preference({}, Polarity.HIGHER_BETTER)


def test_subjective_preference():
    records = [VoteRecord("", "a", "b", 15, 5, 0), VoteRecord("", "a", "c", 8, 8, 4)]
    row = subjective_preference(records)
    assert row["a"] == pytest.approx(100.0 * 25 / 40)
    assert row["b"] == pytest.approx(100.0 * 5 / 40)
    assert row["c"] == pytest.approx(100.0 * 10 / 40)
    assert math.fsum(row.values()) == pytest.approx(100.0)


def test_preference_agreement():
    same = preference_agreement({"a": 60.0, "b": 40.0, "c": 0.0}, {"a": 50.0, "b": 30.0, "c": 20.0})
    assert same.spearman == pytest.approx(1.0)
    assert same.top_match
    assert same.mean_abs_diff == pytest.approx(40.0 / 3.0)

    flat = preference_agreement({"a": 50.0, "b": 50.0}, {"a": 70.0, "b": 30.0})
    assert flat.spearman is None
    assert flat.top_match
    with pytest.raises(IncompleteDataError):
        preference_agreement({"a": 1.0}, {"b": 1.0})


def test_read_votes(votes_csv):
    path = votes_csv(["s1,a,b,12,6,2", "s2,a,b,10,10,0"])
    records = read_votes(path)
    assert [r.row for r in records] == [2, 3]
    assert records[0] == VoteRecord("s1", "a", "b", 12.0, 6.0, 2.0, row=2)
    assert list(records_by_scene(records)) == ["s1", "s2"]


def test_read_votes_without_scene_column(tmp_path):
    path = tmp_path / "votes.csv"
    path.write_text("method_a,method_b,votes_a,votes_b,ties\nx,y,3,4,1\n", encoding="utf-8")
    records = read_votes(path)
    assert records[0].scene == ""
    assert records[0].total == 8


@pytest.mark.parametrize(
    "rows, bad_row",
    [
        (["s1,a,b,12,6,2", "s1,a,b,ten,6,2"], 3),
        (["s1,a,b,-1,6,2"], 2),
        (["s1,a,a,1,6,2"], 2),
        (["s1,a,,1,6,2"], 2),
        (["s1,a,b,1,6,"], 2),
        ([], 1),
    ],
)
def test_read_votes_errors(votes_csv, rows, bad_row):
    with pytest.raises(VoteFormatError) as excinfo:
        read_votes(votes_csv(rows))
    assert excinfo.value.row == bad_row


def test_read_votes_missing_column(tmp_path):
    path = tmp_path / "votes.csv"
    path.write_text("scene,method_a,method_b,votes_a\ns,a,b,1\n", encoding="utf-8")
    with pytest.raises(VoteFormatError) as excinfo:
        read_votes(path)
    assert excinfo.value.row == 1
    assert "votes_b" in str(excinfo.value)


def test_dominant_method_at_four_methods():
    scores = {f"s{i}": {"a": 0.99, "b": 0.5 + 0.01 * i, "c": 0.4, "d": 0.3 - 0.01 * i} for i in range(5)}
    higher = objective_preference(scores, Polarity.HIGHER_BETTER)
    assert higher["a"] == pytest.approx(50.0, abs=1e-9)
    assert math.fsum(higher.values()) == pytest.approx(100.0, abs=1e-9)
    lower = objective_preference(scores, Polarity.LOWER_BETTER)
    assert lower["a"] == 0.0
    assert lower["d"] == pytest.approx(50.0, abs=1e-9)


def test_all_equal_scores_split_evenly():
    scores = {"s1": dict.fromkeys("abcd", 0.7), "s2": dict.fromkeys("abcd", 0.2)}
    assert objective_preference(scores, Polarity.HIGHER_BETTER) == dict.fromkeys("abcd", 25.0)


def test_uniform_votes_are_mostly_neutral():
    matrix = simulate_votes(["a", "b", "c", "d"], [1.0] * 4, n_per_pair=20, seed=4)
    verdicts = [result.verdict for result in pairwise_preferences(matrix)]
    assert len(verdicts) == 12
    assert sum(verdict is Verdict.NEUTRAL for verdict in verdicts) > len(verdicts) / 2
