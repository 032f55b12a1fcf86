"""Pairwise-preference statistics for subjective studies and objective scores.

Vote CSV layout: ``scene,method_a,method_b,votes_a,votes_b,ties`` with the
scene column optional. Ties count half to each side wherever a single win
count is needed.
"""

import csv
import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np
from scipy import stats
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import gammaln, logsumexp

from core.errors import DomainError, IdentifiabilityError, IncompleteDataError, VoteFormatError
from core.logging import get_logger
from iqa.metrics import Polarity

log = get_logger(__name__)

DEFAULT_ALPHA = 0.06
BT_FLOOR = 1e-12
TIE_RTOL = 1e-9
VOTE_COLUMNS = ("method_a", "method_b", "votes_a", "votes_b", "ties")


class Verdict(str, Enum):
    FAVORED = "favored"
    NEUTRAL = "neutral"
    DISFAVORED = "disfavored"


@dataclass(frozen=True)
class VoteRecord:
    scene: str
    method_a: str
    method_b: str
    votes_a: float
    votes_b: float
    ties: float
    row: int = 0

    @property
    def total(self) -> float:
        return self.votes_a + self.votes_b + self.ties


@dataclass(frozen=True, eq=False)
class VoteMatrix:
    """wins[a][b] counts a over b; ties is symmetric; unobserved pairs are all zero."""

    methods: tuple[str, ...]
    wins: np.ndarray
    ties: np.ndarray

    def __post_init__(self) -> None:
        m = len(self.methods)
        if m < 1 or len(set(self.methods)) != m:
            raise DomainError("Vote matrix needs distinct method names")
        wins = np.array(self.wins, dtype=np.float64)
        ties = np.array(self.ties, dtype=np.float64)
        if wins.shape != (m, m) or ties.shape != (m, m):
            raise DomainError(f"Vote matrices must be {m}x{m}")
        if np.any(wins < 0) or np.any(ties < 0):
            raise DomainError("Vote counts must be non-negative")
        if np.any(np.diag(wins) != 0) or np.any(np.diag(ties) != 0):
            raise DomainError("A method cannot be compared with itself")
        if not np.array_equal(ties, ties.T):
            raise DomainError("Tie matrix must be symmetric")
        wins.setflags(write=False)
        ties.setflags(write=False)
        object.__setattr__(self, "wins", wins)
        object.__setattr__(self, "ties", ties)

    @property
    def counts(self) -> np.ndarray:
        """Comparisons per pair (wins both ways plus ties)."""
        return self.wins + self.wins.T + self.ties

    @property
    def n_per_pair(self) -> int:
        observed = self.counts[self.counts > 0]
        if observed.size == 0:
            return 0
        return int(round(float(observed.max())))

    def index(self, method: str) -> int:
        try:
            return self.methods.index(method)
        except ValueError:
            raise DomainError(f"Unknown method: {method}") from None

    @classmethod
    def from_records(cls, records: Sequence[VoteRecord], methods: Optional[Sequence[str]] = None) -> "VoteMatrix":
        if methods is None:
            order: list[str] = []
            for record in records:
                for name in (record.method_a, record.method_b):
                    if name not in order:
                        order.append(name)
            methods = order
        names = tuple(methods)
        position = {name: i for i, name in enumerate(names)}
        wins = np.zeros((len(names), len(names)))
        ties = np.zeros((len(names), len(names)))
        for record in records:
            unknown = [name for name in (record.method_a, record.method_b) if name not in position]
            if unknown:
                raise IncompleteDataError(f"Votes name methods outside the table: {', '.join(unknown)}")
            a, b = position[record.method_a], position[record.method_b]
            wins[a, b] += record.votes_a
            wins[b, a] += record.votes_b
            ties[a, b] += record.ties
            ties[b, a] += record.ties
        return cls(names, wins, ties)


@dataclass(frozen=True)
class PreferenceResult:
    method: str
    pref_prob: float
    votes: float
    verdict: Verdict
    n: int
    opponent: Optional[str] = None
    ties: float = 0.0

    def to_dict(self) -> dict:
        data = {
            "method": self.method,
            "pref_prob": self.pref_prob,
            "votes": self.votes,
            "ties": self.ties,
            "n": self.n,
            "verdict": self.verdict.value,
        }
        if self.opponent is not None:
            data["opponent"] = self.opponent
        return data


@dataclass(frozen=True)
class BtScores:
    methods: tuple[str, ...]
    strengths: tuple[float, ...]
    iterations: int
    converged: bool

    def ranking(self) -> list[str]:
        order = sorted(range(len(self.methods)), key=lambda i: (-self.strengths[i], i))
        return [self.methods[i] for i in order]

    def to_dict(self) -> dict:
        return {
            "strengths": dict(zip(self.methods, self.strengths)),
            "iterations": self.iterations,
            "converged": self.converged,
        }


def pref_prob(w: float, n: float, tau: float = 0.0) -> float:
    """Winning frequency with ties split evenly: w/n + tau/(2n)."""
    if n <= 0:
        raise DomainError(f"Participant count must be positive, got {n}")
    if w < 0 or tau < 0:
        raise DomainError(f"Votes and ties must be non-negative, got w={w}, tau={tau}")
    if w + tau > n:
        raise DomainError(f"Votes plus ties exceed participants: {w} + {tau} > {n}")
    return float((2.0 * w + tau) / (2.0 * n))


def binom_cdf(k: int, n: int, p: float) -> float:
    """P(X <= k) for X ~ Binomial(n, p), summed in log space."""
    if int(k) != k or int(n) != n:
        raise DomainError(f"k and n must be integers, got k={k}, n={n}")
    k, n = int(k), int(n)
    if n < 0 or not 0 <= k <= n:
        raise DomainError(f"Need 0 <= k <= n, got k={k}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"Probability must lie in [0, 1], got {p}")
    if k == n or p == 0.0:
        return 1.0
    if p == 1.0:
        return 0.0
    i = np.arange(k + 1)
    log_terms = gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1) + i * math.log(p) + (n - i) * math.log1p(-p)
    return min(1.0, float(np.exp(logsumexp(log_terms))))


def significance_thresholds(n: int, alpha: float = DEFAULT_ALPHA) -> tuple[Optional[int], int]:
    """(k_lo, k_hi) vote counts for a disfavored / favored verdict under a fair coin.

    k_lo is the largest k with CDF(k) <= alpha (None when even zero votes is
    not rare enough); k_hi is the smallest k with CDF(k) >= 1 - alpha.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if not 0.0 < alpha < 0.5:
        raise DomainError(f"alpha must lie in (0, 0.5), got {alpha}")
    n = int(n)
    cdf = [binom_cdf(k, n, 0.5) for k in range(n + 1)]
    below = [k for k, value in enumerate(cdf) if value <= alpha]
    k_lo = below[-1] if below else None
    k_hi = next(k for k, value in enumerate(cdf) if value >= 1.0 - alpha)
    return k_lo, k_hi


def classify(w: float, n: int, alpha: float = DEFAULT_ALPHA) -> Verdict:
    k_lo, k_hi = significance_thresholds(n, alpha)
    if w >= k_hi:
        return Verdict.FAVORED
    if k_lo is not None and w <= k_lo:
        return Verdict.DISFAVORED
    return Verdict.NEUTRAL


def pairwise_preferences(v: VoteMatrix, alpha: float = DEFAULT_ALPHA) -> list[PreferenceResult]:
    """One result per (method, opponent) over observed pairs, in matrix order."""
    counts = v.counts
    results = []
    for a, method in enumerate(v.methods):
        for b, opponent in enumerate(v.methods):
            if a == b or counts[a, b] == 0:
                continue
            n = int(round(float(counts[a, b])))
            wins = float(v.wins[a, b])
            ties = float(v.ties[a, b])
            results.append(PreferenceResult(
                method=method,
                pref_prob=pref_prob(wins, float(counts[a, b]), ties),
                votes=wins,
                verdict=classify(wins, n, alpha),
                n=n,
                opponent=opponent,
                ties=ties,
            ))
    return results


def pooled_preferences(v: VoteMatrix, alpha: float = DEFAULT_ALPHA) -> list[PreferenceResult]:
    """Mean preference over opponents; the verdict tests pooled wins at the pooled n."""
    counts = v.counts
    results = []
    for a, method in enumerate(v.methods):
        opponents = [b for b in range(len(v.methods)) if b != a and counts[a, b] > 0]
        if not opponents:
            continue
        probs = [pref_prob(float(v.wins[a, b]), float(counts[a, b]), float(v.ties[a, b])) for b in opponents]
        wins = math.fsum(float(v.wins[a, b]) for b in opponents)
        ties = math.fsum(float(v.ties[a, b]) for b in opponents)
        n = int(round(math.fsum(float(counts[a, b]) for b in opponents)))
        results.append(PreferenceResult(
            method=method,
            pref_prob=math.fsum(probs) / len(probs),
            votes=wins,
            verdict=classify(wins, n, alpha),
            n=n,
            ties=ties,
        ))
    return results


def bradley_terry(v: VoteMatrix, tol: float = 1e-8, max_iter: int = 10000) -> BtScores:
    """Minorization-maximization fit of Bradley-Terry strengths (sum to 1).

    Ties are split as half wins. A method without any win is pinned to a
    floor because its maximum-likelihood strength is zero.
    """
    m = len(v.methods)
    won = v.wins + v.ties / 2.0
    comparisons = won + won.T
    if m == 1:
        return BtScores(v.methods, (1.0,), 0, True)
    components, _ = connected_components(csr_matrix(comparisons > 0), directed=False)
    if components > 1:
        raise IdentifiabilityError(f"Comparison graph splits into {components} disconnected groups")

    total_wins = won.sum(axis=1)
    winless = total_wins <= 0
    for i in np.flatnonzero(winless):
        log.warning("Method has no wins; pinning strength to floor", extra={"tiqa_method": v.methods[i]})

    strengths = np.full(m, 1.0 / m)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        pair_sums = strengths[:, None] + strengths[None, :]
        denom = (comparisons / pair_sums).sum(axis=1)
        updated = np.where(winless, BT_FLOOR, total_wins / denom)
        updated = updated / updated.sum()
        change = float(np.max(np.abs(updated - strengths) / strengths))
        strengths = updated
        if change < tol:
            converged = True
            break
    if not converged:
        log.warning("Bradley-Terry did not converge", extra={"tiqa_iterations": iterations})
    strengths = np.maximum(strengths, BT_FLOOR)
    strengths = strengths / strengths.sum()
    return BtScores(v.methods, tuple(float(s) for s in strengths), iterations, converged)


def simulate_votes(
    methods: Sequence[str],
    strengths: Sequence[float],
    n_per_pair: int,
    seed: int = 0,
) -> VoteMatrix:
    """Draw pairwise outcomes from a Bradley-Terry model with the given strengths."""
    if len(methods) != len(strengths) or any(s <= 0 for s in strengths):
        raise DomainError("Need one positive strength per method")
    rng = np.random.default_rng(seed)
    m = len(methods)
    wins = np.zeros((m, m))
    for a, b in combinations(range(m), 2):
        p = strengths[a] / (strengths[a] + strengths[b])
        won = rng.binomial(n_per_pair, p)
        wins[a, b] = won
        wins[b, a] = n_per_pair - won
    return VoteMatrix(tuple(methods), wins, np.zeros((m, m)))


def _scores_tie(a: float, b: float) -> bool:
    return abs(a - b) <= TIE_RTOL * max(abs(a), abs(b))


def objective_preference(
    scores: Mapping[str, Mapping[str, float]],
    polarity: Polarity,
    methods: Optional[Sequence[str]] = None,
) -> dict[str, float]:
    """Percentage of per-scene pairwise wins for each method; sums to 100.

    ``scores`` maps scene -> method -> metric value. Every unordered pair in a
    scene awards one win to the better score, or half to each on a tie.
    """
    polarity = Polarity(polarity)
    if not scores:
        raise IncompleteDataError("No scenes in the score table")
    if methods is None:
        seen: list[str] = []
        for row in scores.values():
            seen.extend(name for name in row if name not in seen)
        methods = seen
    methods = list(methods)
    if len(methods) < 2:
        raise DomainError(f"Need at least two methods, got {len(methods)}")
    missing = [f"{scene}/{method}" for scene, row in scores.items() for method in methods if method not in row]
    if missing:
        raise IncompleteDataError(f"Missing scores: {', '.join(missing)}")

    wins = {method: 0.0 for method in methods}
    for scene, row in scores.items():
        for a, b in combinations(methods, 2):
            x, y = float(row[a]), float(row[b])
            if not (math.isfinite(x) and math.isfinite(y)):
                raise DomainError(f"Non-finite score in scene {scene}")
            if _scores_tie(x, y):
                wins[a] += 0.5
                wins[b] += 0.5
            elif polarity.better(x, y):
                wins[a] += 1.0
            else:
                wins[b] += 1.0
    total = len(scores) * math.comb(len(methods), 2)
    return {method: 100.0 * wins[method] / total for method in methods}


def subjective_preference(records: Sequence[VoteRecord], methods: Optional[Sequence[str]] = None) -> dict[str, float]:
    """Share of all votes won by each method (ties split), as a percentage."""
    if not records:
        raise IncompleteDataError("No vote records")
    matrix = VoteMatrix.from_records(records, methods)
    total = math.fsum(record.total for record in records)
    if total <= 0:
        raise IncompleteDataError("Vote records hold no votes")
    won = matrix.wins.sum(axis=1) + matrix.ties.sum(axis=1) / 2.0
    return {method: 100.0 * float(won[i]) / total for i, method in enumerate(matrix.methods)}


@dataclass(frozen=True)
class Agreement:
    spearman: Optional[float]
    top_match: bool
    mean_abs_diff: float

    def to_dict(self) -> dict:
        return {"spearman": self.spearman, "top_match": self.top_match, "mean_abs_diff": self.mean_abs_diff}


def preference_agreement(objective: Mapping[str, float], subjective: Mapping[str, float]) -> Agreement:
    """How closely an objective preference row tracks the subjective one."""
    if set(objective) != set(subjective):
        raise IncompleteDataError(
            f"Method sets differ: objective {sorted(objective)} vs subjective {sorted(subjective)}"
        )
    methods = sorted(objective)
    obj = np.array([objective[m] for m in methods], dtype=np.float64)
    subj = np.array([subjective[m] for m in methods], dtype=np.float64)

    rho: Optional[float] = None
    if len(methods) >= 2 and np.ptp(obj) > 0 and np.ptp(subj) > 0:
        rho = float(stats.spearmanr(obj, subj)[0])
    top_obj = {m for m, value in zip(methods, obj) if value == obj.max()}
    top_subj = {m for m, value in zip(methods, subj) if value == subj.max()}
    return Agreement(
        spearman=rho,
        top_match=bool(top_obj & top_subj),
        mean_abs_diff=float(np.mean(np.abs(obj - subj))),
    )


def _vote_number(row: int, column: str, raw: Optional[str]) -> float:
    if raw is None or not raw.strip():
        raise VoteFormatError(row, f"missing {column}")
    try:
        value = float(raw)
    except ValueError:
        raise VoteFormatError(row, f"{column} is not a number: {raw!r}") from None
    if not math.isfinite(value) or value < 0:
        raise VoteFormatError(row, f"{column} must be a finite non-negative count, got {raw!r}")
    return value


def read_votes(path: Union[str, Path]) -> list[VoteRecord]:
    """Parse a vote CSV; row numbers in errors count the header as row 1."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        header = [name.strip() for name in reader.fieldnames or []]
        missing = [column for column in VOTE_COLUMNS if column not in header]
        if missing:
            raise VoteFormatError(1, f"missing columns: {', '.join(missing)}")
        reader.fieldnames = header
        records = []
        for row_number, row in enumerate(reader, start=2):
            method_a = (row.get("method_a") or "").strip()
            method_b = (row.get("method_b") or "").strip()
            if not method_a or not method_b:
                raise VoteFormatError(row_number, "empty method name")
            if method_a == method_b:
                raise VoteFormatError(row_number, f"method compared with itself: {method_a}")
            records.append(VoteRecord(
                scene=(row.get("scene") or "").strip(),
                method_a=method_a,
                method_b=method_b,
                votes_a=_vote_number(row_number, "votes_a", row.get("votes_a")),
                votes_b=_vote_number(row_number, "votes_b", row.get("votes_b")),
                ties=_vote_number(row_number, "ties", row.get("ties")),
                row=row_number,
            ))
    if not records:
        raise VoteFormatError(1, "no vote rows")
    return records


def records_by_scene(records: Sequence[VoteRecord]) -> dict[str, list[VoteRecord]]:
    grouped: dict[str, list[VoteRecord]] = {}
    for record in records:
        grouped.setdefault(record.scene, []).append(record)
    return grouped
