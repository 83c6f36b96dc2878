"""Computable artifacts of the sum-rate outer bound.

Classifies each slot's end-to-end matrix by the position of its single
zero entry (or lack of one), counts those states over a schedule, builds
the coefficient-maximum constants entering the bound, evaluates the three
slope bounds whose minimum caps the sum-DoF at 4/3, and numerically checks
the Gaussian entropy-difference lemma the bound proofs lean on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import ChannelRealization, EndToEndMatrix, end_to_end
from .scheme import AfAlphabet, AfSchedule, InvalidPower, plan_achievability

# Looser than the coefficient-construction precision (1e-12) so state
# labels never flap, still far tighter than any generic nonzero entry.
DEFAULT_STATE_TOL = 1e-9

_LOG2_2PIE = math.log2(2.0 * math.pi * math.e)

RESIDUAL_NOTE = ("bound constants omit entropy-difference remainders that "
                 "have no closed form; compare slope terms only")


class ImpossiblePattern(Exception):
    """A zero pattern that generic channels cannot produce: two or more
    zero entries with at least one nonzero entry."""


class SingularCovariance(Exception):
    """Covariance (or mixing matrix) too close to singular to evaluate."""


class StateLabel(str, Enum):
    A = "A"          # only the (2,1) entry is zero
    B = "B"          # only the (1,2) entry is zero
    C1 = "C1"        # no zero entries
    C2 = "C2"        # only the (1,1) entry is zero
    C3 = "C3"        # only the (2,2) entry is zero
    ZERO = "Zero"    # all entries zero (both coefficients zero)


@dataclass(frozen=True)
class StateCensus:
    """Per-state slot counts for one schedule."""

    nA: int
    nB: int
    nC1: int
    nC2: int
    nC3: int
    nZero: int
    n: int

    def __post_init__(self):
        counts = (self.nA, self.nB, self.nC1, self.nC2, self.nC3, self.nZero)
        if any(c < 0 for c in counts) or self.n < 1:
            raise ValueError("counts must be nonnegative and n >= 1")
        if sum(counts) != self.n:
            raise ValueError("state counts must sum to n")

    @property
    def nC(self) -> int:
        return self.nC1 + self.nC2 + self.nC3

    @property
    def nS(self) -> int:
        return self.n - self.nZero

    def to_dict(self) -> dict:
        return {"nA": self.nA, "nB": self.nB, "nC1": self.nC1,
                "nC2": self.nC2, "nC3": self.nC3, "nZero": self.nZero,
                "n": self.n}


@dataclass(frozen=True)
class BoundConstants:
    """Alphabet-wide maxima: M bounds any squared end-to-end coefficient,
    N bounds any effective noise variance."""

    M: float
    N: float
    M_ij: tuple[tuple[float, float], tuple[float, float]]

    def to_dict(self) -> dict:
        return {"M": self.M, "N": self.N,
                "M_ij": [list(row) for row in self.M_ij]}


@dataclass(frozen=True)
class BoundEvaluation:
    """The three per-symbol bound values at one power.

    Each bound is its slope term (1/2)(1 + |L|/n) log2 P plus the
    explicitly computable constant component; slope_dof holds the three
    prelog coefficients 1 + |L|/n in the same order.  residual_note records
    that further constant remainders exist but are not closed-form.
    """

    bound1: float
    bound2: float
    bound3: float
    slope_dof: tuple[float, float, float]
    argmin_set: str
    residual_note: str = RESIDUAL_NOTE

    def min_bound(self) -> float:
        return min(self.bound1, self.bound2, self.bound3)

    def min_slope_dof(self) -> float:
        return min(self.slope_dof)

    def to_dict(self) -> dict:
        return {"bound1": self.bound1, "bound2": self.bound2,
                "bound3": self.bound3, "slope_dof": list(self.slope_dof),
                "argmin_set": self.argmin_set,
                "residual_note": self.residual_note}


def classify_state(G: EndToEndMatrix,
                   rel_tol: float = DEFAULT_STATE_TOL) -> StateLabel:
    """Label a slot matrix by the position of its zero entry, if any.

    Entries are zero-tested against rel_tol times the largest-magnitude
    entry.  Two or three zeros cannot happen over a generic channel, so
    that pattern raises ImpossiblePattern (a tolerance or genericity bug).
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    entries = G.entries()
    scale = max(abs(e) for e in entries)
    if scale == 0.0:
        return StateLabel.ZERO
    zero = [abs(e) <= rel_tol * scale for e in entries]
    n_zero = sum(zero)
    if n_zero == 0:
        return StateLabel.C1
    if n_zero == 1:
        # entry order: alpha1, beta1, alpha2, beta2
        return (StateLabel.C2, StateLabel.B, StateLabel.A,
                StateLabel.C3)[zero.index(True)]
    raise ImpossiblePattern(
        f"{n_zero} zero entries with a nonzero entry present: {entries}")


def slot_states(ch: ChannelRealization, schedule: AfSchedule,
                rel_tol: float = DEFAULT_STATE_TOL) -> list[StateLabel]:
    """Per-slot state labels for a schedule.

    Membership in state A is double-checked through its defining linear
    form (the (2,1) coefficient as a function of the slot's mu, lambda);
    disagreement with the zero-pattern label means the tolerance split the
    two computations and raises ImpossiblePattern.
    """
    labels = []
    for k, (mu, lam) in enumerate(schedule.pairs):
        if mu == 0.0 and lam == 0.0:
            labels.append(StateLabel.ZERO)
            continue
        G = end_to_end(ch, mu, lam)
        label = classify_state(G, rel_tol)
        if label is StateLabel.ZERO:
            raise ImpossiblePattern(
                f"slot {k}: nonzero coefficients produced an all-zero matrix")
        form = mu * ch.h_ud2 * ch.h_s1u + lam * ch.h_vd2 * ch.h_s1v
        if (abs(form) <= rel_tol * G.max_abs()) != (label is StateLabel.A):
            raise ImpossiblePattern(
                f"slot {k}: zero-pattern and linear-form tests for state A disagree")
        labels.append(label)
    return labels


def census(ch: ChannelRealization, schedule: AfSchedule,
           rel_tol: float = DEFAULT_STATE_TOL) -> StateCensus:
    """Classify every slot of a schedule and count the states."""
    labels = slot_states(ch, schedule, rel_tol)
    counts = {label: 0 for label in StateLabel}
    for label in labels:
        counts[label] += 1
    return StateCensus(nA=counts[StateLabel.A], nB=counts[StateLabel.B],
                       nC1=counts[StateLabel.C1], nC2=counts[StateLabel.C2],
                       nC3=counts[StateLabel.C3], nZero=counts[StateLabel.ZERO],
                       n=len(schedule.pairs))


def bound_constants(ch: ChannelRealization,
                    alphabet: AfAlphabet) -> BoundConstants:
    """Exhaustively maximize the squared coefficients and noise variances
    over the finite alphabet."""

    def best(hu: float, hsu: float, hv: float, hsv: float) -> float:
        return max((mu * hu * hsu + lam * hv * hsv) ** 2
                   for mu in alphabet.U for lam in alphabet.V)

    m11 = best(ch.h_ud1, ch.h_s1u, ch.h_vd1, ch.h_s1v)
    m12 = best(ch.h_ud1, ch.h_s2u, ch.h_vd1, ch.h_s2v)
    m21 = best(ch.h_ud2, ch.h_s1u, ch.h_vd2, ch.h_s1v)
    m22 = best(ch.h_ud2, ch.h_s2u, ch.h_vd2, ch.h_s2v)
    noise = max(
        max(ch.h_ud1 ** 2 * mu ** 2 + ch.h_vd1 ** 2 * lam ** 2
            for mu in alphabet.U for lam in alphabet.V),
        max(ch.h_ud2 ** 2 * mu ** 2 + ch.h_vd2 ** 2 * lam ** 2
            for mu in alphabet.U for lam in alphabet.V))
    return BoundConstants(M=max(m11, m12, m21, m22), N=noise + 1.0,
                          M_ij=((m11, m12), (m21, m22)))


def evaluate_bounds(census_counts: StateCensus, P: float,
                    constants: BoundConstants,
                    ch: ChannelRealization | None = None) -> BoundEvaluation:
    """Evaluate the three sum-rate bounds per symbol, in bits.

    Each bound contributes, per received-sample entropy term it contains,
    a packing constant (1/2) log2(1 + 2M/N); counted slots additionally
    contribute half of log2(N) plus half of log2(2 pi e).  The channel is
    accepted for interface symmetry but all computable parts are functions
    of the census and constants alone; the remainders live behind
    residual_note.
    """
    if P < 1:
        raise InvalidPower(f"P must be >= 1, got {P}")
    n = census_counts.n
    log2_p = math.log2(P)
    packing = 0.5 * math.log2(1.0 + 2.0 * constants.M / constants.N)
    log2_n_const = math.log2(constants.N)

    def one(count_l: int, counted: int, entropy_terms: int) -> tuple[float, float]:
        slope_coeff = 1.0 + count_l / n
        const = (entropy_terms * packing
                 + (counted / (2.0 * n)) * (log2_n_const + _LOG2_2PIE))
        return slope_coeff, 0.5 * slope_coeff * log2_p + const

    c_a, c_b = census_counts.nA, census_counts.nB
    c_c, c_s = census_counts.nC, census_counts.nS
    s1, b1 = one(c_c, c_a + c_b + 2 * c_c, 4)
    s2, b2 = one(c_b, c_s + c_b, 2)
    s3, b3 = one(c_a, c_s + c_a, 2)
    argmin_set, _ = min_census_fraction(census_counts)
    return BoundEvaluation(bound1=b1, bound2=b2, bound3=b3,
                           slope_dof=(s1, s2, s3), argmin_set=argmin_set)


def min_census_fraction(census_counts: StateCensus) -> tuple[str, float]:
    """Smallest of |A|/n, |B|/n, |C|/n; ties break in that order.

    Always at most 1/3, and strictly less when any slot idles both relays.
    """
    counts = (("A", census_counts.nA), ("B", census_counts.nB),
              ("C", census_counts.nC))
    name, count = min(counts, key=lambda kv: kv[1])
    return name, count / census_counts.n


def gaussian_entropy(cov) -> float:
    """Differential entropy of a Gaussian with the given covariance, in bits."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] < 1:
        raise ValueError("covariance must be a square matrix")
    scale = max(1.0, float(np.max(np.abs(cov))))
    if not np.allclose(cov, cov.T, rtol=1e-9, atol=1e-12 * scale):
        raise ValueError("covariance must be symmetric")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(f"covariance not positive definite: {exc}") from exc
    diag = np.diag(chol)
    if float(np.min(diag)) ** 2 <= 1e-12 * float(np.max(np.diag(cov))):
        raise SingularCovariance("covariance determinant below tolerance")
    dim = cov.shape[0]
    return 0.5 * dim * _LOG2_2PIE + float(np.sum(np.log2(diag)))


def _symmetrized(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.T)


def check_lemma2(M, Mp, cov_x, cov_yz, slack: float = 1e-9):
    """Evaluate both sides of the entropy-difference inequality

        h(M X + Y) - h(M' X + Z)
            <= h(M' M^-1 Y - Z) - h(Z | Y) - log2 |det(M' M^-1)|

    for jointly Gaussian (X, Y, Z) with X independent of (Y, Z).

    Parameters
    ----------
    M, Mp : (d, d) invertible mixing matrices
    cov_x : (d, d) covariance of X
    cov_yz : (2d, 2d) joint covariance of (Y, Z)
    slack : tolerance added to the right side before comparing

    Returns
    -------
    (lhs, rhs, holds) with everything in bits.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    Mp = np.atleast_2d(np.asarray(Mp, dtype=float))
    cov_x = np.atleast_2d(np.asarray(cov_x, dtype=float))
    cov_yz = np.atleast_2d(np.asarray(cov_yz, dtype=float))
    d = M.shape[0]
    if M.shape != (d, d) or Mp.shape != (d, d) or cov_x.shape != (d, d):
        raise ValueError("M, Mp and cov_x must all be (d, d)")
    if cov_yz.shape != (2 * d, 2 * d):
        raise ValueError("cov_yz must be the (2d, 2d) joint covariance of (Y, Z)")

    sign_m, logabs_m = np.linalg.slogdet(M)
    sign_mp, logabs_mp = np.linalg.slogdet(Mp)
    if sign_m == 0 or sign_mp == 0:
        raise SingularCovariance("mixing matrices must be invertible")

    cov_y = cov_yz[:d, :d]
    cov_z = cov_yz[d:, d:]
    cov_cross = cov_yz[:d, d:]          # Cov(Y, Z)

    lhs = (gaussian_entropy(_symmetrized(M @ cov_x @ M.T + cov_y))
           - gaussian_entropy(_symmetrized(Mp @ cov_x @ Mp.T + cov_z)))

    w = Mp @ np.linalg.inv(M)
    diff_cov = (w @ cov_y @ w.T - w @ cov_cross - cov_cross.T @ w.T + cov_z)
    h_diff = gaussian_entropy(_symmetrized(diff_cov))
    h_z_given_y = gaussian_entropy(cov_yz) - gaussian_entropy(cov_y)
    log2_det_w = (logabs_mp - logabs_m) / math.log(2.0)
    rhs = h_diff - h_z_given_y - log2_det_w
    return float(lhs), float(rhs), bool(lhs <= rhs + slack)


def random_spd(rng: np.random.Generator, dim: int, jitter: float = 0.5) -> np.ndarray:
    """Random symmetric positive definite matrix, comfortably conditioned."""
    a = rng.standard_normal((dim, dim))
    return a @ a.T + jitter * np.eye(dim)


def random_lemma2_instance(rng: np.random.Generator, max_dim: int = 4):
    """Random (M, Mp, cov_x, cov_yz) tuple for exercising check_lemma2."""
    d = int(rng.integers(1, max_dim + 1))

    def invertible() -> np.ndarray:
        while True:
            m = rng.standard_normal((d, d))
            if abs(np.linalg.det(m)) > 1e-3:
                return m

    return invertible(), invertible(), random_spd(rng, d), random_spd(rng, 2 * d)


def random_schedule(ch: ChannelRealization, n: int, rng: np.random.Generator,
                    include_zero: bool = True) -> AfSchedule:
    """Random schedule over an alphabet rich enough to reach every state.

    The coefficient set contains the two scheme cancelling values, the two
    values nulling the remaining diagonal entries, a random filler, and
    optionally zeros so some slots idle both relays.
    """
    plan = plan_achievability(ch)
    c = plan.c
    null_c2 = -(c * ch.h_ud1 * ch.h_s1u) / (ch.h_vd1 * ch.h_s1v)
    null_c3 = -(c * ch.h_ud2 * ch.h_s2u) / (ch.h_vd2 * ch.h_s2v)
    u_vals = (c, 0.0) if include_zero else (c,)
    v_vals = (0.0, plan.lambda_phase1, plan.lambda_phase2, null_c2, null_c3,
              float(rng.uniform(0.2, 2.0)))
    pairs = tuple(
        (u_vals[int(rng.integers(len(u_vals)))],
         v_vals[int(rng.integers(len(v_vals)))])
        for _ in range(n))
    return AfSchedule(pairs=pairs, alphabet=AfAlphabet(U=u_vals, V=v_vals))
