"""Fixed-gain model of the two-hop 2x2 interference channel.

Two sources reach two destinations only through two relays; there is no
direct source-destination link.  Everything here is a pure function of the
eight real channel gains: genericity checks, the end-to-end matrix induced
by one pair of relay scaling coefficients, and the variance of the
effective noise seen at a destination.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

DEFAULT_REL_TOL = 1e-12

_GAIN_KEYS = ("s1u", "s2u", "s1v", "s2v", "ud1", "vd1", "ud2", "vd2")


class GenericityFailure(Exception):
    """Repeated random draws kept failing the genericity conditions."""


@dataclass(frozen=True)
class ChannelRealization:
    """Eight real gains: sources s1, s2 -> relays u, v -> destinations d1, d2."""

    h_s1u: float
    h_s2u: float
    h_s1v: float
    h_s2v: float
    h_ud1: float
    h_vd1: float
    h_ud2: float
    h_vd2: float

    def gains(self) -> tuple[float, ...]:
        return (self.h_s1u, self.h_s2u, self.h_s1v, self.h_s2v,
                self.h_ud1, self.h_vd1, self.h_ud2, self.h_vd2)

    def first_hop(self) -> np.ndarray:
        """2x2 matrix mapping source symbols to noiseless relay inputs."""
        return np.array([[self.h_s1u, self.h_s2u],
                         [self.h_s1v, self.h_s2v]])

    def second_hop(self) -> np.ndarray:
        """2x2 matrix mapping relay transmissions to noiseless destination inputs."""
        return np.array([[self.h_ud1, self.h_vd1],
                         [self.h_ud2, self.h_vd2]])

    def cross_matrix(self, i: int) -> np.ndarray:
        """Gain-product matrix whose columns give the per-relay route gains.

        Row 1 pairs destination d1 with source i; row 2 pairs d2 with the
        other source.  Full rank of both cross matrices is one of the
        genericity conditions.
        """
        if i == 1:
            top, bottom = (self.h_s1u, self.h_s1v), (self.h_s2u, self.h_s2v)
        elif i == 2:
            top, bottom = (self.h_s2u, self.h_s2v), (self.h_s1u, self.h_s1v)
        else:
            raise ValueError("cross matrix index must be 1 or 2")
        return np.array([[self.h_ud1 * top[0], self.h_vd1 * top[1]],
                         [self.h_ud2 * bottom[0], self.h_vd2 * bottom[1]]])

    def to_dict(self) -> dict:
        return dict(zip(_GAIN_KEYS, self.gains()))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelRealization":
        missing = [k for k in _GAIN_KEYS if k not in d]
        if missing:
            raise ValueError(f"missing channel gains: {missing}")
        return cls(*(float(d[k]) for k in _GAIN_KEYS))

    @classmethod
    def from_json(cls, text: str) -> "ChannelRealization":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of the genericity check: four rank tests plus all-nonzero."""

    all_nonzero: bool
    rank_h1_full: bool
    rank_h2_full: bool
    rank_hsup1_full: bool
    rank_hsup2_full: bool
    det_h1: float
    det_h2: float
    det_hsup1: float
    det_hsup2: float

    @property
    def generic(self) -> bool:
        return (self.all_nonzero and self.rank_h1_full and self.rank_h2_full
                and self.rank_hsup1_full and self.rank_hsup2_full)


def _det_and_rank(m11: float, m12: float, m21: float, m22: float,
                  rel_tol: float) -> tuple[float, bool]:
    # Rank test is relative to the product of largest-magnitude row entries,
    # so it is invariant to rescaling either row.
    det = m11 * m22 - m12 * m21
    scale = max(abs(m11), abs(m12)) * max(abs(m21), abs(m22))
    return det, abs(det) > rel_tol * scale


def check_conditions(ch: ChannelRealization,
                     rel_tol: float = DEFAULT_REL_TOL) -> ConditionReport:
    """Evaluate the genericity conditions for a channel realization.

    Checks that every gain is nonzero and that both hop matrices and both
    cross matrices have full rank, all relative to ``rel_tol``.  Never
    raises; consumers decide what to do with a non-generic report.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    det_h1, r_h1 = _det_and_rank(ch.h_s1u, ch.h_s2u, ch.h_s1v, ch.h_s2v, rel_tol)
    det_h2, r_h2 = _det_and_rank(ch.h_ud1, ch.h_vd1, ch.h_ud2, ch.h_vd2, rel_tol)
    det_x1, r_x1 = _det_and_rank(ch.h_ud1 * ch.h_s1u, ch.h_vd1 * ch.h_s1v,
                                 ch.h_ud2 * ch.h_s2u, ch.h_vd2 * ch.h_s2v, rel_tol)
    det_x2, r_x2 = _det_and_rank(ch.h_ud1 * ch.h_s2u, ch.h_vd1 * ch.h_s2v,
                                 ch.h_ud2 * ch.h_s1u, ch.h_vd2 * ch.h_s1v, rel_tol)
    gains = ch.gains()
    gmax = max(abs(g) for g in gains)
    nonzero = all(abs(g) > rel_tol * gmax for g in gains)
    return ConditionReport(
        all_nonzero=nonzero,
        rank_h1_full=r_h1, rank_h2_full=r_h2,
        rank_hsup1_full=r_x1, rank_hsup2_full=r_x2,
        det_h1=det_h1, det_h2=det_h2, det_hsup1=det_x1, det_hsup2=det_x2)


def sample_channel(seed: int, max_rejects: int = 100,
                   rel_tol: float = DEFAULT_REL_TOL) -> ChannelRealization:
    """Draw a generic channel with i.i.d. standard normal gains.

    Non-generic draws are rejected and redrawn; they occur with probability
    ~0, so hitting ``max_rejects`` indicates a tolerance bug rather than bad
    luck and raises GenericityFailure.  Deterministic given ``seed``.
    """
    if max_rejects < 1:
        raise ValueError("max_rejects must be >= 1")
    rng = np.random.default_rng(seed)
    for _ in range(max_rejects):
        ch = ChannelRealization(*(float(g) for g in rng.standard_normal(8)))
        if check_conditions(ch, rel_tol).generic:
            return ch
    raise GenericityFailure(
        f"seed {seed}: {max_rejects} consecutive draws failed the genericity "
        "check; this points at a tolerance bug, not at the distribution")


@dataclass(frozen=True)
class EndToEndMatrix:
    """The 2x2 source-to-destination matrix for one relay coefficient pair.

    Entry layout: [[alpha1, beta1], [alpha2, beta2]], rows indexed by
    destination and columns by source.  Carries the generating (mu, lam)
    pair; `lam` is the v-relay coefficient (named to dodge the keyword).
    """

    alpha1: float
    beta1: float
    alpha2: float
    beta2: float
    mu: float
    lam: float

    def entries(self) -> tuple[float, float, float, float]:
        return (self.alpha1, self.beta1, self.alpha2, self.beta2)

    def as_array(self) -> np.ndarray:
        return np.array([[self.alpha1, self.beta1],
                         [self.alpha2, self.beta2]])

    def max_abs(self) -> float:
        return max(abs(e) for e in self.entries())


def end_to_end(ch: ChannelRealization, mu: float, lam: float) -> EndToEndMatrix:
    """End-to-end matrix seen through relays scaling by mu (u) and lam (v)."""
    return EndToEndMatrix(
        alpha1=mu * ch.h_ud1 * ch.h_s1u + lam * ch.h_vd1 * ch.h_s1v,
        beta1=mu * ch.h_ud1 * ch.h_s2u + lam * ch.h_vd1 * ch.h_s2v,
        alpha2=mu * ch.h_ud2 * ch.h_s1u + lam * ch.h_vd2 * ch.h_s1v,
        beta2=mu * ch.h_ud2 * ch.h_s2u + lam * ch.h_vd2 * ch.h_s2v,
        mu=float(mu), lam=float(lam))


def effective_noise_variance(ch: ChannelRealization, mu: float, lam: float,
                             dest: int) -> float:
    """Variance of the forwarded-plus-local noise at destination ``dest``.

    The relays forward unit-variance noise scaled by their coefficients and
    the destination adds its own unit-variance term, so the result is
    always >= 1.
    """
    if dest == 1:
        hu, hv = ch.h_ud1, ch.h_vd1
    elif dest == 2:
        hu, hv = ch.h_ud2, ch.h_vd2
    else:
        raise ValueError("dest must be 1 or 2")
    return hu * hu * mu * mu + hv * hv * lam * lam + 1.0
