"""Observer-side design: decay/gain constants and trigger parameter selection.

The design flow is emulation-based. A Luenberger gain ``L`` with ``A - L C``
Hurwitz is assumed given. From a Lyapunov pair ``(P, Q)`` we compute the
decay rate ``alpha`` and the injection gain ``gamma`` of the estimation
error dynamics driven by the sampling-induced error, then select the
trigger parameters ``(c1, c2, c3, sigma, epsilon)`` so that a strictly
decaying certificate with a tunable ultimate bound holds for the closed
loop, and finally evaluate the dwell-time lower bound on inter-event times.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    as_matrix,
    as_sym_matrix,
    eig_sym_extremes,
    norm2,
    solve_lyapunov,
)

__all__ = [
    "LtiPlant",
    "IssCertificate",
    "TriggerParams",
    "TriggerDesignError",
    "ThresholdGainConditionError",
    "FilterRateConditionError",
    "MarginConditionError",
    "iss_constants",
    "select_parameters",
    "params_from_gains",
    "dwell_time_bound",
    "normalize_feedthrough",
]


class TriggerDesignError(ValueError):
    """A trigger parameter selection condition is violated."""


class ThresholdGainConditionError(TriggerDesignError):
    """The product bound sigma_star * c2_star < gamma fails."""


class FilterRateConditionError(TriggerDesignError):
    """The filter decay rate c1 is too small for the requested alpha_bar."""


class MarginConditionError(TriggerDesignError):
    """The trigger margin epsilon lies outside (0, epsilon_star]."""


@dataclass(frozen=True)
class LtiPlant:
    """LTI plant ``xdot = A x + B u`` with output ``y = C x + D u + offset``.

    ``D`` and ``offset`` default to zero; a nonzero pair models a known
    feedthrough and constant bias that the sensor removes before
    triggering (see :func:`normalize_feedthrough`).
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray | None = None
    offset: np.ndarray | None = None

    def __post_init__(self):
        a = as_matrix(self.A, name="A")
        n = a.shape[0]
        if a.shape[1] != n:
            raise ValueError(f"A must be square, got shape {a.shape}")
        b = as_matrix(self.B, rows=n, name="B")
        c = as_matrix(self.C, cols=n, name="C")
        p, m = c.shape[0], b.shape[1]
        d = np.zeros((p, m)) if self.D is None else as_matrix(self.D, rows=p, cols=m, name="D")
        off = np.zeros(p) if self.offset is None else np.asarray(self.offset, dtype=float).reshape(-1)
        if off.shape != (p,):
            raise ValueError(f"offset must have length {p}, got {off.shape}")
        if not np.all(np.isfinite(off)):
            raise ValueError("offset has non-finite entries")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "C", c)
        object.__setattr__(self, "D", d)
        object.__setattr__(self, "offset", off)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class IssCertificate:
    """Lyapunov data for the estimation error driven by the held-output error.

    Stores the observer gain ``L``, the Lyapunov pair ``(P, Q)`` with
    ``(A-LC)^T P + P (A-LC) = -Q``, the Young split parameter ``c`` in
    (0, 1), and the derived constants

        alpha = lambda_min(Q) / lambda_max(P) * (1 - c)
        gamma = |P L|^2 / (c * lambda_min(Q))

    so that  d/dt (xi^T P xi) <= -alpha xi^T P xi + gamma |e|^2  pointwise.
    """

    L: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    c: float
    alpha: float
    gamma: float

    def __post_init__(self):
        l = as_matrix(self.L, name="L")
        p = as_sym_matrix(self.P, name="P")
        q = as_sym_matrix(self.Q, name="Q")
        if p.shape[0] != l.shape[0] or q.shape[0] != l.shape[0]:
            raise ValueError("L, P, Q dimensions are inconsistent")
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"c must lie in (0, 1), got {self.c}")
        if not (self.alpha > 0.0 and self.gamma > 0.0):
            raise ValueError("alpha and gamma must be strictly positive")
        object.__setattr__(self, "L", l)
        object.__setattr__(self, "P", p)
        object.__setattr__(self, "Q", q)


@dataclass(frozen=True)
class TriggerParams:
    """Validated trigger parameters plus the derived certificate constants.

    ``(c1, c2, c3, sigma, epsilon)`` drive the trigger filter and the
    transmission rule; ``(d, alpha_bar, nu)`` are the weight, decay rate
    and ultimate bound of the certificate ``xi^T P xi + d * eta``;
    ``eps_star`` is the largest margin compatible with that bound.
    """

    c1: float
    c2: float
    c3: float
    sigma: float
    epsilon: float
    d: float
    alpha_bar: float
    nu: float
    eps_star: float = field(default=float("nan"))

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 >= 0 and 0 <= self.c3 <= 1):
            raise ValueError("require c1 > 0, c2 >= 0, c3 in [0, 1]")
        if not (self.sigma >= 0 and self.epsilon > 0):
            raise ValueError("require sigma >= 0 and epsilon > 0")
        if not (self.d > 0 and self.alpha_bar > 0 and self.nu > 0):
            raise ValueError("require d, alpha_bar, nu strictly positive")


def iss_constants(plant: LtiPlant, L, Q, c: float = 0.5) -> IssCertificate:
    """Compute the certificate constants for a given gain and Lyapunov ``Q``.

    Solves ``(A-LC)^T P + P (A-LC) = -Q`` and evaluates ``alpha`` and
    ``gamma`` as documented on :class:`IssCertificate`. ``c`` splits the
    cross term between the two constants; 0.5 is a balanced default.
    """
    l = as_matrix(L, rows=plant.n, cols=plant.p, name="L")
    q = as_sym_matrix(Q, name="Q")
    if not 0.0 < c < 1.0:
        raise ValueError(f"c must lie in (0, 1), got {c}")
    lmin_q, _ = eig_sym_extremes(q)
    if lmin_q <= 0.0:
        raise ValueError("Q must be positive definite")
    acl = plant.A - l @ plant.C
    p = solve_lyapunov(acl, q)
    _, lmax_p = eig_sym_extremes(p)
    alpha = lmin_q / lmax_p * (1.0 - c)
    gamma = norm2(p @ l) ** 2 / (c * lmin_q)
    return IssCertificate(L=l, P=p, Q=q, c=c, alpha=alpha, gamma=gamma)


def select_parameters(
    cert: IssCertificate,
    alpha_bar: float,
    nu: float,
    *,
    c1: float,
    c2: float,
    c3: float,
    sigma: float,
    epsilon: float | None = None,
    sigma_star: float | None = None,
    c2_star: float | None = None,
) -> TriggerParams:
    """Validate and complete a trigger parameter choice.

    Given a target decay rate ``alpha_bar`` in (0, alpha] and ultimate
    bound ``nu`` > 0, checks the selection conditions

      * ``sigma_star * c2_star < gamma`` with ``sigma in [0, sigma_star]``
        and ``c2 in [0, c2_star]``,
      * ``c1 > alpha_bar * (1 - sigma_star*c2_star/gamma)^-1``,
      * ``c3 in [0, 1]``,

    computes ``d = sigma_star * (1 - sigma_star*c2_star/gamma
    - alpha_bar/c1)^-1`` and ``eps_star = nu * alpha_bar * gamma /
    (gamma + c2_star * d)``, and returns the parameters with ``epsilon``
    clamped into (0, eps_star]. ``sigma_star`` and ``c2_star`` default to
    ``sigma`` and ``c2`` (the tightest admissible bounds); a ``sigma`` of
    zero gets a small positive ``sigma_star`` since the weight ``d``
    requires one.
    """
    gamma = cert.gamma
    if not 0.0 < alpha_bar <= cert.alpha:
        raise ValueError(
            f"alpha_bar = {alpha_bar:g} must lie in (0, alpha] with alpha = {cert.alpha:g}")
    if nu <= 0.0:
        raise ValueError(f"nu = {nu:g} must be strictly positive")
    if not 0.0 <= c3 <= 1.0:
        raise ValueError(f"c3 = {c3:g} must lie in [0, 1]")
    if sigma < 0.0 or c2 < 0.0:
        raise ValueError("sigma and c2 must be nonnegative")

    if c2_star is None:
        c2_star = c2
    if sigma_star is None:
        if sigma > 0.0:
            sigma_star = sigma
        elif c2_star > 0.0:
            sigma_star = min(1.0, 0.5 * gamma / c2_star)
        else:
            sigma_star = 1.0

    if sigma_star <= 0.0 or c2_star < 0.0 or sigma_star * c2_star >= gamma:
        raise ThresholdGainConditionError(
            f"need sigma_star * c2_star < gamma and sigma_star > 0: "
            f"sigma_star = {sigma_star:g}, c2_star = {c2_star:g}, "
            f"sigma_star * c2_star = {sigma_star * c2_star:g}, gamma = {gamma:g}")
    if not (0.0 <= sigma <= sigma_star and 0.0 <= c2 <= c2_star):
        raise ThresholdGainConditionError(
            f"need sigma in [0, sigma_star] and c2 in [0, c2_star]: "
            f"sigma = {sigma:g}, sigma_star = {sigma_star:g}, "
            f"c2 = {c2:g}, c2_star = {c2_star:g}")

    slack = 1.0 - sigma_star * c2_star / gamma
    c1_min = alpha_bar / slack
    if c1 <= c1_min:
        raise FilterRateConditionError(
            f"need c1 > alpha_bar * (1 - sigma_star*c2_star/gamma)^-1: "
            f"c1 = {c1:g}, bound = {c1_min:g}")

    d = sigma_star / (slack - alpha_bar / c1)
    eps_star = nu * alpha_bar * gamma / (gamma + c2_star * d)
    if epsilon is None:
        epsilon = eps_star
    elif epsilon <= 0.0:
        raise MarginConditionError(
            f"need epsilon in (0, eps_star]: epsilon = {epsilon:g}, eps_star = {eps_star:g}")
    elif epsilon > eps_star:
        warnings.warn(
            f"epsilon = {epsilon:g} exceeds eps_star = {eps_star:g}; clamped",
            stacklevel=2)
        epsilon = eps_star

    return TriggerParams(c1=c1, c2=c2, c3=c3, sigma=sigma, epsilon=epsilon,
                         d=d, alpha_bar=alpha_bar, nu=nu, eps_star=eps_star)


def params_from_gains(
    cert: IssCertificate,
    *,
    sigma: float,
    c1: float,
    c2: float,
    c3: float,
    epsilon: float,
    sigma_star: float | None = None,
    c2_star: float | None = None,
    rate_margin: float = 0.9,
) -> TriggerParams:
    """Build :class:`TriggerParams` from raw gains, deriving the certificate pair.

    This is the converse workflow to :func:`select_parameters`: the user
    fixes ``(sigma, c1, c2, c3, epsilon)`` with ``sigma * c2 < gamma`` and
    we derive a decay rate ``alpha_bar`` and ultimate bound ``nu`` for
    which the selection conditions hold. ``alpha_bar`` is the largest rate
    admissible for the given ``c1`` (times ``rate_margin`` to stay strictly
    feasible), capped at ``alpha``; ``nu`` is then the smallest bound that
    admits the requested ``epsilon``.
    """
    gamma = cert.gamma
    if c2_star is None:
        c2_star = c2
    if sigma_star is None:
        if sigma > 0.0:
            sigma_star = sigma
        elif c2_star > 0.0:
            sigma_star = min(1.0, 0.5 * gamma / c2_star)
        else:
            sigma_star = 1.0
    if sigma_star <= 0.0 or sigma_star * c2_star >= gamma:
        raise ThresholdGainConditionError(
            f"need sigma_star * c2_star < gamma and sigma_star > 0: "
            f"sigma_star = {sigma_star:g}, c2_star = {c2_star:g}, gamma = {gamma:g}")
    if not 0.0 < rate_margin < 1.0:
        raise ValueError("rate_margin must lie in (0, 1)")
    if epsilon <= 0.0:
        raise MarginConditionError(f"epsilon = {epsilon:g} must be strictly positive")

    slack = 1.0 - sigma_star * c2_star / gamma
    alpha_bar = min(cert.alpha, rate_margin * c1 * slack)
    d = sigma_star / (slack - alpha_bar / c1)
    # Headroom keeps epsilon strictly below eps_star despite rounding.
    nu = epsilon * (gamma + c2_star * d) / (alpha_bar * gamma) * (1.0 + 1e-9)
    return select_parameters(
        cert, alpha_bar, nu, c1=c1, c2=c2, c3=c3, sigma=sigma,
        epsilon=epsilon, sigma_star=sigma_star, c2_star=c2_star)


def dwell_time_bound(M: float, epsilon: float, gamma: float) -> float:
    """Guaranteed minimum time between transmissions, in seconds.

    ``M`` bounds the output drift rate ``|C A x + C B u|`` along the
    trajectory; the held-output error needs at least
    ``(1 / (2 M)) * sqrt(epsilon / gamma)`` seconds to grow from zero back
    to the trigger threshold.
    """
    if M <= 0.0 or epsilon <= 0.0 or gamma <= 0.0:
        raise ValueError(
            f"all arguments must be strictly positive: M = {M:g}, "
            f"epsilon = {epsilon:g}, gamma = {gamma:g}")
    return 0.5 / M * float(np.sqrt(epsilon / gamma))


def normalize_feedthrough(plant: LtiPlant, y, u) -> np.ndarray:
    """Remove known feedthrough and bias: ``z = y - D u - offset``.

    The returned ``z`` equals ``C x`` whenever ``y`` was generated by the
    plant's output map, which is the form the trigger and observer expect.
    """
    yv = np.asarray(y, dtype=float).reshape(-1)
    uv = np.asarray(u, dtype=float).reshape(-1)
    if yv.shape != (plant.p,):
        raise ValueError(f"y must have length {plant.p}, got {yv.shape}")
    if uv.shape != (plant.m,):
        raise ValueError(f"u must have length {plant.m}, got {uv.shape}")
    return yv - plant.D @ uv - plant.offset
