"""Hybrid closed-loop simulator: continuous flows, triggered jumps.

The closed loop couples the plant, the observer driven by the held output,
and the scalar trigger filter ``eta``. Between transmissions the state
flows; a transmission is a jump that refreshes the held output (resetting
the sampling-induced error to zero) and rescales ``eta`` by ``c3``. Jumps
fire on the threshold surface ``gamma |e|^2 = sigma c1 eta + epsilon``;
on that surface the simulator always jumps, which makes solutions unique.

Flows are integrated with fixed-step classical RK4 (steps capped by
``dt_max``, input breakpoints, and the horizon). The affine part of the
flow is one-way coupled to ``eta``, so the four RK4 stages are applied
through precomputed affine maps per segment; this is algebraically the
classical method, not an approximation of it. Threshold crossings are
localized inside the bracketing step by bisection.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .design import IssCertificate, LtiPlant, TriggerParams
from .signals import InputSignal

__all__ = [
    "HybridState",
    "SimConfig",
    "HybridArc",
    "MaxJumpsExceededError",
    "NonFiniteStateError",
    "flow_derivative",
    "trigger_margin",
    "jump",
    "simulate",
    "derived_error_states",
    "write_arc_csv",
    "read_arc_csv",
    "TOL_ETA",
]

TOL_ETA = 1e-12
BISECT_MAX_ITER = 60


class MaxJumpsExceededError(RuntimeError):
    """Jump budget exhausted; suspect Zeno behavior or a mis-tuned margin."""


class NonFiniteStateError(RuntimeError):
    """Integration produced NaN/Inf (unstable plant or step too large)."""


@dataclass(frozen=True)
class HybridState:
    """Closed-loop state: plant state, estimate, held output, trigger filter."""

    x: np.ndarray
    xhat: np.ndarray
    ybar: np.ndarray
    eta: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        xhat = np.asarray(self.xhat, dtype=float).reshape(-1)
        ybar = np.asarray(self.ybar, dtype=float).reshape(-1)
        if xhat.shape != x.shape:
            raise ValueError("x and xhat must have the same length")
        eta = float(self.eta)
        if eta < 0.0:
            if eta < -TOL_ETA:
                raise ValueError(f"eta must be nonnegative, got {eta}")
            eta = 0.0
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xhat", xhat)
        object.__setattr__(self, "ybar", ybar)
        object.__setattr__(self, "eta", eta)


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings; ``eta0`` seeds the trigger filter."""

    t_end: float
    dt_max: float
    event_tol: float = 1e-9
    max_jumps: int = 1_000_000
    eta0: float = 0.0

    def __post_init__(self):
        if not (self.t_end > 0 and self.dt_max > 0 and self.event_tol > 0):
            raise ValueError("t_end, dt_max and event_tol must be positive")
        if self.max_jumps < 1:
            raise ValueError("max_jumps must be at least 1")
        if self.eta0 < 0:
            raise ValueError("eta0 must be nonnegative")


class HybridArc:
    """Recorded solution on a hybrid time domain.

    Samples are stored columnar: times ``t`` (nondecreasing), jump counters
    ``j`` (incremented by exactly one per transmission), and packed states
    ``[x | xhat | ybar | eta]``. ``events`` lists transmission instants as
    ``(t, j)`` with ``j`` the pre-jump counter; ``event_flags`` marks the
    sample created by each jump.
    """

    def __init__(self, t, j, states, events, event_flags, n: int, p: int):
        self.t = np.asarray(t, dtype=float)
        self.j = np.asarray(j, dtype=int)
        self.states = np.asarray(states, dtype=float)
        self.events = [(float(te), int(je)) for te, je in events]
        self.event_flags = np.asarray(event_flags, dtype=bool)
        self.n = int(n)
        self.p = int(p)
        if self.t.ndim != 1 or self.t.size == 0:
            raise ValueError("arc needs at least one sample")
        if self.states.shape != (self.t.size, 2 * self.n + self.p + 1):
            raise ValueError("states shape inconsistent with n, p")
        if self.j.shape != self.t.shape or self.event_flags.shape != self.t.shape:
            raise ValueError("t, j, event_flags must have equal lengths")
        if np.any(np.diff(self.t) < 0):
            raise ValueError("sample times must be nondecreasing")
        dj = np.diff(self.j)
        if np.any((dj != 0) & (dj != 1)):
            raise ValueError("jump counter must increment by exactly one")
        if int(self.event_flags.sum()) != len(self.events):
            raise ValueError("event flags and event log disagree")

    @property
    def x(self) -> np.ndarray:
        return self.states[:, : self.n]

    @property
    def xhat(self) -> np.ndarray:
        return self.states[:, self.n : 2 * self.n]

    @property
    def ybar(self) -> np.ndarray:
        return self.states[:, 2 * self.n : 2 * self.n + self.p]

    @property
    def eta(self) -> np.ndarray:
        return self.states[:, -1]

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    def state_at(self, k: int) -> HybridState:
        row = self.states[k]
        return HybridState(x=row[: self.n], xhat=row[self.n : 2 * self.n],
                           ybar=row[2 * self.n : 2 * self.n + self.p],
                           eta=max(float(row[-1]), 0.0))

    def samples(self):
        """Iterate ``(t, j, HybridState)`` over all recorded samples."""
        for k in range(self.t.size):
            yield float(self.t[k]), int(self.j[k]), self.state_at(k)

    def domain(self) -> list[tuple[tuple[float, float], int]]:
        """Hybrid time domain as ``((t_lo, t_hi), j)`` intervals."""
        t0, t1 = float(self.t[0]), float(self.t[-1])
        edges = [t0] + [te for te, _ in self.events] + [t1]
        return [((edges[k], edges[k + 1]), k) for k in range(len(edges) - 1)]

    def event_times(self) -> np.ndarray:
        return np.array([te for te, _ in self.events], dtype=float)


def flow_derivative(plant: LtiPlant, cert: IssCertificate,
                    params: TriggerParams, s: HybridState, u):
    """Time derivative of ``(x, xhat, ybar, eta)`` along a flow.

    Returns ``(xdot, xhatdot, ybardot, etadot)``. The held output is
    constant between transmissions; the trigger filter integrates
    ``-c1 eta + c2 |ybar - C x|^2``.
    """
    uv = np.asarray(u, dtype=float).reshape(-1)
    bu = plant.B @ uv
    e = s.ybar - plant.C @ s.x
    xdot = plant.A @ s.x + bu
    xhatdot = plant.A @ s.xhat + bu + cert.L @ (s.ybar - plant.C @ s.xhat)
    ybardot = np.zeros(plant.p)
    etadot = -params.c1 * s.eta + params.c2 * float(e @ e)
    return xdot, xhatdot, ybardot, etadot


def trigger_margin(plant: LtiPlant, cert: IssCertificate,
                   params: TriggerParams, s: HybridState, u=None) -> float:
    """Signed distance to the transmission surface.

    Returns ``gamma |e|^2 - sigma c1 eta - epsilon`` with ``e = ybar - C x``:
    negative strictly inside the flow set, nonnegative in the jump set.
    ``u`` is accepted for signature symmetry with the flow/jump sets but
    does not enter the inequality.
    """
    e = s.ybar - plant.C @ s.x
    return float(cert.gamma * (e @ e) - params.sigma * params.c1 * s.eta
                 - params.epsilon)


def jump(s: HybridState, params: TriggerParams, y) -> HybridState:
    """Transmission: refresh the held output to ``y`` and rescale ``eta``.

    ``x`` and ``xhat`` are unchanged; with ``y`` the current output the
    post-jump sampling error is zero, so the state lands strictly inside
    the flow set.
    """
    yv = np.asarray(y, dtype=float).reshape(-1)
    if yv.shape != s.ybar.shape:
        raise ValueError(f"y must have length {s.ybar.shape[0]}, got {yv.shape}")
    return HybridState(x=s.x, xhat=s.xhat, ybar=yv, eta=params.c3 * s.eta)


# ---------------------------------------------------------------------------
# fast flow stepping


def _flow_matrices(plant: LtiPlant, cert: IssCertificate):
    """Affine flow matrix for ``w = [x | xhat | ybar]`` and the error map E."""
    n, p = plant.n, plant.p
    dw = 2 * n + p
    fw = np.zeros((dw, dw))
    fw[:n, :n] = plant.A
    fw[n : 2 * n, n : 2 * n] = plant.A - cert.L @ plant.C
    fw[n : 2 * n, 2 * n :] = cert.L
    emap = np.zeros((p, dw))
    emap[:, :n] = -plant.C
    emap[:, 2 * n :] = np.eye(p)
    return fw, emap


class _StageMaps:
    """Precomputed classical-RK4 stage maps for one (segment, step) pair.

    The flow of ``w`` is affine, so every RK4 stage state is an affine
    function of the step's initial ``w``; ``eta``'s stages then only need
    the sampling error at those stage states. ``step`` reproduces classical
    RK4 on the coupled system exactly. The update matrix, the four stage
    error rows and the end-of-step error rows are stacked so one matvec
    per step yields everything.
    """

    __slots__ = ("big", "bigvec", "dw", "h", "p", "c1", "c2")

    def __init__(self, fw, gw, emap, h: float, c1: float, c2: float):
        dw = fw.shape[0]
        eye = np.eye(dw)
        t2 = eye + (h / 2.0) * fw
        b2 = (h / 2.0) * gw
        fb2 = fw @ b2
        t3 = eye + (h / 2.0) * (fw @ t2)
        b3 = (h / 2.0) * (fb2 + gw)
        fb3 = fw @ b3
        t4 = eye + h * (fw @ t3)
        b4 = h * (fb3 + gw)
        fb4 = fw @ b4
        phi = eye + (h / 6.0) * (fw + 2.0 * (fw @ t2) + 2.0 * (fw @ t3) + fw @ t4)
        psi = (h / 6.0) * (6.0 * gw + 2.0 * fb2 + 2.0 * fb3 + fb4)
        p = emap.shape[0]
        self.big = np.vstack([phi, emap, emap @ t2, emap @ t3, emap @ t4,
                              emap @ phi])
        self.bigvec = np.concatenate([psi, np.zeros(p), emap @ b2, emap @ b3,
                                      emap @ b4, emap @ psi])
        self.dw = dw
        self.h = h
        self.p = p
        self.c1 = c1
        self.c2 = c2

    def step(self, w: np.ndarray, eta: float) -> tuple[np.ndarray, float, float]:
        """Advance one step; returns ``(w_new, eta_new, |e_new|^2)``."""
        out = self.big @ w + self.bigvec
        dw, p = self.dw, self.p
        ev = out[dw:]
        if p == 1:
            q1, q2, q3, q4, e_end = ev[0] * ev[0], ev[1] * ev[1], \
                ev[2] * ev[2], ev[3] * ev[3], ev[4] * ev[4]
        else:
            sq = (ev * ev).reshape(5, p).sum(axis=1)
            q1, q2, q3, q4, e_end = sq
        h, c1, c2 = self.h, self.c1, self.c2
        k1 = -c1 * eta + c2 * q1
        k2 = -c1 * (eta + 0.5 * h * k1) + c2 * q2
        k3 = -c1 * (eta + 0.5 * h * k2) + c2 * q3
        k4 = -c1 * (eta + h * k3) + c2 * q4
        eta_new = eta + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return out[:dw], eta_new, float(e_end)


def _rk4_probe(fw, gw, emap, c1, c2, w, eta, h):
    """One classical RK4 step of arbitrary size, for bisection probes."""
    def eta_rate(ww, ee):
        ev = emap @ ww
        return -c1 * ee + c2 * float(ev @ ev)

    kw1 = fw @ w + gw
    ke1 = eta_rate(w, eta)
    s2 = w + 0.5 * h * kw1
    kw2 = fw @ s2 + gw
    ke2 = eta_rate(s2, eta + 0.5 * h * ke1)
    s3 = w + 0.5 * h * kw2
    kw3 = fw @ s3 + gw
    ke3 = eta_rate(s3, eta + 0.5 * h * ke2)
    s4 = w + h * kw3
    kw4 = fw @ s4 + gw
    ke4 = eta_rate(s4, eta + h * ke3)
    w_new = w + (h / 6.0) * (kw1 + 2.0 * kw2 + 2.0 * kw3 + kw4)
    eta_new = eta + (h / 6.0) * (ke1 + 2.0 * ke2 + 2.0 * ke3 + ke4)
    return w_new, eta_new


class _Recorder:
    __slots__ = ("ts", "js", "ws", "etas", "flags")

    def __init__(self):
        self.ts: list[float] = []
        self.js: list[int] = []
        self.ws: list[np.ndarray] = []
        self.etas: list[float] = []
        self.flags: list[bool] = []

    def add(self, t, j, w, eta, flag=False):
        self.ts.append(t)
        self.js.append(j)
        self.ws.append(w)
        self.etas.append(eta)
        self.flags.append(flag)


def simulate(plant: LtiPlant, cert: IssCertificate, params: TriggerParams,
             input_signal: InputSignal, x0, xhat0, cfg: SimConfig) -> HybridArc:
    """Simulate the event-triggered estimation loop on ``[0, t_end]``.

    The held output starts at the current output (zero initial sampling
    error) and ``eta`` at ``cfg.eta0``. Flows use fixed-step classical RK4
    with steps no larger than ``dt_max`` and additionally cut at input
    breakpoints; integration restarts at breakpoints and jumps. A sign
    change of the trigger margin within a step is localized by bisection
    to ``event_tol``; whenever the margin is nonnegative at a sample the
    jump is taken immediately.

    Raises :class:`MaxJumpsExceededError` when a jump would exceed
    ``max_jumps`` and :class:`NonFiniteStateError` on NaN/Inf states.
    """
    n, p = plant.n, plant.p
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    xhat0 = np.asarray(xhat0, dtype=float).reshape(-1)
    if x0.shape != (n,) or xhat0.shape != (n,):
        raise ValueError(f"x0 and xhat0 must have length {n}")
    if input_signal.m != plant.m:
        raise ValueError(
            f"input width {input_signal.m} does not match plant inputs {plant.m}")

    fw, emap = _flow_matrices(plant, cert)
    dw = fw.shape[0]
    gamma = cert.gamma
    c1, c2, c3 = params.c1, params.c2, params.c3
    sigma, eps = params.sigma, params.epsilon
    eta_floor = -TOL_ETA * max(1.0, cfg.eta0)

    def margin_of(w, eta):
        e = emap @ w
        return gamma * float(e @ e) - sigma * c1 * eta - eps

    w = np.concatenate([x0, xhat0, plant.C @ x0])
    eta = float(cfg.eta0)
    t = 0.0
    jmp = 0
    rec = _Recorder()
    rec.add(t, jmp, w, eta)
    events: list[tuple[float, int]] = []
    t_end = cfg.t_end

    # Blow-ups surface as NonFiniteStateError, not as FP warnings.
    with np.errstate(over="ignore", invalid="ignore"):
        while t < t_end:
            edges = input_signal.edges_within(t, t_end)
            nxt = float(edges[0]) if edges.size else t_end
            u = input_signal.value_at(t)
            bu = plant.B @ u
            gw = np.zeros(dw)
            gw[:n] = bu
            gw[n : 2 * n] = bu

            span = nxt - t
            nsteps = max(1, math.ceil(span / cfg.dt_max - 1e-12))
            h = span / nsteps
            maps = _StageMaps(fw, gw, emap, h, c1, c2)
            seg_t0 = t
            jumped = False

            for k in range(nsteps):
                w_new, eta_new, e_sq = maps.step(w, eta)
                if eta_new < 0.0:
                    if eta_new < eta_floor:
                        raise NonFiniteStateError(
                            f"trigger filter went materially negative: {eta_new}")
                    eta_new = 0.0
                if not (math.isfinite(e_sq) and math.isfinite(eta_new)):
                    raise NonFiniteStateError(f"non-finite state at t = {t:.6g}")
                if (k & 63) == 0 and not np.isfinite(w_new).all():
                    raise NonFiniteStateError(f"non-finite state at t = {t:.6g}")
                t_new = nxt if k + 1 == nsteps else seg_t0 + (k + 1) * h

                if gamma * e_sq - sigma * c1 * eta_new - eps >= 0.0:
                    s_ev, w_ev, eta_ev = _bisect_crossing(
                        fw, gw, emap, c1, c2, margin_of, w, eta,
                        w_new, eta_new, h, cfg.event_tol)
                    if eta_ev < 0.0:
                        eta_ev = 0.0
                    t_ev = min(t + s_ev, t_new)
                    rec.add(t_ev, jmp, w_ev, eta_ev)
                    if jmp >= cfg.max_jumps:
                        raise MaxJumpsExceededError(
                            f"exceeded max_jumps = {cfg.max_jumps} "
                            f"at t = {t_ev:.6g}")
                    w_post = w_ev.copy()
                    w_post[2 * n :] = w_ev[:n] @ plant.C.T  # ybar <- C x
                    eta_post = c3 * eta_ev
                    events.append((t_ev, jmp))
                    jmp += 1
                    rec.add(t_ev, jmp, w_post, eta_post, flag=True)
                    w, eta, t = w_post, eta_post, t_ev
                    jumped = True
                    break

                w, eta, t = w_new, eta_new, t_new
                rec.add(t, jmp, w, eta)

            if not jumped:
                t = nxt

    states = np.empty((len(rec.ts), dw + 1))
    states[:, :dw] = np.vstack(rec.ws)
    states[:, dw] = rec.etas
    if not np.isfinite(states).all():
        raise NonFiniteStateError("non-finite values in recorded arc")
    return HybridArc(t=rec.ts, j=rec.js, states=states, events=events,
                     event_flags=rec.flags, n=n, p=p)


def _bisect_crossing(fw, gw, emap, c1, c2, margin_of, w0, eta0,
                     w_hi, eta_hi, h, event_tol):
    """Locate the margin zero-crossing inside a step by bisection.

    The margin is negative at the step start and nonnegative at ``h``;
    probes re-integrate a single RK4 step of the trial size from the step
    start. Returns the right end of the final bracket so the returned
    state satisfies the jump condition.
    """
    lo, hi = 0.0, h
    m_hi = margin_of(w_hi, eta_hi)
    for _ in range(BISECT_MAX_ITER):
        if hi - lo < event_tol and abs(m_hi) <= event_tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        w_mid, eta_mid = _rk4_probe(fw, gw, emap, c1, c2, w0, eta0, mid)
        m_mid = margin_of(w_mid, eta_mid)
        if m_mid >= 0.0:
            hi, w_hi, eta_hi, m_hi = mid, w_mid, eta_mid, m_mid
        else:
            lo = mid
    if hi < min(event_tol, h):
        # Guarantee forward progress even for near-instant crossings.
        hi = min(event_tol, h)
        w_hi, eta_hi = _rk4_probe(fw, gw, emap, c1, c2, w0, eta0, hi)
    return hi, w_hi, eta_hi


def derived_error_states(arc: HybridArc, plant: LtiPlant):
    """Per-sample estimation error and sampling error.

    Returns a list of ``(t, j, xi, e)`` with ``xi = x - xhat`` and
    ``e = ybar - C x``.
    """
    xi = arc.x - arc.xhat
    e = arc.ybar - arc.x @ plant.C.T
    return [(float(arc.t[k]), int(arc.j[k]), xi[k].copy(), e[k].copy())
            for k in range(arc.t.size)]


# ---------------------------------------------------------------------------
# CSV round-trip


def write_arc_csv(arc: HybridArc, path) -> None:
    """Write the arc with 17-significant-digit floats (exact round-trip)."""
    n, p = arc.n, arc.p
    header = (["t", "j"]
              + [f"x_{i + 1}" for i in range(n)]
              + [f"xhat_{i + 1}" for i in range(n)]
              + [f"ybar_{i + 1}" for i in range(p)]
              + ["eta", "event_flag"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(arc.t.size):
            row = [f"{arc.t[k]:.17g}", str(int(arc.j[k]))]
            row += [f"{v:.17g}" for v in arc.states[k]]
            row.append("1" if arc.event_flags[k] else "0")
            writer.writerow(row)


def read_arc_csv(path) -> HybridArc:
    """Inverse of :func:`write_arc_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n = sum(1 for name in header if name.startswith("x_"))
        p = sum(1 for name in header if name.startswith("ybar_"))
        ts, js, rows, flags = [], [], [], []
        for rec in reader:
            ts.append(float(rec[0]))
            js.append(int(rec[1]))
            rows.append([float(v) for v in rec[2 : 2 + 2 * n + p + 1]])
            flags.append(rec[-1] == "1")
    events = [(ts[k], js[k] - 1) for k in range(len(ts)) if flags[k]]
    return HybridArc(t=ts, j=js, states=np.array(rows), events=events,
                     event_flags=flags, n=n, p=p)
