"""Post-hoc checks of the design guarantees on simulated arcs.

Everything here is pure post-processing: the decay certificate on the
weighted error energy, inter-event statistics against the dwell-time
bound, detection of transmission-free stretches, and the trajectory bound
on the output drift rate that the dwell time depends on.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .design import IssCertificate, LtiPlant, TriggerParams
from .hybrid import HybridArc
from .signals import InputSignal

__all__ = [
    "CertificateReport",
    "IetStats",
    "check_certificate",
    "iet_stats",
    "detect_quiescence",
    "measured_M",
    "write_certificate_csv",
    "summarize",
]

CERT_TOL = 1e-7


@dataclass
class CertificateReport:
    """Outcome of the decay-certificate check.

    ``worst_violation`` is the largest value of ``(U - bound) / (1 + U0)``
    over all samples, where ``U = xi' P xi + d eta`` and
    ``bound = exp(-alpha_bar t) U0 + nu``; the certificate holds when it
    does not exceed ``cert_tol``. ``bound_samples`` has columns
    ``(t, U, bound)``.
    """

    holds: bool
    worst_violation: float
    worst_time: tuple[float, int]
    U0: float
    cert_tol: float = CERT_TOL
    bound_samples: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))


@dataclass
class IetStats:
    """Gaps between consecutive transmission instants, in seconds."""

    count: int
    min: float
    mean: float
    max: float
    series: np.ndarray


def certificate_values(arc: HybridArc, cert: IssCertificate,
                       params: TriggerParams) -> np.ndarray:
    """Weighted error energy ``U = xi' P xi + d eta`` at every sample."""
    xi = arc.x - arc.xhat
    return np.einsum("ki,ij,kj->k", xi, cert.P, xi) + params.d * arc.eta


def check_certificate(arc: HybridArc, cert: IssCertificate,
                      params: TriggerParams,
                      cert_tol: float = CERT_TOL) -> CertificateReport:
    """Check the exponential-decay-plus-offset bound along the arc.

    Verifies ``U(t, j) <= exp(-alpha_bar t) U(0,0) + nu`` at every sample,
    with a relative slack of ``cert_tol * (1 + U(0,0))`` absorbing
    integration error.
    """
    u_vals = certificate_values(arc, cert, params)
    u0 = float(u_vals[0])
    bound = np.exp(-params.alpha_bar * arc.t) * u0 + params.nu
    viol = (u_vals - bound) / (1.0 + u0)
    k = int(np.argmax(viol))
    worst = float(viol[k])
    return CertificateReport(
        holds=worst <= cert_tol,
        worst_violation=worst,
        worst_time=(float(arc.t[k]), int(arc.j[k])),
        U0=u0,
        cert_tol=cert_tol,
        bound_samples=np.column_stack([arc.t, u_vals, bound]),
    )


def iet_stats(arc: HybridArc) -> IetStats:
    """Statistics of the gaps between consecutive transmissions."""
    times = arc.event_times()
    gaps = np.diff(times) if times.size >= 2 else np.empty(0)
    if gaps.size == 0:
        return IetStats(count=0, min=float("nan"), mean=float("nan"),
                        max=float("nan"), series=gaps)
    return IetStats(count=int(gaps.size), min=float(gaps.min()),
                    mean=float(gaps.mean()), max=float(gaps.max()),
                    series=gaps)


def quiescence_window(arc: HybridArc) -> float:
    """Scale-free default window for :func:`detect_quiescence`.

    Five times the median inter-event gap: long relative to routine
    triggering, short enough to flag genuine transmission lulls. Falls
    back to a tenth of the horizon when there are too few gaps.
    """
    stats = iet_stats(arc)
    if stats.count < 2:
        return max(arc.t_end / 10.0, 10.0 * np.finfo(float).eps)
    return 5.0 * float(np.median(stats.series))


def detect_quiescence(arc: HybridArc,
                      window: float | None = None) -> list[tuple[float, float]]:
    """Maximal transmission-free intervals of length at least ``window``.

    A finite-horizon detector: events at an interval's endpoints do not
    count as interior, and the stretches before the first and after the
    last transmission are included. ``window`` defaults to
    :func:`quiescence_window`.
    """
    if window is None:
        window = quiescence_window(arc)
    if window <= 0:
        raise ValueError("window must be positive")
    edges = ([float(arc.t[0])] + [te for te, _ in arc.events]
             + [float(arc.t[-1])])
    return [(edges[k], edges[k + 1]) for k in range(len(edges) - 1)
            if edges[k + 1] - edges[k] >= window]


def measured_M(arc: HybridArc, plant: LtiPlant, input_signal: InputSignal) -> float:
    """Largest output drift rate ``|C A x + C B u|`` seen along the arc."""
    if arc.t.size == 0:
        raise ValueError("arc has no samples")
    drift = arc.x @ (plant.C @ plant.A).T + input_signal.values_at(arc.t) @ (plant.C @ plant.B).T
    return float(np.sqrt((drift * drift).sum(axis=1)).max())


def write_certificate_csv(report: CertificateReport, path) -> None:
    """Dump the per-sample certificate values as ``t, U, bound``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "U", "bound"])
        for t, u, b in report.bound_samples:
            writer.writerow([f"{t:.17g}", f"{u:.17g}", f"{b:.17g}"])


def summarize(arc: HybridArc, report: CertificateReport, stats: IetStats,
              m_bound: float, tau: float) -> str:
    """Human-readable run summary."""
    lines = [
        f"samples            : {arc.t.size}",
        f"horizon            : {arc.t_end:g} s",
        f"transmissions      : {len(arc.events)}",
        f"certificate holds  : {report.holds}",
        f"worst violation    : {report.worst_violation:.3e} (tol {report.cert_tol:.1e})",
        f"U(0,0)             : {report.U0:.6g}",
        f"measured drift M   : {m_bound:.6g}",
        f"dwell-time bound   : {tau:.6g} s",
    ]
    if stats.count > 0:
        lines += [
            f"inter-event count  : {stats.count}",
            f"inter-event min    : {stats.min:.6g} s",
            f"inter-event mean   : {stats.mean:.6g} s",
            f"inter-event max    : {stats.max:.6g} s",
        ]
    else:
        lines.append("inter-event count  : 0")
    return "\n".join(lines) + "\n"
