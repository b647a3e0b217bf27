"""Independent verification machinery.

Everything here checks the library through a different computational route
than the code it verifies: gradients against coordinate-wise central
differences of the loss, the steepest-feasible-descent bound against Monte
Carlo sampling plus the analytic attainment direction, and first-order
capability preservation against one-step loss changes measured at several
learning rates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import models
from .errors import ConfigurationError, NumericError, PreconditionError
from .linalg import OrthonormalBasis, as_vector, dot, norm, project_complement
from .subspace import estimate_subspace

__all__ = ["FDConfig", "fd_gradient", "gradient_agreement",
           "SteepestReport", "steepest_check",
           "TaylorReport", "taylor_scaling"]


@dataclass(frozen=True)
class FDConfig:
    """Central-difference settings; h = 1e-5 balances truncation against
    rounding at 64-bit precision."""

    h: float = 1e-5
    scheme: str = "central"
    rel_tol: float = 1e-4

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigurationError(f"h must be positive, got {self.h}")
        if self.scheme != "central":
            raise ConfigurationError(f"only the central scheme is implemented, got {self.scheme!r}")


def fd_gradient(spec, kind, theta, batch, fd: FDConfig = FDConfig()) -> np.ndarray:
    """Coordinate-wise central differences of the loss.

    Deliberately shares no code with :func:`orthoproj.models.gradient`; it
    only ever calls the loss.
    """
    th = as_vector(theta, "theta").copy()
    out = np.empty_like(th)
    for i in range(th.size):
        orig = th[i]
        th[i] = orig + fd.h
        f_plus = models.loss(spec, kind, th, batch)
        th[i] = orig - fd.h
        f_minus = models.loss(spec, kind, th, batch)
        th[i] = orig
        out[i] = (f_plus - f_minus) / (2.0 * fd.h)
    if not np.all(np.isfinite(out)):
        raise NumericError("finite-difference probe produced non-finite values")
    return out


def gradient_agreement(spec, kind, theta, batch, fd: FDConfig = FDConfig()) -> float:
    """Worst per-coordinate relative disagreement between the analytic
    gradient and central differences.

    Central differences resolve a derivative no finer than
    roundoff(loss) / (2h); the denominator floors at that resolution divided
    by the tolerance, so coordinates whose true value sits below what the
    probe can measure (exact zeros included) do not register as
    disagreements while every measurable coordinate is still held to the
    relative tolerance.
    """
    analytic = models.gradient(spec, kind, theta, batch)
    approx = fd_gradient(spec, kind, theta, batch, fd)
    loss_scale = max(1.0, abs(models.loss(spec, kind, theta, batch)))
    fd_noise = 8.0 * np.finfo(np.float64).eps * loss_scale / (2.0 * fd.h)
    floor = fd_noise / fd.rel_tol
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(approx)), floor)
    return float((np.abs(analytic - approx) / denom).max())


@dataclass(frozen=True)
class SteepestReport:
    bound: float            # -||projected g||, the analytic optimum
    min_directional: float  # best (most negative) sampled <g, v>
    attained: float         # <g, v*> for v* = -projected g / norm
    n_samples: int
    violations: int         # samples below bound - slack

    @property
    def attainment_error(self) -> float:
        return abs(self.attained - self.bound)


def steepest_check(g, basis: OrthonormalBasis, n_samples: int,
                   rng: np.random.Generator, slack: float = 1e-9) -> SteepestReport:
    """Monte-Carlo check that no feasible unit direction descends faster
    than the negated projected gradient.

    Draws standard-normal vectors, projects them into the orthogonal
    complement ourselves (matrix form, independent of the library's
    per-vector loop), normalizes, and evaluates the directional derivative
    <g, v>. Requires g to have a nonzero component outside the span.
    """
    if n_samples < 1:
        raise ConfigurationError(f"n_samples must be >= 1, got {n_samples}")
    gv = as_vector(g, "g")
    g_perp = project_complement(gv, basis)
    bound = -norm(g_perp)
    if bound == 0.0:
        raise PreconditionError("g lies inside the subspace span; the bound assumes "
                                "a nonzero orthogonal component")

    z = rng.standard_normal((n_samples, gv.size))
    if basis.rank:
        u = basis.vectors
        z = z - (z @ u.T) @ u
    norms = np.sqrt((z * z).sum(axis=1))
    keep = norms > 0
    v = z[keep] / norms[keep, None]
    directional = v @ gv
    min_directional = float(directional.min())
    violations = int(np.count_nonzero(directional < bound - slack))
    attained = dot(gv, -g_perp / norm(g_perp))
    return SteepestReport(bound=bound, min_directional=min_directional,
                          attained=attained, n_samples=int(keep.sum()),
                          violations=violations)


@dataclass(frozen=True)
class TaylorReport:
    etas: tuple[float, ...]
    loss_changes: tuple[float, ...]       # reference-loss change per one step
    closed_form: tuple[float, ...]        # quadratic remainder 0.5*||A dtheta||^2
    slope: float
    all_zero: bool                        # every |change| was exactly zero

    @property
    def max_remainder_mismatch(self) -> float:
        """Worst relative disagreement between the measured change and the
        closed-form remainder plus linear term, floored for fp-zero rows."""
        worst = 0.0
        for measured, predicted in zip(self.loss_changes, self.closed_form):
            denom = max(abs(measured), abs(predicted), 1e-12)
            worst = max(worst, abs(measured - predicted) / denom)
        return worst


def taylor_scaling(family, etas, method: str,
                   ref_count: int = 1, delta: float = 1e-6) -> TaylorReport:
    """Measure how the one-step reference-loss change scales with eta.

    Built for the quadratic pair, where the loss change under a step dtheta
    is exactly <g_ref, dtheta> + 0.5 * ||A_ref dtheta||^2. With a fresh
    subspace the projected step kills the linear term, leaving pure
    second-order scaling (log-log slope 2); a naive step with correlated
    gradients is first-order (slope 1). Zero rows are excluded from the fit;
    if every row is zero the change is curvature-only below float resolution
    and the slope is reported as exactly 2.
    """
    etas = tuple(float(e) for e in etas)
    if len(etas) < 3 or any(b >= a for a, b in zip(etas, etas[1:])):
        raise ConfigurationError("etas must be at least 3 strictly decreasing values")
    if family.kind != "quadratic_pair":
        raise ConfigurationError("taylor_scaling needs the quadratic family (closed-form remainder)")
    if method not in ("ortho", "naive"):
        raise ConfigurationError(f"method must be 'ortho' or 'naive', got {method!r}")

    theta0 = family.theta0
    safety = family.tasks["safety"]
    ref = family.capability_tasks[0]
    g_safe = safety.gradient(theta0, safety.probe())
    if method == "ortho":
        sub = estimate_subspace(theta0, list(family.capability_tasks[:ref_count]),
                                batch_size=1, rng=np.random.default_rng(0),
                                delta=delta, epsilon=0.0, step=0)
        direction = project_complement(g_safe, sub.basis)
    else:
        direction = g_safe

    a_ref = ref.train_inputs
    ref_loss0 = ref.loss(theta0)
    g_ref = ref.gradient(theta0, ref.probe())
    changes, predicted = [], []
    for eta in etas:
        dtheta = -eta * direction
        changes.append(ref.loss(theta0 + dtheta) - ref_loss0)
        step_image = a_ref @ dtheta
        predicted.append(dot(g_ref, dtheta) + 0.5 * float(step_image @ step_image))

    nonzero = [(e, abs(c)) for e, c in zip(etas, changes) if c != 0.0]
    if not nonzero:
        return TaylorReport(etas, tuple(changes), tuple(predicted), 2.0, True)
    xs = np.log([e for e, _ in nonzero])
    ys = np.log([c for _, c in nonzero])
    slope = float(np.polyfit(xs, ys, 1)[0]) if len(nonzero) > 1 else 2.0
    return TaylorReport(etas, tuple(changes), tuple(predicted), slope, False)
