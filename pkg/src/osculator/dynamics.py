"""Trajectories, deviation (Jacobi) fields, parallel transport and residuals.

All integrations use fixed-step classical RK4 on a uniform grid. Deviation
fields are integrated on the grid of their base trajectory; base states at
RK4 half-steps come from cubic Hermite interpolation of (x, y) using the
stored derivatives y and 2*y2.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .connections import (
    DualCoefficients,
    adapted_components,
    miron_dual_coefficients,
    on_extension_dual,
    our_dual_coefficients,
    spray_function,
    spray_jet,
)
from .geom_core import (
    ANALYTIC,
    DimensionMismatch,
    DomainExit,
    FirstOrderState,
    GeometryError,
    IndexOutOfRange,
    IntegrationError,
    SecondOrderState,
    TooFewSamples,
    _vec,
)


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings.

    The grid has ``ceil(t_end/dt)`` steps of equal length ``t_end/nsteps``, so
    the realized step never exceeds ``dt`` and the grid ends exactly at t_end.
    """

    dt: float = 1e-3
    t_end: float = 1.0
    method: str = "rk4"

    def __post_init__(self):
        if not self.dt > 0 or not self.t_end > 0:
            raise ValueError("dt and t_end must be positive")
        if self.t_end / self.dt > 1e7:
            raise ValueError("t_end/dt exceeds 1e7 steps")
        if self.method != "rk4":
            raise ValueError(f"unsupported method {self.method!r}; only 'rk4'")

    @property
    def nsteps(self):
        return max(1, math.ceil(self.t_end / self.dt - 1e-9))

    @property
    def step(self):
        return self.t_end / self.nsteps


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    y2: np.ndarray
    w: Optional[np.ndarray] = None
    w1: Optional[np.ndarray] = None

    @property
    def dt(self):
        return float(self.t[1] - self.t[0])

    @property
    def n(self):
        return self.x.shape[1]

    def __len__(self):
        return len(self.t)

    def state(self, k):
        return SecondOrderState(self.x[k], self.y[k], self.y2[k])


def _wrap_failure(exc, t):
    if isinstance(exc, IntegrationError):
        return exc
    err = IntegrationError(f"{type(exc).__name__}: {exc}", t)
    err.__cause__ = exc
    return err


def integrate_trajectory(model, force, init, cfg, diff=ANALYTIC):
    """Solve x'' + 2G(x, x') = F(x, x') from ``init`` with RK4.

    The returned trajectory stores y2 = -G + F/2, the second-order coordinate
    of the extension curve.
    """
    n = model.n
    x0, y0 = _vec(init.x), _vec(init.y)
    if x0.shape != (n,) or y0.shape != (n,):
        raise DimensionMismatch(f"initial state must have dimension {n}")
    spray = spray_function(model, diff)
    h, m = cfg.step, cfg.nsteps

    def rhs(z):
        x, y = z[:n], z[n:]
        return np.concatenate([y, force(x, y) - 2.0 * spray(x, y)])

    zs = np.empty((m + 1, 2 * n))
    z = np.concatenate([x0, y0])
    zs[0] = z
    msg = model.check_domain(x0)
    if msg:
        raise DomainExit(msg, 0.0)
    for k in range(m):
        t = k * h
        try:
            k1 = rhs(z)
            k2 = rhs(z + 0.5 * h * k1)
            k3 = rhs(z + 0.5 * h * k2)
            k4 = rhs(z + h * k3)
        except GeometryError as exc:
            raise _wrap_failure(exc, t) from exc
        z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(z)):
            raise IntegrationError("state became non-finite", t + h)
        msg = model.check_domain(z[:n])
        if msg:
            raise DomainExit(msg, t + h)
        zs[k + 1] = z
    x, y = zs[:, :n], zs[:, n:]
    y2 = -spray(x, y) + 0.5 * force(x, y)
    return Trajectory(t=np.linspace(0.0, cfg.t_end, m + 1), x=x, y=y, y2=y2)


def _midpoints(traj):
    h = traj.dt
    xm = 0.5 * (traj.x[:-1] + traj.x[1:]) + h / 8.0 * (traj.y[:-1] - traj.y[1:])
    ym = 0.5 * (traj.y[:-1] + traj.y[1:]) + h / 4.0 * (traj.y2[:-1] - traj.y2[1:])
    return xm, ym


def _rk4_linear(A, Am, z0, h):
    """RK4 for z' = A(t) z with A given at grid points and half-steps."""
    zs = np.empty((len(A), len(z0)))
    zs[0] = z = z0
    for k in range(len(A) - 1):
        k1 = A[k] @ z
        k2 = Am[k] @ (z + 0.5 * h * k1)
        k3 = Am[k] @ (z + 0.5 * h * k2)
        k4 = A[k + 1] @ (z + h * k3)
        z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        zs[k + 1] = z
    return zs


def _jacobi_matrix(M1, M2):
    n = M1.shape[-1]
    A = np.zeros(M1.shape[:-2] + (2 * n, 2 * n))
    A[..., :n, n:] = np.eye(n)
    A[..., n:, :n] = -2.0 * M2
    A[..., n:, n:] = -2.0 * M1
    return A


def integrate_jacobi(model, force, traj, w0, w0dot, diff=ANALYTIC):
    """Deviation field along ``traj``: 1/2 w'' + M1 w' + M2 w = 0.

    Coefficients are our dual coefficients at the on-extension state
    y2 = -G + F/2. Returns ``traj`` with ``w`` and ``w1 = dw/dt`` filled.
    """
    n = traj.n
    w0, w0dot = _vec(w0, "w0"), _vec(w0dot, "w0dot")
    if w0.shape != (n,) or w0dot.shape != (n,):
        raise DimensionMismatch(f"initial deviation must have dimension {n}")
    xm, ym = _midpoints(traj)
    M1, M2, _ = on_extension_dual(model, force, traj.x, traj.y, diff)
    M1m, M2m, _ = on_extension_dual(model, force, xm, ym, diff)
    zs = _rk4_linear(_jacobi_matrix(M1, M2), _jacobi_matrix(M1m, M2m),
                     np.concatenate([w0, w0dot]), traj.dt)
    return replace(traj, w=zs[:, :n], w1=zs[:, n:])


def deviation_oracle(model, force, init, w0, w0dot, cfg, h=1e-4, diff=ANALYTIC,
                     richardson=False):
    """Deviation field as a central difference of two perturbed trajectories.

    Independent of the dual coefficients: it only uses the trajectory
    integrator. With ``richardson`` the steps h and h/2 are combined.
    """
    if not h > 0:
        raise ValueError("oracle step h must be positive")
    x0, y0 = _vec(init.x), _vec(init.y)
    w0, w0dot = _vec(w0), _vec(w0dot)

    def central(step):
        plus = integrate_trajectory(model, force, FirstOrderState(x0 + step * w0, y0 + step * w0dot), cfg, diff)
        minus = integrate_trajectory(model, force, FirstOrderState(x0 - step * w0, y0 - step * w0dot), cfg, diff)
        return (plus.x - minus.x) / (2 * step), (plus.y - minus.y) / (2 * step)

    w, w1 = central(h)
    if richardson:
        wh, w1h = central(h / 2)
        w, w1 = (4 * wh - w) / 3, (4 * w1h - w1) / 3
    base = integrate_trajectory(model, force, FirstOrderState(x0, y0), cfg, diff)
    return replace(base, w=w, w1=w1)


def berwald_covariant_rate(model, traj, k, v, vdot, diff=ANALYTIC):
    """Dv/dt = v' + N(x, y) v at sample ``k`` (reference vector y)."""
    if not -len(traj) <= k < len(traj):
        raise IndexOutOfRange(f"sample {k} outside trajectory of length {len(traj)}")
    N = spray_jet(model, traj.x[k], traj.y[k], diff).N
    return np.asarray(vdot, float) + N @ np.asarray(v, float)


def parallel_transport(model, traj, w0, diff=ANALYTIC, geodesic_tol=1e-6):
    """Solve w' + N w = 0 along ``traj``; warns if ``traj`` is not a geodesic."""
    n = traj.n
    w0 = _vec(w0, "w0")
    if w0.shape != (n,):
        raise DimensionMismatch(f"w0 must have dimension {n}")
    N = spray_jet(model, traj.x, traj.y, diff).N
    residual = np.max(np.abs(2.0 * traj.y2 + np.einsum("kij,kj->ki", N, traj.y)))
    if residual > geodesic_tol:
        warnings.warn(f"parallel transport along a non-geodesic (|dy/dt + N y| = {residual:.3g})",
                      stacklevel=2)
    xm, ym = _midpoints(traj)
    Nm = spray_jet(model, xm, ym, diff).N
    ws = _rk4_linear(-N, -Nm, w0, traj.dt)
    w1 = -np.einsum("kij,kj->ki", N, ws)
    return replace(traj, w=ws, w1=w1)


# --- residuals -------------------------------------------------------------------

def ddt(v, h):
    """Fourth-order first derivative along axis 0 (one-sided near the ends)."""
    v = np.asarray(v, dtype=float)
    if len(v) < 5:
        raise TooFewSamples(f"need at least 5 samples, got {len(v)}")
    d = np.empty_like(v)
    d[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    d[0] = (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3] - 3 * v[4]) / (12 * h)
    d[1] = (-3 * v[0] - 10 * v[1] + 18 * v[2] - 6 * v[3] + v[4]) / (12 * h)
    d[-1] = (25 * v[-1] - 48 * v[-2] + 36 * v[-3] - 16 * v[-4] + 3 * v[-5]) / (12 * h)
    d[-2] = (3 * v[-1] + 10 * v[-2] - 18 * v[-3] + 6 * v[-4] - v[-5]) / (12 * h)
    return d


def d2dt2(v, h):
    """Fourth-order second derivative along axis 0 (third order at the ends)."""
    v = np.asarray(v, dtype=float)
    if len(v) < 5:
        raise TooFewSamples(f"need at least 5 samples, got {len(v)}")
    d = np.empty_like(v)
    h2 = 12 * h * h
    d[2:-2] = (-v[:-4] + 16 * v[1:-3] - 30 * v[2:-2] + 16 * v[3:-1] - v[4:]) / h2
    d[0] = (35 * v[0] - 104 * v[1] + 114 * v[2] - 56 * v[3] + 11 * v[4]) / h2
    d[1] = (11 * v[0] - 20 * v[1] + 6 * v[2] + 4 * v[3] - v[4]) / h2
    d[-1] = (35 * v[-1] - 104 * v[-2] + 114 * v[-3] - 56 * v[-4] + 11 * v[-5]) / h2
    d[-2] = (11 * v[-1] - 20 * v[-2] + 6 * v[-3] + 4 * v[-4] - v[-5]) / h2
    return d


def sup_interior(res, edge=2):
    """Supremum excluding the samples that use one-sided stencils."""
    res = np.asarray(res)
    return float(np.max(res[edge:len(res) - edge]))


def ours_provider(model, force, diff=ANALYTIC):
    return lambda x, y, y2: our_dual_coefficients(model, force, SecondOrderState(x, y, y2), diff)


def miron_provider(model, diff=ANALYTIC):
    return lambda x, y, y2: miron_dual_coefficients(model, SecondOrderState(x, y, y2), diff)


def _coefficients(mc_provider, traj):
    mc = mc_provider(traj.x, traj.y, traj.y2)
    if not isinstance(mc, DualCoefficients):
        mc = DualCoefficients(mc[0], mc[1], None, "pde-supplied")
    return mc


def v2_residual(traj, mc_provider):
    """|1/2 w'' + M1 w' + M2 w| per sample, derivatives by differencing w.

    This is the v2 component of the tangent (w, w', w''/2) in the adapted
    frame; it vanishes exactly for deviation fields.
    """
    if traj.w is None:
        raise ValueError("trajectory carries no deviation field")
    if len(traj) < 5:
        raise TooFewSamples(f"need at least 5 samples, got {len(traj)}")
    h = traj.dt
    w1 = ddt(traj.w, h)
    w2 = 0.5 * d2dt2(traj.w, h)
    _, _, v2 = adapted_components(traj.w, w1, w2, _coefficients(mc_provider, traj))
    return np.linalg.norm(v2, axis=-1)


def horizontality_residual(traj, mc_provider):
    """(|delta y1/dt|, |delta y2/dt|) per sample of the extension curve."""
    if len(traj) < 5:
        raise TooFewSamples(f"need at least 5 samples, got {len(traj)}")
    h = traj.dt
    _, d1, d2 = adapted_components(ddt(traj.x, h), ddt(traj.y, h), ddt(traj.y2, h),
                                   _coefficients(mc_provider, traj))
    return np.linalg.norm(d1, axis=-1), np.linalg.norm(d2, axis=-1)


def energy(model, traj):
    return np.asarray(model.lagrangian(traj.x, traj.y), dtype=float)


def conjugate_times(traj, rel_tol=1e-6):
    """Times where the deviation field vanishes, i.e. |w| has a zero.

    Each interior local minimum of |w| is refined on the quadratic through
    its three samples; it counts when the refined minimum is below
    ``rel_tol * max|w|``.
    """
    if traj.w is None:
        return []
    w = np.asarray(traj.w, dtype=float)
    r = np.linalg.norm(w, axis=1)
    scale = rel_tol * max(float(np.max(r)), 1e-300)
    times = []
    for k in range(1, len(r) - 1):
        if r[k] <= r[k - 1] and r[k] <= r[k + 1]:
            wm, w0, wp = w[k - 1:k + 2]
            # w(s) = w0 + b s + c s^2 on s in [-1, 1]; minimize |w(s)|^2 exactly
            b, c = 0.5 * (wp - wm), 0.5 * (wp + wm) - w0
            quartic = np.polynomial.Polynomial([w0 @ w0, 2 * w0 @ b, b @ b + 2 * w0 @ c, 2 * b @ c, c @ c])
            cand = [1.0, -1.0] + [z.real for z in quartic.deriv().roots()
                                  if abs(z.imag) < 1e-12 and -1 <= z.real <= 1]
            sbest = min(cand, key=quartic)
            if np.sqrt(max(quartic(sbest), 0.0)) < scale:
                times.append(float(traj.t[k] + sbest * (traj.t[k + 1] - traj.t[k])))
    return times


def curve_from_samples(t, x):
    """Extension curve of a sampled base curve: y and y2 by differencing."""
    t, x = np.asarray(t, float), np.asarray(x, float)
    h = t[1] - t[0]
    return Trajectory(t=t, x=x, y=ddt(x, h), y2=0.5 * d2dt2(x, h))
