"""Base types, model interfaces and the finite-difference engine.

Every tensor in this package is a dense numpy array. Leading axes are batch
axes; the trailing axes carry the tensor indices in the order they are written
(contravariant index first), e.g. ``N[..., i, j]`` is N^i_j and a derivative
index is always appended last.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

EPS = np.finfo(float).eps


class GeometryError(Exception):
    """Base class for all errors raised by this package."""


class SingularVelocity(GeometryError):
    pass


class SingularMetric(GeometryError):
    pass


class DimensionMismatch(GeometryError, ValueError):
    pass


class InvalidSpec(GeometryError, ValueError):
    pass


class IntegrationError(GeometryError):
    """An integration aborted; ``t`` is the time of the failing step."""

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t={t:.6g})")
        self.t = t


class DomainExit(IntegrationError):
    pass


class TooFewSamples(GeometryError, ValueError):
    pass


class IndexOutOfRange(GeometryError, IndexError):
    pass


def _vec(a, name="array"):
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True)
class BasePoint:
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _vec(self.x, "x"))

    @property
    def n(self):
        return self.x.shape[-1]


@dataclass(frozen=True)
class FirstOrderState:
    """A point (x, y) of TM. Arrays may carry leading batch axes."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x, y = _vec(self.x, "x"), _vec(self.y, "y")
        if x.shape[-1] != y.shape[-1]:
            raise DimensionMismatch(f"x has dimension {x.shape[-1]}, y has {y.shape[-1]}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.x.shape[-1]


@dataclass(frozen=True)
class SecondOrderState:
    """A point (x, y, y2) of T^2 M; along an extension curve y2 = x''/2."""

    x: np.ndarray
    y: np.ndarray
    y2: np.ndarray

    def __post_init__(self):
        x, y, y2 = _vec(self.x, "x"), _vec(self.y, "y"), _vec(self.y2, "y2")
        if not (x.shape[-1] == y.shape[-1] == y2.shape[-1]):
            raise DimensionMismatch("x, y and y2 must share the same dimension")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "y2", y2)

    @property
    def n(self):
        return self.x.shape[-1]

    @property
    def first_order(self):
        return FirstOrderState(self.x, self.y)


@dataclass(frozen=True)
class DiffStrategy:
    """How derivatives are obtained.

    ``mode`` is ``"analytic"`` (use model callbacks when present, fall back to
    finite differences) or ``"fd"`` (always finite differences).

    ``h1, h2, h3`` are base steps for 1st/2nd/3rd derivatives of functions
    known to machine precision (the Lagrangian, forces), multiplied by
    ``max(1, |v|)`` per coordinate. The exception is the y-steps of a
    2-homogeneous Lagrangian, which scale with ``|y|``.

    ``hs1, hs2, hs3`` are absolute steps for differentiating the spray, which
    is itself a finite-difference product in ``"fd"`` mode, so its error is
    truncation-dominated and coordinate-relative scaling would only enlarge
    it. ``accuracy`` and ``spray_accuracy`` select the order (4 or 6) of the
    central stencil that is nested once per derivative.
    """

    mode: str = "analytic"
    h1: float = EPS ** (1 / 7)
    h2: float = EPS ** (1 / 8)
    h3: float = EPS ** (1 / 9)
    hs1: float = 8e-3
    hs2: float = 1.5e-2
    hs3: float = 2e-2
    accuracy: int = 6
    spray_accuracy: int = 6

    def __post_init__(self):
        if self.mode not in ("analytic", "fd"):
            raise ValueError(f"unknown diff mode {self.mode!r}")
        if min(self.h1, self.h2, self.h3, self.hs1, self.hs2, self.hs3) <= 0:
            raise ValueError("finite-difference steps must be positive")
        if self.accuracy not in (4, 6) or self.spray_accuracy not in (4, 6):
            raise ValueError("stencil accuracy must be 4 or 6")

    @property
    def analytic(self):
        return self.mode == "analytic"

    @classmethod
    def forced_fd(cls, **kw):
        return cls(mode="fd", **kw)


ANALYTIC = DiffStrategy()
FORCED_FD = DiffStrategy(mode="fd")

# central first-derivative stencils by order of accuracy
_STENCILS = {
    4: (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0),
    6: (np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]),
        np.array([-1.0, 9.0, -45.0, 45.0, -9.0, 1.0]) / 60.0),
}
_MAX_POINTS = 1 << 15


def fd_partials(f, z, combos, h, accuracy=4, relative=True, scale=None):
    """Mixed partial derivatives of a vectorized function by nested stencils.

    Parameters
    ----------
    f : callable
        Maps an array of points ``(P, D)`` to values ``(P, *out)``.
    z : array (B, D)
        Base points.
    combos : sequence of index tuples, all of the same length k
        Each tuple ``(a, b, ...)`` requests d^k f / dz_a dz_b ...
    h : float
        Base step; the step along coordinate a is ``h * max(1, |z_a|)``, or
        plain ``h`` when ``relative`` is false.
    scale : array (B, D), optional
        Explicit per-point, per-coordinate step multipliers (overrides
        ``relative``).
    accuracy : {4, 6}
        Order of the central first-derivative stencil that is nested k times.

    Returns
    -------
    array (B, len(combos), *out)
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    combos = [tuple(c) for c in combos]
    k = len(combos[0])
    B, D = z.shape
    C = len(combos)
    offsets, base_weights = _STENCILS[accuracy]
    grid = np.array(list(itertools.product(range(len(offsets)), repeat=k)))
    weights = np.prod(base_weights[grid], axis=1)

    # Offsets are integer multiples of the per-axis step, so points shared
    # between combos (or within one) are evaluated once.
    ivec = np.zeros((C, len(grid), D), dtype=np.int64)
    for c, combo in enumerate(combos):
        for m, a in enumerate(combo):
            ivec[c, :, a] += offsets[grid[:, m]].astype(np.int64)
    uniq, inv = np.unique(ivec.reshape(-1, D), axis=0, return_inverse=True)
    W = np.zeros((C, len(uniq)))
    np.add.at(W, (np.repeat(np.arange(C), len(grid)), inv.ravel()), np.tile(weights, C))
    keep = np.any(W != 0.0, axis=0)
    uniq, W = uniq[keep], W[:, keep]
    U = len(uniq)

    if scale is not None:
        steps = h * np.broadcast_to(np.asarray(scale, dtype=float), z.shape)
    elif relative:
        steps = h * np.maximum(1.0, np.abs(z))
    else:
        steps = np.full(z.shape, float(h))
    denom = np.stack([np.prod(steps[:, list(c)], axis=1) for c in combos], axis=1)  # (B, C)
    chunk = max(1, _MAX_POINTS // U)
    out = []
    for start in range(0, B, chunk):
        zb, hb = z[start:start + chunk], steps[start:start + chunk]
        pts = (zb[:, None, :] + uniq[None, :, :] * hb[:, None, :]).reshape(-1, D)
        vals = np.asarray(f(pts), dtype=float)
        vals = vals.reshape((len(zb), U) + vals.shape[1:])
        d = np.tensordot(W, vals, axes=([1], [1]))  # (C, b, *out)
        d = np.moveaxis(d, 0, 1)
        d /= denom[start:start + chunk].reshape(d.shape[:2] + (1,) * (d.ndim - 2))
        out.append(d)
    return np.concatenate(out, axis=0)


@dataclass(frozen=True)
class SprayJet:
    """Spray coefficients and their derivatives at a batch of (x, y).

    G[i]; N[i,j] = dG^i/dy^j; Lb[i,j,k] = d2G^i/dy^j dy^k; dG_dx[i,k];
    dN_dx[i,j,k] = d N^i_j / dx^k; P[i,j,k,l] = d Lb^i_jk / dy^l;
    dLb_dx[i,j,k,l] = d Lb^i_jk / dx^l. P and dLb_dx may be None.
    """

    G: np.ndarray
    N: np.ndarray
    Lb: np.ndarray
    dG_dx: np.ndarray
    dN_dx: np.ndarray
    P: Optional[np.ndarray] = None
    dLb_dx: Optional[np.ndarray] = None


@dataclass
class GeometryModel:
    """A Lagrangian L(x, y) together with whatever analytic data is known.

    All callbacks are vectorized: inputs ``x, y`` of shape ``(..., n)``.

    lagrangian_derivs(x, y) -> (dL/dx [k], d2L/dy dy [s,j], d2L/dy^s dx^j [s,j])
    spray(x, y) -> G
    spray_jet(x, y) -> SprayJet (complete, including P and dLb_dx)
    domain(x) -> None if x is admissible, else a message
    """

    name: str
    n: int
    lagrangian: Callable
    lagrangian_derivs: Optional[Callable] = None
    spray: Optional[Callable] = None
    spray_jet: Optional[Callable] = None
    is_spray_homogeneous: bool = True
    y_min: float = 0.0
    domain: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    def check_domain(self, x):
        if self.domain is None:
            return None
        return self.domain(np.asarray(x, dtype=float))


@dataclass
class ForceField:
    """External force F^i(x, y), with the convention delta y^i / dt = F^i."""

    n: int
    force: Callable
    dF_dx: Optional[Callable] = None
    dF_dy: Optional[Callable] = None
    is_zero: bool = False
    name: str = "callback"

    def __call__(self, x, y):
        return np.asarray(self.force(x, y), dtype=float)


def zero_force(n):
    def F(x, y):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y)))

    def dF(x, y):
        shape = np.broadcast_shapes(np.shape(x), np.shape(y))
        return np.zeros(shape + (shape[-1],))

    return ForceField(n, F, dF, dF, is_zero=True, name="zero")


def _flatten(x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    shape = np.broadcast_shapes(x.shape, y.shape)
    n = shape[-1]
    x = np.broadcast_to(x, shape).reshape(-1, n)
    y = np.broadcast_to(y, shape).reshape(-1, n)
    return x, y, shape[:-1], n


def check_velocity(model, y):
    if model.y_min > 0:
        speed = np.linalg.norm(np.asarray(y, dtype=float), axis=-1)
        if np.any(speed < model.y_min):
            raise SingularVelocity(
                f"|y| = {np.min(speed):.3g} is inside the singular cone of {model.name} "
                f"(y_min = {model.y_min:g})")


def _lagrangian_step_scale(model, z, n):
    """Step multipliers max(1, |x_a|) in x; in y, |y| for 2-homogeneous models.

    Scaling the y-steps with |y| makes the finite-difference metric of a
    homogeneous Lagrangian exactly 0-homogeneous, so accuracy does not
    degrade at small speeds.
    """
    scale = np.maximum(1.0, np.abs(z))
    if model.is_spray_homogeneous:
        speed = np.linalg.norm(z[:, n:], axis=1)
        moving = speed > 0
        scale[moving, n:] = speed[moving, None]
    return scale


def lagrangian_derivatives(model, x, y, d=ANALYTIC):
    """dL/dx, d2L/dydy and d2L/dy dx at (x, y), analytic when allowed."""
    if d.analytic and model.lagrangian_derivs is not None:
        return tuple(np.asarray(a, dtype=float) for a in model.lagrangian_derivs(x, y))
    xf, yf, batch, n = _flatten(x, y)
    z = np.concatenate([xf, yf], axis=1)

    def L(p):
        return model.lagrangian(p[:, :n], p[:, n:])

    scale = _lagrangian_step_scale(model, z, n)
    dL_dx = fd_partials(L, z, [(k,) for k in range(n)], d.h1, d.accuracy, scale=scale)
    yy = [(n + i, n + j) for i in range(n) for j in range(n)]
    yx = [(n + s, j) for s in range(n) for j in range(n)]
    second = fd_partials(L, z, yy + yx, d.h2, d.accuracy, scale=scale)
    d2L_dy2 = second[:, :n * n].reshape(-1, n, n)
    d2L_dydx = second[:, n * n:].reshape(-1, n, n)
    return (dL_dx.reshape(batch + (n,)),
            d2L_dy2.reshape(batch + (n, n)),
            d2L_dydx.reshape(batch + (n, n)))


def metric_tensor(model, s, d=ANALYTIC):
    """g_ij = 1/2 d2L/dy^i dy^j at a first-order state, symmetrized."""
    check_velocity(model, s.y)
    _, hess, _ = lagrangian_derivatives(model, s.x, s.y, d)
    g = 0.5 * hess
    return 0.5 * (g + np.swapaxes(g, -1, -2))


def metric_asymmetry(model, s, d=FORCED_FD):
    """Max |g_ij - g_ji| before symmetrization (diagnostic for the FD path)."""
    _, hess, _ = lagrangian_derivatives(model, s.x, s.y, d)
    return float(np.max(np.abs(hess - np.swapaxes(hess, -1, -2)))) * 0.5


def _check_condition(g):
    cond = np.linalg.cond(g)
    if np.any(~np.isfinite(cond)) or np.any(cond > 1e12):
        raise SingularMetric(f"metric condition number {np.max(cond):.3g} exceeds 1e12")


def invert_metric(g):
    """Inverse metric g^ij; raises SingularMetric when ill-conditioned."""
    g = np.asarray(g, dtype=float)
    _check_condition(g)
    ginv = np.linalg.inv(g)
    return 0.5 * (ginv + np.swapaxes(ginv, -1, -2))


def force_derivatives(force, x, y, d=ANALYTIC):
    """(dF/dx, dF/dy) with layout [..., i, j] = dF^i/dx^j."""
    if d.analytic and force.dF_dx is not None and force.dF_dy is not None:
        return (np.asarray(force.dF_dx(x, y), dtype=float),
                np.asarray(force.dF_dy(x, y), dtype=float))
    xf, yf, batch, n = _flatten(x, y)
    if force.is_zero:
        z = np.zeros(batch + (n, n))
        return z, z.copy()
    z = np.concatenate([xf, yf], axis=1)

    def F(p):
        return force(p[:, :n], p[:, n:])

    jac = fd_partials(F, z, [(a,) for a in range(2 * n)], d.h1, d.accuracy)  # (B, 2n, n)
    jac = np.swapaxes(jac, 1, 2)  # (B, n, 2n)
    return (jac[:, :, :n].reshape(batch + (n, n)),
            jac[:, :, n:].reshape(batch + (n, n)))
