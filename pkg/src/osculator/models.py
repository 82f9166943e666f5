"""Built-in Lagrangians and force fields.

Riemannian presets carry closed-form Christoffel symbols and their first
derivatives, which makes every connection quantity analytic. Randers and the
callback kinds go through finite differences.
"""
from __future__ import annotations

import importlib
from dataclasses import dataclass, field

import numpy as np

from .geom_core import ForceField, GeometryModel, InvalidSpec, SprayJet, zero_force

MODEL_KINDS = ("euclidean", "flat_polar", "sphere", "hyperbolic_half_plane", "randers",
               "minkowski_norm", "riemannian_callback")
FORCE_KINDS = ("zero", "linear_drag", "position_spring", "callback")

SPHERE_GUARD = 0.05


@dataclass
class ModelSpec:
    kind: str
    n: int = 2
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {"kind": self.kind, "n": self.n, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d):
        if "kind" not in d:
            raise InvalidSpec("model spec needs a 'kind'")
        return cls(kind=d["kind"], n=int(d.get("n", 2)), params=dict(d.get("params", {})))


@dataclass
class ForceSpec:
    kind: str = "zero"
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d):
        return cls(kind=d.get("kind", "zero"), params=dict(d.get("params", {})))


def _resolve(obj, what):
    """Accept a callable or a 'package.module:attr' import string."""
    if callable(obj):
        return obj
    if isinstance(obj, str) and ":" in obj:
        mod, _, attr = obj.partition(":")
        try:
            return getattr(importlib.import_module(mod), attr)
        except (ImportError, AttributeError) as exc:
            raise InvalidSpec(f"cannot import {what} {obj!r}: {exc}") from exc
    raise InvalidSpec(f"{what} must be a callable or 'module:attr' string, got {obj!r}")


# --- Riemannian machinery ----------------------------------------------------

def _riemannian_callbacks(metric, metric_grad=None, christoffel=None, christoffel_grad=None):
    def lagrangian(x, y):
        return np.einsum("...ij,...i,...j->...", metric(x), y, y)

    out = {"lagrangian": lagrangian}
    if metric_grad is not None:
        def lagrangian_derivs(x, y):
            g, dg = metric(x), metric_grad(x)
            return (np.einsum("...ijk,...i,...j->...k", dg, y, y),
                    2.0 * np.broadcast_to(g, np.shape(y) + (np.shape(y)[-1],)),
                    2.0 * np.einsum("...smj,...m->...sj", dg, y))
        out["lagrangian_derivs"] = lagrangian_derivs
    if christoffel is not None and christoffel_grad is not None:
        def spray(x, y):
            return 0.5 * np.einsum("...ijk,...j,...k->...i", christoffel(x), y, y)

        def jet(x, y):
            x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
            gam, dgam = christoffel(x), christoffel_grad(x)
            N = np.einsum("...ijk,...k->...ij", gam, y)
            dN_dx = np.einsum("...ijkl,...k->...ijl", dgam, y)
            return SprayJet(
                G=0.5 * np.einsum("...ij,...j->...i", N, y),
                N=N,
                Lb=gam,
                dG_dx=0.5 * np.einsum("...ijl,...j->...il", dN_dx, y),
                dN_dx=dN_dx,
                P=np.zeros(gam.shape + (gam.shape[-1],)),
                dLb_dx=dgam,
            )
        out["spray"] = spray
        out["spray_jet"] = jet
    return out


def _zeros(x, *tail):
    return np.zeros(np.shape(x)[:-1] + tail)


def _euclidean(n):
    def metric(x):
        return np.broadcast_to(np.eye(n), np.shape(x)[:-1] + (n, n)).copy()

    return _riemannian_callbacks(
        metric,
        metric_grad=lambda x: _zeros(x, n, n, n),
        christoffel=lambda x: _zeros(x, n, n, n),
        christoffel_grad=lambda x: _zeros(x, n, n, n, n),
    )


def _sphere(radius):
    r2 = radius * radius

    def metric(x):
        th = x[..., 0]
        g = _zeros(x, 2, 2)
        g[..., 0, 0] = r2
        g[..., 1, 1] = r2 * np.sin(th) ** 2
        return g

    def metric_grad(x):
        dg = _zeros(x, 2, 2, 2)
        dg[..., 1, 1, 0] = r2 * np.sin(2 * x[..., 0])
        return dg

    def christoffel(x):
        th = x[..., 0]
        gam = _zeros(x, 2, 2, 2)
        gam[..., 0, 1, 1] = -np.sin(th) * np.cos(th)
        gam[..., 1, 0, 1] = gam[..., 1, 1, 0] = np.cos(th) / np.sin(th)
        return gam

    def christoffel_grad(x):
        th = x[..., 0]
        dgam = _zeros(x, 2, 2, 2, 2)
        dgam[..., 0, 1, 1, 0] = -np.cos(2 * th)
        dgam[..., 1, 0, 1, 0] = dgam[..., 1, 1, 0, 0] = -1.0 / np.sin(th) ** 2
        return dgam

    return _riemannian_callbacks(metric, metric_grad, christoffel, christoffel_grad)


def _flat_polar():
    def metric(x):
        g = _zeros(x, 2, 2)
        g[..., 0, 0] = 1.0
        g[..., 1, 1] = x[..., 0] ** 2
        return g

    def metric_grad(x):
        dg = _zeros(x, 2, 2, 2)
        dg[..., 1, 1, 0] = 2 * x[..., 0]
        return dg

    def christoffel(x):
        r = x[..., 0]
        gam = _zeros(x, 2, 2, 2)
        gam[..., 0, 1, 1] = -r
        gam[..., 1, 0, 1] = gam[..., 1, 1, 0] = 1.0 / r
        return gam

    def christoffel_grad(x):
        r = x[..., 0]
        dgam = _zeros(x, 2, 2, 2, 2)
        dgam[..., 0, 1, 1, 0] = -1.0
        dgam[..., 1, 0, 1, 0] = dgam[..., 1, 1, 0, 0] = -1.0 / r ** 2
        return dgam

    return _riemannian_callbacks(metric, metric_grad, christoffel, christoffel_grad)


def _hyperbolic():
    def metric(x):
        g = _zeros(x, 2, 2)
        g[..., 0, 0] = g[..., 1, 1] = 1.0 / x[..., 1] ** 2
        return g

    def metric_grad(x):
        dg = _zeros(x, 2, 2, 2)
        dg[..., 0, 0, 1] = dg[..., 1, 1, 1] = -2.0 / x[..., 1] ** 3
        return dg

    def christoffel(x):
        v = 1.0 / x[..., 1]
        gam = _zeros(x, 2, 2, 2)
        gam[..., 0, 0, 1] = gam[..., 0, 1, 0] = -v
        gam[..., 1, 0, 0] = v
        gam[..., 1, 1, 1] = -v
        return gam

    def christoffel_grad(x):
        v2 = 1.0 / x[..., 1] ** 2
        dgam = _zeros(x, 2, 2, 2, 2)
        dgam[..., 0, 0, 1, 1] = dgam[..., 0, 1, 0, 1] = v2
        dgam[..., 1, 0, 0, 1] = -v2
        dgam[..., 1, 1, 1, 1] = v2
        return dgam

    return _riemannian_callbacks(metric, metric_grad, christoffel, christoffel_grad)


def _randers(base, b, n):
    b = np.asarray(b, dtype=float)
    if base == "euclidean":
        def a_metric(x):
            return np.broadcast_to(np.eye(n), np.shape(x)[:-1] + (n, n))
    else:
        def a_metric(x):
            g = _zeros(x, 2, 2)
            g[..., 0, 0] = 1.0
            g[..., 1, 1] = np.sin(x[..., 0]) ** 2
            return g

    def lagrangian(x, y):
        alpha = np.sqrt(np.einsum("...ij,...i,...j->...", a_metric(x), y, y))
        return (alpha + y @ b) ** 2

    return {"lagrangian": lagrangian}


# --- domains -------------------------------------------------------------------

def _sphere_domain(x):
    th = x[..., 0]
    if np.any(th < SPHERE_GUARD) or np.any(th > np.pi - SPHERE_GUARD):
        return f"theta outside [{SPHERE_GUARD}, pi - {SPHERE_GUARD}]"
    return None


def _positive_coordinate(index, label):
    def domain(x):
        if np.any(x[..., index] <= 0):
            return f"{label} must stay positive"
        return None
    return domain


def build_model(spec):
    """Construct a GeometryModel from a ModelSpec (InvalidSpec on bad input)."""
    if isinstance(spec, dict):
        spec = ModelSpec.from_dict(spec)
    kind, n, p = spec.kind, spec.n, spec.params
    if kind not in MODEL_KINDS:
        raise InvalidSpec(f"unknown model kind {kind!r}; expected one of {', '.join(MODEL_KINDS)}")
    if n < 1:
        raise InvalidSpec("n must be at least 1")
    two_d = ("flat_polar", "sphere", "hyperbolic_half_plane")
    if kind in two_d and n != 2:
        raise InvalidSpec(f"{kind} is two-dimensional, got n={n}")

    domain = None
    y_min = 0.0
    if kind == "euclidean":
        cb = _euclidean(n)
    elif kind == "sphere":
        radius = float(p.get("radius", 1.0))
        if not radius > 0:
            raise InvalidSpec("sphere radius must be positive")
        cb = _sphere(radius)
        domain = _sphere_domain
    elif kind == "flat_polar":
        cb = _flat_polar()
        domain = _positive_coordinate(0, "radius r")
    elif kind == "hyperbolic_half_plane":
        cb = _hyperbolic()
        domain = _positive_coordinate(1, "x^2")
    elif kind == "minkowski_norm":
        if "lagrangian" in p:
            user = _resolve(p["lagrangian"], "lagrangian")
            cb = {"lagrangian": lambda x, y: user(y)}
        else:
            cb = _euclidean(n)
    elif kind == "randers":
        base = p.get("base", "sphere")
        if base not in ("sphere", "euclidean"):
            raise InvalidSpec(f"randers base must be 'sphere' or 'euclidean', got {base!r}")
        if base == "sphere" and n != 2:
            raise InvalidSpec("randers over the sphere is two-dimensional")
        b = np.asarray(p.get("b", [0.3] + [0.0] * (n - 1)), dtype=float)
        if b.shape != (n,):
            raise InvalidSpec(f"randers drift b must have {n} components")
        # sup over the domain of |b|_a
        bnorm = np.hypot(b[0], b[1] / np.sin(SPHERE_GUARD)) if base == "sphere" else np.linalg.norm(b)
        if not bnorm < 1:
            raise InvalidSpec(f"randers drift must satisfy |b|_a < 1 (got {bnorm:.4g})")
        cb = _randers(base, b, n)
        y_min = float(p.get("y_min", 1e-8))
        if base == "sphere":
            domain = _sphere_domain
    else:  # riemannian_callback
        if "metric" not in p:
            raise InvalidSpec("riemannian_callback needs params.metric")
        metric = _resolve(p["metric"], "metric")
        cb = _riemannian_callbacks(lambda x: np.asarray(metric(x), dtype=float))

    return GeometryModel(name=kind, n=n, y_min=y_min, domain=domain, params=dict(p),
                         is_spray_homogeneous=bool(p.get("homogeneous", True)), **cb)


def build_force(spec, n=None):
    """Construct a ForceField. ``n`` is needed for every kind but callbacks with it set."""
    if isinstance(spec, dict):
        spec = ForceSpec.from_dict(spec)
    kind, p = spec.kind, spec.params
    if kind not in FORCE_KINDS:
        raise InvalidSpec(f"unknown force kind {kind!r}; expected one of {', '.join(FORCE_KINDS)}")
    n = int(p.get("n", n if n is not None else 2))
    if kind == "zero":
        return zero_force(n)
    if kind == "linear_drag":
        k = float(p.get("k", 1.0))
        if k < 0:
            raise InvalidSpec("drag coefficient k must be non-negative")

        def F(x, y):
            return -k * np.broadcast_to(y, np.broadcast_shapes(np.shape(x), np.shape(y)))

        def dF_dx(x, y):
            return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y)) + (n,))

        def dF_dy(x, y):
            shape = np.broadcast_shapes(np.shape(x), np.shape(y))
            return np.broadcast_to(-k * np.eye(n), shape + (n,)).copy()

        return ForceField(n, F, dF_dx, dF_dy, name="linear_drag")
    if kind == "position_spring":
        K = np.asarray(p.get("K", 1.0), dtype=float)
        if not np.all(np.isfinite(K)):
            raise InvalidSpec("spring matrix K must be finite")
        if K.ndim == 0:
            K = K * np.eye(n)
        if K.shape != (n, n):
            raise InvalidSpec(f"spring matrix K must be a finite {n}x{n} matrix")

        def F(x, y):
            shape = np.broadcast_shapes(np.shape(x), np.shape(y))
            return -np.broadcast_to(np.asarray(x) @ K.T, shape)

        def dF_dx(x, y):
            shape = np.broadcast_shapes(np.shape(x), np.shape(y))
            return np.broadcast_to(-K, shape + (n,)).copy()

        def dF_dy(x, y):
            return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y)) + (n,))

        return ForceField(n, F, dF_dx, dF_dy, name="position_spring")
    if "force" not in p:
        raise InvalidSpec("callback force needs params.force")
    F = _resolve(p["force"], "force")
    dF_dx = _resolve(p["dF_dx"], "dF_dx") if "dF_dx" in p else None
    dF_dy = _resolve(p["dF_dy"], "dF_dy") if "dF_dy" in p else None
    return ForceField(n, F, dF_dx, dF_dy, name="callback")
