"""Spray, nonlinear connection, Berwald data and the dual coefficients on T^2 M.

Index layouts (trailing axes; leading axes are batch axes):

    G[i]          spray coefficients
    N[i, j]       N^i_j = dG^i/dy^j
    L[i, j, k]    Berwald L^i_jk = dN^i_j/dy^k
    R_tor[i,j,k]  R^i_jk = delta_k N^i_j - delta_j N^i_k
    R_hh[j,i,k,l] R_j^i_kl
    P_hv[j,i,k,l] P_j^i_kl = dL^i_jk/dy^l

The force convention throughout is delta y^i/dt = F^i, i.e. trajectories solve
x'' + 2G(x, x') = F(x, x').
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geom_core import (
    ANALYTIC,
    DimensionMismatch,
    FirstOrderState,
    SecondOrderState,
    SprayJet,
    _check_condition,
    _flatten,
    check_velocity,
    fd_partials,
    force_derivatives,
    lagrangian_derivatives,
)


@dataclass(frozen=True)
class ConnectionPack:
    G: np.ndarray
    N: np.ndarray
    L: np.ndarray
    evaluated_at: FirstOrderState


@dataclass(frozen=True)
class CurvatureData:
    R_tor: np.ndarray
    R_hh: np.ndarray
    P_hv: np.ndarray
    evaluated_at: FirstOrderState
    contraction_defect: float = 0.0


@dataclass(frozen=True)
class DualCoefficients:
    M1: np.ndarray
    M2: np.ndarray
    evaluated_at: Optional[SecondOrderState]
    provenance: str


# --- spray -----------------------------------------------------------------

def _spray_prop1(model, x, y, d):
    """G^i from 2G^i = 1/2 g^is (d2L/dy^s dx^j y^j - dL/dx^s)."""
    dL_dx, hess, mixed = lagrangian_derivatives(model, x, y, d)
    g = 0.25 * (hess + np.swapaxes(hess, -1, -2))
    rhs = np.einsum("...sj,...j->...s", mixed, y) - dL_dx
    _check_condition(g)
    return 0.25 * np.linalg.solve(g, rhs[..., None])[..., 0]


def spray_coefficients(model, s, d=ANALYTIC):
    """Canonical semispray G^i of the Lagrangian at ``s``."""
    check_velocity(model, s.y)
    return _spray_prop1(model, s.x, s.y, d)


def spray_function(model, d=ANALYTIC):
    """A fast callable (x, y) -> G used by the integrators."""
    if d.analytic and model.spray is not None:
        return model.spray
    if d.analytic and model.spray_jet is not None:
        return lambda x, y: model.spray_jet(x, y).G
    return lambda x, y: _spray_prop1(model, x, y, d)


def spray_jet(model, x, y, d=ANALYTIC, order=2):
    """G and its y/x derivatives up to ``order`` (2 or 3) at a batch of points."""
    if d.analytic and model.spray_jet is not None:
        return model.spray_jet(np.asarray(x, float), np.asarray(y, float))
    xf, yf, batch, n = _flatten(x, y)
    z = np.concatenate([xf, yf], axis=1)

    def G(p):
        return _spray_prop1(model, p[:, :n], p[:, n:], d)

    def sh(a, *tail):
        return a.reshape(batch + tail)

    G0 = G(z)
    first = fd_partials(G, z, [(a,) for a in range(2 * n)], d.hs1, d.spray_accuracy, relative=False)  # (B, 2n, i)
    dG_dx = np.swapaxes(first[:, :n], 1, 2)
    N = np.swapaxes(first[:, n:], 1, 2)

    yy = [(n + j, n + k) for j in range(n) for k in range(j, n)]
    yx = [(n + j, k) for j in range(n) for k in range(n)]
    second = fd_partials(G, z, yy + yx, d.hs2, d.spray_accuracy, relative=False)  # (B, C, i)
    B = len(z)
    Lb = np.empty((B, n, n, n))
    for c, (a, b) in enumerate(yy):
        Lb[:, :, a - n, b - n] = second[:, c]
        Lb[:, :, b - n, a - n] = second[:, c]
    dN_dx = np.empty((B, n, n, n))
    for c, (a, k) in enumerate(yx):
        dN_dx[:, :, a - n, k] = second[:, len(yy) + c]

    P = dLb_dx = None
    if order >= 3:
        yyy = [(n + j, n + k, n + l) for j in range(n) for k in range(j, n) for l in range(k, n)]
        yyx = [(n + j, n + k, l) for j in range(n) for k in range(j, n) for l in range(n)]
        third = fd_partials(G, z, yyy + yyx, d.hs3, d.spray_accuracy, relative=False)
        P = np.empty((B, n, n, n, n))
        for c, combo in enumerate(yyy):
            j, k, l = (a - n for a in combo)
            for p in {(j, k, l), (j, l, k), (k, j, l), (k, l, j), (l, j, k), (l, k, j)}:
                P[(slice(None), slice(None)) + p] = third[:, c]
        dLb_dx = np.empty((B, n, n, n, n))
        for c, (a, b, l) in enumerate(yyx):
            dLb_dx[:, :, a - n, b - n, l] = third[:, len(yyy) + c]
            dLb_dx[:, :, b - n, a - n, l] = third[:, len(yyy) + c]
        P, dLb_dx = sh(P, n, n, n, n), sh(dLb_dx, n, n, n, n)

    return SprayJet(G=sh(G0, n), N=sh(N, n, n), Lb=sh(Lb, n, n, n),
                    dG_dx=sh(dG_dx, n, n), dN_dx=sh(dN_dx, n, n, n), P=P, dLb_dx=dLb_dx)


def nonlinear_connection(model, s, d=ANALYTIC):
    check_velocity(model, s.y)
    return spray_jet(model, s.x, s.y, d).N


def berwald_coefficients(model, s, d=ANALYTIC):
    check_velocity(model, s.y)
    Lb = spray_jet(model, s.x, s.y, d).Lb
    return 0.5 * (Lb + np.swapaxes(Lb, -1, -2))


def connection_pack(model, s, d=ANALYTIC):
    check_velocity(model, s.y)
    jet = spray_jet(model, s.x, s.y, d)
    return ConnectionPack(G=spray_coefficients(model, s, d), N=jet.N, L=jet.Lb, evaluated_at=s)


# --- adapted derivatives and curvature -------------------------------------

def _pointwise(f, n):
    def g(p):
        return np.stack([np.asarray(f(q[:n], q[n:]), dtype=float) for q in p])
    return g


def _partials_of_callback(f, x, y, h):
    n = len(x)
    z = np.concatenate([x, y])[None, :]
    J = fd_partials(_pointwise(f, n), z, [(a,) for a in range(2 * n)], h)[0]
    return J[:n], J[n:]


def delta0_derivative(f, s, N, d=ANALYTIC, h=None):
    """delta_(0)i f = df/dx^i - N^j_i df/dy^j; derivative index appended last.

    ``f(x, y)`` is any array-valued callback evaluated at single points.
    """
    h = d.hs1 if h is None else h
    dfdx, dfdy = _partials_of_callback(f, s.x, s.y, h)
    res = dfdx - np.einsum("ji,j...->i...", np.asarray(N, float), dfdy)
    return np.moveaxis(res, 0, -1)


def c_operator(field, s2, d=ANALYTIC, h=None):
    """C(field) = y^k d(field)/dx^k + 2 y2^k d(field)/dy^k at ``s2``."""
    h = d.hs1 if h is None else h
    dfdx, dfdy = _partials_of_callback(field, s2.x, s2.y, h)
    return (np.einsum("k,k...->...", s2.y, dfdx)
            + 2.0 * np.einsum("k,k...->...", s2.y2, dfdy))


def delta_N(jet):
    """[..., i, j, k] = delta_(0)k N^i_j."""
    return jet.dN_dx - np.einsum("...mk,...ijm->...ijk", jet.N, jet.Lb)


def torsion_from_jet(jet):
    dN = delta_N(jet)
    return dN - np.swapaxes(dN, -1, -2)


def curvature_R(model, s, d=ANALYTIC):
    """R^i_jk = delta_k N^i_j - delta_j N^i_k (antisymmetric in j, k)."""
    check_velocity(model, s.y)
    return torsion_from_jet(spray_jet(model, s.x, s.y, d))


def berwald_curvatures(model, s, d=ANALYTIC):
    check_velocity(model, s.y)
    jet = spray_jet(model, s.x, s.y, d, order=3)
    Lb = 0.5 * (jet.Lb + np.swapaxes(jet.Lb, -1, -2))
    # DL[i,j,k,l] = delta_(0)l L^i_jk
    DL = jet.dLb_dx - np.einsum("...ml,...ijkm->...ijkl", jet.N, jet.P)
    R = (DL - np.swapaxes(DL, -1, -2)
         + np.einsum("...mjk,...iml->...ijkl", Lb, Lb)
         - np.einsum("...mjl,...imk->...ijkl", Lb, Lb))
    R_hh = np.swapaxes(R, -4, -3)
    P_hv = np.swapaxes(jet.P, -4, -3)
    R_tor = torsion_from_jet(jet)
    contracted = np.einsum("...h,...hijk->...ijk", s.y, R_hh)
    defect = float(np.max(np.abs(contracted - R_tor))) if R_tor.size else 0.0
    return CurvatureData(R_tor=R_tor, R_hh=R_hh, P_hv=P_hv, evaluated_at=s,
                         contraction_defect=defect)


# --- dual coefficients on T^2 M --------------------------------------------

def _c_of_N(jet, y, y2):
    return (np.einsum("...ijk,...k->...ij", jet.dN_dx, y)
            + 2.0 * np.einsum("...ijk,...k->...ij", jet.Lb, y2))


def dual_from_jet(jet, y, y2, F, dF_dx, dF_dy):
    """(M1, M2) of the connection whose v2-flat curves are deviation fields."""
    N = jet.N
    NN = np.einsum("...ik,...kj->...ij", N, N)
    yR = np.einsum("...ijk,...k->...ij", torsion_from_jet(jet), y)
    LF = np.einsum("...ijk,...k->...ij", jet.Lb, F)
    M1 = N - 0.5 * dF_dy
    # the L.F term enters with a minus sign once C is evaluated at y2 = -G + F/2
    M2 = 0.5 * (_c_of_N(jet, y, y2) + NN - yR - LF - dF_dx)
    return M1, M2


def our_dual_coefficients(model, force, s2, d=ANALYTIC):
    check_velocity(model, s2.y)
    jet = spray_jet(model, s2.x, s2.y, d)
    F = force(s2.x, s2.y)
    dF_dx, dF_dy = force_derivatives(force, s2.x, s2.y, d)
    M1, M2 = dual_from_jet(jet, s2.y, s2.y2, F, dF_dx, dF_dy)
    return DualCoefficients(M1, M2, s2, "ours")


def miron_dual_coefficients(model, s2, d=ANALYTIC):
    """Miron's pair for a y2-independent M1 = N: M2 = 1/2 (C(M1) + M1 M1)."""
    check_velocity(model, s2.y)
    jet = spray_jet(model, s2.x, s2.y, d)
    N = jet.N
    M2 = 0.5 * (_c_of_N(jet, s2.y, s2.y2) + np.einsum("...ik,...kj->...ij", N, N))
    return DualCoefficients(N.copy(), M2, s2, "miron")


def from_pde_coefficients(a, b):
    """Dual coefficients M1 = a/2, M2 = b/2 read off a second-order linear PDE."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape or a.shape[-1] != a.shape[-2]:
        raise DimensionMismatch(f"coefficient blocks {a.shape} and {b.shape} do not match")
    return DualCoefficients(0.5 * a, 0.5 * b, None, "pde-supplied")


def on_extension_dual(model, force, x, y, d=ANALYTIC):
    """Our (M1, M2) and y2 = -G + F/2 along extension curves, batched over samples."""
    jet = spray_jet(model, x, y, d)
    F = force(x, y)
    dF_dx, dF_dy = force_derivatives(force, x, y, d)
    y2 = -jet.G + 0.5 * F
    M1, M2 = dual_from_jet(jet, y, y2, F, dF_dx, dF_dy)
    return M1, M2, y2


def adapted_components(dxdt, dy1dt, dy2dt, mc):
    """Components of a tangent vector of T^2 M in the adapted frame.

    Returns (dx/dt, delta y1/dt, delta y2/dt) with
    delta y1 = dy1 + M1 dx and delta y2 = dy2 + M1 dy1 + M2 dx.
    """
    dxdt, dy1dt, dy2dt = (np.asarray(a, dtype=float) for a in (dxdt, dy1dt, dy2dt))
    n = mc.M1.shape[-1]
    for a in (dxdt, dy1dt, dy2dt):
        if a.shape[-1] != n:
            raise DimensionMismatch(f"vector of dimension {a.shape[-1]} against {n}x{n} coefficients")
    d1 = dy1dt + np.einsum("...ij,...j->...i", mc.M1, dxdt)
    d2 = (dy2dt + np.einsum("...ij,...j->...i", mc.M1, dy1dt)
          + np.einsum("...ij,...j->...i", mc.M2, dxdt))
    return dxdt, d1, d2
