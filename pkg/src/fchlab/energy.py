"""Rescaled FCH energy and diagnostics on tubular grids.

The evaluator works in chart coordinates with explicit metric factors.
With offset scale factors H_j = w_j(t) * (1 + eps*z*kappa_j(t)) the
ambient gradient and Laplacian of a field u(s, z) read

    grad u = sum_j T_j * u_tj / H_j + n * u_z / eps
    lap u  = u_zz / eps^2 + sum_j kappa_j/(1 + eps*z*kappa_j) * u_z / eps
             + sum_j [ u_tjtj / H_j^2 + c_j * u_tj ]

where c_j = d/dt_j (P / H_j^2) / P and P = J * prod_j w_j is the full
volume density.  In arc-length coordinates on a curve this reduces to the
familiar expansion with the first-order tangential term
-eps*z*(dkappa/ds) * (1+eps*z*kappa)^(-3) * u_s; on spheres and tori the
same formula also produces the cross-metric terms that a naive
per-coordinate expansion misses.  The c_j coefficients are obtained by
differencing the sampled metric products, so geometries only need to
supply w_j and kappa_j.

All reductions are plain numpy sums in a fixed order, so results are
bit-reproducible for identical inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._stencils import d1_bounded, d1_periodic, d2_bounded, d2_periodic
from .errors import InfeasibleModelError
from .geometry import InterfaceGeom, TubularGrid
from .potential import GrowthConstants, WellParams, eval_dwell, eval_well

__all__ = [
    "Field",
    "EnergyReport",
    "LowerBoundAudit",
    "curvilinear_gradient",
    "curvilinear_laplacian",
    "cahn_hilliard_residual",
    "fch_energy",
    "g1_energy",
    "lower_bound_audit",
]


@dataclass(frozen=True, eq=False)
class Field:
    """Concentration samples on a tubular grid.

    Admissible fields are nonnegative and vanish at z = +-ell (no-contact
    boundary); construction validates both unless check_bc is disabled for
    operator-level tests with synthetic fields.
    """

    grid: TubularGrid
    values: np.ndarray
    check_bc: bool = True

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(f"field shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "values", vals)
        if self.check_bc:
            scale = max(float(np.max(np.abs(vals))), 1.0)
            if np.max(np.abs(vals[..., 0])) > 1e-10 * scale or np.max(np.abs(vals[..., -1])) > 1e-10 * scale:
                raise ValueError("field must vanish at z = +-ell")
            if np.min(vals) < -1e-10 * scale:
                raise ValueError("field must be nonnegative")

    @property
    def eps(self):
        return self.grid.eps


@dataclass(frozen=True)
class EnergyReport:
    """Rescaled energy with its split and the norm diagnostics.

    total = quadratic_part - functional_part by construction; the norms
    are those controlling the through-plane and tangential derivatives.
    """

    eps: float
    total: float
    quadratic_part: float
    functional_part: float
    mass: float
    equipartition_defect: float
    bilayer_residual: float
    norm_u_lp: float
    norm_uz_l2: float
    norm_us_l2: float
    norm_uss_l2: float

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


class _Metric:
    """Sampled metric data shared by the operators on one (field, geom) pair."""

    def __init__(self, grid: TubularGrid, geom: InterfaceGeom):
        self.grid = grid
        self.geom = geom
        mesh = grid.s_mesh
        z = grid.z_grid
        eps = grid.eps
        self.kappas = [np.asarray(k, dtype=float)[..., None] for k in geom.curvatures(*mesh)]
        self.lames = [np.asarray(w, dtype=float)[..., None] for w in geom.lame(*mesh)]
        zrow = z.reshape((1,) * len(mesh) + (-1,))
        self.one_plus = [1.0 + eps * zrow * k for k in self.kappas]
        if min(float(np.min(f)) for f in self.one_plus) <= 0.0:
            raise InfeasibleModelError("degenerate tubular metric: 1 + eps*z*kappa <= 0")
        self.H = [w * f for w, f in zip(self.lames, self.one_plus)]
        self.J = np.prod(np.stack(self.one_plus), axis=0) if self.one_plus else 1.0
        self.weight = np.prod(np.stack(self.lames), axis=0)
        self.P = self.J * self.weight

    def d1_s(self, f, axis):
        h = self.grid.h_s[axis]
        if self.geom.periodic[axis]:
            return d1_periodic(f, axis, h)
        return d1_bounded(f, axis, h)

    def d2_s(self, f, axis):
        h = self.grid.h_s[axis]
        if self.geom.periodic[axis]:
            return d2_periodic(f, axis, h)
        return d2_bounded(f, axis, h)

    def integrate(self, f):
        """integral f J weight ds dz with trapezoid in z, periodic trapezoid in s."""
        wz = self.grid.z_trapezoid_weights()
        hprod = float(np.prod(self.grid.h_s))
        return float(np.sum(f * self.P * wz) * hprod)

    def integrate_flat(self, f):
        """integral f weight ds dz (no Jacobian), for the derivative-bound norms."""
        wz = self.grid.z_trapezoid_weights()
        hprod = float(np.prod(self.grid.h_s))
        return float(np.sum(f * self.weight * wz) * hprod)


def curvilinear_gradient(field: Field, geom: InterfaceGeom):
    """Gradient components in the frame (T_1, ..., T_{n-1}, n).

    Tangential component j is u_sj / (1 + eps*z*kappa_j) with u_sj the
    arc-length derivative; the normal component is u_z / eps.
    """
    m = _Metric(field.grid, geom)
    comps = []
    for axis in range(geom.chart_dims):
        comps.append(m.d1_s(field.values, axis) / m.H[axis])
    comps.append(d1_bounded(field.values, -1, field.grid.h_z) / field.grid.eps)
    return np.stack(comps)


def curvilinear_laplacian(field: Field, geom: InterfaceGeom, include_curvature_gradient: bool = True):
    """Ambient Laplacian of the field in tubular coordinates.

    include_curvature_gradient=False drops the first-order tangential term
    (the one carrying d kappa / ds and the metric gradients); it exists so
    tests can demonstrate the term matters on non-circular geometries.
    """
    m = _Metric(field.grid, geom)
    return _laplacian(field, m, include_curvature_gradient)


def _laplacian(field: Field, m: _Metric, include_curvature_gradient=True):
    grid = field.grid
    eps = grid.eps
    u = field.values
    u_z = d1_bounded(u, -1, grid.h_z)
    u_zz = d2_bounded(u, -1, grid.h_z)
    out = u_zz / eps**2
    curv = 0.0
    for k, f in zip(m.kappas, m.one_plus):
        curv = curv + k / f
    out = out + curv * u_z / eps
    for axis in range(m.geom.chart_dims):
        u_t = m.d1_s(u, axis)
        u_tt = m.d2_s(u, axis)
        out = out + u_tt / m.H[axis] ** 2
        if include_curvature_gradient:
            coeff = m.d1_s(m.P / m.H[axis] ** 2, axis) / m.P
            out = out + coeff * u_t
    return out


def cahn_hilliard_residual(field: Field, geom: InterfaceGeom, params: WellParams):
    """Samplewise -eps*lap(u) + W'(u)/eps, the quantity squared in the energy."""
    m = _Metric(field.grid, geom)
    return _residual(field, m, params)


def _residual(field: Field, m: _Metric, params: WellParams):
    eps = field.grid.eps
    return -eps * _laplacian(field, m) + eval_dwell(field.values, params) / eps


def fch_energy(field: Field, geom: InterfaceGeom, eta1: float, eta2: float, params: WellParams) -> EnergyReport:
    """Rescaled FCH energy of the field plus all report diagnostics."""
    if not (np.isfinite(eta1) and np.isfinite(eta2)):
        raise ValueError("eta coefficients must be finite")
    grid = field.grid
    eps = grid.eps
    m = _Metric(grid, geom)
    u = field.values

    w_of_u = eval_well(u, params)
    residual = _residual(field, m, params)
    u_z = d1_bounded(u, -1, grid.h_z)

    grad_sq = (u_z / eps) ** 2
    tangential_sq = []
    for axis in range(geom.chart_dims):
        t_comp = m.d1_s(u, axis) / m.H[axis]
        tangential_sq.append(t_comp**2)
        grad_sq = grad_sq + t_comp**2

    quadratic = m.integrate(0.5 * residual**2)
    functional = m.integrate(0.5 * eta1 * eps**2 * grad_sq + eta2 * w_of_u)

    mass = m.integrate(u)
    equi = m.integrate_flat(np.abs(0.5 * u_z**2 - w_of_u))
    u_zz = d2_bounded(u, -1, grid.h_z)
    bl_resid = np.sqrt(m.integrate_flat((-u_zz + eval_dwell(u, params)) ** 2))

    norm_u_lp = m.integrate_flat(np.abs(u) ** params.p) ** (1.0 / params.p)
    norm_uz = np.sqrt(m.integrate_flat(u_z**2))
    norm_us = 0.0
    norm_uss = 0.0
    for axis in range(geom.chart_dims):
        w = m.lames[axis]
        u_t = m.d1_s(u, axis)
        norm_us += np.sqrt(m.integrate_flat((u_t / w) ** 2))
        u_ss = m.d1_s(u_t / w, axis) / w
        norm_uss += np.sqrt(m.integrate_flat(u_ss**2))

    return EnergyReport(
        eps=eps,
        total=quadratic - functional,
        quadratic_part=quadratic,
        functional_part=functional,
        mass=mass,
        equipartition_defect=equi,
        bilayer_residual=float(bl_resid),
        norm_u_lp=float(norm_u_lp),
        norm_uz_l2=float(norm_uz),
        norm_us_l2=float(norm_us),
        norm_uss_l2=float(norm_uss),
    )


def g1_energy(geom: InterfaceGeom, a_star, b_star, eta1: float, eta2: float, n_nodes: int = 2048) -> float:
    """Limiting interface energy: integral of a* H0^2 - (eta1+eta2) b* over Gamma.

    a_star and b_star may be constants or callables of the chart
    coordinates (the s-dependent form).
    """
    mesh, wq = geom.surface_quadrature(min(n_nodes, 512) if geom.chart_dims > 1 else n_nodes)
    kappas = geom.curvatures(*mesh)
    h0 = sum(kappas)
    a_vals = a_star(*mesh) if callable(a_star) else a_star
    b_vals = b_star(*mesh) if callable(b_star) else b_star
    if not callable(a_star) and a_star < 0.0:
        raise ValueError("a_star must be nonnegative")
    if not callable(b_star) and b_star < 0.0:
        raise ValueError("b_star must be nonnegative")
    return float(np.sum((a_vals * h0**2 - (eta1 + eta2) * b_vals) * wq))


@dataclass(frozen=True)
class LowerBoundAudit:
    """Both sides of the rescaled uniform lower bound and its margin."""

    lhs: float
    rhs: float
    a1: float
    a2: float
    domain_measure: float

    @property
    def margin(self):
        return self.lhs - self.rhs

    @property
    def holds(self):
        return self.lhs >= self.rhs


def lower_bound_audit(
    field: Field,
    geom: InterfaceGeom,
    eta1: float,
    eta2: float,
    params: WellParams,
    growth: GrowthConstants,
) -> LowerBoundAudit:
    """Check the explicit-constant lower bound on the rescaled energy.

    With A1 = C1*(eta1*p - eta2) - eps^2*eta1^2 and
    A2 = max(0, -(eta1*C4 - eta2*C3)) the energy dominates

        integral { (1/4) R^2 + (eta1 eps^2 / 2)|grad u|^2 + A1 |u|^p } J ds dz
        - A2 * |domain|

    where R is the Cahn-Hilliard residual.  Requires eta2 < p*eta1 and eps
    small enough that A1 > 0.
    """
    eps = field.grid.eps
    p = params.p
    if not eta2 < p * eta1:
        raise InfeasibleModelError("lower bound inapplicable: requires eta2 < p*eta1")
    a1 = growth.c1 * (eta1 * p - eta2) - eps**2 * eta1**2
    if a1 <= 0.0:
        raise InfeasibleModelError("lower bound inapplicable: eps too large for A1 > 0")
    a2 = max(0.0, -(eta1 * growth.c4 - eta2 * growth.c3))

    m = _Metric(field.grid, geom)
    u = field.values
    residual = _residual(field, m, params)
    u_z = d1_bounded(u, -1, field.grid.h_z)
    grad_sq = (u_z / eps) ** 2
    for axis in range(geom.chart_dims):
        grad_sq = grad_sq + (m.d1_s(u, axis) / m.H[axis]) ** 2

    report = fch_energy(field, geom, eta1, eta2, params)
    domain = m.integrate(np.ones_like(u))
    rhs = (
        m.integrate(0.25 * residual**2 + 0.5 * eta1 * eps**2 * grad_sq + a1 * np.abs(u) ** p)
        - a2 * domain
    )
    return LowerBoundAudit(lhs=report.total, rhs=rhs, a1=float(a1), a2=float(a2), domain_measure=domain)
