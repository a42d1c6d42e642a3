"""Crack geometry: parametric open arcs, the four-crack catalog, tangents,
unit normals, and point sampling.

Every arc is exposed through one internal parameter t in [-1, 1]; catalog
arcs with a different native range are mapped onto it affinely so all
quadrature downstream shares a single convention.
"""

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, LookupNameError

__all__ = [
    "ParametricArc",
    "Crack",
    "UnitNormal",
    "evaluate",
    "catalog",
    "catalog_names",
    "sample_points",
    "line_segment",
    "chebyshev_graph_arc",
    "crack_from_config",
]


@dataclass(frozen=True)
class ParametricArc:
    """Smooth open arc t -> z(t) on [-1, 1] with an analytic derivative.

    ``position`` and ``derivative`` accept a scalar or an array of
    parameters and return arrays of shape (2,) or (n, 2).
    """

    name: str
    position: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]

    def points(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.asarray(self.position(t), dtype=np.float64)

    def tangents(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.asarray(self.derivative(t), dtype=np.float64)

    def normals(self, t):
        """Unit normals: the unit tangent rotated by +90 degrees."""
        tan = np.atleast_2d(self.tangents(t))
        norm = np.linalg.norm(tan, axis=1, keepdims=True)
        unit = tan / norm
        out = np.stack([-unit[:, 1], unit[:, 0]], axis=1)
        return out[0] if np.isscalar(t) or np.ndim(t) == 0 else out


@dataclass(frozen=True)
class UnitNormal:
    point: np.ndarray
    normal: np.ndarray


@dataclass(frozen=True)
class Crack:
    """One or more pairwise-disjoint open arcs."""

    components: Sequence[ParametricArc]
    label: str = ""
    origin: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.components) < 1:
            raise DomainError("a crack needs at least one component")

    def __len__(self):
        return len(self.components)


def evaluate(arc: ParametricArc, t: float):
    """Point, tangent and unit normal of ``arc`` at parameter ``t``."""
    t = float(t)
    if not -1.0 <= t <= 1.0:
        raise DomainError(f"parameter must lie in [-1, 1], got {t}")
    point = arc.points(t)
    tangent = arc.tangents(t)
    speed = float(np.hypot(tangent[0], tangent[1]))
    if speed == 0.0:
        raise DomainError(f"vanishing tangent on arc {arc.name!r} at t={t}")
    unit = tangent / speed
    normal = np.array([-unit[1], unit[0]])
    return point, tangent, normal


def _affine(lo, hi):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return lambda t: mid + half * np.asarray(t, dtype=np.float64), half


def _gamma1():
    # straight segment (s, 0.3), s in [-0.5, 0.5]
    to_s, ds = _affine(-0.5, 0.5)

    def pos(t):
        s = to_s(t)
        return np.stack([s, np.full_like(s, 0.3)], axis=-1)

    def der(t):
        s = to_s(t)
        return np.stack([np.full_like(s, ds), np.zeros_like(s)], axis=-1)

    return ParametricArc("Gamma1", pos, der)


def _gamma2():
    # graph of 1/2 cos(s pi/2) + 1/5 sin(s pi/2) - 1/10 cos(3 s pi/2), s in [-1, 1]
    def pos(t):
        s = np.asarray(t, dtype=np.float64)
        y = (
            0.5 * np.cos(s * np.pi / 2.0)
            + 0.2 * np.sin(s * np.pi / 2.0)
            - 0.1 * np.cos(3.0 * s * np.pi / 2.0)
        )
        return np.stack([s, y], axis=-1)

    def der(t):
        s = np.asarray(t, dtype=np.float64)
        dy = (
            -0.25 * np.pi * np.sin(s * np.pi / 2.0)
            + 0.1 * np.pi * np.cos(s * np.pi / 2.0)
            + 0.15 * np.pi * np.sin(3.0 * s * np.pi / 2.0)
        )
        return np.stack([np.ones_like(s), dy], axis=-1)

    return ParametricArc("Gamma2", pos, der)


def _gamma3():
    # (2 sin(s/2), sin s), s in [pi/4, 7 pi/4]
    to_s, ds = _affine(np.pi / 4.0, 7.0 * np.pi / 4.0)

    def pos(t):
        s = to_s(t)
        return np.stack([2.0 * np.sin(s / 2.0), np.sin(s)], axis=-1)

    def der(t):
        s = to_s(t)
        return np.stack([ds * np.cos(s / 2.0), ds * np.cos(s)], axis=-1)

    return ParametricArc("Gamma3", pos, der)


def _gamma4_1():
    to_s, ds = _affine(-0.5, 0.5)

    def pos(t):
        s = to_s(t)
        return np.stack([s - 0.2, -0.5 * s * s + 0.6], axis=-1)

    def der(t):
        s = to_s(t)
        return np.stack([np.full_like(s, ds), -ds * s], axis=-1)

    return ParametricArc("Gamma4_1", pos, der)


def _gamma4_2():
    to_s, ds = _affine(-0.5, 0.5)

    def pos(t):
        s = to_s(t)
        return np.stack([s + 0.2, s**3 + s * s - 0.6], axis=-1)

    def der(t):
        s = to_s(t)
        return np.stack([np.full_like(s, ds), ds * (3.0 * s * s + 2.0 * s)], axis=-1)

    return ParametricArc("Gamma4_2", pos, der)


_CATALOG = {
    "G1": lambda: Crack([_gamma1()], "Gamma1", {"kind": "catalog", "name": "G1"}),
    "G2": lambda: Crack([_gamma2()], "Gamma2", {"kind": "catalog", "name": "G2"}),
    "G3": lambda: Crack([_gamma3()], "Gamma3", {"kind": "catalog", "name": "G3"}),
    "G4": lambda: Crack(
        [_gamma4_1(), _gamma4_2()], "Gamma4", {"kind": "catalog", "name": "G4"}
    ),
}

_ALIASES = {
    "G1": "G1", "GAMMA1": "G1", "Γ1": "G1",
    "G2": "G2", "GAMMA2": "G2", "Γ2": "G2",
    "G3": "G3", "GAMMA3": "G3", "Γ3": "G3",
    "G4": "G4", "GAMMA4": "G4", "Γ4": "G4",
}


def catalog_names():
    return sorted(_CATALOG)


def catalog(name: str) -> Crack:
    """The four illustration cracks, by name (G1..G4, Gamma1.. accepted)."""
    key = _ALIASES.get(str(name).strip().upper())
    if key is None:
        raise LookupNameError(f"unknown catalog crack {name!r}; valid: {catalog_names()}")
    crack = _CATALOG[key]()
    validate_crack(crack)
    return crack


def line_segment(p0, p1, name="segment") -> Crack:
    """Straight open arc from p0 to p1 (test targets, micro-segments)."""
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    mid = 0.5 * (p0 + p1)
    half = 0.5 * (p1 - p0)
    if np.hypot(*half) == 0.0:
        raise DomainError("segment endpoints coincide")

    def pos(t):
        s = np.asarray(t, dtype=np.float64)[..., None]
        return mid + s * half

    def der(t):
        s = np.asarray(t, dtype=np.float64)
        return np.broadcast_to(half, np.shape(s) + (2,)).copy()

    return Crack(
        [ParametricArc(name, pos, der)],
        name,
        {"kind": "segment", "p0": p0.tolist(), "p1": p1.tolist()},
    )


def chebyshev_graph_arc(coefficients, name="chebyshev") -> Crack:
    """Graph crack y = sum_j a_j T_j(s), s in [-1, 1]."""
    coeffs = np.asarray(coefficients, dtype=np.float64)
    if coeffs.ndim != 1 or coeffs.size < 1:
        raise DomainError("coefficient list must be a nonempty vector")

    def pos(t):
        s = np.asarray(t, dtype=np.float64)
        return np.stack([s, chebyshev_value(coeffs, s)], axis=-1)

    def der(t):
        s = np.asarray(t, dtype=np.float64)
        return np.stack([np.ones_like(s), chebyshev_derivative(coeffs, s)], axis=-1)

    return Crack(
        [ParametricArc(name, pos, der)],
        name,
        {"kind": "chebyshev-graph", "coefficients": coeffs.tolist()},
    )


def chebyshev_value(coeffs, s):
    """sum_j a_j T_j(s) via the T recurrence."""
    s = np.asarray(s, dtype=np.float64)
    total = np.full_like(s, coeffs[0])
    if coeffs.size == 1:
        return total
    t_prev = np.ones_like(s)
    t_cur = s.copy()
    total = total + coeffs[1] * t_cur
    for a in coeffs[2:]:
        t_prev, t_cur = t_cur, 2.0 * s * t_cur - t_prev
        total += a * t_cur
    return total


def chebyshev_derivative(coeffs, s):
    """d/ds of sum_j a_j T_j(s); both recurrences carried together."""
    s = np.asarray(s, dtype=np.float64)
    total = np.zeros_like(s)
    if coeffs.size == 1:
        return total
    t_prev, t_cur = np.ones_like(s), s.copy()
    d_prev, d_cur = np.zeros_like(s), np.ones_like(s)
    total = total + coeffs[1] * d_cur
    for a in coeffs[2:]:
        t_next = 2.0 * s * t_cur - t_prev
        d_next = 2.0 * t_cur + 2.0 * s * d_cur - d_prev
        t_prev, t_cur = t_cur, t_next
        d_prev, d_cur = d_cur, d_next
        total += a * d_cur
    return total


def crack_from_config(table: dict) -> Crack:
    """Build a crack from a config table: kind = catalog | chebyshev-graph."""
    kind = table.get("kind")
    if kind == "catalog":
        return catalog(table["name"])
    if kind == "chebyshev-graph":
        return chebyshev_graph_arc(table["coefficients"])
    raise LookupNameError(f"unknown crack kind {kind!r}")


def sample_points(crack: Crack, m: int):
    """m points per component at equispaced internal parameters, with unit
    normals.  m = 1 samples the arc midpoint."""
    if m < 1:
        raise DomainError(f"sample count must be >= 1, got {m}")
    ts = np.array([0.0]) if m == 1 else np.linspace(-1.0, 1.0, m)
    out = []
    for arc in crack.components:
        pts = np.atleast_2d(arc.points(ts))
        nrm = np.atleast_2d(arc.normals(ts))
        for p, n in zip(pts, nrm):
            out.append(UnitNormal(point=p, normal=n))
    return out


def validate_crack(crack: Crack, samples: int = 512):
    """Sample-based injectivity / no-cusp / disjointness checks."""
    ts = np.linspace(-1.0, 1.0, samples)
    all_points = []
    for arc in crack.components:
        pts = np.atleast_2d(arc.points(ts))
        tans = np.atleast_2d(arc.tangents(ts))
        speeds = np.hypot(tans[:, 0], tans[:, 1])
        if np.any(speeds <= 0.0):
            raise DomainError(f"arc {arc.name!r} has a vanishing tangent (cusp)")
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        step = np.abs(np.diff(ts)).min()
        np.fill_diagonal(dist, np.inf)
        # adjacent samples are legitimately close; only distinct-parameter
        # near-coincidence signals self-intersection
        idx = np.abs(np.subtract.outer(np.arange(samples), np.arange(samples)))
        min_speed = speeds.min()
        suspicious = dist[(idx > 4)]
        if suspicious.min() <= 0.25 * min_speed * step:
            raise DomainError(f"arc {arc.name!r} fails the injectivity sample check")
        all_points.append(pts)
    for a in range(len(all_points)):
        for b in range(a + 1, len(all_points)):
            diff = all_points[a][:, None, :] - all_points[b][None, :, :]
            if np.hypot(diff[..., 0], diff[..., 1]).min() <= 0.0:
                raise DomainError("crack components are not pairwise disjoint")
    return True
