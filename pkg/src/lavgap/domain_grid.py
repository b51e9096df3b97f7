"""Domains, ring meshes of the disk, P1 calculus and singular quadrature.

The disk mesh is built from concentric rings cut into eight sectors whose
edges are the rays at multiples of pi/4.  Those rays are exactly the
boundaries of the cone set used by the counterexample, so fields that are
smooth inside each sector stay smooth inside each cell.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .config import DEFAULTS
from .errors import (DivergenceError, EvaluationError, GeometryError, ParameterError,
                     QuadratureError, ResourceError)

__all__ = [
    "Domain", "Mesh", "GridFunction", "AnalyticField", "QuadratureRule", "triangle_rule",
    "build_disk_mesh", "gradient", "integrate", "cell_integrals",
    "spherical_quadrature", "holder_seminorm_estimate", "interpolate",
    "read_field_csv", "write_field_csv",
]


@dataclass(frozen=True)
class Domain:
    """Ball (or star-shaped polygon) with the ball it is star-shaped about."""

    kind: str
    center: tuple
    radius: float
    star_center: tuple
    star_radius: float
    dim: int = 2

    def __post_init__(self):
        if self.kind not in ("ball", "star-shaped-polygon"):
            raise ParameterError(f"unknown domain kind {self.kind!r}")
        if self.dim < 2:
            raise ParameterError("dimension must be >= 2")
        if not self.star_radius > 0:
            raise ParameterError("star radius must be positive")
        if self.kind == "ball":
            off = math.dist(self.center, self.star_center)
            if off + self.star_radius > self.radius * (1 + 1e-12):
                raise ParameterError("star ball must lie inside the domain")

    @classmethod
    def ball(cls, radius=1.0, center=(0.0, 0.0), star_radius=None, dim=2):
        center = tuple(float(c) for c in center)
        return cls("ball", center, float(radius), center,
                   float(radius if star_radius is None else star_radius), dim)

    @property
    def diameter(self):
        return 2.0 * self.radius


@dataclass(frozen=True)
class QuadratureRule:
    """Rule on the reference triangle (0,0), (1,0), (0,1)."""

    points: np.ndarray
    weights: np.ndarray
    order: int


def triangle_rule(order: int = 5) -> QuadratureRule:
    """Symmetric triangle rules exact for polynomials of degree 1, 2 or 5."""
    if order <= 1:
        pts = np.array([[1 / 3, 1 / 3]])
        w = np.array([0.5])
        return QuadratureRule(pts, w, 1)
    if order == 2:
        pts = np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]])
        w = np.full(3, 1 / 6)
        return QuadratureRule(pts, w, 2)
    # 7-point degree-5 rule (Radon)
    s = math.sqrt(15.0)
    a, b = (6 - s) / 21, (6 + s) / 21
    wa, wb = (155 - s) / 2400, (155 + s) / 2400
    pts = np.array([[1 / 3, 1 / 3],
                    [a, a], [1 - 2 * a, a], [a, 1 - 2 * a],
                    [b, b], [1 - 2 * b, b], [b, 1 - 2 * b]])
    w = np.array([9 / 80, wa, wa, wa, wb, wb, wb])
    return QuadratureRule(pts, w, 5)


DEFAULT_RULE = triangle_rule(5)


@dataclass
class Mesh:
    nodes: np.ndarray
    cells: np.ndarray
    boundary_nodes: np.ndarray
    h: float
    domain: Domain | None = None
    meta: dict = field(default_factory=dict)
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=np.float64)
        self.cells = np.ascontiguousarray(self.cells, dtype=np.int64)
        self.boundary_nodes = np.asarray(self.boundary_nodes, dtype=np.int64)
        if np.any(self.signed_areas <= 0):
            raise GeometryError("mesh has a degenerate or inverted cell")

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_cells(self):
        return self.cells.shape[0]

    @cached_property
    def signed_areas(self):
        p = self.nodes[self.cells]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def areas(self):
        return self.signed_areas

    @cached_property
    def volume(self):
        return math.fsum(self.areas)

    @cached_property
    def centroids(self):
        return self.nodes[self.cells].mean(axis=1)

    @cached_property
    def basis_gradients(self):
        """(T, 3, 2) gradients of the three hat functions on each cell."""
        p = self.nodes[self.cells]
        x, y = p[..., 0], p[..., 1]
        a2 = 2.0 * self.signed_areas
        g = np.empty((self.n_cells, 3, 2))
        g[:, 0, 0] = (y[:, 1] - y[:, 2]) / a2
        g[:, 0, 1] = (x[:, 2] - x[:, 1]) / a2
        g[:, 1, 0] = (y[:, 2] - y[:, 0]) / a2
        g[:, 1, 1] = (x[:, 0] - x[:, 2]) / a2
        g[:, 2, 0] = (y[:, 0] - y[:, 1]) / a2
        g[:, 2, 1] = (x[:, 1] - x[:, 0]) / a2
        return g

    @cached_property
    def interior_nodes(self):
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.nonzero(mask)[0]

    @cached_property
    def locator(self) -> "_Locator":
        return _Locator(self)

    def quadrature_points(self, rule: QuadratureRule = DEFAULT_RULE):
        """Physical quadrature points, shape (T, Q, 2)."""
        p = self.nodes[self.cells]
        xi = rule.points
        return (p[:, None, 0] + xi[None, :, 0, None] * (p[:, None, 1] - p[:, None, 0])
                + xi[None, :, 1, None] * (p[:, None, 2] - p[:, None, 0]))

    def locate(self, points):
        """Containing cell (-1 outside) and barycentric coordinates."""
        return self.locator.locate(points)

    def evaluate(self, values, points, fill=0.0):
        """P1 interpolation of nodal ``values`` at arbitrary points."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        cell, bary = self.locate(pts)
        out = np.full(pts.shape[0], float(fill))
        hit = cell >= 0
        out[hit] = np.einsum("mi,mi->m", bary[hit], np.asarray(values)[self.cells[cell[hit]]])
        return out.reshape(np.shape(points)[:-1])

    # serialisation -------------------------------------------------------
    def to_json(self, path=None):
        data = {
            "nodes": self.nodes.tolist(),
            "cells": self.cells.tolist(),
            "boundary_nodes": self.boundary_nodes.tolist(),
            "h": self.h,
            "meta": self.meta,
        }
        text = json.dumps(data, sort_keys=True)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source):
        if isinstance(source, (str, Path)) and Path(str(source)).suffix == ".json":
            source = Path(source).read_text()
        data = json.loads(source) if isinstance(source, str) else source
        meta = data.get("meta", {})
        domain = None
        if "radius" in meta:
            domain = Domain.ball(meta["radius"], meta.get("center", (0.0, 0.0)))
        return cls(np.array(data["nodes"]), np.array(data["cells"]),
                   np.array(data["boundary_nodes"]), float(data["h"]), domain, meta)


class _Locator:
    """Uniform bucket grid over the mesh bounding box (cell lists in CSR form)."""

    tol = 1e-12

    def __init__(self, mesh: Mesh):
        p = mesh.nodes[mesh.cells]
        lo, hi = p.min(axis=1), p.max(axis=1)
        edges = np.linalg.norm(p - np.roll(p, 1, axis=1), axis=2).max(axis=1)
        bsize = float(np.median(edges))
        pad = 1e-9 * max(1.0, float(np.abs(mesh.nodes).max()))
        origin = mesh.nodes.min(axis=0) - pad
        extent = mesh.nodes.max(axis=0) + pad - origin
        nbx = int(math.ceil(extent[0] / bsize)) or 1
        nby = int(math.ceil(extent[1] / bsize)) or 1
        i0 = np.floor((lo - pad - origin) / bsize).astype(np.int64).clip(0, [nbx - 1, nby - 1])
        i1 = np.floor((hi + pad - origin) / bsize).astype(np.int64).clip(0, [nbx - 1, nby - 1])
        span = i1 - i0
        buckets, owners = [], []
        cell_ids = np.arange(mesh.n_cells, dtype=np.int64)
        for dx in range(int(span[:, 0].max()) + 1):
            for dy in range(int(span[:, 1].max()) + 1):
                ok = (span[:, 0] >= dx) & (span[:, 1] >= dy)
                bx = i0[ok, 0] + dx
                by = i0[ok, 1] + dy
                buckets.append(by * nbx + bx)
                owners.append(cell_ids[ok])
        buckets = np.concatenate(buckets)
        owners = np.concatenate(owners)
        order = np.lexsort((owners, buckets))
        buckets, owners = buckets[order], owners[order]
        counts = np.bincount(buckets, minlength=nbx * nby)
        self.bstart = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.bcells = np.ascontiguousarray(owners, dtype=np.int64)
        self.origin = origin
        self.bsize = bsize
        self.nbx, self.nby = nbx, nby
        # affine maps x -> (l1, l2) per cell
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        cm = np.empty((mesh.n_cells, 6))
        cm[:, 0:2] = p[:, 0]
        cm[:, 2] = e2[:, 1] / det
        cm[:, 3] = -e2[:, 0] / det
        cm[:, 4] = -e1[:, 1] / det
        cm[:, 5] = e1[:, 0] / det
        self.cellmap = np.ascontiguousarray(cm)

    @property
    def grid_args(self):
        return (float(self.origin[0]), float(self.origin[1]), self.bsize,
                self.nbx, self.nby, self.bstart, self.bcells, self.cellmap, self.tol)

    def locate(self, points):
        pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64).reshape(-1, 2))
        return kernels.locate(pts, *self.grid_args)


@dataclass
class GridFunction:
    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.mesh.n_nodes,):
            raise ParameterError("one value per mesh node expected")

    def __call__(self, points):
        return self.mesh.evaluate(self.values, points)

    def __add__(self, other):
        other = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.mesh, self.values + other)

    def __sub__(self, other):
        other = other.values if isinstance(other, GridFunction) else other
        return GridFunction(self.mesh, self.values - other)

    def __mul__(self, c):
        return GridFunction(self.mesh, self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class AnalyticField:
    """Field given in closed form together with its gradient.

    Energies of such fields are integrated at quadrature points with the exact
    gradient; the mesh only serves as a quadrature partition.
    """

    value: Callable
    grad: Callable
    label: str = ""

    def scaled(self, c: float) -> "AnalyticField":
        f, g = self.value, self.grad
        return AnalyticField(lambda x: c * f(x), lambda x: c * g(x), f"{c:g}*{self.label}")


def interpolate(mesh: Mesh, f: Callable) -> GridFunction:
    """Nodal interpolant of ``f(points)``."""
    return GridFunction(mesh, np.asarray(f(mesh.nodes), dtype=np.float64))


# ---------------------------------------------------------------------------
# disk meshing

def _ring_layout(radius, n_rings, grading):
    k = np.arange(n_rings + 1)
    r = radius * (k / n_rings) ** grading
    if grading == 1.0:
        per_sector = k.copy()
    else:
        arc = 0.25 * math.pi * grading * radius / n_rings
        dr = np.diff(r)
        per_sector = np.zeros(n_rings + 1, dtype=np.int64)
        for i in range(1, n_rings + 1):
            want = math.ceil(0.25 * math.pi * r[i] / min(arc, dr[i - 1]) - 1e-9)
            per_sector[i] = max(per_sector[i - 1], want, 1)
    return r, per_sector.astype(np.int64)


def _disk_mesh_raw(radius, n_rings, grading, center):
    r, m = _ring_layout(radius, n_rings, grading)
    counts = 8 * m
    counts[0] = 1
    base = np.concatenate([[0], np.cumsum(counts)])
    nodes = [np.zeros((1, 2))]
    for k in range(1, n_rings + 1):
        th = 2 * math.pi * np.arange(counts[k]) / counts[k]
        ring = r[k] * np.column_stack([np.cos(th), np.sin(th)])
        # snap sector rays so that points on the cone boundary are exact
        on_ray = np.arange(counts[k]) % m[k] == 0
        s = np.arange(counts[k])[on_ray] // m[k]
        c = np.cos(s * math.pi / 4)
        sn = np.sin(s * math.pi / 4)
        c[np.abs(c) < 1e-15] = 0.0
        sn[np.abs(sn) < 1e-15] = 0.0
        diag = np.abs(np.abs(c) - math.sqrt(0.5)) < 1e-12
        c[diag] = np.sign(c[diag]) * math.sqrt(0.5)
        sn[diag] = np.sign(sn[diag]) * math.sqrt(0.5)
        ring[on_ray] = r[k] * np.column_stack([c, sn])
        nodes.append(ring)
    nodes = np.vstack(nodes)

    def gid(k, j):
        if k == 0:
            return 0
        return base[k] + (j % counts[k])

    cells = []
    for k in range(1, n_rings + 1):
        M = m[k]
        mi = m[k - 1]
        for s in range(8):
            if k == 1 or mi == 0:
                for o in range(M):
                    cells.append((0, gid(k, s * M + o), gid(k, s * M + o + 1)))
                continue
            i = o = 0
            while i < mi or o < M:
                adv_outer = i == mi or (o < M and (o + 0.5) / M <= (i + 0.5) / mi)
                if adv_outer:
                    cells.append((gid(k - 1, s * mi + i), gid(k, s * M + o), gid(k, s * M + o + 1)))
                    o += 1
                else:
                    cells.append((gid(k - 1, s * mi + i), gid(k, s * M + o), gid(k - 1, s * mi + i + 1)))
                    i += 1
    cells = np.array(cells, dtype=np.int64)
    p = nodes[cells]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    neg = (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]) < 0
    cells[neg] = cells[neg][:, [0, 2, 1]]
    boundary = np.arange(base[n_rings], base[n_rings + 1])
    return nodes + np.asarray(center, dtype=float), cells, boundary


def _max_diameter(nodes, cells):
    p = nodes[cells]
    return float(np.linalg.norm(p - np.roll(p, 1, axis=1), axis=2).max())


def build_disk_mesh(radius: float, h: float, *, grading: float = 1.0,
                    center=(0.0, 0.0), star_radius=None, max_nodes=None) -> Mesh:
    """Conforming ring triangulation of the disk with max cell diameter <= h.

    ``grading > 1`` clusters rings towards the centre (radii ~ (k/N)^grading),
    which is what point singularities at the origin need; ``h`` still bounds
    the largest cell.
    """
    if not radius > 0:
        raise ParameterError("radius must be positive")
    if not 0 < h < radius:
        raise ParameterError("need 0 < h < radius")
    if grading < 1:
        raise ParameterError("grading must be >= 1")
    max_nodes = DEFAULTS["max_nodes"] if max_nodes is None else max_nodes
    n = max(1, math.ceil(grading * radius / h))
    while True:
        r, m = _ring_layout(radius, n, grading)
        if 1 + 8 * int(m.sum()) > max_nodes:
            raise ResourceError(f"mesh with h={h} needs more than {max_nodes} nodes")
        nodes, cells, boundary = _disk_mesh_raw(radius, n, grading, center)
        diam = _max_diameter(nodes, cells)
        if diam <= h:
            break
        n = max(n + 1, math.ceil(n * diam / h))
    domain = Domain.ball(radius, center, star_radius)
    meta = {"radius": float(radius), "center": [float(c) for c in center],
            "rings": int(n), "grading": float(grading), "requested_h": float(h)}
    return Mesh(nodes, cells, boundary, diam, domain, meta)


# ---------------------------------------------------------------------------
# discrete calculus

def gradient(u: GridFunction) -> np.ndarray:
    """Per-cell gradient (T, 2) of the P1 reconstruction."""
    mesh = u.mesh
    return np.einsum("ti,tid->td", u.values[mesh.cells], mesh.basis_gradients)


def _checked(vals):
    vals = np.asarray(vals, dtype=np.float64)
    if not np.all(np.isfinite(vals)):
        raise EvaluationError("integrand is not finite at a quadrature point")
    return vals


def cell_integrals(f, mesh: Mesh, rule: QuadratureRule = DEFAULT_RULE) -> np.ndarray:
    """Per-cell integrals of a callable, nodal or per-cell integrand."""
    areas = mesh.areas
    if isinstance(f, GridFunction):
        return areas * _checked(f.values)[mesh.cells].mean(axis=1)
    if callable(f):
        pts = mesh.quadrature_points(rule)
        vals = _checked(f(pts))
        return 2.0 * areas * (vals @ rule.weights)
    arr = np.asarray(f, dtype=np.float64)
    if arr.shape[0] == mesh.n_cells and arr.shape[0] != mesh.n_nodes:
        return areas * _checked(arr)
    if arr.shape[0] == mesh.n_nodes and arr.shape[0] != mesh.n_cells:
        return areas * _checked(arr)[mesh.cells].mean(axis=1)
    raise ParameterError("ambiguous field: wrap nodal values in a GridFunction")


def integrate(f, mesh: Mesh, rule: QuadratureRule = DEFAULT_RULE) -> float:
    """Quadrature of ``f`` over the mesh with correctly rounded summation."""
    return math.fsum(cell_integrals(f, mesh, rule))


# ---------------------------------------------------------------------------
# singular quadrature in polar / spherical coordinates

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _probe_exponent(g: Callable, at: float, side: int, scale: float) -> float:
    """Leading power of g(at + side * t) as t -> 0."""
    t1, t2 = 1e-6 * scale, 1e-9 * scale
    v1 = abs(float(np.sum(g(at + side * t1))))
    v2 = abs(float(np.sum(g(at + side * t2))))
    if v1 == 0.0 or v2 == 0.0 or not np.isfinite(v1):
        return 0.0 if v2 == 0.0 else -np.inf
    if not np.isfinite(v2):
        return -np.inf
    return math.log(v1 / v2) / math.log(t1 / t2)


def _substituted_rule(a, b, sing_a, sing_b, level):
    """Composite Gauss rule on [a, b] with power substitutions at singular ends."""
    if sing_a is not None and sing_b is not None:
        mid = 0.5 * (a + b)
        x1, w1 = _substituted_rule(a, mid, sing_a, None, level)
        x2, w2 = _substituted_rule(mid, b, None, sing_b, level)
        return np.concatenate([x1, x2]), np.concatenate([w1, w2])
    panels = 2 ** level
    edges = np.linspace(0.0, 1.0, panels + 1)
    u = (0.5 * (edges[:-1, None] + edges[1:, None])
         + 0.5 * (edges[1:, None] - edges[:-1, None]) * _GL_X[None, :]).ravel()
    wu = (0.5 * (edges[1:, None] - edges[:-1, None]) * _GL_W[None, :]).ravel()
    beta = sing_a if sing_a is not None else sing_b
    m = 1.0
    if beta is not None and beta < 0:
        m = 2.0 / (1.0 + beta)
    L = b - a
    if sing_b is not None and sing_a is None:
        x = b - L * u ** m
    else:
        x = a + L * u ** m
    w = L * m * u ** (m - 1.0) * wu
    return x, w


def _axis_pieces(lo, hi, sings):
    """Split [lo, hi] at interior singular points; tag singular endpoints."""
    cuts = sorted({lo, hi, *[s for s, _ in sings if lo < s < hi]})
    expo = {s: e for s, e in sings}
    pieces = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        pieces.append((a, b, expo.get(a), expo.get(b)))
    return pieces


def spherical_quadrature(n: int, integrand, *, radial_range=(0.0, 1.0), angular_ranges=None,
                         radial_exponent=None, angular_singularities=(), rtol=None,
                         max_level=None, full_output=False):
    """Integrate over polar (n=2) or spherical (n=3) coordinate boxes.

    The integrand is given in coordinates and must already contain any
    Jacobian.  For n=2 it is called as ``f(rho, theta)``; for n=3 as
    ``f(rho, theta, phi)`` with theta the azimuth in (0, 2 pi) and phi the
    polar angle in (0, pi).  A tuple of one-dimensional callables means a
    separable product integrand, which is integrated axis by axis.

    ``angular_ranges`` lists intervals of the last angle (theta for n=2,
    phi for n=3); ``angular_singularities`` lists ``(point, exponent)``
    pairs on that axis, with ``exponent=None`` meaning "detect".  Power
    singularities are removed by t = s^m substitutions; refinement doubles
    the panels until two consecutive levels agree to ``rtol``.
    """
    if n not in (2, 3):
        raise ParameterError("spherical_quadrature supports n = 2, 3")
    rtol = DEFAULTS["quad_rtol"] if rtol is None else rtol
    max_level = DEFAULTS["quad_max_level"] if max_level is None else max_level
    last_full = (0.0, 2 * math.pi) if n == 2 else (0.0, math.pi)
    ranges = list(angular_ranges) if angular_ranges is not None else [last_full]
    separable = isinstance(integrand, (tuple, list))
    if separable and len(integrand) != n:
        raise ParameterError(f"separable integrand needs {n} factors")

    # representative evaluators for exponent probing
    probe_theta = 0.5 * (ranges[0][0] + ranges[0][1])
    sing_pts = [s for s, _ in angular_singularities]
    if any(abs(probe_theta - s) < 1e-3 for s in sing_pts):
        probe_theta = ranges[0][0] + 0.3183 * (ranges[0][1] - ranges[0][0])
    probe_rho = radial_range[0] + 0.5 * (radial_range[1] - radial_range[0])
    if separable:
        radial_g = integrand[0]
        last_g = integrand[-1]
    elif n == 2:
        def radial_g(r):
            return integrand(np.asarray(r), np.asarray(probe_theta))

        def last_g(t):
            return integrand(np.asarray(probe_rho), np.asarray(t))
    else:
        def radial_g(r):
            return integrand(np.asarray(r), np.asarray(1.0), np.asarray(probe_theta))

        def last_g(t):
            return integrand(np.asarray(probe_rho), np.asarray(1.0), np.asarray(t))

    r0, r1 = radial_range
    alpha = radial_exponent
    if r0 == 0.0 and alpha is None:
        alpha = _probe_exponent(radial_g, 0.0, 1, max(r1, 1e-300))
        alpha = round(alpha, 6)
    if r0 == 0.0 and alpha is not None and alpha <= -1.0:
        raise DivergenceError(f"radial exponent {alpha} <= -1: integral is infinite")
    sings = []
    for s, e in angular_singularities:
        if e is None:
            e = min(_probe_exponent(last_g, s, side, 1.0) for side in (-1, 1)
                    if any(lo <= s + side * 1e-7 <= hi for lo, hi in ranges))
            e = round(e, 6)
        if e <= -1.0:
            raise DivergenceError(f"angular exponent {e} <= -1 at {s}: integral is infinite")
        sings.append((s, e if e < 0 else None))
    sings = [(s, e) for s, e in sings if e is not None]

    def rule_for(level, pieces):
        xs, ws = [], []
        for a, b, ea, eb in pieces:
            x, w = _substituted_rule(a, b, ea, eb, level)
            xs.append(x)
            ws.append(w)
        return np.concatenate(xs), np.concatenate(ws)

    rad_pieces = [(r0, r1, alpha if (r0 == 0.0 and alpha is not None and alpha < 0) else None, None)]
    ang_pieces = []
    for lo, hi in ranges:
        ang_pieces += _axis_pieces(lo, hi, sings)
    mid_pieces = [(0.0, 2 * math.pi, None, None)]

    def evaluate(level):
        xr, wr = rule_for(level, rad_pieces)
        xa, wa = rule_for(level, ang_pieces)
        if separable:
            val = float(np.dot(wr, integrand[0](xr))) * float(np.dot(wa, integrand[-1](xa)))
            if n == 3:
                xm, wm = rule_for(level, mid_pieces)
                val *= float(np.dot(wm, integrand[1](xm)))
            return val
        if n == 2:
            vals = integrand(xr[:, None], xa[None, :])
            return float(wr @ np.broadcast_to(vals, (xr.size, xa.size)) @ wa)
        xm, wm = rule_for(level, mid_pieces)
        vals = integrand(xr[:, None, None], xm[None, :, None], xa[None, None, :])
        vals = np.broadcast_to(vals, (xr.size, xm.size, xa.size))
        return float(np.einsum("i,j,k,ijk->", wr, wm, wa, vals))

    level_cap = max_level if separable else min(max_level, 7 if n == 2 else 4)
    prev = evaluate(0)
    history = [prev]
    for level in range(1, level_cap + 1):
        cur = evaluate(level)
        history.append(cur)
        if not np.isfinite(cur):
            raise EvaluationError("integrand produced a non-finite value")
        if abs(cur - prev) <= rtol * abs(cur) or cur == prev:
            if full_output:
                return cur, {"levels": level, "history": history,
                             "error_estimate": abs(cur - prev),
                             "radial_exponent": alpha, "angular_singularities": sings}
            return cur
        prev = cur
    raise QuadratureError(f"no convergence to rtol={rtol} within {level_cap} levels: {history[-3:]}")


# ---------------------------------------------------------------------------
# sampled seminorms

def _as_points(points):
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[1] == 1:
        pts = np.column_stack([pts[:, 0], np.zeros(pts.shape[0])])
    if pts.shape[1] != 2:
        raise ParameterError("sample points must be 1D or 2D")
    return np.ascontiguousarray(pts)


def holder_seminorm_estimate(f, gamma: float, points) -> float:
    """Lower estimate of sup |f(x)-f(y)| / |x-y|^gamma over sample pairs.

    ``f`` is a callable on the points or an array of values at them.
    """
    if not 0 < gamma <= 1:
        raise ParameterError("gamma must lie in (0, 1]")
    raw = np.asarray(points, dtype=np.float64)
    if raw.shape[0] < 2:
        return 0.0
    vals = np.asarray(f(raw) if callable(f) else f, dtype=np.float64).ravel()
    pts = _as_points(raw)
    rows = np.arange(pts.shape[0], dtype=np.int64)
    best, _, _ = kernels.pair_max(pts, np.ascontiguousarray(vals), float(gamma), 1, rows, 0.0)
    return max(0.0, best)


# ---------------------------------------------------------------------------
# field CSV

def write_field_csv(u: GridFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "value"])
        for i, v in enumerate(u.values):
            w.writerow([i, repr(float(v))])


def read_field_csv(mesh: Mesh, path) -> GridFunction:
    vals = np.zeros(mesh.n_nodes)
    seen = np.zeros(mesh.n_nodes, dtype=bool)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            i = int(row["node"])
            vals[i] = float(row["value"])
            seen[i] = True
    if not seen.all():
        raise ParameterError(f"field CSV misses {int((~seen).sum())} nodes")
    return GridFunction(mesh, vals)
