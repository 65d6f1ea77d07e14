"""Riesz pair energies and geometric statistics of point configurations.

Energy convention: E_s(x_1..x_N) = sum over ordered pairs i != j of
|x_i - x_j|**(-s), so every unordered pair is counted twice.  All sums are
evaluated through fixed-shape numpy reductions in i-major order, which keeps
results bit-stable across process thread counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularConfigurationError
from .fractal import CellAddress, Fractal, cell_anchor, cell_diameter, anchor_cloud

ENERGY_CONVENTION = "ordered-pairs"


@dataclass(frozen=True, eq=False)
class Configuration:
    """N points in R^p, optionally tagged with the cells they represent.

    An address names the cell a point stands for; the point itself may be any
    representative inside that cell (anchors, cell corners, ...).
    """

    points: np.ndarray
    addresses: tuple = None
    fractal_label: str = ""

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise DomainError("points must form a nonempty (N, p) array")
        if not np.all(np.isfinite(pts)):
            raise DomainError("points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.addresses is not None:
            addrs = tuple(self.addresses)
            if len(addrs) != pts.shape[0]:
                raise DomainError("need one address per point")
            object.__setattr__(self, "addresses", addrs)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def validate_cells(self, fractal: Fractal, slack: float = 1e-9) -> bool:
        """Check each point lies within its named cell's diameter of the anchor."""
        if self.addresses is None:
            raise DomainError("configuration carries no addresses")
        for pt, addr in zip(self.points, self.addresses):
            anchor = cell_anchor(fractal, addr)
            bound = cell_diameter(fractal, addr)
            if np.linalg.norm(pt - anchor) > bound * (1.0 + slack) + slack:
                return False
        return True


def _as_points(config) -> np.ndarray:
    if isinstance(config, Configuration):
        return config.points
    pts = np.asarray(config, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(K, N) squared distances, accumulated coordinate by coordinate."""
    d2 = np.zeros((a.shape[0], b.shape[0]))
    for k in range(a.shape[1]):
        d2 += (a[:, k, None] - b[None, :, k]) ** 2
    return d2


def riesz_energy(config, s: float) -> float:
    """Ordered-pair Riesz s-energy; 0 for a single point.

    Coincident points raise SingularConfigurationError, which is distinct
    from a finite-but-overflowing sum (returned as inf).
    """
    if s <= 0.0:
        raise DomainError(f"exponent s must be positive, got {s}")
    pts = _as_points(config)
    n = pts.shape[0]
    if n == 1:
        return 0.0
    d2 = _sq_dists(pts, pts)
    if int(np.count_nonzero(d2 == 0.0)) > n:
        raise SingularConfigurationError("configuration contains coincident points")
    np.fill_diagonal(d2, np.inf)
    with np.errstate(over="ignore"):
        kernel = d2 ** (-0.5 * s)
    return float(np.sum(kernel))


def normalized_energy(energy: float, n: int, s: float, d: float) -> float:
    """energy / N**(1 + s/d), the scale on which minimal energies converge."""
    if n < 2:
        raise DomainError("normalization needs at least two points")
    if d <= 0.0:
        raise DomainError("dimension must be positive")
    if s <= 0.0:
        raise DomainError("exponent s must be positive")
    return energy / float(n) ** (1.0 + s / d)


@dataclass(frozen=True)
class EnergyRecord:
    """One energy evaluation: count, exponent, raw and normalized values."""

    N: int
    s: float
    energy: float
    normalized: float
    d: float

    @classmethod
    def from_config(cls, config, s: float, d: float) -> "EnergyRecord":
        pts = _as_points(config)
        n = pts.shape[0]
        energy = riesz_energy(pts, s)
        norm = normalized_energy(energy, n, s, d) if n >= 2 else 0.0
        return cls(N=n, s=float(s), energy=energy, normalized=norm, d=float(d))


def cross_energy(part1, part2, s: float) -> float:
    """Ordered-pair interaction between two disjoint parts (both directions)."""
    if s <= 0.0:
        raise DomainError(f"exponent s must be positive, got {s}")
    a = _as_points(part1)
    b = _as_points(part2)
    d2 = _sq_dists(a, b)
    if np.any(d2 == 0.0):
        raise SingularConfigurationError("parts share a point")
    with np.errstate(over="ignore"):
        kernel = d2 ** (-0.5 * s)
    return 2.0 * float(np.sum(kernel))


def point_energy_sums(candidates, config, s: float, skip_index: int = None) -> np.ndarray:
    """For each candidate y, sum over config points of |y - x_j|**(-s).

    Coincidence with a config point contributes +inf rather than raising;
    callers decide how to treat infinite candidates.
    """
    cands = _as_points(candidates)
    pts = _as_points(config)
    d2 = _sq_dists(cands, pts)
    with np.errstate(divide="ignore", over="ignore"):
        kernel = d2 ** (-0.5 * s)
    if skip_index is not None:
        kernel[:, skip_index] = 0.0
    return kernel.sum(axis=1)


def min_point_energy(config, candidates, s: float):
    """(best point, value): the candidate with least kernel sum to the config.

    Ties break toward the lowest candidate index; if every candidate collides
    with a configuration point the problem is singular.
    """
    if s <= 0.0:
        raise DomainError(f"exponent s must be positive, got {s}")
    cands = _as_points(candidates)
    if cands.shape[0] < 1:
        raise DomainError("need at least one candidate")
    values = point_energy_sums(cands, config, s)
    idx = int(np.argmin(values))
    if math.isinf(values[idx]):
        raise SingularConfigurationError("every candidate coincides with a config point")
    return np.array(cands[idx]), float(values[idx])


def min_pairwise_distance(config) -> float:
    pts = _as_points(config)
    if pts.shape[0] < 2:
        raise DomainError("need at least two points")
    d2 = _sq_dists(pts, pts)
    np.fill_diagonal(d2, np.inf)
    return math.sqrt(float(d2.min()))


def covering_radius(config, mesh, slack: float = 0.0):
    """(radius, slack): max over mesh points of the distance to the config.

    slack is the caller-supplied resolution of the mesh (e.g. the largest
    cell diameter behind it) and is reported separately, never folded in.
    """
    pts = _as_points(config)
    mesh_pts = _as_points(mesh)
    if mesh_pts.shape[0] < 1:
        raise DomainError("mesh must be nonempty")
    d2 = _sq_dists(mesh_pts, pts)
    radius = math.sqrt(float(d2.min(axis=1).max()))
    return radius, float(slack)


def fractal_covering_radius(fractal: Fractal, config, depth: int):
    """Covering radius against the depth-l anchor cloud, slack = max cell diameter."""
    mesh = anchor_cloud(fractal, depth)
    slack = (fractal.r_max ** depth) * fractal.diameter
    return covering_radius(config, mesh, slack=slack)
