"""Atomic ensembles: positions, transition parameters, and bin partitions.

All lengths are expressed in the same unit as the transition wavelength
``lambda0`` (default 1.0, i.e. positions in units of the wavelength), so
every k0.r product the physics depends on is dimensionless.  Rates are in
units of the single-atom decay rate ``gamma`` (default 1.0).
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import InvalidParameterError

_AXES = {"x": np.array([1.0, 0.0, 0.0]),
         "y": np.array([0.0, 1.0, 0.0]),
         "z": np.array([0.0, 0.0, 1.0])}

# Transverse extent of a degenerate (point-like) ensemble, used so the
# large-sample closed forms stay finite; they are outside their validity
# domain there anyway.
_DEGENERATE_AREA = 1.0


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _min_enclosing_circle(points):
    """Smallest circle containing 2-D ``points``; returns (center, radius).

    Incremental construction (Welzl-style): grow the circle each time a
    point falls outside the current one.  Quadratic-ish worst case, fine
    for the ensemble sizes used here.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        return np.zeros(2), 0.0

    def circle_two(a, b):
        c = (a + b) / 2.0
        return c, float(np.linalg.norm(a - c))

    def circle_three(a, b, c):
        # Circumcircle; falls back to the widest pair for collinear points.
        d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1])
                   + c[0] * (a[1] - b[1]))
        if abs(d) < 1e-14:
            pairs = [(a, b), (a, c), (b, c)]
            ctr, r = max((circle_two(p, q) for p, q in pairs),
                         key=lambda cr: cr[1])
            return ctr, r
        ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1])
              + (c @ c) * (a[1] - b[1])) / d
        uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0])
              + (c @ c) * (b[0] - a[0])) / d
        ctr = np.array([ux, uy])
        return ctr, float(np.linalg.norm(a - ctr))

    def contains(center, radius, p, eps=1e-10):
        return np.linalg.norm(p - center) <= radius * (1 + eps) + 1e-14

    center, radius = pts[0].copy(), 0.0
    for i, p in enumerate(pts):
        if contains(center, radius, p):
            continue
        center, radius = p.copy(), 0.0
        for j in range(i):
            q = pts[j]
            if contains(center, radius, q):
                continue
            center, radius = circle_two(p, q)
            for k in range(j):
                s = pts[k]
                if contains(center, radius, s):
                    continue
                center, radius = circle_three(p, q, s)
    return center, radius


@dataclass(frozen=True)
class AtomEnsemble:
    """N two-level atoms at fixed positions sharing one optical transition.

    positions : (N, 3) array, same length unit as ``lambda0``
    lambda0   : transition wavelength
    k0_vec    : carrier wave vector, |k0_vec| = 2 pi / lambda0
    gamma     : single-atom spontaneous decay rate
    radius_R  : bounding radius around the centroid
    area_A    : transverse cross-section used by the large-sample rate
                formulas (minimal enclosing circle of the transverse
                projection by default, overridable)
    """

    positions: np.ndarray
    lambda0: float = 1.0
    k0_vec: np.ndarray = None
    gamma: float = 1.0
    radius_R: float = None
    area_A: float = None
    label: str = ""

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise InvalidParameterError(
                f"positions must be (N, 3) with N >= 1, got {pos.shape}")
        if not (self.lambda0 > 0):
            raise InvalidParameterError(f"lambda0 must be > 0, got {self.lambda0}")
        if not (self.gamma > 0):
            raise InvalidParameterError(f"gamma must be > 0, got {self.gamma}")

        k0 = 2.0 * math.pi / self.lambda0
        if self.k0_vec is None:
            kvec = k0 * _AXES["z"]
        else:
            kvec = np.asarray(self.k0_vec, dtype=float)
            if kvec.shape != (3,):
                raise InvalidParameterError("k0_vec must be a 3-vector")
            if abs(np.linalg.norm(kvec) - k0) > 1e-12 * k0:
                raise InvalidParameterError(
                    f"|k0_vec| = {np.linalg.norm(kvec)} must equal "
                    f"2*pi/lambda0 = {k0} to relative 1e-12")

        centroid = pos.mean(axis=0)
        r_max = float(np.linalg.norm(pos - centroid, axis=1).max())
        if self.radius_R is None:
            radius = r_max
        else:
            radius = float(self.radius_R)
            if radius < r_max * (1 - 1e-12):
                raise InvalidParameterError(
                    f"radius_R = {radius} smaller than max centroid "
                    f"distance {r_max}")

        if self.area_A is None:
            area = self._default_area(pos, kvec, self.lambda0)
        else:
            area = float(self.area_A)
        if not (area > 0):
            raise InvalidParameterError(f"area_A must be > 0, got {area}")

        object.__setattr__(self, "positions", _frozen(pos))
        object.__setattr__(self, "k0_vec", _frozen(kvec))
        object.__setattr__(self, "lambda0", float(self.lambda0))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "radius_R", radius)
        object.__setattr__(self, "area_A", area)

    @staticmethod
    def _default_area(pos, kvec, lambda0):
        khat = kvec / np.linalg.norm(kvec)
        # Any orthonormal pair spanning the plane perpendicular to k0.
        trial = _AXES["x"] if abs(khat[0]) < 0.9 else _AXES["y"]
        e1 = np.cross(khat, trial)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(khat, e1)
        proj = np.stack([pos @ e1, pos @ e2], axis=1)
        _, rho = _min_enclosing_circle(proj)
        if rho < 1e-12 * lambda0:
            return _DEGENERATE_AREA * lambda0 ** 2
        return math.pi * rho * rho

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def k0(self) -> float:
        return 2.0 * math.pi / self.lambda0

    def timed_phases(self) -> np.ndarray:
        """Per-atom phase factors exp(i k0 . r_j) imprinted by absorption."""
        return np.exp(1j * (self.positions @ self.k0_vec))

    def separations(self) -> np.ndarray:
        """(N, N) matrix of pairwise distances |r_j - r_l|."""
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.linalg.norm(diff, axis=-1)

    def is_dicke_limit(self, tol: float = 1e-9) -> bool:
        """True when all atoms coincide (spatial phases vanish exactly)."""
        return bool(self.separations().max() <= tol * self.lambda0)


@dataclass(frozen=True)
class BinPartition:
    """Ordered disjoint index bins covering 0..N-1, one weight per bin."""

    bins: tuple
    weights: tuple
    n: int = field(default=None)

    def __post_init__(self):
        bins = tuple(np.asarray(b, dtype=int) for b in self.bins)
        weights = tuple(float(w) for w in self.weights)
        if len(bins) != len(weights):
            raise InvalidParameterError("one weight per bin required")
        if not bins:
            raise InvalidParameterError("partition needs at least one bin")
        all_idx = np.concatenate(bins) if bins else np.array([], dtype=int)
        n = self.n if self.n is not None else (int(all_idx.max()) + 1 if all_idx.size else 0)
        cover = np.sort(all_idx)
        if cover.size != n or not np.array_equal(cover, np.arange(n)):
            raise InvalidParameterError(
                "bins must be pairwise disjoint and cover 0..N-1")
        object.__setattr__(self, "bins", tuple(_frozen(b) for b in bins))
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "n", n)

    @property
    def arity(self) -> int:
        return len(self.bins)

    def weight_per_atom(self) -> np.ndarray:
        """Length-N vector assigning each atom its bin weight."""
        w = np.empty(self.n, dtype=float)
        for b, wt in zip(self.bins, self.weights):
            w[b] = wt
        return w

    def weight_sum(self) -> float:
        """sum_b weight_b * |bin_b| (zero for a valid subradiant split)."""
        return float(sum(w * len(b) for b, w in zip(self.bins, self.weights)))


def halves(ensemble: AtomEnsemble) -> BinPartition:
    """Split atoms into first/second half with weights (+1, -1).

    Requires even N: the two-bin antisymmetric state needs equal halves.
    """
    n = ensemble.n
    if n % 2 != 0:
        raise InvalidParameterError(
            f"halves partition requires even N, got N = {n}")
    h = n // 2
    return BinPartition(bins=(np.arange(0, h), np.arange(h, n)),
                        weights=(1.0, -1.0), n=n)


def thirds(ensemble: AtomEnsemble) -> BinPartition:
    """Split atoms into three equal bins with weights (+1, -2, +1)."""
    n = ensemble.n
    if n % 3 != 0:
        raise InvalidParameterError(
            f"thirds partition requires N divisible by 3, got N = {n}")
    t = n // 3
    return BinPartition(bins=(np.arange(0, t), np.arange(t, 2 * t),
                              np.arange(2 * t, n)),
                        weights=(1.0, -2.0, 1.0), n=n)


def point_cluster(n: int, spread: float = 0.0, seed: int = 0,
                  **params) -> AtomEnsemble:
    """All atoms at the origin (spread = 0, exact small-sample limit) or
    Gaussian-scattered around it with standard deviation ``spread``."""
    if n < 1:
        raise InvalidParameterError(f"N must be >= 1, got {n}")
    if spread < 0:
        raise InvalidParameterError(f"spread must be >= 0, got {spread}")
    if spread == 0:
        pos = np.zeros((n, 3))
    else:
        rng = np.random.default_rng(seed)
        pos = rng.normal(scale=spread, size=(n, 3))
    params.setdefault("label", f"point-cluster(N={n}, spread={spread})")
    return AtomEnsemble(positions=pos, **params)


def line(n: int, spacing: float, axis: str = "z", **params) -> AtomEnsemble:
    """Evenly spaced chain along a coordinate axis, first atom at origin."""
    if n < 1:
        raise InvalidParameterError(f"N must be >= 1, got {n}")
    if not (spacing > 0):
        raise InvalidParameterError(f"spacing must be > 0, got {spacing}")
    if axis not in _AXES:
        raise InvalidParameterError(f"axis must be one of {sorted(_AXES)}")
    pos = np.outer(np.arange(n) * spacing, _AXES[axis])
    params.setdefault("label", f"line(N={n}, d={spacing}, {axis})")
    return AtomEnsemble(positions=pos, **params)


def slab(n: int, area: float, depth: float, seed: int, **params) -> AtomEnsemble:
    """Uniform random positions in a square-section slab.

    Cross-section ``area`` spans x-y, ``depth`` spans z; positions are
    sorted along z so the halves/thirds partitions are spatially
    contiguous subensembles along the propagation axis.  The slab's
    nominal cross-section is used as area_A (not the enclosing-circle
    default).
    """
    if n < 1:
        raise InvalidParameterError(f"N must be >= 1, got {n}")
    if not (area > 0) or not (depth > 0):
        raise InvalidParameterError("area and depth must be > 0")
    rng = np.random.default_rng(seed)
    side = math.sqrt(area)
    pos = np.empty((n, 3))
    pos[:, 0] = rng.uniform(-side / 2, side / 2, size=n)
    pos[:, 1] = rng.uniform(-side / 2, side / 2, size=n)
    pos[:, 2] = rng.uniform(0.0, depth, size=n)
    pos = pos[np.argsort(pos[:, 2], kind="stable")]
    params.setdefault("area_A", area)
    params.setdefault("label", f"slab(N={n}, A={area}, L={depth}, seed={seed})")
    return AtomEnsemble(positions=pos, **params)


def from_positions(positions, **params) -> AtomEnsemble:
    """Ensemble from an explicit (N, 3) position list."""
    params.setdefault("label", "explicit")
    return AtomEnsemble(positions=np.asarray(positions, dtype=float), **params)


def make_ensemble(spec: dict) -> AtomEnsemble:
    """Build an ensemble from a geometry descriptor dict (config layer).

    ``spec['kind']`` selects the constructor: 'point-cluster', 'line',
    'slab' or 'explicit'; remaining keys are its parameters plus the
    common overrides lambda0 / gamma / k0_direction / radius_R / area_A.
    """
    spec = dict(spec)
    kind = spec.pop("kind", None)
    common = {}
    for key in ("lambda0", "gamma", "radius_R", "area_A", "label"):
        if key in spec:
            common[key] = spec.pop(key)
    if "k0_direction" in spec:
        direction = np.asarray(spec.pop("k0_direction"), dtype=float)
        norm = np.linalg.norm(direction)
        if norm == 0:
            raise InvalidParameterError("k0_direction must be nonzero")
        lam = common.get("lambda0", 1.0)
        common["k0_vec"] = direction / norm * (2.0 * math.pi / lam)

    if kind == "point-cluster":
        return point_cluster(int(spec.pop("n")), spread=spec.pop("spread", 0.0),
                             seed=int(spec.pop("seed", 0)), **common, **spec)
    if kind == "line":
        return line(int(spec.pop("n")), spacing=spec.pop("spacing"),
                    axis=spec.pop("axis", "z"), **common, **spec)
    if kind == "slab":
        return slab(int(spec.pop("n")), area=spec.pop("area"),
                    depth=spec.pop("depth"), seed=int(spec.pop("seed", 0)),
                    **common, **spec)
    if kind == "explicit":
        return from_positions(spec.pop("positions"), **common, **spec)
    raise InvalidParameterError(f"unknown geometry kind: {kind!r}")
