"""Spectral fields on the periodic box [0, L1) x ... x [0, Ld).

Real scalar fields are stored by their full complex FFT coefficient array
(numpy forward convention, unnormalized), so the trigonometric coefficient
of the wavevector k is ``coeffs[k] / n_total``.  All linear calculus
(derivatives, integer Laplacian powers, integrals, norms) acts diagonally
on coefficients and is exact for band-limited fields.  Pointwise
nonlinearities go through :func:`pointwise_apply`, which transforms to the
physical grid, applies the function, transforms back and removes the top
third of the spectrum (2/3 rule), so products never alias back into the
retained band.

A fixed total ordering of wavevectors (by |kappa|^2, ties broken
lexicographically, the conjugate pair {k, -k} adjacent, k = 0 first)
defines the nested Galerkin spaces: the first n wavevectors of the
ordering span an n-dimensional real subspace with the orthonormal basis
1/sqrt(V), sqrt(2/V) cos(kappa x), sqrt(2/V) sin(kappa x).  Nyquist
planes are excluded from the ordering: their sine partner cannot be
sampled on the grid, and the dealias cut removes them from every evolved
field anyway.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import prod, sqrt

import numpy as np

__all__ = [
    "TorusGrid",
    "SpectralField",
    "VectorField",
    "derivative",
    "gradient",
    "divergence",
    "laplacian_power",
    "integrate",
    "l2_norm",
    "h1_norm",
    "l2_inner",
    "lp_norm",
    "pointwise_apply",
    "dealias",
    "truncate_modes",
    "mode_total",
    "mode_count_for_ball",
    "galerkin_mode_budget",
    "basis_matrix",
    "project_coeffs",
    "field_from_coeffs",
    "random_field",
]


class PointwiseEvaluationError(ValueError):
    """A pointwise function produced a non-finite value on the grid."""


@dataclass(frozen=True)
class TorusGrid:
    """Uniform tensor grid on a d-dimensional periodic box, d in {1, 2, 3}.

    Parameters
    ----------
    points : tuple of int
        Grid points per axis, each even and >= 4.
    period : tuple of float
        Box edge length per axis, each positive and finite.
    """

    points: tuple[int, ...]
    period: tuple[float, ...]

    def __post_init__(self):
        points = tuple(int(p) for p in np.atleast_1d(self.points))
        period = tuple(float(L) for L in np.atleast_1d(self.period))
        if len(period) == 1 and len(points) > 1:
            period = period * len(points)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "period", period)
        if not 1 <= len(points) <= 3:
            raise ValueError(f"dimension must be 1, 2 or 3, got {len(points)}")
        if len(period) != len(points):
            raise ValueError("points and period must have the same length")
        for n in points:
            if n < 4 or n % 2 != 0:
                raise ValueError(f"points per axis must be even and >= 4, got {n}")
        for L in period:
            if not np.isfinite(L) or L <= 0:
                raise ValueError(f"period must be positive and finite, got {L}")

    @classmethod
    def cubic(cls, dim: int, points: int, period: float = 2.0 * np.pi) -> "TorusGrid":
        """Cube with the same resolution and period on every axis."""
        return cls(points=(points,) * dim, period=(period,) * dim)

    @property
    def dim(self) -> int:
        return len(self.points)

    @cached_property
    def n_total(self) -> int:
        return prod(self.points)

    @cached_property
    def volume(self) -> float:
        return prod(self.period)

    @cached_property
    def cell_volume(self) -> float:
        return self.volume / self.n_total

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.period, self.points))

    @cached_property
    def index_wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer wavenumbers per axis in FFT layout (0, 1, ..., -1)."""
        out = []
        for n in self.points:
            k = np.rint(np.fft.fftfreq(n) * n).astype(np.int64)
            k.flags.writeable = False
            out.append(k)
        return tuple(out)

    @cached_property
    def kappa_axes(self) -> tuple[np.ndarray, ...]:
        """Angular wavenumbers 2 pi k / L per axis, broadcastable to shape."""
        out = []
        for axis, (k, L) in enumerate(zip(self.index_wavenumbers, self.period)):
            kap = (2.0 * np.pi / L) * k.astype(np.float64)
            shape = [1] * self.dim
            shape[axis] = self.points[axis]
            kap = kap.reshape(shape)
            kap.flags.writeable = False
            out.append(kap)
        return tuple(out)

    @cached_property
    def kappa_squared(self) -> np.ndarray:
        ks = sum(kap * kap for kap in self.kappa_axes)
        ks = np.ascontiguousarray(np.broadcast_to(ks, self.points).copy())
        ks.flags.writeable = False
        return ks

    @cached_property
    def dealias_keep(self) -> np.ndarray:
        """Boolean mask of retained modes: |k_axis| <= (n_axis - 1) // 3.

        The strict cut (3 kmax < n on every axis) keeps quadratic products
        of retained fields alias-free and keeps the mean of triple products
        exact, which the Gram assembly and the energy quadratures rely on.
        """
        keep = np.ones(self.points, dtype=bool)
        for axis, k in enumerate(self.index_wavenumbers):
            kmax = (self.points[axis] - 1) // 3
            shape = [1] * self.dim
            shape[axis] = self.points[axis]
            keep &= (np.abs(k) <= kmax).reshape(shape)
        keep.flags.writeable = False
        return keep

    @cached_property
    def dealias_kmax(self) -> tuple[int, ...]:
        return tuple((n - 1) // 3 for n in self.points)

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, ...]:
        axes = [
            np.arange(n, dtype=np.float64) * h
            for n, h in zip(self.points, self.spacing)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        for m in mesh:
            m.flags.writeable = False
        return tuple(mesh)


def _conj_reflect(coeffs: np.ndarray) -> np.ndarray:
    """conj(C(-k)) in FFT index layout."""
    rev = coeffs
    for axis in range(coeffs.ndim):
        rev = np.roll(np.flip(rev, axis=axis), 1, axis=axis)
    return np.conj(rev)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable real scalar field in coefficient representation.

    ``coeffs`` follows the unnormalized numpy forward-FFT convention and is
    kept exactly Hermitian-symmetric, so the physical values are real by
    construction.  Instances behave as values: arrays are read-only and all
    operations return new fields.
    """

    grid: TorusGrid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.points:
            raise ValueError(f"coefficient shape {c.shape} != grid {self.grid.points}")
        if not np.all(np.isfinite(c.view(np.float64))):
            raise ValueError("non-finite spectral coefficient")
        herm = np.max(np.abs(c - _conj_reflect(c)))
        scale = 1.0 + np.max(np.abs(c))
        if herm > 1e-9 * scale:
            raise ValueError(
                f"coefficients violate Hermitian symmetry (deviation {herm:.3e})"
            )
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_values(cls, grid: TorusGrid, values: np.ndarray) -> "SpectralField":
        """Forward transform of physical grid values (symmetrized exactly)."""
        v = np.asarray(values, dtype=np.float64)
        if v.shape != grid.points:
            raise ValueError(f"value shape {v.shape} != grid {grid.points}")
        c = np.fft.fftn(v)
        c = 0.5 * (c + _conj_reflect(c))
        return cls(grid, c)

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.points, dtype=np.complex128))

    @classmethod
    def constant(cls, grid: TorusGrid, value: float) -> "SpectralField":
        c = np.zeros(grid.points, dtype=np.complex128)
        c[(0,) * grid.dim] = value * grid.n_total
        return cls(grid, c)

    @classmethod
    def harmonic(
        cls,
        grid: TorusGrid,
        wavevector: tuple[int, ...],
        amplitude: float = 1.0,
        kind: str = "cos",
    ) -> "SpectralField":
        """amplitude * cos(kappa . x) or sin(kappa . x), built spectrally.

        The wavevector is given in integer units; kappa = 2 pi k / L.
        """
        k = tuple(int(x) for x in np.atleast_1d(wavevector))
        if len(k) != grid.dim:
            raise ValueError(f"wavevector length {len(k)} != dim {grid.dim}")
        for ki, n in zip(k, grid.points):
            if abs(ki) >= n // 2:
                raise ValueError(f"wavevector component {ki} not representable on {n} points")
        if kind not in ("cos", "sin"):
            raise ValueError(f"kind must be 'cos' or 'sin', got {kind!r}")
        c = np.zeros(grid.points, dtype=np.complex128)
        if all(ki == 0 for ki in k):
            if kind == "sin":
                return cls(grid, c)
            c[(0,) * grid.dim] = amplitude * grid.n_total
            return cls(grid, c)
        pos = tuple(ki % n for ki, n in zip(k, grid.points))
        neg = tuple((-ki) % n for ki, n in zip(k, grid.points))
        half = 0.5 * amplitude * grid.n_total
        if kind == "cos":
            c[pos] += half
            c[neg] += half
        else:
            c[pos] += -1j * half
            c[neg] += 1j * half
        return cls(grid, c)

    # -- views -------------------------------------------------------------

    @cached_property
    def values(self) -> np.ndarray:
        """Physical grid values (read-only)."""
        v = np.fft.ifftn(self.coeffs).real
        v.flags.writeable = False
        return v

    def mean(self) -> float:
        return float(self.coeffs[(0,) * self.grid.dim].real) / self.grid.n_total

    # -- linear arithmetic ---------------------------------------------------

    def _wrap(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_same_grid(other)
        return self._wrap(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_same_grid(other)
        return self._wrap(self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        if isinstance(scalar, SpectralField):
            raise TypeError("use pointwise_apply for field products (dealiasing policy)")
        return self._wrap(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self._wrap(-self.coeffs)

    def _check_same_grid(self, other: "SpectralField"):
        if self.grid != other.grid:
            raise ValueError("fields live on different grids")


@dataclass(frozen=True, eq=False)
class VectorField:
    """Tuple of scalar fields on a shared grid, one per spatial axis."""

    components: tuple[SpectralField, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValueError("vector field needs at least one component")
        grid = comps[0].grid
        if len(comps) != grid.dim:
            raise ValueError(f"{len(comps)} components for dim {grid.dim}")
        for c in comps:
            if c.grid != grid:
                raise ValueError("components live on different grids")

    @property
    def grid(self) -> TorusGrid:
        return self.components[0].grid

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "VectorField":
        return cls(tuple(SpectralField.zeros(grid) for _ in range(grid.dim)))

    def __getitem__(self, i: int) -> SpectralField:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a - b for a, b in zip(self.components, other.components)))

    def __mul__(self, scalar: float) -> "VectorField":
        return VectorField(tuple(c * scalar for c in self.components))

    __rmul__ = __mul__


# -- diagonal (exact) operations -------------------------------------------


@lru_cache(maxsize=256)
def _derivative_multiplier(grid: TorusGrid, axis: int, order: int) -> np.ndarray:
    """(i kappa)^order along one axis, Nyquist zeroed for odd orders.

    The Nyquist mode is its own conjugate partner, so an odd power of
    (i kappa) would break Hermitian symmetry there; zeroing it is the usual
    convention and is a no-op for dealiased fields.
    """
    kap = grid.kappa_axes[axis].astype(np.complex128)
    mult = (1j * kap) ** order
    if order % 2 == 1:
        n = grid.points[axis]
        k = grid.index_wavenumbers[axis]
        shape = [1] * grid.dim
        shape[axis] = n
        mult = np.where((k == -(n // 2)).reshape(shape), 0.0, mult)
    mult.flags.writeable = False
    return mult


def derivative(f: SpectralField, axis: int, order: int = 1) -> SpectralField:
    """Spectral partial derivative d^order / d x_axis^order."""
    if not 0 <= axis < f.grid.dim:
        raise ValueError(f"axis {axis} out of range for dim {f.grid.dim}")
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    return SpectralField(f.grid, f.coeffs * _derivative_multiplier(f.grid, axis, order))


def gradient(f: SpectralField) -> VectorField:
    return VectorField(tuple(derivative(f, a) for a in range(f.grid.dim)))


def divergence(v: VectorField) -> SpectralField:
    out = derivative(v[0], 0)
    for a in range(1, v.grid.dim):
        out = out + derivative(v[a], a)
    return out


def laplacian_power(f: SpectralField, power: int = 1) -> SpectralField:
    """(Laplacian)^power, multiplier (-|kappa|^2)^power."""
    if power < 1:
        raise ValueError(f"power must be >= 1, got {power}")
    mult = (-f.grid.kappa_squared) ** power
    return SpectralField(f.grid, f.coeffs * mult)


def integrate(f: SpectralField) -> float:
    """Integral over the box: volume times the mean mode."""
    return f.grid.volume * f.mean()


def l2_inner(f: SpectralField, g: SpectralField) -> float:
    """L2 inner product via Parseval (exact for stored coefficients)."""
    f._check_same_grid(g)
    s = np.vdot(f.coeffs, g.coeffs).real
    return float(s * f.grid.volume / f.grid.n_total**2)


def l2_norm(f: SpectralField) -> float:
    return sqrt(max(l2_inner(f, f), 0.0))


def h1_norm(f: SpectralField) -> float:
    """(||f||^2 + ||grad f||^2)^(1/2), computed spectrally."""
    w = (1.0 + f.grid.kappa_squared) * np.abs(f.coeffs) ** 2
    s = float(np.sum(w) * f.grid.volume / f.grid.n_total**2)
    return sqrt(max(s, 0.0))


def lp_norm(f: SpectralField, p: float) -> float:
    """(int |f|^p)^(1/p) by grid quadrature."""
    if p <= 0:
        raise ValueError(f"p must be positive, got {p}")
    return float(np.sum(np.abs(f.values) ** p) * f.grid.cell_volume) ** (1.0 / p)


# -- nonlinear pipeline ------------------------------------------------------


def dealias(f: SpectralField) -> SpectralField:
    """Zero the top third of the spectrum (2/3 rule)."""
    return SpectralField(f.grid, np.where(f.grid.dealias_keep, f.coeffs, 0.0))


def pointwise_apply(fields, fn) -> SpectralField:
    """Evaluate fn on the physical values of the given fields, dealiased.

    Parameters
    ----------
    fields : sequence of SpectralField
        All on the same grid; their physical values are passed to ``fn``
        positionally as read-only float arrays.
    fn : callable
        Vectorized map returning an array of the same shape.

    Returns
    -------
    SpectralField
        Forward transform of the result with the top third of the
        spectrum removed.

    Raises
    ------
    PointwiseEvaluationError
        If fn produces a non-finite value anywhere; the message names the
        first offending grid point and value, which is how vacuum or
        negative density surfaces during evaluation.
    """
    fields = list(fields)
    if not fields:
        raise ValueError("need at least one field")
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ValueError("fields live on different grids")
    out = np.asarray(fn(*[f.values for f in fields]), dtype=np.float64)
    if out.shape != grid.points:
        raise ValueError(f"fn returned shape {out.shape}, expected {grid.points}")
    bad = ~np.isfinite(out)
    if np.any(bad):
        flat = int(np.argmax(bad))
        idx = np.unravel_index(flat, grid.points)
        point = tuple(float(c[idx]) for c in grid.coordinates)
        raise PointwiseEvaluationError(
            f"non-finite value {out[idx]!r} at grid point {point} (index {idx})"
        )
    return dealias(SpectralField.from_values(grid, out))


# -- Galerkin mode ordering ---------------------------------------------------


@lru_cache(maxsize=64)
def _ordering(grid: TorusGrid):
    """Fixed total ordering of non-Nyquist wavevectors.

    Returns (sizes, starts, zero_flat, pair_rep_flat, pair_neg_flat,
    pair_kappa) where pairs are listed in order; sizes[j] is 1 for the zero
    orbit and 2 for conjugate pairs.
    """
    shape = grid.points
    kint = grid.index_wavenumbers
    entries = []
    for idx in np.ndindex(*shape):
        k = tuple(int(kint[a][idx[a]]) for a in range(grid.dim))
        if any(ki == -(n // 2) for ki, n in zip(k, shape)):
            continue  # Nyquist plane: no sine partner on the grid
        neg = tuple(-ki for ki in k)
        if k < neg:
            continue  # keep the lexicographically larger representative
        kap2 = sum((2.0 * np.pi * ki / L) ** 2 for ki, L in zip(k, grid.period))
        entries.append((kap2, k))
    entries.sort(key=lambda e: (e[0], e[1]))

    sizes = []
    pair_rep = []
    pair_neg = []
    pair_kappa = []
    zero_flat = None
    for kap2, k in entries:
        if all(ki == 0 for ki in k):
            sizes.append(1)
            zero_flat = int(np.ravel_multi_index((0,) * grid.dim, shape))
            continue
        sizes.append(2)
        rep_idx = tuple(ki % n for ki, n in zip(k, shape))
        neg_idx = tuple((-ki) % n for ki, n in zip(k, shape))
        pair_rep.append(int(np.ravel_multi_index(rep_idx, shape)))
        pair_neg.append(int(np.ravel_multi_index(neg_idx, shape)))
        pair_kappa.append(tuple(2.0 * np.pi * ki / L for ki, L in zip(k, grid.period)))
    sizes = np.array(sizes, dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(sizes)])
    return (
        sizes,
        starts,
        zero_flat,
        np.array(pair_rep, dtype=np.int64),
        np.array(pair_neg, dtype=np.int64),
        tuple(pair_kappa),
    )


def mode_total(grid: TorusGrid) -> int:
    """Total number of wavevectors in the ordering (Nyquist excluded)."""
    sizes, _, _, _, _, _ = _ordering(grid)
    return int(sizes.sum())


def galerkin_mode_budget(grid: TorusGrid) -> int:
    """Largest valid mode count whose wavevectors all survive dealiasing.

    Galerkin velocity spaces larger than this would keep modes that every
    pointwise product immediately zeroes, so truncation and the 2/3 rule
    would fight each other; callers enforce n <= this budget.
    """
    sizes, _, _, _, _, pair_kappa = _ordering(grid)
    cut = tuple(
        2.0 * np.pi * km / L for km, L in zip(grid.dealias_kmax, grid.period)
    )
    n = 0
    pair_at = 0
    for s in sizes:
        if s == 1:
            n += 1
            continue
        kap = pair_kappa[pair_at]
        pair_at += 1
        if any(abs(ka) > c + 1e-12 for ka, c in zip(kap, cut)):
            break
        n += 2
    return n


def mode_count_for_ball(grid: TorusGrid, kappa_max: float) -> int:
    """Number of ordered modes with |kappa| <= kappa_max (a valid n)."""
    sizes, starts, _, _, _, pair_kappa = _ordering(grid)
    n = 0
    pair_at = 0
    for s in sizes:
        if s == 1:
            n += 1
            continue
        kap = pair_kappa[pair_at]
        pair_at += 1
        if sum(x * x for x in kap) <= kappa_max**2 + 1e-12:
            n += 2
        else:
            break
    return n


@lru_cache(maxsize=128)
def _orbit_split(grid: TorusGrid, n: int) -> int:
    """Number of leading orbits that together hold exactly n wavevectors."""
    sizes, starts, _, _, _, _ = _ordering(grid)
    total = int(sizes.sum())
    if n < 1 or n > total:
        raise ValueError(f"mode count n={n} outside 1..{total}")
    j = int(np.searchsorted(starts, n))
    if starts[j] != n:
        raise ValueError(
            f"mode count n={n} splits a conjugate pair; nearest valid counts are "
            f"{int(starts[j - 1])} and {int(starts[j])}"
        )
    return j


@lru_cache(maxsize=128)
def _truncate_mask(grid: TorusGrid, n: int) -> np.ndarray:
    sizes, _, zero_flat, pair_rep, pair_neg, _ = _ordering(grid)
    orbits = _orbit_split(grid, n)
    mask = np.zeros(grid.n_total, dtype=bool)
    pair_at = 0
    for j in range(orbits):
        if sizes[j] == 1:
            mask[zero_flat] = True
        else:
            mask[pair_rep[pair_at]] = True
            mask[pair_neg[pair_at]] = True
            pair_at += 1
    mask = mask.reshape(grid.points)
    mask.flags.writeable = False
    return mask


def truncate_modes(f: SpectralField, n: int) -> SpectralField:
    """Project onto the span of the first n wavevectors of the ordering.

    Raises ValueError if n exceeds the available modes or would split a
    conjugate pair (pairs always enter together, preserving symmetry).
    """
    return SpectralField(f.grid, np.where(_truncate_mask(f.grid, n), f.coeffs, 0.0))


@lru_cache(maxsize=64)
def basis_matrix(grid: TorusGrid, n: int) -> np.ndarray:
    """Orthonormal real basis evaluated on the grid, shape (n_total, n).

    Column order matches the mode ordering: 1/sqrt(V), then per pair
    sqrt(2/V) cos(kappa x) and sqrt(2/V) sin(kappa x).
    """
    sizes, _, _, _, _, pair_kappa = _ordering(grid)
    orbits = _orbit_split(grid, n)
    V = grid.volume
    cols = np.empty((grid.n_total, n), dtype=np.float64)
    coords = [c.ravel() for c in grid.coordinates]
    at = 0
    pair_at = 0
    for j in range(orbits):
        if sizes[j] == 1:
            cols[:, at] = 1.0 / sqrt(V)
            at += 1
            continue
        kap = pair_kappa[pair_at]
        pair_at += 1
        phase = sum(k * x for k, x in zip(kap, coords))
        cols[:, at] = sqrt(2.0 / V) * np.cos(phase)
        cols[:, at + 1] = sqrt(2.0 / V) * np.sin(phase)
        at += 2
    cols.flags.writeable = False
    return cols


def project_coeffs(f: SpectralField, n: int) -> np.ndarray:
    """L2 inner products of f with the first n basis functions.

    Exact for stored coefficients (reads the Fourier modes directly); for
    f already supported in the first n modes this is the coordinate vector
    of f in the orthonormal basis.
    """
    grid = f.grid
    sizes, _, zero_flat, pair_rep, _, _ = _ordering(grid)
    orbits = _orbit_split(grid, n)
    npairs = (n - 1) // 2 if sizes[0] == 1 else n // 2
    flat = f.coeffs.ravel()
    V = grid.volume
    Nt = grid.n_total
    out = np.empty(n, dtype=np.float64)
    at = 0
    if sizes[0] == 1 and orbits >= 1:
        out[0] = flat[zero_flat].real / Nt * sqrt(V)
        at = 1
    reps = pair_rep[:npairs]
    chat = flat[reps] / Nt
    out[at::2] = sqrt(2.0 * V) * chat.real
    out[at + 1 :: 2] = -sqrt(2.0 * V) * chat.imag
    return out


def field_from_coeffs(grid: TorusGrid, lam: np.ndarray) -> SpectralField:
    """Field sum_i lam_i e_i from coordinates in the orthonormal basis."""
    lam = np.asarray(lam, dtype=np.float64)
    n = lam.shape[0]
    sizes, _, zero_flat, pair_rep, pair_neg, _ = _ordering(grid)
    _orbit_split(grid, n)
    V = grid.volume
    Nt = grid.n_total
    c = np.zeros(grid.n_total, dtype=np.complex128)
    at = 0
    if sizes[0] == 1 and n >= 1:
        c[zero_flat] = lam[0] / sqrt(V) * Nt
        at = 1
    npairs = (n - at) // 2
    chat = (lam[at::2] / sqrt(2.0 * V)) - 1j * (lam[at + 1 :: 2] / sqrt(2.0 * V))
    c[pair_rep[:npairs]] = chat * Nt
    c[pair_neg[:npairs]] = np.conj(chat) * Nt
    return SpectralField(grid, c.reshape(grid.points))


def random_field(
    grid: TorusGrid,
    rng: np.random.Generator,
    kmax: int,
    amplitude: float = 1.0,
    mean: float = 0.0,
) -> SpectralField:
    """Random smooth band-limited field with modes |kappa| <= kmax.

    Coefficients decay like 1 / (1 + |kappa|^2), so the result is smooth at
    any resolution; the L-infinity size is of order ``amplitude``.
    """
    kappa_max = 2.0 * np.pi * kmax / max(grid.period)
    n = mode_count_for_ball(grid, kappa_max)
    lam = np.zeros(n)
    sizes, _, _, _, _, pair_kappa = _ordering(grid)
    at = 1 if sizes[0] == 1 else 0
    pair_at = 0
    while at < n:
        kap2 = sum(x * x for x in pair_kappa[pair_at])
        scale = amplitude / (1.0 + kap2)
        lam[at] = scale * rng.standard_normal()
        lam[at + 1] = scale * rng.standard_normal()
        at += 2
        pair_at += 1
    f = field_from_coeffs(grid, lam)
    if mean != 0.0:
        f = f + SpectralField.constant(grid, mean)
    return f
