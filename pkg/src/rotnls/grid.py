"""Periodic spectral grids, transforms, derivatives and quadrature.

The domain is the box [-L_j, L_j) per axis with n_j equispaced points and
periodic boundary conditions.  Trap confinement makes the truncation error of
the whole-space problem exponentially small once the box half-width exceeds
roughly 1.5x the classical turning radius, so every operation here may assume
fields that decay to machine noise at the boundary.

All Grid-derived arrays (coordinates, wavenumber multipliers, tail masks) are
precomputed eagerly, which keeps Grid immutable and safe to share between
threads; results are bitwise deterministic for fixed inputs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _fft

from .errors import CorruptFieldError, GridError, ResolutionWarning

# Fraction of the wavenumber band counted as "tail" (per axis, |xi| >= TAIL_BAND * xi_max).
TAIL_BAND = 0.75
# Default spectral tail fraction above which derivative ops warn.
RESOLUTION_WARN_FRACTION = 1e-6

# Worker count handed to scipy.fft; set by the CLI --threads flag.
FFT_WORKERS = 1


def set_fft_workers(n: int) -> None:
    global FFT_WORKERS
    FFT_WORKERS = max(1, int(n))


@dataclass(frozen=True, eq=False)
class Grid:
    """Spatial discretization: box extents, point counts, wavenumbers.

    Attributes:
        dim: 2 or 3.
        half_widths: per-axis L_j; the domain is [-L_j, L_j).
        points: per-axis point count n_j (even powers of two, >= 8).
        spacing: per-axis h_j = 2 L_j / n_j.
        wavenumbers: per-axis 1D arrays in the standard periodic layout.
    """

    dim: int
    half_widths: tuple[float, ...]
    points: tuple[int, ...]
    spacing: tuple[float, ...] = field(init=False)
    wavenumbers: tuple[np.ndarray, ...] = field(init=False)
    # Broadcastable per-axis coordinate and wavenumber arrays, plus derived
    # multipliers, are precomputed so the grid is fully read-only afterwards.
    coords: tuple[np.ndarray, ...] = field(init=False, repr=False)
    wavenumber_grids: tuple[np.ndarray, ...] = field(init=False, repr=False)
    deriv_mult: tuple[np.ndarray, ...] = field(init=False, repr=False)
    laplacian_mult: np.ndarray = field(init=False, repr=False)
    radius2: np.ndarray = field(init=False, repr=False)
    tail_mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise GridError(f"dim must be 2 or 3, got {self.dim}")
        if len(self.half_widths) != self.dim or len(self.points) != self.dim:
            raise GridError("half_widths and points must have length dim")
        for L in self.half_widths:
            if not (L > 0):
                raise GridError(f"half-width must be positive, got {L}")
        for n in self.points:
            if n < 8 or n % 2 != 0 or (n & (n - 1)) != 0:
                raise GridError(f"point count must be an even power of two >= 8, got {n}")
        object.__setattr__(
            self, "spacing", tuple(2.0 * L / n for L, n in zip(self.half_widths, self.points))
        )
        wn, xs, ks, dm = [], [], [], []
        for ax in range(self.dim):
            n = self.points[ax]
            h = self.spacing[ax]
            xi = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
            wn.append(xi)
            shape = [1] * self.dim
            shape[ax] = n
            x = -self.half_widths[ax] + h * np.arange(n)
            xs.append(x.reshape(shape))
            ks.append(xi.reshape(shape))
            # First-derivative multiplier i*xi with the unpaired Nyquist mode
            # zeroed, which keeps the operator exactly skew-adjoint on real data.
            d = 1j * xi
            d[n // 2] = 0.0
            dm.append(d.reshape(shape))
        object.__setattr__(self, "wavenumbers", tuple(wn))
        object.__setattr__(self, "coords", tuple(xs))
        object.__setattr__(self, "wavenumber_grids", tuple(ks))
        object.__setattr__(self, "deriv_mult", tuple(dm))
        lap = sum(-k.astype(complex) ** 2 for k in ks)
        object.__setattr__(self, "laplacian_mult", lap)
        r2 = sum(x.astype(float) ** 2 for x in xs)
        object.__setattr__(self, "radius2", np.broadcast_to(r2, self.shape).copy())
        tail = np.zeros(self.shape, dtype=bool)
        for ax in range(self.dim):
            xi_max = np.pi / self.spacing[ax]
            tail |= np.broadcast_to(np.abs(ks[ax]) >= TAIL_BAND * xi_max, self.shape)
        object.__setattr__(self, "tail_mask", tail)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    def axis_coordinates(self, ax: int) -> np.ndarray:
        """1D coordinate array along one axis."""
        return self.coords[ax].ravel()

    def compatible(self, other: "Grid") -> bool:
        return (
            self.dim == other.dim
            and self.points == other.points
            and self.half_widths == other.half_widths
        )


@dataclass(eq=False)
class ComplexField:
    """Complex samples of a function on a Grid (the state u)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != self.grid.shape:
            raise GridError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.values.copy())


@dataclass(eq=False)
class RealField:
    """Real samples on a Grid (potentials, densities)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise GridError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )


def make_grid(dim: int, half_widths, points) -> Grid:
    """Build a Grid; rejects odd/tiny point counts and non-positive extents."""
    return Grid(dim=int(dim), half_widths=tuple(float(L) for L in half_widths),
                points=tuple(int(n) for n in points))


def check_finite(f: ComplexField) -> None:
    # A single reduction: any NaN/Inf poisons the sum.
    if not np.isfinite(f.values.sum()):
        raise CorruptFieldError("field contains non-finite samples")


def fftn(values: np.ndarray) -> np.ndarray:
    return _fft.fftn(values, workers=FFT_WORKERS)


def ifftn(values: np.ndarray) -> np.ndarray:
    return _fft.ifftn(values, workers=FFT_WORKERS)


def fft_axis(values: np.ndarray, axis: int) -> np.ndarray:
    return _fft.fft(values, axis=axis, workers=FFT_WORKERS)


def ifft_axis(values: np.ndarray, axis: int) -> np.ndarray:
    return _fft.ifft(values, axis=axis, workers=FFT_WORKERS)


def transform_forward(f: ComplexField) -> ComplexField:
    """Forward transform; coefficients use the grid's wavenumber layout.

    Parseval with this normalization: sum|f|^2 * prod(h) = sum|F|^2 * prod(h)/prod(n).
    """
    check_finite(f)
    return ComplexField(f.grid, fftn(f.values))


def transform_inverse(f: ComplexField) -> ComplexField:
    check_finite(f)
    return ComplexField(f.grid, ifftn(f.values))


def spectral_tail_fraction(f: ComplexField) -> float:
    """Fraction of spectral power with any |xi_j| in the top band."""
    power = np.abs(fftn(f.values)) ** 2
    total = power.sum()
    if total == 0.0:
        return 0.0
    return float(power[f.grid.tail_mask].sum() / total)


def gradient(f: ComplexField, warn_fraction: float = RESOLUTION_WARN_FRACTION):
    """Spectral per-axis derivatives, exact for resolved band-limited input.

    Emits ResolutionWarning (result still returned) when the spectral tail
    fraction exceeds warn_fraction.
    """
    check_finite(f)
    spec = fftn(f.values)
    power = np.abs(spec) ** 2
    total = power.sum()
    if total > 0.0 and power[f.grid.tail_mask].sum() > warn_fraction * total:
        warnings.warn(
            "field is marginally resolved; spectral derivatives may be inaccurate",
            ResolutionWarning,
            stacklevel=2,
        )
    return tuple(
        ComplexField(f.grid, ifftn(spec * f.grid.deriv_mult[ax])) for ax in range(f.grid.dim)
    )


def integrate(f: RealField) -> float:
    """Rectangle-rule quadrature (trapezoid on a periodic grid is identical)."""
    return float(f.values.sum() * f.grid.cell_volume)


def integrate_values(grid: Grid, values: np.ndarray) -> float:
    return float(values.sum().real * grid.cell_volume)


def inner(a: ComplexField, b: ComplexField) -> complex:
    """L2 inner product <a, b> = integral a * conj(b)."""
    return complex(np.vdot(b.values, a.values) * a.grid.cell_volume)


def l2_norm2(f: ComplexField) -> float:
    return float(np.vdot(f.values, f.values).real * f.grid.cell_volume)


def dilate(f: ComplexField, scale: float, mass_tol: float = 1e-8,
           target_grid: Grid | None = None) -> ComplexField:
    """Evaluate f at scale*x via its Fourier series (spectral interpolation).

    Returns g with g(x) = f(scale * x), sampled on target_grid (defaults to
    the source grid).  Raises AliasingError when the result loses more than
    mass_tol of the analytically expected mass, i.e. the dilated field no
    longer fits on its grid.
    """
    from .errors import AliasingError

    if scale <= 0:
        raise ValueError("dilation scale must be positive")
    g = f.grid
    tg = target_grid if target_grid is not None else g
    if tg.dim != g.dim:
        raise GridError("target grid dimension mismatch")
    coeff = fftn(f.values) / g.size
    out = coeff
    # Separable evaluation: contract one axis at a time with the matrix
    # E[i, k] = exp(i * xi_k * (scale * y_i + L)); the +L offset accounts for
    # the transform indexing source samples from the box corner.
    for ax in range(g.dim):
        y = tg.axis_coordinates(ax)
        xi = g.wavenumbers[ax]
        E = np.exp(1j * np.outer(scale * y + g.half_widths[ax], xi))
        out = np.moveaxis(np.tensordot(E, out, axes=([1], [ax])), 0, ax)
    result = ComplexField(tg, out)
    expected = l2_norm2(f) * scale ** (-g.dim)
    got = l2_norm2(result)
    if expected > 0 and abs(got - expected) > mass_tol * expected:
        raise AliasingError(
            f"dilation by {scale} lost mass: expected {expected:.6e}, got {got:.6e}"
        )
    return result
