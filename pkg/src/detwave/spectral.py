"""Fourier representation of 3-component vector fields on the periodic torus.

Coefficients use the basis ``exp(i 2 pi k.x)`` on the unit torus with
integer wavevectors ``k``; ``coeffs[c, k] = mean_x f_c(x) exp(-i 2 pi k.x)``.
With this normalization Parseval reads ``sum_k |f^(k)|^2 = mean_x |f(x)|^2``.

When ``n == 2`` fields keep three components but depend on ``(x, y)`` only
(the 2.5-D convention, ``d/dz = 0``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .errors import ConfigError, ParameterError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TorusGrid:
    """Discretization of the ``n``-torus with ``N`` points per side.

    ``N`` must be even and at least 8; the FFT sizes used throughout the
    acceptance runs (48, 96) are not powers of two.
    """

    n: int
    N: int
    period: float = 1.0
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ConfigError(f"grid dimension must be 2 or 3, got n={self.n}")
        if self.N < 8 or self.N % 2:
            raise ConfigError(f"N must be even and >= 8, got N={self.N}")
        if self.period <= 0:
            raise ConfigError(f"period must be positive, got {self.period}")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ConfigError(
                f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}"
            )

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def size(self) -> int:
        return self.N**self.n

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavevectors, shape ``(n,) + shape``, in FFT order."""
        k1 = np.fft.fftfreq(self.N, d=1.0 / self.N).round().astype(np.int64)
        return np.stack(np.meshgrid(*([k1] * self.n), indexing="ij"))

    @cached_property
    def k3(self) -> np.ndarray:
        """Wavevectors padded to three components (``k_z = 0`` when n = 2)."""
        k = self.k.astype(np.float64)
        if self.n == 2:
            k = np.concatenate([k, np.zeros((1,) + self.shape)])
        return k

    @cached_property
    def kd3(self) -> np.ndarray:
        """Derivative wavevectors: ``k3`` with the Nyquist entries zeroed."""
        kd = self.k3.copy()
        kd[kd == -self.N // 2] = 0.0
        return kd

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(np.sum(self.k.astype(np.float64) ** 2, axis=0))

    @cached_property
    def kmag2(self) -> np.ndarray:
        return np.sum(self.k.astype(np.float64) ** 2, axis=0)

    @cached_property
    def nyquist(self) -> np.ndarray:
        """Boolean mask of modes with any component at ``-N/2``."""
        return np.any(self.k == -self.N // 2, axis=0)

    @property
    def dealias_cutoff(self) -> float:
        return self.dealias_fraction * self.N / 2.0

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True where a mode survives dealiasing (``|k_i| < cutoff`` in every dimension)."""
        return np.all(np.abs(self.k) < self.dealias_cutoff, axis=0)

    @cached_property
    def k_max(self) -> float:
        """Largest Euclidean wavenumber magnitude inside the dealiased band."""
        return float(np.max(self.kmag[self.dealias_mask]))

    @cached_property
    def q_max(self) -> int:
        """Top dyadic index for dealiased fields: smallest q with k_max <= (3/4) 2^(q+1)."""
        return _covering_index(self.k_max)

    @cached_property
    def q_top(self) -> int:
        """Top dyadic index covering every resolved mode, Nyquist included."""
        return _covering_index(float(np.max(self.kmag)))

    @cached_property
    def points(self) -> np.ndarray:
        """Physical coordinates, shape ``(n,) + shape``, on ``[0, period)``."""
        x1 = np.arange(self.N) * (self.period / self.N)
        return np.stack(np.meshgrid(*([x1] * self.n), indexing="ij"))

    def wavevector_index(self, k) -> tuple[int, ...]:
        """Array index of integer wavevector ``k`` (length n)."""
        if len(k) != self.n:
            raise ParameterError(f"wavevector needs {self.n} entries, got {k!r}")
        return tuple(int(ki) % self.N for ki in k)


def _covering_index(kmax: float) -> int:
    q = -1
    while kmax > 0.75 * 2.0 ** (q + 1):
        q += 1
    return max(q, 0)


@dataclass(frozen=True, eq=False)
class Field:
    """Real 3-component vector field stored by Fourier coefficients."""

    grid: TorusGrid
    coeffs: np.ndarray
    divfree: bool = False
    m: int = field(default=3, init=False)

    def __post_init__(self):
        expected = (3,) + self.grid.shape
        if self.coeffs.shape != expected:
            raise ConfigError(
                f"coefficient array has shape {self.coeffs.shape}, expected {expected}"
            )

    @classmethod
    def zeros(cls, grid: TorusGrid, divfree: bool = True) -> "Field":
        return cls(grid, np.zeros((3,) + grid.shape, dtype=np.complex128), divfree)

    @classmethod
    def single_mode(cls, grid: TorusGrid, k, vector, divfree: bool = False) -> "Field":
        """Real field ``Re(2 v exp(i 2 pi k.x))``: coefficient ``v`` at k and ``conj(v)`` at -k."""
        c = np.zeros((3,) + grid.shape, dtype=np.complex128)
        v = np.asarray(vector, dtype=np.complex128)
        idx = grid.wavevector_index(k)
        nidx = grid.wavevector_index([-ki for ki in k])
        if idx == nidx:
            c[(slice(None),) + idx] = v.real
        else:
            c[(slice(None),) + idx] = v
            c[(slice(None),) + nidx] = np.conj(v)
        return cls(grid, c, divfree)

    def with_coeffs(self, coeffs: np.ndarray, divfree: bool | None = None) -> "Field":
        return Field(self.grid, coeffs, self.divfree if divfree is None else divfree)

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.coeffs + other.coeffs, self.divfree and other.divfree)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.coeffs - other.coeffs, self.divfree and other.divfree)

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.coeffs, self.divfree)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.grid, self.coeffs * scalar, self.divfree)

    __rmul__ = __mul__

    def coefficient(self, k) -> np.ndarray:
        return self.coeffs[(slice(None),) + self.grid.wavevector_index(k)]

    def max_coeff(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def hermitian_defect(self) -> float:
        """Max |c(-k) - conj(c(k))|; zero for real fields."""
        return float(np.max(np.abs(_reflect_conj(self.coeffs, self.grid.n) - self.coeffs)))

    def divergence_defect(self) -> float:
        """Max over k of ``|2 pi k . c(k)|``."""
        return float(np.max(np.abs(divergence(self))))


def _same_grid(a: Field, b: Field) -> None:
    if a.grid != b.grid:
        raise ConfigError(f"grid mismatch: {a.grid} vs {b.grid}")


def to_physical(f: Field) -> np.ndarray:
    """Samples on the grid, shape ``(3,) + grid.shape``."""
    axes = tuple(range(1, f.grid.n + 1))
    return np.fft.ifftn(f.coeffs, axes=axes, norm="forward").real


def from_physical(samples, grid: TorusGrid, divfree: bool = False) -> Field:
    samples = np.asarray(samples, dtype=np.float64)
    expected = (3,) + grid.shape
    if samples.shape != expected:
        raise ConfigError(f"samples have shape {samples.shape}, expected {expected}")
    axes = tuple(range(1, grid.n + 1))
    return Field(grid, np.fft.fftn(samples, axes=axes, norm="forward"), divfree)


def dealias(f: Field) -> Field:
    return f.with_coeffs(f.coeffs * f.grid.dealias_mask)


def curl(f: Field) -> Field:
    """Spectral curl, symbol ``i 2 pi k x f^(k)``."""
    kd = f.grid.kd3 * (TWO_PI / f.grid.period)
    c = f.coeffs
    out = np.empty_like(c)
    out[0] = 1j * (kd[1] * c[2] - kd[2] * c[1])
    out[1] = 1j * (kd[2] * c[0] - kd[0] * c[2])
    out[2] = 1j * (kd[0] * c[1] - kd[1] * c[0])
    return Field(f.grid, out, divfree=True)


def divergence(f: Field) -> np.ndarray:
    """Scalar spectral field ``i 2 pi k . f^(k)``."""
    kd = f.grid.kd3 * (TWO_PI / f.grid.period)
    return 1j * np.sum(kd * f.coeffs, axis=0)


def gradient_scalar(phi_hat: np.ndarray, grid: TorusGrid) -> Field:
    """Gradient of a scalar spectral field, as a 3-component field."""
    kd = grid.kd3 * (TWO_PI / grid.period)
    return Field(grid, 1j * kd * phi_hat[None])


def laplacian(f: Field) -> Field:
    symbol = -((TWO_PI / f.grid.period) ** 2) * f.grid.kmag2
    return f.with_coeffs(f.coeffs * symbol)


def gradient_samples(f: Field) -> np.ndarray:
    """Physical samples of the Jacobian ``d_i f_j``, shape ``(n * 3,) + grid.shape``."""
    kd = f.grid.kd3 * (TWO_PI / f.grid.period)
    axes = tuple(range(1, f.grid.n + 1))
    spec = np.concatenate([1j * kd[i][None] * f.coeffs for i in range(f.grid.n)])
    return np.fft.ifftn(spec, axes=axes, norm="forward").real


def leray_project(f: Field) -> Field:
    """Orthogonal projection onto divergence-free fields; k = 0 passes through."""
    kd = f.grid.kd3
    k2 = np.sum(kd * kd, axis=0)
    safe = np.where(k2 == 0.0, 1.0, k2)
    kdotf = np.sum(kd * f.coeffs, axis=0) / safe
    return Field(f.grid, f.coeffs - kd * kdotf[None], divfree=True)


def inner(f: Field, g: Field) -> float:
    """L2 inner product via Parseval."""
    return float(np.real(np.vdot(f.coeffs, g.coeffs)))


def l2_norm(f: Field) -> float:
    return float(np.sqrt(np.sum(np.abs(f.coeffs) ** 2)))


def lp_norm(f: Field, p: float) -> float:
    """``(mean_x |f(x)|^p)^(1/p)`` on the grid; ``p = inf`` gives the sample maximum.

    ``p = 2`` is computed exactly from the coefficients.
    """
    if not p >= 1.0:
        raise ParameterError(f"L^p exponent must be >= 1, got p={p}")
    if p == 2.0:
        return l2_norm(f)
    samples = to_physical(f).reshape(3, -1)
    return samples_lp_norm(samples, p)


def samples_lp_norm(samples: np.ndarray, p: float) -> float:
    samples = np.ascontiguousarray(samples.reshape(samples.shape[0], -1))
    if np.isinf(p):
        return kernels.vec_norm_max(samples)
    total = kernels.vec_norm_sum(samples, float(p))
    return (total / samples.shape[1]) ** (1.0 / p)


def grad_linf(f: Field) -> float:
    """``max_x |grad f(x)|`` with the Frobenius norm of the Jacobian, on the grid."""
    return kernels.vec_norm_max(np.ascontiguousarray(gradient_samples(f).reshape(3 * f.grid.n, -1)))


def cross_product(a: Field, b: Field) -> Field:
    """Dealiased pseudo-spectral cross product ``a x b``."""
    _same_grid(a, b)
    pa = np.ascontiguousarray(to_physical(a).reshape(3, -1))
    pb = np.ascontiguousarray(to_physical(b).reshape(3, -1))
    prod = kernels.cross3(pa, pb).reshape((3,) + a.grid.shape)
    return dealias(from_physical(prod, a.grid))


def advect(a: Field, v: Field) -> Field:
    """Dealiased ``(a . grad) v``."""
    _same_grid(a, v)
    n = a.grid.n
    pa = to_physical(a)
    jac = gradient_samples(v).reshape((n, 3) + a.grid.shape)
    out = np.zeros((3,) + a.grid.shape)
    for i in range(n):
        out += pa[i][None] * jac[i]
    return dealias(from_physical(out, a.grid))


def componentwise_product(a: Field, b: Field) -> Field:
    _same_grid(a, b)
    return dealias(from_physical(to_physical(a) * to_physical(b), a.grid))


def random_divfree_field(grid: TorusGrid, seed: int, band, amplitude: float) -> Field:
    """Seeded real divergence-free field supported in dyadic blocks ``band[0]..band[1]``.

    Support is the open annulus where the block multipliers of the band are
    nonzero, intersected with the dealiased modes. Random draws are made per
    integer wavevector in a fixed order, so the same seed gives the same field
    on every grid that resolves the band. The L2 norm equals ``amplitude``.
    """
    from .littlewood_paley import band_multiplier

    q_lo, q_hi = int(band[0]), int(band[1])
    if q_lo > q_hi:
        raise ParameterError(f"empty band [{q_lo}, {q_hi}]")
    if q_lo < -1 or q_hi > grid.q_max:
        raise ParameterError(
            f"band [{q_lo}, {q_hi}] outside resolved blocks [-1, {grid.q_max}]"
        )
    if amplitude < 0:
        raise ParameterError(f"amplitude must be nonnegative, got {amplitude}")
    K = int(np.ceil(2.0 ** (q_hi + 1)))
    side = np.arange(-K, K + 1)
    kc = np.stack(np.meshgrid(*([side] * grid.n), indexing="ij")).reshape(grid.n, -1)
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((kc.shape[1], 6))
    vals = (draws[:, :3] + 1j * draws[:, 3:]).T
    kmag = np.sqrt(np.sum(kc.astype(np.float64) ** 2, axis=0))
    keep = (band_multiplier(q_lo, q_hi, kmag) > 0.0) & np.all(
        np.abs(kc) < grid.dealias_cutoff, axis=0
    )
    keep &= np.all(kc != -grid.N // 2, axis=0)
    c = np.zeros((3,) + grid.shape, dtype=np.complex128)
    idx = tuple(kc[i, keep] % grid.N for i in range(grid.n))
    c[(slice(None),) + idx] = vals[:, keep]
    f = leray_project(Field(grid, c))
    # c(k) -> (c(k) + conj(c(-k))) / 2 keeps the (symmetric) support and solenoidality
    f = Field(grid, 0.5 * (f.coeffs + _reflect_conj(f.coeffs, grid.n)))
    f = leray_project(f)
    norm = l2_norm(f)
    if norm == 0.0 or amplitude == 0.0:
        return Field.zeros(grid)
    return Field(grid, f.coeffs * (amplitude / norm), divfree=True)


def _reflect_conj(c: np.ndarray, n: int) -> np.ndarray:
    """Array whose entry at k is conj(c(-k))."""
    out = c
    for ax in range(1, n + 1):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return np.conj(out)
