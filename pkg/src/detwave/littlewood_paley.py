"""Dyadic frequency decomposition on the torus.

Blocks use the radial cutoff ``chi`` (1 on [0, 3/4], 0 on [1, inf)) and
``phi(t) = chi(t/2) - chi(t)``; block ``q >= 0`` multiplies the Fourier
coefficient at ``k`` by ``phi(|k| / 2^q)`` and block ``-1`` by ``chi(|k|)``.
Dyadic weights use ``lambda_q = 2^q`` with ``lambda_{-1}`` taken as 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import ConfigError, ParameterError, UndefinedRatioError
from .spectral import (
    TWO_PI,
    Field,
    TorusGrid,
    advect,
    componentwise_product,
    cross_product,
    curl,
    from_physical,
    l2_norm,
    lp_norm,
    to_physical,
    dealias,
)


def lam(q: int) -> float:
    """Dyadic weight ``2^q`` with the convention ``lambda_{-1} = 1``."""
    return 1.0 if q == -1 else 2.0**q


def chi_eval(t):
    """Radial cutoff; accepts scalars or arrays."""
    arr = np.asarray(t, dtype=np.float64)
    if np.any(arr < 0):
        raise ParameterError("chi is defined on [0, inf)")
    out = kernels.chi_profile(arr)
    return float(out) if np.ndim(t) == 0 else out


def phi_eval(q: int, kmag):
    """Block multiplier ``phi_q`` at wavenumber magnitude(s) ``kmag``."""
    if q < -1:
        raise ParameterError(f"block index must be >= -1, got {q}")
    kmag = np.asarray(kmag, dtype=np.float64)
    if q == -1:
        out = kernels.chi_profile(kmag)
    else:
        out = kernels.chi_profile(kmag / 2.0 ** (q + 1)) - kernels.chi_profile(kmag / 2.0**q)
    return float(out) if out.ndim == 0 else out


def phi_q_eval(q: int, k):
    """``phi_q`` at an integer wavevector ``k`` (sequence) or magnitude."""
    kmag = float(np.linalg.norm(np.asarray(k, dtype=np.float64)))
    return phi_eval(q, kmag)


@lru_cache(maxsize=256)
def _multiplier(grid: TorusGrid, q: int) -> np.ndarray:
    m = phi_eval(q, grid.kmag)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=256)
def _partial_multiplier(grid: TorusGrid, Q: int) -> np.ndarray:
    m = kernels.chi_profile(grid.kmag / 2.0 ** (Q + 1))
    m.setflags(write=False)
    return m


def band_multiplier(q_lo: int, q_hi: int, kmag):
    """Sum of the block multipliers ``phi_q`` for ``q = q_lo .. q_hi``."""
    kmag = np.asarray(kmag, dtype=np.float64)
    total = np.zeros_like(kmag)
    for q in range(q_lo, q_hi + 1):
        total = total + phi_eval(q, kmag)
    return total


def band_support(grid: TorusGrid, q_lo: int, q_hi: int) -> np.ndarray:
    """Modes where the multipliers of blocks ``q_lo..q_hi`` do not all vanish."""
    return band_multiplier(q_lo, q_hi, grid.kmag) > 0.0


def support_index(f: Field) -> int:
    """Smallest dyadic index whose partial sum reproduces ``f`` (at least ``grid.q_max``)."""
    grid = f.grid
    nonzero = np.any(f.coeffs != 0, axis=0)
    kmax = float(np.max(grid.kmag[nonzero])) if np.any(nonzero) else 0.0
    q = grid.q_max
    while kmax > 0.75 * 2.0 ** (q + 1):
        q += 1
    return q


def _check_q(grid: TorusGrid, q: int, q_top: int | None = None) -> None:
    top = grid.q_top if q_top is None else q_top
    if not -1 <= q <= top:
        raise ParameterError(f"block index {q} outside [-1, {top}]")


def dyadic_block(f: Field, q: int) -> Field:
    _check_q(f.grid, q)
    return f.with_coeffs(f.coeffs * _multiplier(f.grid, q))


@dataclass(frozen=True)
class DyadicBlocks:
    """Blocks ``Delta_q f`` for ``q = -1 .. q_max``; ``blocks[0]`` is ``q = -1``."""

    grid: TorusGrid
    q_max: int
    blocks: tuple

    def __getitem__(self, q: int) -> Field:
        if not -1 <= q <= self.q_max:
            raise ParameterError(f"block index {q} outside [-1, {self.q_max}]")
        return self.blocks[q + 1]

    def __iter__(self):
        return iter(self.blocks)

    def __len__(self):
        return len(self.blocks)

    @property
    def indices(self) -> range:
        return range(-1, self.q_max + 1)

    def reconstruct(self) -> Field:
        coeffs = np.zeros_like(self.blocks[0].coeffs)
        for b in self.blocks:
            coeffs = coeffs + b.coeffs
        return Field(self.grid, coeffs, self.blocks[0].divfree)


def decompose(f: Field, q_max: int | None = None) -> DyadicBlocks:
    """All dyadic blocks of ``f``.

    The top index defaults to ``grid.q_max`` (dealiased band) and is raised
    only when ``f`` carries modes beyond it, so reconstruction is exact.
    """
    top = support_index(f) if q_max is None else q_max
    blocks = tuple(dyadic_block(f, q) for q in range(-1, top + 1))
    return DyadicBlocks(f.grid, top, blocks)


def partial_sum(f: Field, Q: int) -> Field:
    """``f_{<=Q}``, a single multiplier ``chi(|k| / 2^(Q+1))``."""
    _check_q(f.grid, Q, max(f.grid.q_top, support_index(f)))
    return f.with_coeffs(f.coeffs * _partial_multiplier(f.grid, Q))


def band(f: Field, P: int, Q: int) -> Field:
    """``f_{(P,Q]} = f_{<=Q} - f_{<=P}``."""
    if not -1 <= P <= Q:
        raise ParameterError(f"band needs -1 <= P <= Q, got P={P}, Q={Q}")
    return f.with_coeffs(
        f.coeffs * (_partial_multiplier(f.grid, Q) - _partial_multiplier(f.grid, P))
    )


def tilde_block(f: Field, q: int) -> Field:
    """``sum_{|p - q| <= 1} Delta_p f``."""
    _check_q(f.grid, q)
    m = np.zeros(f.grid.shape)
    for p in range(max(q - 1, -1), q + 2):
        m = m + _multiplier(f.grid, p)
    return f.with_coeffs(f.coeffs * m)


def block_l2_norms(f: Field, q_max: int | None = None) -> np.ndarray:
    """``||Delta_q f||_2`` for ``q = -1 .. q_max`` (index 0 is ``q = -1``)."""
    blocks = decompose(f, q_max)
    return np.array([l2_norm(b) for b in blocks])


def block_lp_norms(f: Field, r: float, q_max: int | None = None) -> np.ndarray:
    blocks = decompose(f, q_max)
    return np.array([lp_norm(b, r) for b in blocks])


def dyadic_weights(q_max: int) -> np.ndarray:
    return np.array([lam(q) for q in range(-1, q_max + 1)])


def hs_norm(f: Field, s: float) -> float:
    """``(sum_q lambda_q^(2s) ||Delta_q f||_2^2)^(1/2)``."""
    norms = block_l2_norms(f)
    w = dyadic_weights(len(norms) - 2) ** (2.0 * s)
    return float(np.sqrt(np.sum(w * norms**2)))


def besov_sup_norm(f: Field, s: float, r: float) -> float:
    """``sup_p lambda_p^s ||Delta_p f||_{L^r}``."""
    norms = block_lp_norms(f, r)
    w = dyadic_weights(len(norms) - 2) ** s
    return float(np.max(w * norms))


def _product(kind: str):
    if kind == "componentwise":
        return lambda a, b: to_physical(a) * to_physical(b)
    if kind == "cross":
        return lambda a, b: kernels.cross3(
            np.ascontiguousarray(to_physical(a).reshape(3, -1)),
            np.ascontiguousarray(to_physical(b).reshape(3, -1)),
        ).reshape((3,) + a.grid.shape)
    raise ParameterError(f"unknown product {kind!r}; use 'componentwise' or 'cross'")


def dealiased_product(u: Field, v: Field, kind: str = "componentwise") -> Field:
    if kind == "componentwise":
        return componentwise_product(u, v)
    if kind == "cross":
        return cross_product(u, v)
    return _product(kind)(u, v)


def bony_split(u: Field, v: Field, kind: str = "componentwise"):
    """Split the dealiased product ``u v`` into (low-high, high-low, resonant).

    ``low_high = sum_q u_{<=q-2} v_q``, ``high_low = sum_q u_q v_{<=q-2}``,
    ``resonant = sum_q tilde(u)_q v_q``. Products are formed on the grid and
    dealiased, so the three parts sum to ``dealias(u v)`` up to rounding.
    """
    if u.grid != v.grid:
        raise ConfigError(f"grid mismatch: {u.grid} vs {v.grid}")
    grid = u.grid
    prod = _product(kind)
    top = max(support_index(u), support_index(v))
    ub = decompose(u, top)
    vb = decompose(v, top)
    zero = Field.zeros(grid, divfree=False)

    def low(blocks, q):
        # blocks_{<= q-2}
        acc = zero
        for p in range(-1, q - 1):
            acc = acc + blocks[p]
        return acc

    shape = (3,) + grid.shape
    lh = np.zeros(shape)
    hl = np.zeros(shape)
    res = np.zeros(shape)
    for q in ub.indices:
        lh += prod(low(ub, q), vb[q])
        hl += prod(ub[q], low(vb, q))
        ut = zero
        for p in range(max(q - 1, -1), min(q + 1, top) + 1):
            ut = ut + ub[p]
        res += prod(ut, vb[q])
    parts = tuple(dealias(from_physical(x, grid)) for x in (lh, hl, res))
    return parts


def _check_commutator_indices(grid: TorusGrid, q: int, p: int) -> None:
    if abs(p - q) > 2:
        raise ParameterError(f"commutator requires |p - q| <= 2, got q={q}, p={p}")
    _check_q(grid, q)
    _check_q(grid, p)


def transport_commutator(u: Field, v: Field, q: int, p: int) -> Field:
    """``Delta_q(u_{<=p-2} . grad v_p) - u_{<=p-2} . grad Delta_q v_p``, dealiased."""
    _check_commutator_indices(u.grid, q, p)
    low = partial_sum(u, p - 2) if p - 2 >= -1 else Field.zeros(u.grid)
    vp = dyadic_block(v, p)
    first = dyadic_block(advect(low, vp), q)
    second = advect(low, dyadic_block(vp, q))
    return first - second


def hall_commutator(b: Field, h: Field, q: int, p: int) -> Field:
    """``Delta_q(b_{<=p-2} x curl h_p) - b_{<=p-2} x curl Delta_q h_p``, dealiased."""
    _check_commutator_indices(b.grid, q, p)
    low = partial_sum(b, p - 2) if p - 2 >= -1 else Field.zeros(b.grid)
    if np.max(np.abs(np.sum(low.grid.kd3 * low.coeffs, axis=0))) > 1e-12 * max(
        low.max_coeff(), 1e-300
    ) * low.grid.N:
        raise ParameterError("hall commutator requires a divergence-free truncation b_{<=p-2}")
    hp = dyadic_block(h, p)
    first = dyadic_block(cross_product(low, curl(hp)), q)
    second = cross_product(low, curl(dyadic_block(hp, q)))
    return first - second


def commutator_ratio(u: Field, v: Field, q: int, p: int, r: float, kind: str = "transport"):
    """Commutator L2 norm over ``||v_p||_{2r/(r-2)} sum_{p'<=p-2} lambda_p' 2 pi ||u_p'||_r``.

    Returns ``None`` when the denominator vanishes.
    """
    if r <= 2:
        raise ParameterError(f"commutator ratio needs r > 2, got r={r}")
    comm = transport_commutator(u, v, q, p) if kind == "transport" else hall_commutator(u, v, q, p)
    r2 = 2.0 * r / (r - 2.0)
    vp = dyadic_block(v, p)
    total = 0.0
    for pp in range(-1, p - 1):
        total += lam(pp) * TWO_PI * lp_norm(dyadic_block(u, pp), r)
    denom = lp_norm(vp, r2) * total
    if denom == 0.0:
        return None
    return l2_norm(comm) / denom


def bernstein_check(f_block: Field, r: float, s: float, q: int) -> float:
    """``||u_q||_r / (lambda_q^{n(1/r - 1/s)} ||u_q||_s)`` for a block at index ``q``."""
    if not (s >= r >= 1.0):
        raise ParameterError(f"need s >= r >= 1, got r={r}, s={s}")
    inv_s = 0.0 if np.isinf(s) else 1.0 / s
    num = lp_norm(f_block, r)
    den_norm = lp_norm(f_block, s)
    if num == 0.0 or den_norm == 0.0:
        raise UndefinedRatioError("Bernstein ratio undefined for a zero block")
    n = f_block.grid.n
    return num / (lam(q) ** (n * (1.0 / r - inv_s)) * den_norm)


def gradient_bernstein_ratio(f_block: Field, r: float, q: int) -> float:
    """``||grad u_q||_inf / (lambda_q^{1 + n/r} ||u_q||_r)`` for a block at index ``q``."""
    from .spectral import grad_linf

    den = lp_norm(f_block, r)
    if den == 0.0:
        raise UndefinedRatioError("gradient Bernstein ratio undefined for a zero block")
    n = f_block.grid.n
    return grad_linf(f_block) / (lam(q) ** (1.0 + n / r) * den)
