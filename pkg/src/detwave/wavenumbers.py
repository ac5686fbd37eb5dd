"""Determining wavenumbers, dissipation numbers and their validators.

``lambda_b`` and ``lambda_u`` scan dyadic indices ``q = 0 .. q_max`` and
return the first one at which both the high-frequency block condition and the
low-mode gradient condition hold (strict inequalities). Blocks above
``q_max`` vanish, so the "for all p > q" clause is a finite check. When no
index qualifies the result is saturated (``lam = inf``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ParameterError
from .littlewood_paley import (
    block_l2_norms,
    besov_sup_norm,
    decompose,
    dyadic_weights,
    gradient_bernstein_ratio,
    lam,
    partial_sum,
)
from .spectral import Field, grad_linf, lp_norm


@dataclass(frozen=True)
class WavenumberParams:
    n: int = 2
    r: float = 3.0
    delta: float = 0.1
    sigma: float = 0.5
    c_r: float = 0.05
    L: float = 1.0
    mu: float = 0.05
    nu: float = 0.05
    delta_b: float = 2.5
    delta_u: float = 2.5
    q_max: int | None = None

    def __post_init__(self):
        if not self.n < self.r < 2 * self.n:
            raise ParameterError(
                f"r must lie in (n, 2n) = ({self.n}, {2 * self.n}), got r={self.r}"
            )
        if self.delta < 0:
            raise ParameterError(f"delta must be >= 0, got {self.delta}")
        if not -0.5 < self.sigma <= 1.0:
            raise ParameterError(f"sigma must lie in (-1/2, 1], got {self.sigma}")
        if self.c_r <= 0:
            raise ParameterError(f"c_r must be positive, got {self.c_r}")
        if self.L <= 0:
            raise ParameterError(f"L must be positive, got {self.L}")

    def check_average_ranges(self, kind: str = "magnetic") -> None:
        """Ranges required by the time-average bounds."""
        if kind == "magnetic":
            lo = max(2.0, 2.0 * self.delta + 1.0)
            if not lo < self.delta_b < 3.0:
                raise ParameterError(f"delta_b must lie in ({lo:g}, 3), got {self.delta_b}")
        else:
            lo = 2.0 * self.sigma + 1.0
            if not lo < self.delta_u < 3.0:
                raise ParameterError(f"delta_u must lie in ({lo:g}, 3), got {self.delta_u}")

    @property
    def magnetic_exponent(self) -> float:
        """Exponent ``-1 + delta_b + 2n/r`` (``6/r`` when n = 3)."""
        return -1.0 + self.delta_b + 2.0 * self.n / self.r

    @property
    def n2_extrapolation(self) -> bool:
        return self.n == 2


@dataclass(frozen=True)
class DeterminingWavenumber:
    """Result of a determining-wavenumber scan.

    ``witness`` explains why ``q - 1`` was rejected: ``(p, value)`` for a
    failing block ``p``, or ``("grad", value)`` for the gradient condition.
    """

    q: int | None
    lam: float
    finite: bool
    witness: tuple = ()

    @classmethod
    def saturated(cls, witness=()) -> "DeterminingWavenumber":
        return cls(None, math.inf, False, witness)

    def __lt__(self, other: "DeterminingWavenumber") -> bool:
        return self.lam < other.lam


def _scan(high_values, low_value, top: int, threshold: float) -> DeterminingWavenumber:
    """Shared scan; ``high_values(q)`` returns [(p, value)] for p in (q, top]."""
    prev_witness = ()
    for q in range(0, top + 1):
        failing = [(p, v) for p, v in high_values(q) if not v < threshold]
        if failing:
            p, v = max(failing, key=lambda pv: pv[1])
            prev_witness = (p, v)
            continue
        g = low_value(q)
        if not g < threshold:
            prev_witness = ("grad", g)
            continue
        return DeterminingWavenumber(q, lam(q), True, prev_witness if q > 0 else ())
    return DeterminingWavenumber.saturated(prev_witness)


def _top(f: Field, params: WavenumberParams) -> int:
    blocks_top = decompose(f).q_max
    return blocks_top if params.q_max is None else max(params.q_max, blocks_top)


def lambda_b(b: Field, params: WavenumberParams) -> DeterminingWavenumber:
    """Magnetic determining wavenumber.

    ``min lambda_q`` such that ``(L 2^(p-q))^delta 2^(p n/r) ||b_p||_r < c_r mu``
    for all ``p > q`` and ``2^-q ||grad b_{<=q}||_inf < c_r mu``.
    """
    if b.grid.n != params.n:
        raise ParameterError(f"params are for n={params.n}, field has n={b.grid.n}")
    top = _top(b, params)
    blocks = decompose(b, top)
    norms = {p: lp_norm(blocks[p], params.r) for p in range(0, top + 1)}
    n, r, L, d = params.n, params.r, params.L, params.delta

    def high(q):
        return [(p, (L * 2.0 ** (p - q)) ** d * 2.0 ** (p * n / r) * norms[p])
                for p in range(q + 1, top + 1)]

    def low(q):
        return 2.0**-q * grad_linf(partial_sum(b, q))

    return _scan(high, low, top, params.c_r * params.mu)


def lambda_u(u: Field, params: WavenumberParams) -> DeterminingWavenumber:
    """Velocity determining wavenumber.

    ``min lambda_q`` such that ``(L 2^(p-q))^sigma 2^-q ||u_p||_inf < c_r nu``
    for all ``p > q`` and ``2^(-2q) ||grad u_{<=q}||_inf < c_r nu``.
    """
    if u.grid.n != params.n:
        raise ParameterError(f"params are for n={params.n}, field has n={u.grid.n}")
    top = _top(u, params)
    blocks = decompose(u, top)
    norms = {p: lp_norm(blocks[p], math.inf) for p in range(0, top + 1)}
    L, s = params.L, params.sigma

    def high(q):
        return [(p, (L * 2.0 ** (p - q)) ** s * 2.0**-q * norms[p])
                for p in range(q + 1, top + 1)]

    def low(q):
        return 2.0 ** (-2 * q) * grad_linf(partial_sum(u, q))

    return _scan(high, low, top, params.c_r * params.nu)


def lambda_pair_max(w1: DeterminingWavenumber, w2: DeterminingWavenumber) -> DeterminingWavenumber:
    """Larger of two wavenumbers; saturation wins."""
    if not w1.finite:
        return w1
    if not w2.finite:
        return w2
    return w2 if w2.lam > w1.lam else w1


def time_average(times, values, t0: float, T: float) -> float:
    """``(1/T) int_{t0}^{t0+T} f`` by the trapezoidal rule on the samples.

    Window ends falling between samples are handled by linear interpolation.
    """
    if T <= 0:
        raise ParameterError(f"averaging window length must be positive, got T={T}")
    t = np.asarray(times, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if t.ndim != 1 or t.shape != v.shape or t.size < 2:
        raise ParameterError("need matching 1-D time and value series with >= 2 samples")
    t1 = t0 + T
    tol = 1e-12 * max(1.0, abs(t1))
    if t0 < t[0] - tol or t1 > t[-1] + tol:
        raise ParameterError(
            f"window [{t0:g}, {t1:g}] outside sampled range [{t[0]:g}, {t[-1]:g}]"
        )
    t0c, t1c = max(t0, t[0]), min(t1, t[-1])
    inside = (t > t0c) & (t < t1c)
    tt = np.concatenate([[t0c], t[inside], [t1c]])
    vv = np.concatenate([[np.interp(t0c, t, v)], v[inside], [np.interp(t1c, t, v)]])
    return float(np.trapezoid(vv, tt) / T)


def dyadic_enstrophy(block_norms) -> float:
    """``sum_q lambda_q^2 ||f_q||_2^2`` from block L2 norms (index 0 is q = -1)."""
    norms = np.asarray(block_norms, dtype=np.float64)
    w = dyadic_weights(len(norms) - 2)
    return float(np.sum(w**2 * norms**2))


@dataclass(frozen=True)
class DissipationEstimate:
    epsilon: float
    kappa: float
    window: tuple
    intermittency_ratio: float | None = None


def _window(times, window):
    if window is None:
        return float(times[0]), float(times[-1] - times[0])
    return float(window[0]), float(window[1])


def kappa_e(times, block_norms, params: WavenumberParams, window=None) -> DissipationEstimate:
    """Magnetic dissipation number ``(eps_b / mu^3)^(1/(delta_b - 1))``.

    ``eps_b = mu <sum_q lambda_q^2 ||b_q||_2^2>`` with ``lambda_0 = 1``;
    ``window`` is ``(t0, T)`` and defaults to the whole series.
    """
    if params.delta_b <= 1:
        raise ParameterError(f"kappa_e needs delta_b > 1, got {params.delta_b}")
    t0, T = _window(times, window)
    ens = [dyadic_enstrophy(bn) for bn in block_norms]
    eps = params.mu * time_average(times, ens, t0, T)
    kappa = (eps / params.mu**3) ** (1.0 / (params.delta_b - 1.0))
    return DissipationEstimate(eps, kappa, (t0, T))


def kappa_u(times, block_norms, params: WavenumberParams, window=None) -> DissipationEstimate:
    """Velocity dissipation number ``(eps_u / nu^3)^(1/(1 + delta_u))``."""
    if params.delta_u <= -1:
        raise ParameterError(f"kappa_u needs delta_u > -1, got {params.delta_u}")
    t0, T = _window(times, window)
    ens = [dyadic_enstrophy(bn) for bn in block_norms]
    eps = params.nu * time_average(times, ens, t0, T)
    kappa = (eps / params.nu**3) ** (1.0 / (1.0 + params.delta_u))
    return DissipationEstimate(eps, kappa, (t0, T))


def intermittency_lhs(f: Field, params: WavenumberParams, kind: str = "magnetic") -> float:
    """Pointwise-in-time left side of the scale-localized intermittency relation.

    magnetic: ``sum_q lambda_q^(-1 + delta_b + 2n/r) ||b_q||_r^2``;
    velocity: ``sum_q lambda_q^(-1 + delta_u) ||u_q||_inf^2``.
    """
    blocks = decompose(f)
    w = dyadic_weights(blocks.q_max)
    if kind == "magnetic":
        norms = np.array([lp_norm(b, params.r) for b in blocks])
        return float(np.sum(w**params.magnetic_exponent * norms**2))
    if kind == "velocity":
        norms = np.array([lp_norm(b, math.inf) for b in blocks])
        return float(np.sum(w ** (-1.0 + params.delta_u) * norms**2))
    raise ParameterError(f"kind must be 'magnetic' or 'velocity', got {kind!r}")


def intermittency_ratio(times, fields, params: WavenumberParams, kind: str = "magnetic",
                        window=None) -> float:
    """Time-averaged intermittency left side over ``lambda_0^delta <sum lambda_q^2 ||f_q||_2^2>``.

    Zero fields give 0 by convention. For n = 2 the magnetic exponent uses
    ``2n/r = 4/r``.
    """
    t0, T = _window(times, window)
    lhs = [intermittency_lhs(f, params, kind) for f in fields]
    rhs = [dyadic_enstrophy(block_l2_norms(f)) for f in fields]
    den = time_average(times, rhs, t0, T)
    if den == 0.0:
        return 0.0
    return time_average(times, lhs, t0, T) / den


@dataclass(frozen=True)
class LemmaCheck:
    lhs: float
    rhs: float
    ratio: float
    saturated: bool
    lam: float


def lemma_pointwise_check(f: Field, params: WavenumberParams, kind: str = "magnetic") -> LemmaCheck:
    """Both sides of the pointwise wavenumber/intermittency inequality at one time.

    magnetic: ``(c_r mu)^2 (Lambda_b - 1)_+^(delta_b - 1)`` vs the magnetic sum;
    velocity: ``(c_r nu)^2 (Lambda_u - 1)_+^(1 + delta_u)`` vs the velocity sum.
    A saturated wavenumber gives ``lhs = inf`` (``inf <= inf`` convention).
    """
    if kind == "magnetic":
        w = lambda_b(f, params)
        pref, expo = (params.c_r * params.mu) ** 2, params.delta_b - 1.0
    elif kind == "velocity":
        w = lambda_u(f, params)
        pref, expo = (params.c_r * params.nu) ** 2, 1.0 + params.delta_u
    else:
        raise ParameterError(f"kind must be 'magnetic' or 'velocity', got {kind!r}")
    rhs = intermittency_lhs(f, params, kind)
    if not w.finite:
        return LemmaCheck(math.inf, rhs, math.inf, True, w.lam)
    lhs = pref * max(w.lam - 1.0, 0.0) ** expo
    if lhs == 0.0:
        ratio = 0.0
    elif rhs == 0.0:
        ratio = math.inf
    else:
        ratio = lhs / rhs
    return LemmaCheck(lhs, rhs, ratio, False, w.lam)


@dataclass
class AverageReport:
    kind: str
    mean_lambda: float
    kappa: float
    epsilon: float
    quotient: float
    intermittency_ratio: float
    lemma_max_ratio: float
    saturated_count: int
    samples: int
    window: tuple
    label: str = ""
    lambdas: list = field(default_factory=list)

    def as_row(self) -> dict:
        return {
            "kind": self.kind,
            "mean_lambda": self.mean_lambda,
            "kappa": self.kappa,
            "epsilon": self.epsilon,
            "quotient": self.quotient,
            "intermittency_ratio": self.intermittency_ratio,
            "lemma_max_ratio": self.lemma_max_ratio,
            "saturated_count": self.saturated_count,
            "samples": self.samples,
            "t0": self.window[0],
            "T": self.window[1],
            "label": self.label,
        }


def average_bound_check(times, fields, params: WavenumberParams, kind: str = "magnetic",
                        window=None, check_ranges: bool = True) -> AverageReport:
    """Compare ``<Lambda>`` with ``lambda_0 + kappa`` over a run.

    Saturated samples are excluded from ``<Lambda>`` and counted. The lemma
    ratio maximum is over unsaturated samples.
    """
    if check_ranges:
        params.check_average_ranges(kind)
    times = np.asarray(times, dtype=np.float64)
    t0, T = _window(times, window)
    in_win = (times >= t0 - 1e-12) & (times <= t0 + T + 1e-12)
    checks = [lemma_pointwise_check(f, params, kind) for f in fields]
    lams = np.array([c.lam for c in checks])
    sat = np.array([c.saturated for c in checks])
    keep = in_win & ~sat
    if np.count_nonzero(keep) >= 2:
        tk = times[keep]
        mean_lambda = time_average(tk, lams[keep], tk[0], tk[-1] - tk[0])
    elif np.count_nonzero(keep) == 1:
        mean_lambda = float(lams[keep][0])
    else:
        mean_lambda = math.inf
    blocks = [block_l2_norms(f) for f in fields]
    est = (kappa_e if kind == "magnetic" else kappa_u)(times, blocks, params, (t0, T))
    ratio = intermittency_ratio(times, fields, params, kind, (t0, T))
    lemma_max = max((c.ratio for c, k in zip(checks, keep) if k), default=0.0)
    return AverageReport(
        kind=kind,
        mean_lambda=mean_lambda,
        kappa=est.kappa,
        epsilon=est.epsilon,
        quotient=mean_lambda / (1.0 + est.kappa),
        intermittency_ratio=ratio,
        lemma_max_ratio=lemma_max,
        saturated_count=int(np.count_nonzero(in_win & sat)),
        samples=int(np.count_nonzero(in_win)),
        window=(t0, T),
        label="n=2 extrapolation" if params.n == 2 else "",
        lambdas=[float(x) for x in lams],
    )


def measure_gradient_bernstein(fields, r: float) -> float:
    """Largest ``||grad u_q||_inf / (lambda_q^(1+n/r) ||u_q||_r)`` over all nonzero blocks q >= 0."""
    best = 0.0
    for f in fields:
        blocks = decompose(f)
        for q in range(0, blocks.q_max + 1):
            blk = blocks[q]
            if not np.any(blk.coeffs):
                continue
            best = max(best, gradient_bernstein_ratio(blk, r, q))
    return best


def besov_constant(params: WavenumberParams, grad_bernstein: float) -> float:
    """Constant ``C`` with ``Lambda_b <= max(lambda_0, C M / mu)``.

    High-frequency step: every ``lambda_q > L^delta M / (c_r mu)`` passes.
    Low-mode step: ``||grad b_{<=q}||_inf <= C_grad M sum_{p>=0} 2^(p(1-delta))``,
    so every ``lambda_q > C_grad S M / (c_r mu)`` passes. The smallest dyadic
    value above a threshold ``X`` is at most ``2X``.
    """
    if params.delta <= 1:
        raise ParameterError(f"the Besov bound needs delta > 1, got {params.delta}")
    geometric = 1.0 / (1.0 - 2.0 ** (1.0 - params.delta))
    c_high = params.L**params.delta / params.c_r
    c_low = grad_bernstein * geometric / params.c_r
    return 2.0 * max(c_high, c_low)


@dataclass(frozen=True)
class BesovCheck:
    lam: float
    bound: float
    besov_norm: float
    constant: float
    ok: bool
    saturated: bool = False


def besov_bound_check(b: Field, params: WavenumberParams, grad_bernstein: float) -> BesovCheck:
    """Check ``Lambda_b <= max(lambda_0, (C/mu) ||b||_{B^{delta+n/r}_{r,inf}})``.

    A saturated scan only shows ``Lambda_b >= lambda_{top+1}``; it is counted
    as consistent when the bound is at least that value.
    """
    C = besov_constant(params, grad_bernstein)
    M = besov_sup_norm(b, params.delta + params.n / params.r, params.r)
    w = lambda_b(b, params)
    bound = C * M / params.mu
    if w.finite:
        return BesovCheck(w.lam, bound, M, C, w.lam <= max(1.0, bound))
    floor = lam(_top(b, params) + 1)
    return BesovCheck(w.lam, bound, M, C, floor <= bound, saturated=True)


def report_row(t: float, w: DeterminingWavenumber) -> dict:
    """CSV row ``t, q, lambda, finite, witness_p, witness_value``."""
    wp, wv = (w.witness + (None, None))[:2] if w.witness else ("", "")
    return {
        "t": t,
        "q": "" if w.q is None else w.q,
        "lambda": w.lam,
        "finite": int(w.finite),
        "witness_p": "" if wp is None else wp,
        "witness_value": "" if wv is None else wv,
    }


def validate_wavenumber_config(params: WavenumberParams, n: int) -> None:
    if params.n != n:
        raise ConfigError(f"wavenumber params are for n={params.n}, grid has n={n}")
