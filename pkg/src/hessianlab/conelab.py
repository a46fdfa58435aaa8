"""Sampling in Gamma_k under a semi-convexity floor and concavity-inequality margins.

The three inequality families evaluated here share one quadratic structure in
the test vector ``xi``. For a fixed spectrum ``lam`` every margin is a real
quadratic form ``xi^H M(lam) xi`` with ``M`` real symmetric, so complex ``xi``
splits into two real problems and the worst unit ``xi`` is an eigenvector of
``M``. ``key_form_matrix`` exposes ``M`` for the key inequality; the threshold
search and the annealer use it to avoid relying on random directions alone.

Seeds: every random routine takes an explicit integer seed and owns a
``numpy.random.Generator``. Batched drivers derive batch seeds as
``seed + batch_index`` and merge results in batch order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .symmcalc import (Spectrum, binom, esf, gamma_membership, in_gamma, sigma,
                       sigma_grad, sigma_pair_matrix)

MARGIN_TOL = 1e-10


class InfeasibleConstraints(ValueError):
    pass


@dataclass(frozen=True)
class ConeConstraints:
    n: int
    k: int
    A: float = 1.0
    sigma_band: tuple[float, float] = (0.5, 2.0)

    def __post_init__(self):
        lo, hi = (float(x) for x in self.sigma_band)
        object.__setattr__(self, "sigma_band", (lo, hi))
        if not (1 <= self.k <= self.n):
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not self.A > 0:
            raise ValueError("semi-convexity floor A must be positive")
        if not (0 < lo <= hi):
            raise ValueError(f"sigma band must satisfy 0 < lo <= hi, got {self.sigma_band}")

    def admissible(self, lam, rtol: float = 1e-10) -> np.ndarray:
        """Vectorized check of Gamma_k, lam_min > -A and the sigma_k band."""
        lam = np.asarray(lam, dtype=float)
        lo, hi = self.sigma_band
        s = sigma(lam, self.k)
        ok = in_gamma(lam, self.k) & (lam.min(axis=-1) > -self.A)
        ok &= (s >= lo * (1 - rtol)) & (s <= hi * (1 + rtol))
        return ok & np.all(np.isfinite(lam), axis=-1)


def default_K(k: int) -> float:
    """(k+1)^2, the value from which the weaker estimate is available."""
    return float((k + 1) ** 2)


def c0(k: int) -> float:
    return 1.0 / (2 * (k + 2) ** 2 - 1)


def iqc0_coefficient(k: int) -> float:
    return (k + 2) ** 2 / ((k + 1) * (k + 3))


def case_split(lam, k: int) -> bool:
    """True when sigma_k(lam|1) < -c0 sigma_k, the harder branch of the key estimate."""
    lam = np.asarray(getattr(lam, "values", lam), dtype=float)
    return bool(sigma(lam[1:], k) < -c0(k) * sigma(lam, k))


@dataclass(frozen=True)
class InequalityCase:
    spectrum: Spectrum
    xi: np.ndarray
    k: int
    K: float
    eps0: float
    A: float = 1.0

    def __post_init__(self):
        if not isinstance(self.spectrum, Spectrum):
            object.__setattr__(self, "spectrum", Spectrum(self.spectrum))
        xi = np.array(self.xi, dtype=complex).reshape(-1)
        if xi.size != self.spectrum.n:
            raise ValueError("xi must have one entry per eigenvalue")
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)
        if not 0 < self.eps0 < 1:
            raise ValueError("eps0 must lie in (0, 1)")
        if not gamma_membership(self.spectrum, self.k).inside:
            raise ValueError("spectrum is not in Gamma_k")
        if not self.spectrum.values[-1] > -self.A:
            raise ValueError("spectrum violates the semi-convexity floor lam_n > -A")


@dataclass(frozen=True)
class MarginReport:
    t1: float
    t2: float
    t3: float
    rhs: float
    margin: float
    imag_residue: float


@dataclass(frozen=True)
class SearchOutcome:
    worst_case: InequalityCase
    worst_margin: float
    evaluations: int
    seed: int
    negatives: int = 0


@dataclass
class ThresholdResult:
    lambda1_star: float
    levels_tested: list = field(default_factory=list)


@dataclass(frozen=True)
class AlgebraicFact:
    value: float
    lower_bound: float


# ---------------------------------------------------------------------------
# margins
# ---------------------------------------------------------------------------

def key_terms(lam, xi, k: int, K: float, eps0: float):
    """Batched terms of the key inequality.

    Returns ``(t1, t2, t3, rhs, imag_residue)`` with shapes ``lam.shape[:-1]``.
    Index 0 of ``lam`` is the largest eigenvalue.
    """
    lam = np.asarray(lam, dtype=float)
    xi = np.asarray(xi, dtype=complex)
    sk = sigma(lam, k)
    f = sigma_grad(lam, k)
    C = sigma_pair_matrix(lam, k)
    z = np.einsum("...pq,...p,...q->...", C, xi, np.conj(xi))
    t1 = -z.real / sk
    t2 = K * np.abs(np.sum(f * xi, axis=-1)) ** 2 / sk ** 2
    a2 = np.abs(xi) ** 2
    l1 = lam[..., 0]
    t3 = (1 - eps0) * np.sum(f[..., 1:] * a2[..., 1:], axis=-1) / (l1 * sk)
    rhs = (1 - eps0) * f[..., 0] * a2[..., 0] / (l1 * sk)
    return t1, t2, t3, rhs, np.abs(z.imag) / np.abs(sk)


def key_margin(case: InequalityCase) -> MarginReport:
    lam = case.spectrum.values
    if sigma(lam, case.k) <= 0:
        raise ValueError("sigma_k must be positive")
    t1, t2, t3, rhs, im = (float(v) for v in key_terms(lam, case.xi, case.k, case.K, case.eps0))
    return MarginReport(t1, t2, t3, rhs, t1 + t2 + t3 - rhs, im)


def key_margin_batch(lam, xi, k, K, eps0):
    t1, t2, t3, rhs, _ = key_terms(lam, xi, k, K, eps0)
    return t1 + t2 + t3 - rhs, np.abs(t1) + np.abs(t2) + np.abs(t3) + np.abs(rhs)


def key_form_matrix(lam, k: int, K: float, eps0: float) -> np.ndarray:
    """Real symmetric M(lam) with margin(lam, xi) = xi^H M xi."""
    lam = np.asarray(lam, dtype=float)
    sk = sigma(lam, k)[..., None, None]
    f = sigma_grad(lam, k)
    M = K * f[..., :, None] * f[..., None, :] / sk ** 2 - sigma_pair_matrix(lam, k) / sk
    w = (1 - eps0) * f / (lam[..., :1] * sk[..., 0])
    w[..., 0] *= -1
    idx = np.arange(lam.shape[-1])
    M[..., idx, idx] += w
    return M


def worst_xi(lam, k: int, K: float, eps0: float) -> np.ndarray:
    """Unit real vector minimizing the key margin for each spectrum."""
    _, vecs = np.linalg.eigh(key_form_matrix(lam, k, K, eps0))
    return vecs[..., :, 0]


def _real_xi(xi):
    xi = np.asarray(xi)
    if np.iscomplexobj(xi):
        if np.any(xi.imag != 0):
            raise ValueError("this inequality is stated for real xi")
        xi = xi.real
    return xi.astype(float)


def lu_margin(spectrum, xi, k: int, delta0: float, eps: float, l: int) -> float:
    """LHS - RHS of Lu's concavity inequality for real xi.

    ``l`` counts the leading indices excluded from the delta0 term
    (the sum runs over i > l, one-based).
    """
    lam = np.asarray(getattr(spectrum, "values", spectrum), dtype=float)
    xi = _real_xi(xi)
    sk = sigma(lam, k)
    if np.any(sk <= 0):
        raise ValueError("sigma_k must be positive")
    f = sigma_grad(lam, k)
    C = sigma_pair_matrix(lam, k)
    l1 = lam[..., 0]
    lhs = (-np.einsum("...pq,...p,...q->...", C, xi, xi)
           + np.sum(f * xi, axis=-1) ** 2 / sk
           + delta0 * np.sum(f[..., l:] * xi[..., l:] ** 2, axis=-1) / l1)
    rhs = (1 - eps) * sk * xi[..., 0] ** 2 / l1 ** 2
    out = lhs - rhs
    return float(out) if np.ndim(out) == 0 else out


def zhang_margin(spectrum, xi, k: int, K: float, A: float, delta0: float) -> float:
    """LHS - RHS of Zhang's improved concavity inequality for real xi."""
    lam = np.asarray(getattr(spectrum, "values", spectrum), dtype=float)
    xi = _real_xi(xi)
    sk = sigma(lam, k)
    if np.any(sk <= 0):
        raise ValueError("sigma_k must be positive")
    f = sigma_grad(lam, k)
    C = sigma_pair_matrix(lam, k)
    l1 = lam[..., 0]
    lhs = (-np.einsum("...pq,...p,...q->...", C, xi, xi)
           + K * np.sum(f * xi, axis=-1) ** 2 / sk
           + 2 * np.sum(f[..., 1:] * xi[..., 1:] ** 2, axis=-1) / (l1 + A + 1))
    rhs = (1 + delta0) * f[..., 0] * xi[..., 0] ** 2 / l1
    out = lhs - rhs
    return float(out) if np.ndim(out) == 0 else out


def iqc0_parts(case: InequalityCase):
    """(base, slope) with iqc0_margin(case, C) = base + C * slope, slope >= 0."""
    k = case.k
    if k < 2:
        raise ValueError("the intermediate estimate needs k >= 2")
    lam = case.spectrum.values
    t1, t2, _, _, _ = key_terms(lam, case.xi, k, case.K, case.eps0)
    sk = sigma(lam, k)
    f = sigma_grad(lam, k)
    l1 = lam[0]
    a2 = np.abs(case.xi) ** 2
    first = iqc0_coefficient(k) * a2[0] / l1 ** 2
    slope = l1 ** (-1.0 / (k - 1)) * np.sum(f[1:] * a2[1:]) / (l1 * sk)
    return float(t1 + t2 - first), float(slope)


def iqc0_margin(case: InequalityCase, C: float) -> float:
    if C < 0:
        raise ValueError("C must be non-negative")
    base, slope = iqc0_parts(case)
    return base + C * slope


def iqc0_required_constant(cases) -> float:
    """Smallest C >= 0 making every iqc0 margin non-negative (inf if none does)."""
    need = 0.0
    for case in cases:
        base, slope = iqc0_parts(case)
        if base >= 0:
            continue
        if slope <= 0:
            return math.inf
        need = max(need, -base / slope)
    return need


def algebraic_fact(eps0: float, a):
    c = 1.0 - eps0
    a = np.asarray(a, dtype=float)
    value = a * a + c * (1 + a) ** 2
    lb = c / (2 - eps0)
    if value.ndim == 0:
        return AlgebraicFact(float(value), lb)
    return AlgebraicFact(value, lb)


def algebraic_minimizer(eps0: float) -> float:
    return -(1 - eps0) / (2 - eps0)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _unit_rows(rng, shape):
    d = rng.normal(size=shape)
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def random_unit_complex(rng, count: int, n: int) -> np.ndarray:
    z = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


class _BandSampler:
    """Multi-chain hit-and-run in Gamma_k with lam_min > -A and sigma_k in a band.

    Chains move along random directions with a uniform step; proposals whose
    sigma_k leaves the band are mapped back along one random free coordinate
    (sigma_k is affine in each coordinate) to a target drawn uniformly from the
    band. Anything still outside the constraint set is rejected. With
    ``lambda1`` set, the first entry is pinned and the others stay below it.
    """

    def __init__(self, cons: ConeConstraints, lambda1: float | None = None, step: float = 0.5):
        self.c = cons
        self.L = None if lambda1 is None else float(lambda1)
        self.step = step

    def full(self, x):
        if self.L is None:
            return x
        return np.concatenate([np.full(x.shape[:-1] + (1,), self.L), x], axis=-1)

    def start(self) -> np.ndarray:
        c = self.c
        lo, hi = c.sigma_band
        n, k = c.n, c.k
        t0 = math.sqrt(lo * hi)
        if self.L is None:
            return np.full(n, (t0 / binom(n, k)) ** (1.0 / k))
        L = self.L
        m = n - 1

        def f(v):
            return L * binom(m, k - 1) * v ** (k - 1) + binom(m, k) * v ** k

        if k == 1:
            for target in (t0, lo, hi):
                v = (target - L) / m
                if -c.A < v <= L:
                    return np.full(m, v)
            raise InfeasibleConstraints(
                f"no start point with lambda1={L}: sigma_1 band {c.sigma_band} unreachable with floor {c.A}")
        for target in (t0, lo):
            if f(L) >= target:
                v = brentq(lambda v: f(v) - target, 0.0, L, xtol=1e-15, rtol=1e-15)
                if v > 0:
                    return np.full(m, v)
        raise InfeasibleConstraints(
            f"lambda1={L} is too small for sigma_{k} band {c.sigma_band} with n={n}")

    def feasible(self, x):
        ok = self.c.admissible(self.full(x))
        if self.L is not None:
            ok &= np.all(x <= self.L, axis=-1)
        return ok

    def project(self, rng, y):
        c = self.c
        lo, hi = c.sigma_band
        full = self.full(y)
        s = sigma(full, c.k)
        out = (s < lo) | (s > hi)
        if not out.any():
            return y
        y = y.copy()
        rows = np.flatnonzero(out)
        m = y.shape[-1]
        off = 0 if self.L is None else 1
        j = rng.integers(0, m, size=rows.size)
        target = rng.uniform(lo, hi, size=rows.size)
        fr = full[rows]
        jf = j + off
        a = np.take_along_axis(sigma_grad(fr, c.k), jf[:, None], axis=1)[:, 0]
        lam_j = fr[np.arange(rows.size), jf]
        b = s[rows] - lam_j * a
        with np.errstate(divide="ignore", invalid="ignore"):
            newv = np.where(np.abs(a) > 1e-300, (target - b) / a, np.nan)
        y[rows, j] = newv
        return y

    def run(self, rng, count: int, chains: int, burn_in: int, thin: int) -> np.ndarray:
        x0 = self.start()
        if not self.feasible(x0[None])[0]:
            raise InfeasibleConstraints("start point violates the constraints")
        if count <= 0:
            return np.empty((0, self.c.n))
        chains = max(1, min(chains, count))
        x = np.tile(x0, (chains, 1))
        scale = np.full(chains, self.step)
        rounds = -(-count // chains)
        out = []
        total = burn_in + rounds * thin
        for it in range(1, total + 1):
            d = _unit_rows(rng, x.shape)
            r = scale * (self.c.A + np.abs(x).max(axis=1))
            t = rng.uniform(-1, 1, size=chains) * r
            y = self.project(rng, x + t[:, None] * d)
            ok = self.feasible(y)
            x = np.where(ok[:, None], y, x)
            scale = np.clip(np.where(ok, scale * 1.1, scale * 0.7), 1e-6, 2.0)
            if it > burn_in and (it - burn_in) % thin == 0:
                out.append(self.full(x).copy())
        lam = np.concatenate(out, axis=0)[:count]
        return -np.sort(-lam, axis=1)


def sample_gamma_k_array(constraints: ConeConstraints, count: int, seed: int, *,
                         lambda1: float | None = None, chains: int = 256,
                         burn_in: int = 100, thin: int = 4) -> np.ndarray:
    """Array form of :func:`sample_gamma_k`, shape ``(count, n)``, rows sorted."""
    rng = np.random.default_rng(seed)
    return _BandSampler(constraints, lambda1).run(rng, count, chains, burn_in, thin)


def sample_gamma_k(constraints: ConeConstraints, count: int, seed: int, **kw) -> list[Spectrum]:
    lam = sample_gamma_k_array(constraints, count, seed, **kw)
    return [Spectrum(row) for row in lam]


def sample_above(constraints: ConeConstraints, floor: float, count: int, seed: int, *,
                 spread: float = 4.0, levels: int = 10) -> np.ndarray:
    """Band samples with lam_1 >= floor.

    lam_1 is pinned in turn at ``levels`` geometrically spaced values between
    ``floor`` and ``spread * floor``; level i uses seed ``seed + i``.
    """
    if count <= 0:
        return np.empty((0, constraints.n))
    per = -(-count // levels)
    out = []
    for i in range(levels):
        level = floor * spread ** (i / max(levels - 1, 1))
        out.append(sample_gamma_k_array(constraints, per, seed + i, lambda1=level))
    return np.concatenate(out)[:count]


# ---------------------------------------------------------------------------
# threshold location and adversarial search
# ---------------------------------------------------------------------------

def level_violations(constraints, eps0, K, level, count, seed, *, xi_mode="both",
                     anneal_restarts=0, anneal_steps=100):
    """Count negative key margins among spectra with lam_1 pinned at ``level``.

    ``count`` sampled spectra are scored with ``xi_mode``: "random" (uniform
    complex unit xi), "worst" (the minimizing eigenvector of the quadratic
    form) or "both" (a violation if either is negative). With
    ``anneal_restarts > 0`` a pinned annealing search adds its violations.
    Returns ``(violations, worst_margin)``.
    """
    k = constraints.k
    rng = np.random.default_rng(seed)
    lam = _BandSampler(constraints, level).run(rng, count, min(count, 256), 60, 3)
    margins = []
    if xi_mode in ("random", "both"):
        xi = random_unit_complex(rng, len(lam), constraints.n)
        margins.append(key_margin_batch(lam, xi, k, K, eps0)[0])
    if xi_mode in ("worst", "both"):
        margins.append(key_margin_batch(lam, worst_xi(lam, k, K, eps0), k, K, eps0)[0])
    if not margins:
        raise ValueError(f"unknown xi_mode {xi_mode!r}")
    m = np.min(margins, axis=0)
    violations = int(np.sum(m < -MARGIN_TOL))
    worst = float(m.min()) if m.size else math.inf
    if anneal_restarts > 0:
        out = counterexample_search(constraints, eps0, K, level, anneal_restarts, seed,
                                    steps=anneal_steps, init_samples=16, pin_lambda1=True)
        violations += out.negatives
        worst = min(worst, out.worst_margin)
    return violations, worst


def threshold_search(constraints: ConeConstraints, eps0: float, K: float | None = None,
                     samples_per_level: int = 2000, seed: int = 0, *, xi_mode: str = "both",
                     anneal_restarts: int = 200, ratio: float = math.sqrt(2), patience: int = 4,
                     max_levels: int = 80, bisect_steps: int = 6,
                     confirm_batches: int = 2) -> ThresholdResult:
    """Empirical lam_1 level above which no negative key margin was observed.

    Violations need not be monotone in lam_1, so the search scans a geometric
    ladder (factor ``ratio``) upward from the smallest comfortably feasible
    level until ``patience`` consecutive levels are clean, bisects
    geometrically between the last failing level and the clean level above it,
    then re-tests the result on ``confirm_batches`` fresh batches, raising it
    by 25% while any batch fails. The i-th tested level uses seed ``seed + i``.
    """
    K = default_K(constraints.k) if K is None else K
    lo_b, hi_b = constraints.sigma_band
    n, k = constraints.n, constraints.k
    L0 = 1.05 * (math.sqrt(lo_b * hi_b) / binom(n, k)) ** (1.0 / k)
    levels = []

    def clean(level):
        idx = len(levels)
        v, worst = level_violations(constraints, eps0, K, level, samples_per_level, seed + idx,
                                    xi_mode=xi_mode, anneal_restarts=anneal_restarts)
        levels.append({"level": level, "samples": samples_per_level, "violations": v,
                       "worst_margin": worst, "seed": seed + idx})
        return v == 0

    last_fail = None
    streak = 0
    L = L0
    for _ in range(max_levels):
        if clean(L):
            streak += 1
            if streak >= patience:
                break
        else:
            last_fail = L
            streak = 0
        L *= ratio
    else:
        raise RuntimeError("no violation-free stretch found; raise max_levels")
    if last_fail is None:
        passing = L0
    else:
        lo, hi = last_fail, last_fail * ratio
        for _ in range(bisect_steps):
            mid = math.sqrt(lo * hi)
            if clean(mid):
                hi = mid
            else:
                lo = mid
        passing = hi
    while not all(clean(passing) for _ in range(confirm_batches)):
        passing *= 1.25
    return ThresholdResult(passing, levels)


def counterexample_search(constraints: ConeConstraints, eps0: float, K: float | None,
                          lambda1_floor: float, restarts: int, seed: int, *,
                          steps: int = 150, init_samples: int = 64, T0: float = 0.05,
                          cooling: float = 0.95, pin_lambda1: bool = False) -> SearchOutcome:
    """Simulated annealing on the key margin over (lam, xi).

    The pool of ``init_samples`` starting spectra has lam_1 pinned at the floor;
    ``restarts`` independent annealing chains then run side by side. Each
    proposal perturbs lam_1 by 0.1 lam_1, the remaining entries by
    0.1 (A + max|lam_i|), and xi by 0.1, projects sigma_k back into the band,
    and is scored with the better of the perturbed xi and the exact minimizing
    xi for the proposed spectrum. Metropolis acceptance uses the margin
    normalized by the sum of term magnitudes, so the temperature is scale free.
    With ``pin_lambda1`` the leading entry stays at the floor exactly.
    """
    if not lambda1_floor > 0:
        raise ValueError("lambda1_floor must be positive")
    cons = constraints
    n, k = cons.n, cons.k
    K = default_K(k) if K is None else K
    rng = np.random.default_rng(seed)
    sampler = _BandSampler(cons, lambda1_floor)
    pool = sampler.run(rng, init_samples + restarts, min(init_samples + restarts, 256), 60, 3)
    xi = random_unit_complex(rng, len(pool), n)

    evaluations = 0
    negatives = 0
    best = [math.inf, None, None]

    def score(lam, xi_):
        nonlocal evaluations, negatives
        m, mag = key_margin_batch(lam, xi_, k, K, eps0)
        evaluations += len(lam)
        negatives += int(np.sum(m < -MARGIN_TOL))
        if m.size:
            i = int(np.argmin(m))
            if m[i] < best[0]:
                best[:] = [float(m[i]), lam[i].copy(), np.asarray(xi_[i], dtype=complex).copy()]
        return m, mag

    score(pool[:init_samples], xi[:init_samples])
    if restarts > 0:
        lam = pool[init_samples:].copy()
        cur_xi = xi[init_samples:].copy()
        m, mag = score(lam, cur_xi)
        g = m / np.maximum(mag, 1e-300)
        T = T0
        tau = np.ones(restarts)
        lo, hi = cons.sigma_band
        for _ in range(steps):
            z = rng.normal(size=lam.shape)
            prop = lam.copy()
            if not pin_lambda1:
                prop[:, 0] = np.maximum(lambda1_floor, lam[:, 0] * (1 + 0.1 * tau * z[:, 0]))
            rest_scale = cons.A + np.abs(lam[:, 1:]).max(axis=1)
            prop[:, 1:] += (0.1 * tau * rest_scale)[:, None] * z[:, 1:]
            # band projection along one of the non-leading coordinates
            s = sigma(prop, k)
            out = np.flatnonzero((s < lo) | (s > hi))
            if out.size:
                j = rng.integers(1, n, size=out.size)
                target = rng.uniform(lo, hi, size=out.size)
                a = np.take_along_axis(sigma_grad(prop[out], k), j[:, None], axis=1)[:, 0]
                b = s[out] - prop[out, j] * a
                with np.errstate(divide="ignore", invalid="ignore"):
                    prop[out, j] = np.where(np.abs(a) > 1e-300, (target - b) / a, np.nan)
            if pin_lambda1:
                pinned_ok = np.all(prop[:, 1:] <= lambda1_floor, axis=1)
            prop = -np.sort(-prop, axis=1)
            ok = cons.admissible(prop) & (prop[:, 0] >= lambda1_floor)
            if pin_lambda1:
                ok &= pinned_ok
            pxi = cur_xi + 0.1 * (rng.normal(size=cur_xi.shape) + 1j * rng.normal(size=cur_xi.shape)) / math.sqrt(2 * n)
            pxi /= np.linalg.norm(pxi, axis=1, keepdims=True)
            idx = np.flatnonzero(ok)
            accept = np.zeros(restarts, bool)
            if idx.size:
                pl = prop[idx]
                m_r, mag_r = score(pl, pxi[idx])
                wx = worst_xi(pl, k, K, eps0).astype(complex)
                m_w, mag_w = score(pl, wx)
                use_w = m_w < m_r
                m_new = np.where(use_w, m_w, m_r)
                g_new = m_new / np.maximum(np.where(use_w, mag_w, mag_r), 1e-300)
                pxi[idx] = np.where(use_w[:, None], wx, pxi[idx])
                dg = g_new - g[idx]
                u = rng.uniform(size=idx.size)
                with np.errstate(over="ignore"):
                    acc = (dg <= 0) | (u < np.exp(-dg / T))
                accept[idx] = acc
                g[idx] = np.where(acc, g_new, g[idx])
            lam = np.where(accept[:, None], prop, lam)
            cur_xi = np.where(accept[:, None], pxi, cur_xi)
            tau = np.clip(np.where(accept, tau * 1.1, tau * 0.8), 1e-4, 1.0)
            T *= cooling

    worst_lam, worst_xi_ = best[1], best[2]
    case = InequalityCase(Spectrum(worst_lam), worst_xi_, k, K, eps0, cons.A)
    return SearchOutcome(case, best[0], evaluations, seed, negatives)


# ---------------------------------------------------------------------------
# semi-convexity probe
# ---------------------------------------------------------------------------

@dataclass
class ProbeResult:
    min_lambda_n: float | None
    count: int
    samples: np.ndarray


def semiconvex_probe(n: int, k: int, A: float, sigma_k_cap: float, count: int, seed: int, *,
                     box: float | None = None, chains: int = 128, burn_in: int = 100,
                     thin: int = 3) -> ProbeResult:
    """Sample Gamma_k with sigma_{k+1} > -A and sigma_k <= cap; report min lam_n.

    Plain hit-and-run with rejection inside the box |lam_i| <= box (default
    10 * max(1, A, cap^(1/k))). The observed minimum is empirical evidence of
    a semi-convexity floor, nothing more.
    """
    if not k + 1 <= n:
        raise ValueError("need k + 1 <= n")
    if not (A > 0 and sigma_k_cap > 0):
        raise InfeasibleConstraints("A and sigma_k_cap must be positive")
    if count <= 0:
        return ProbeResult(None, 0, np.empty((0, n)))
    box = 10 * max(1.0, A, sigma_k_cap ** (1.0 / k)) if box is None else box
    rng = np.random.default_rng(seed)

    def feasible(x):
        e = esf(x, k + 1)
        return (np.all(e[..., 1:k + 1] > 0, axis=-1) & (e[..., k + 1] > -A)
                & (e[..., k] <= sigma_k_cap) & np.all(np.abs(x) <= box, axis=-1))

    x0 = np.full(n, (0.5 * sigma_k_cap / binom(n, k)) ** (1.0 / k))
    if not feasible(x0[None])[0]:
        raise InfeasibleConstraints("start point violates the constraints")
    chains = max(1, min(chains, count))
    x = np.tile(x0, (chains, 1))
    scale = np.full(chains, 0.5)
    rounds = -(-count // chains)
    out = []
    for it in range(1, burn_in + rounds * thin + 1):
        d = _unit_rows(rng, x.shape)
        t = rng.uniform(-1, 1, size=chains) * scale * (1 + np.abs(x).max(axis=1))
        y = x + t[:, None] * d
        ok = feasible(y)
        x = np.where(ok[:, None], y, x)
        scale = np.clip(np.where(ok, scale * 1.1, scale * 0.7), 1e-6, 2.0)
        if it > burn_in and (it - burn_in) % thin == 0:
            out.append(x.copy())
    lam = -np.sort(-np.concatenate(out)[:count], axis=1)
    return ProbeResult(float(lam[:, -1].min()), len(lam), lam)
