"""Property suites behind ``hessianlab verify``.

Each suite returns a list of :class:`PropertyResult`, one per checked
property, with the number of samples and the worst deviation seen.
A deviation is "bad direction" signed so that ``worst <= tol`` passes.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import conelab as cl
from . import hessolve as hs
from .symmcalc import (binom, eigh_jacobi, esf, in_gamma, matrix_sigma_first, sigma,
                       sigma_grad, sigma_pair_matrix, spectral_second_form)

SUITES = ("symm", "spectral", "inequality", "algebraic", "solver")
CONE_CONFIGS = ((3, 2), (4, 2), (4, 3), (5, 3))


@dataclass(frozen=True)
class PropertyResult:
    name: str
    count: int
    worst: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.tol)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _result(name, count, dev, tol):
    dev = np.asarray(dev, dtype=float)
    worst = float(dev.max()) if dev.size else -math.inf
    return PropertyResult(name, int(count), worst, tol)


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------

def enumerate_sigma(lam, k):
    """sigma_k by summing over all k-subsets (batched)."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if k == 0:
        return np.ones(lam.shape[:-1]), np.ones(lam.shape[:-1])
    c = np.array(list(itertools.combinations(range(n), k)))
    prods = np.prod(lam[..., c], axis=-1)
    return prods.sum(-1), np.abs(prods).sum(-1)


def gamma_samples(rng, n, k, count):
    """Rejection samples of Gamma_k from a shifted Gaussian cloud, rows sorted."""
    out, have = [], 0
    while have < count:
        x = rng.normal(0.3, 1.0, size=(max(4 * count, 256), n)) * rng.uniform(0.2, 5.0, size=(1, 1))
        x = x[in_gamma(x, k)]
        out.append(x)
        have += len(x)
    lam = np.concatenate(out)[:count]
    return -np.sort(-lam, axis=1)


def _excl(lam, k):
    """sigma_k(lam|i) for every i, shape (..., n)."""
    n = lam.shape[-1]
    cols = [esf(np.delete(lam, i, axis=-1), max(k, 0))[..., k] if k >= 0 else np.zeros(lam.shape[:-1])
            for i in range(n)]
    return np.stack(cols, axis=-1)


def _ratio(lam, k, l):
    """(sigma_k / sigma_l)^(1/(k-l))."""
    return (sigma(lam, k) / sigma(lam, l)) ** (1.0 / (k - l))


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def symm_suite(seed: int = 0, count: int = 10_000, configs=CONE_CONFIGS) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    res = []
    # recurrence vs enumeration on unconstrained spectra, n <= 10
    dev_s, dev_raw = [], []
    per = -(-count // 9)
    for n in range(2, 11):
        lam = rng.normal(size=(per, n)) * rng.uniform(0.1, 10, size=(per, 1))
        e = esf(lam, n)
        for k in range(1, n + 1):
            en, scale = enumerate_sigma(lam, k)
            d = np.abs(e[..., k] - en)
            dev_s.append(d / scale)
            dev_raw.append(d / np.maximum(np.abs(en), 1e-300))
    res.append(_result("recurrence_vs_enumeration", 9 * per, np.concatenate(dev_s), 1e-12))
    res.append(_result("recurrence_vs_enumeration_plain_relative", 9 * per,
                       np.concatenate(dev_raw), math.inf))
    for n, k in configs:
        lam = gamma_samples(rng, n, k, count)
        tag = f"n{n}k{k}"
        sk = sigma(lam, k)
        abs_k = enumerate_sigma(np.abs(lam), k)[0]
        ek1 = _excl(lam, k - 1)
        ek = _excl(lam, k)
        res.append(_result(f"{tag}:expansion_identity", len(lam),
                           (np.abs(sk[:, None] - ek - lam * ek1) / abs_k[:, None]).ravel(), 1e-11))
        sk1 = sigma(lam, k - 1)
        abs_k1 = enumerate_sigma(np.abs(lam), k - 1)[0]
        res.append(_result(f"{tag}:excluded_sum_identity", len(lam),
                           np.abs(ek1.sum(-1) - (n - k + 1) * sk1) / ((n - k + 1) * abs_k1), 1e-11))
        res.append(_result(f"{tag}:excluded_positivity", len(lam), -ek1.min(axis=1), 0.0))
        res.append(_result(f"{tag}:excluded_monotone", len(lam),
                           (-np.diff(ek1, axis=1)).max(axis=1) / abs_k1, 1e-12))
        res.append(_result(f"{tag}:leading_product_bound", len(lam),
                           (k / n * sk - lam[:, 0] * ek1[:, 0]) / abs_k, 1e-12))
        # Newton-MacLaurin for all admissible index quadruples
        dev = []
        e = esf(lam, k)
        for m in range(1, k + 1):
            for l in range(m):
                for r in range(1, m + 1):
                    for s in range(l + 1):
                        if r <= s:
                            continue
                        lhs = ((e[:, m] / binom(n, m)) / (e[:, l] / binom(n, l))) ** (1 / (m - l))
                        rhs = ((e[:, r] / binom(n, r)) / (e[:, s] / binom(n, s))) ** (1 / (r - s))
                        dev.append((lhs - rhs) / rhs)
        res.append(_result(f"{tag}:newton_maclaurin", len(lam), np.concatenate(dev), 1e-12))
        # concavity of (sigma_k / sigma_l)^(1/(k-l)) along random chords
        other = lam[rng.permutation(len(lam))]
        mid = 0.5 * (lam + other)
        dev = []
        for l in range(k):
            fa, fb, fm = _ratio(lam, k, l), _ratio(other, k, l), _ratio(mid, k, l)
            scale = np.maximum(np.abs(fa) + np.abs(fb), 1e-300)
            dev.append((0.5 * (fa + fb) - fm) / scale)
        res.append(_result(f"{tag}:quotient_concavity", len(lam), np.concatenate(dev), 1e-10))
        # derivative sum of the quotient
        dev = []
        for l in range(k):
            g = _ratio(lam, k, l)
            sl = sigma(lam, l)
            el1 = _excl(lam, l - 1) if l >= 1 else np.zeros_like(lam)
            grad = g[:, None] / (k - l) * (ek1 / sk[:, None] - el1 / sl[:, None])
            bound = (binom(n, k) / binom(n, l)) ** (1 / (k - l))
            dev.append(bound - grad.sum(-1))
        res.append(_result(f"{tag}:quotient_derivative_sum", len(lam), np.concatenate(dev), 1e-4))
    return res


def spectral_suite(seed: int = 0, count: int = 100, n: int = 4) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    dev1, dev2, dev3 = [], [], []
    basis = []
    for i in range(n):
        for j in range(i, n):
            e = np.zeros((n, n), complex)
            e[i, j] = e[j, i] = 1
            basis.append(e)
            if i != j:
                e = np.zeros((n, n), complex)
                e[i, j], e[j, i] = 1j, -1j
                basis.append(e)
    for t in range(count):
        x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        A = 0.5 * (x + x.conj().T)
        k = int(rng.integers(1, n + 1))
        G = matrix_sigma_first(A, k)
        h = 1e-5
        fd = np.array([(sigma(np.linalg.eigvalsh(A + h * E), k) - sigma(np.linalg.eigvalsh(A - h * E), k))
                       / (2 * h) for E in basis])
        an = np.array([np.real(np.trace(G @ E)) for E in basis])
        dev1.append(np.abs(fd - an).max() / max(np.abs(an).max(), 1.0))
        k2 = int(rng.integers(2, n + 1))
        w, V, _ = eigh_jacobi(A)
        y = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        B = 0.5 * (y + y.conj().T)
        Wm = V.conj().T @ B @ V
        h2 = 1e-3
        f = [sigma(np.linalg.eigvalsh(A + s * B), k2) for s in (-h2, 0.0, h2)]
        fd2 = (f[0] - 2 * f[1] + f[2]) / h2 ** 2
        val = spectral_second_form(w, k2, Wm)
        dev2.append(abs(fd2 - val) / max(abs(val), 1.0))
        # divided differences of sigma_grad equal -sigma_{k-2}(lam|pq)
        lam = rng.normal(size=n) * 3
        fk = sigma_grad(lam, k2)
        C = sigma_pair_matrix(lam, k2)
        for p, q in itertools.combinations(range(n), 2):
            dd = (fk[p] - fk[q]) / (lam[p] - lam[q])
            scale = max(abs(fk[p]) + abs(fk[q]), 1.0) / abs(lam[p] - lam[q])
            dev3.append(abs(dd + C[p, q]) / scale)
    return [_result("first_derivative_vs_fd", count, dev1, 1e-6),
            _result("second_form_vs_fd", count, dev2, 1e-4),
            _result("divided_difference_identity", count, dev3, 1e-13)]


def inequality_suite(seed: int = 0, count: int = 1000, configs=((3, 2), (4, 2)),
                     eps0s=(0.1, 0.5)) -> list[PropertyResult]:
    res = []
    rng = np.random.default_rng(seed)
    for n, k in configs:
        cons = cl.ConeConstraints(n, k)
        K = cl.default_K(k)
        for eps0 in eps0s:
            tag = f"n{n}k{k}e{eps0}"
            thr = cl.threshold_search(cons, eps0, K, samples_per_level=500, seed=seed,
                                      anneal_restarts=50)
            lam = cl.sample_above(cons, 4 * thr.lambda1_star, count, seed + 1000)
            xi = cl.random_unit_complex(rng, len(lam), n)
            m_r = cl.key_margin_batch(lam, xi, k, K, eps0)[0]
            m_w = cl.key_margin_batch(lam, cl.worst_xi(lam, k, K, eps0), k, K, eps0)[0]
            res.append(_result(f"{tag}:margin_above_threshold", len(lam),
                               -np.minimum(m_r, m_w), cl.MARGIN_TOL))
            c = rng.normal(size=len(lam)) + 1j * rng.normal(size=len(lam))
            m_c = cl.key_margin_batch(lam, c[:, None] * xi, k, K, eps0)[0]
            scale = cl.key_margin_batch(lam, xi, k, K, eps0)[1] * np.abs(c) ** 2
            res.append(_result(f"{tag}:xi_homogeneity", len(lam),
                               np.abs(m_c - np.abs(c) ** 2 * m_r) / scale, 1e-13))
            im = cl.key_terms(lam, xi, k, K, eps0)[4]
            res.append(_result(f"{tag}:imaginary_residue", len(lam), im, 1e-12))
    return res


def algebraic_suite(seed: int = 0, count: int = 100_001) -> list[PropertyResult]:
    eps = np.round(np.arange(1, 100) * 0.01, 2)
    a = np.linspace(-3.0, 3.0, max(count, 2))
    dev_min, dev_eq = [], []
    for e in eps:
        f = cl.algebraic_fact(e, a)
        dev_min.append(f.lower_bound - f.value.min())
        at = cl.algebraic_fact(e, cl.algebraic_minimizer(e))
        dev_eq.append(abs(at.value - at.lower_bound))
    return [_result("grid_minimum_above_bound", len(eps) * len(a), dev_min, 1e-12),
            _result("equality_at_minimizer", len(eps), dev_eq, 1e-9)]


def solver_suite(seed: int = 0, count: int = 20, N: int = 8) -> list[PropertyResult]:
    grid = hs.TorusGrid(2, N)
    m = hs.manufactured_problem(grid, seed=seed)
    rng = np.random.default_rng(seed)
    res = []
    chi = hs.assemble_chi(rng.normal(size=grid.shape), m.spec, grid)
    res.append(_result("assembled_chi_hermitian", grid.size,
                       np.abs(chi - np.conj(np.swapaxes(chi, -1, -2))).max(axis=(-1, -2)).ravel(), 1e-12))
    res.append(_result("manufactured_residual_exact", grid.size,
                       np.abs(hs.residual(m.u_star, m.spec, grid)).ravel(), 1e-12))
    u = 0.7 * m.u_star
    lin = hs.Linearization(hs.evaluate(u, m.spec, grid), m.spec, grid)
    dev = []
    for _ in range(count):
        v = rng.normal(size=grid.shape)
        e = 1e-6
        fd = (hs.residual(u + e * v, m.spec, grid) - hs.residual(u - e * v, m.spec, grid)) / (2 * e)
        dev.append(np.abs(fd - lin.apply(v).reshape(grid.shape)).max() / np.abs(fd).max())
    res.append(_result("jacobian_vs_fd", count, dev, 1e-5))
    sol = hs.newton_solve(m.spec, grid)
    res.append(_result("newton_residual", len(sol.history), [sol.history[-1]["residual_inf"]], 1e-8))
    res.append(_result("newton_iterates_admissible", len(sol.history),
                       [0.0 if h["admissible"] and h["min_sigma_grad"] > 0 else 1.0 for h in sol.history],
                       0.0))
    res.append(_result("newton_recovers_u_star", grid.size,
                       np.abs(sol.u - m.u_star).ravel(), 1e-8))
    return res


def run_suite(name: str, seed: int, count: int | None = None) -> list[PropertyResult]:
    table = {"symm": symm_suite, "spectral": spectral_suite, "inequality": inequality_suite,
             "algebraic": algebraic_suite, "solver": solver_suite}
    if name not in table:
        raise KeyError(name)
    fn = table[name]
    return fn(seed) if count is None else fn(seed, count)
