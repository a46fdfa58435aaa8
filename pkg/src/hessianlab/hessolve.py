"""Damped Newton solver for sigma_k(chi[u]) = psi(z, Du, u) on the flat torus.

Grid layout: a field on ``TorusGrid(n, N)`` is an array of shape ``(N,) * 2n``
with axes ordered ``(x_1, y_1, ..., x_n, y_n)``, each of period 1 with spacing
``h = 1 / N``. Matrix-valued fields carry two trailing axes ``(n, n)``.

Wirtinger derivatives use second-order central differences:
``u_i = (D_{x_i} - i D_{y_i}) u / 2`` and
``u_{i jbar} = (D_{x_i x_j} + D_{y_i y_j} + i (D_{x_i y_j} - D_{y_i x_j})) u / 4``,
with three-point second differences on one axis and products of central
first differences across axes. The assembled form is

    chi_{i jbar} = chi'_{i jbar}(z, u) + u_{i jbar} + a_i u_{jbar} + conj(a_j) u_i,

chi'(z, u) = eps I + P(z) + q_slope u I, and the residual is
``sigma_k(chi) - psi(z, Du, u)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .symmcalc import eigh_jacobi, esf, sigma, sigma_grad


class InadmissibleError(ValueError):
    pass


class SolverError(RuntimeError):
    def __init__(self, msg, history=None, u=None):
        super().__init__(msg)
        self.history = history or []
        self.u = u


class LineSearchStall(SolverError):
    pass


class LinearSolveError(SolverError):
    pass


# ---------------------------------------------------------------------------
# grid and stencils
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TorusGrid:
    n: int
    N: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("complex dimension must be positive")
        if self.N < 8 or self.N % 2:
            raise ValueError("N must be even and at least 8")

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * (2 * self.n)

    @property
    def size(self) -> int:
        return self.N ** (2 * self.n)

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays [x_1, y_1, ..., x_n, y_n]."""
        t = np.arange(self.N) * self.h
        out = []
        for a in range(2 * self.n):
            s = [1] * (2 * self.n)
            s[a] = self.N
            out.append(t.reshape(s))
        return out


def d1(u, axis, h):
    return (np.roll(u, -1, axis) - np.roll(u, 1, axis)) / (2 * h)


def d2(u, axis, h):
    return (np.roll(u, -1, axis) - 2 * u + np.roll(u, 1, axis)) / (h * h)


def wirtinger(u, grid: TorusGrid, holo: bool = True) -> dict:
    """Discrete Wirtinger derivatives of a real periodic field.

    Returns ``first`` (u_i, shape ``(..., n)``), ``second`` (u_{i jbar},
    shape ``(..., n, n)``) and, if ``holo``, ``holo`` (u_{ij}).
    """
    n, h = grid.n, grid.h
    u = np.asarray(u, dtype=float)
    D = [d1(u, a, h) for a in range(2 * n)]
    DD = {}
    for a in range(2 * n):
        DD[a, a] = d2(u, a, h)
        for b in range(a + 1, 2 * n):
            DD[a, b] = DD[b, a] = d1(D[a], b, h)
    # components first, moved to the trailing axes at the end
    first = np.empty((n,) + u.shape, complex)
    second = np.empty((n, n) + u.shape, complex)
    for i in range(n):
        xi, yi = 2 * i, 2 * i + 1
        first[i].real = 0.5 * D[xi]
        first[i].imag = -0.5 * D[yi]
        for j in range(n):
            xj, yj = 2 * j, 2 * j + 1
            second[i, j].real = 0.25 * (DD[xi, xj] + DD[yi, yj])
            second[i, j].imag = 0.25 * (DD[xi, yj] - DD[yi, xj])
    out = {"first": np.moveaxis(first, 0, -1), "second": np.moveaxis(second, (0, 1), (-2, -1))}
    if holo:
        H = np.empty((n, n) + u.shape, complex)
        for i in range(n):
            xi, yi = 2 * i, 2 * i + 1
            for j in range(n):
                xj, yj = 2 * j, 2 * j + 1
                H[i, j].real = 0.25 * (DD[xi, xj] - DD[yi, yj])
                H[i, j].imag = -0.25 * (DD[xi, yj] + DD[yi, xj])
        out["holo"] = np.moveaxis(H, (0, 1), (-2, -1))
    return out


# ---------------------------------------------------------------------------
# problem data
# ---------------------------------------------------------------------------

@dataclass
class QuadraticForcing:
    """psi(z, v, t) = base(z) + mu (t - t_ref(z)) + nu |v - v_ref(z)|^2."""

    base: np.ndarray
    mu: float
    nu: float
    t_ref: np.ndarray | float = 0.0
    v_ref: np.ndarray | float = 0.0

    def value(self, v, t):
        return self.base + self.mu * (t - self.t_ref) + self.nu * np.sum(np.abs(v - self.v_ref) ** 2, axis=-1)

    def d_t(self, v, t):
        return np.broadcast_to(np.float64(self.mu), np.shape(t))

    def d_v(self, v, t):
        # d psi = 2 Re sum_l d_v[l] dv_l
        return self.nu * np.conj(v - self.v_ref)


@dataclass
class BlendedForcing:
    """(1 - s) psi_start + s psi_end."""

    start: QuadraticForcing
    end: QuadraticForcing
    s: float

    def value(self, v, t):
        return (1 - self.s) * self.start.value(v, t) + self.s * self.end.value(v, t)

    def d_t(self, v, t):
        return (1 - self.s) * self.start.d_t(v, t) + self.s * self.end.d_t(v, t)

    def d_v(self, v, t):
        return (1 - self.s) * self.start.d_v(v, t) + self.s * self.end.d_v(v, t)


@dataclass
class ProblemSpec:
    k: int
    eps: float
    P: np.ndarray
    a: np.ndarray
    psi: QuadraticForcing | BlendedForcing
    q_slope: float = 0.0
    params: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.P.shape[-1]

    def chi_prime(self, u):
        n = self.n
        eye = np.eye(n)
        return (self.eps * eye + self.P + (self.q_slope * np.asarray(u))[..., None, None] * eye)

    def dchi_du(self):
        return self.q_slope * np.eye(self.n)

    def check_chi_prime(self, u_range: float = 1.0, samples: int = 9) -> bool:
        """chi'(z, u) - eps I is positive semidefinite for |u| <= u_range."""
        wP = np.linalg.eigvalsh(self.P)[..., 0].min()
        for u in np.linspace(-u_range, u_range, samples):
            if wP + self.q_slope * u < -1e-12:
                return False
        return True


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def assemble_chi(u, spec: ProblemSpec, grid: TorusGrid, derivs: dict | None = None) -> np.ndarray:
    d = wirtinger(u, grid) if derivs is None else derivs
    first, second = d["first"], d["second"]
    a = spec.a
    chi = spec.chi_prime(u) + second
    chi = chi + a[..., :, None] * np.conj(first)[..., None, :]
    chi = chi + first[..., :, None] * np.conj(a)[..., None, :]
    return chi


@dataclass
class PointwiseState:
    """Everything the residual and its linearization need at one iterate."""

    u: np.ndarray
    derivs: dict
    chi: np.ndarray
    w: np.ndarray
    V: np.ndarray
    sigma_k: np.ndarray
    residual: np.ndarray

    @property
    def admissible(self) -> bool:
        return bool(np.all(admissible_mask(self.w, self.k)))

    k: int = 0


def admissible_mask(w, k):
    e = esf(w, k)
    return np.all(e[..., 1:k + 1] > 0, axis=-1)


def evaluate(u, spec: ProblemSpec, grid: TorusGrid) -> PointwiseState:
    u = np.asarray(u, dtype=float)
    d = wirtinger(u, grid, holo=False)
    chi = assemble_chi(u, spec, grid, d)
    w, V, _ = eigh_jacobi(chi, check=False)
    sk = sigma(w, spec.k)
    r = sk - spec.psi.value(d["first"], u)
    return PointwiseState(u, d, chi, w, V, sk, r, k=spec.k)


def residual(u, spec: ProblemSpec, grid: TorusGrid) -> np.ndarray:
    return evaluate(u, spec, grid).residual


class Linearization:
    """Matrix-free Jacobian of the residual at a fixed admissible iterate."""

    def __init__(self, state: PointwiseState, spec: ProblemSpec, grid: TorusGrid):
        if not state.admissible:
            raise InadmissibleError("linearization requires chi[u] in Gamma_k at every point")
        self.grid = grid
        self.spec = spec
        f = sigma_grad(state.w, spec.k)
        V = state.V
        self.G = (V * f[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))
        first = state.derivs["first"]
        self.psi_t = spec.psi.d_t(first, state.u)
        self.psi_v = spec.psi.d_v(first, state.u)
        trG = np.real(np.einsum("...ii->...", self.G))
        # zeroth-order coefficient
        self.c0 = spec.q_slope * trG - self.psi_t
        self.a = spec.a
        self.min_f = float(f.min())

    def apply(self, v):
        v = np.asarray(v, dtype=float).reshape(self.grid.shape)
        d = wirtinger(v, self.grid, holo=False)
        first = d["first"]
        dchi = d["second"] + self.a[..., :, None] * np.conj(first)[..., None, :] \
            + first[..., :, None] * np.conj(self.a)[..., None, :]
        dsig = np.real(np.einsum("...ji,...ij->...", self.G, dchi))
        out = dsig + self.c0 * v - 2 * np.real(np.sum(self.psi_v * first, axis=-1))
        return out.ravel()

    def preconditioner(self):
        """FFT inverse of the grid-averaged constant-coefficient operator."""
        grid = self.grid
        n, h, N = grid.n, grid.h, grid.N
        th = 2 * np.pi * np.fft.fftfreq(N)
        shp = grid.shape
        S1, S2 = [], []
        for a in range(2 * n):
            s = [1] * (2 * n)
            s[a] = N
            S1.append((np.sin(th) / h).reshape(s))
            S2.append((-4 * np.sin(th / 2) ** 2 / h ** 2).reshape(s))

        def DD(a, b):
            return S2[a] if a == b else -S1[a] * S1[b]

        Gbar = self.G.reshape(-1, n, n).mean(axis=0)
        sym = np.zeros(shp)
        for i in range(n):
            for j in range(n):
                xi, yi, xj, yj = 2 * i, 2 * i + 1, 2 * j, 2 * j + 1
                s_ij = 0.25 * (DD(xi, xj) + DD(yi, yj) + 1j * (DD(xi, yj) - DD(yi, xj)))
                sym = sym + np.real(Gbar[j, i] * s_ij)
        c = float(np.mean(self.c0))
        sym = sym + min(c, -1e-8)
        inv = 1.0 / sym

        def solve(r):
            r = np.asarray(r).reshape(shp)
            return np.real(np.fft.ifftn(np.fft.fftn(r) * inv)).ravel()

        return solve


def linearize_apply(u, spec: ProblemSpec, grid: TorusGrid, v) -> np.ndarray:
    return Linearization(evaluate(u, spec, grid), spec, grid).apply(v).reshape(grid.shape)


# ---------------------------------------------------------------------------
# Newton
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NewtonConfig:
    residual_tol: float = 1e-8
    max_iters: int = 50
    backtrack: float = 0.5
    min_step: float = 1e-4
    linear_tol: float = 1e-10
    linear_maxiter: int = 400
    linear_restart: int = 60

    def __post_init__(self):
        for name in ("residual_tol", "max_iters", "backtrack", "min_step", "linear_tol",
                     "linear_maxiter", "linear_restart"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class TorusSolution:
    grid: TorusGrid
    u: np.ndarray
    k: int
    spec_params: dict
    diagnostics: dict
    history: list = field(default_factory=list)
    spec: ProblemSpec | None = field(default=None, repr=False, compare=False)


def diagnostics(state: PointwiseState) -> dict:
    g = np.sqrt(np.sum(np.abs(state.derivs["first"]) ** 2, axis=-1))
    return {
        "max_lambda1": float(state.w[..., 0].max()),
        "min_lambda_n": float(state.w[..., -1].min()),
        "max_grad": float(g.max()),
        "max_abs_u": float(np.abs(state.u).max()),
        "residual_inf": float(np.abs(state.residual).max()),
        "min_sigma_grad": float(sigma_grad(state.w, state.k).min()),
    }


def solve_linear(lin: Linearization, rhs: np.ndarray, config: NewtonConfig):
    N = rhs.size
    A = LinearOperator((N, N), matvec=lin.apply, dtype=float)
    M = LinearOperator((N, N), matvec=lin.preconditioner(), dtype=float)
    count = [0]

    def cb(_):
        count[0] += 1

    b = rhs.ravel()
    x, info = gmres(A, b, rtol=config.linear_tol, atol=0.0, restart=config.linear_restart,
                    maxiter=config.linear_maxiter, M=M, callback=cb, callback_type="pr_norm")
    rel = np.linalg.norm(lin.apply(x) - b) / max(np.linalg.norm(b), 1e-300)
    # gmres measures the preconditioned residual; accept a modest slack on the true one
    if info != 0 or rel > 100 * config.linear_tol:
        raise LinearSolveError(f"GMRES did not converge (info={info}, relative residual {rel:.2e})")
    return x.reshape(rhs.shape), count[0], rel


def newton_solve(spec: ProblemSpec, grid: TorusGrid, u0=None, config: NewtonConfig | None = None,
                 callback=None) -> TorusSolution:
    """Damped Newton iteration keeping every accepted iterate admissible.

    Each step solves J delta = -r with preconditioned GMRES, then halves the
    step until chi[u + s delta] lies in Gamma_k everywhere and the sup-norm
    residual decreases.
    """
    config = config or NewtonConfig()
    u = np.zeros(grid.shape) if u0 is None else np.array(u0, dtype=float).reshape(grid.shape)
    st = evaluate(u, spec, grid)
    if not st.admissible:
        raise InadmissibleError("initial guess is not admissible: chi[u0] leaves Gamma_k")
    rn = float(np.abs(st.residual).max())
    history = [{"iter": 0, "residual_inf": rn, "step": 0.0, "linear_iters": 0,
                "admissible": True, "min_sigma_grad": float(sigma_grad(st.w, spec.k).min())}]
    if callback:
        callback(st, history[-1])
    it = 0
    while rn > config.residual_tol:
        if it >= config.max_iters:
            raise SolverError(f"Newton did not converge in {config.max_iters} iterations "
                              f"(residual {rn:.3e})", history, u)
        it += 1
        lin = Linearization(st, spec, grid)
        delta, lits, _ = solve_linear(lin, -st.residual, config)
        s = 1.0
        while True:
            trial = evaluate(u + s * delta, spec, grid)
            tn = float(np.abs(trial.residual).max())
            if trial.admissible and tn < rn:
                break
            s *= config.backtrack
            if s < config.min_step:
                raise LineSearchStall(f"line search stalled at iteration {it} (residual {rn:.3e})",
                                      history, u)
        u, st, rn = trial.u, trial, tn
        history.append({"iter": it, "residual_inf": rn, "step": s, "linear_iters": lits,
                        "admissible": st.admissible,
                        "min_sigma_grad": float(sigma_grad(st.w, spec.k).min())})
        if callback:
            callback(st, history[-1])
    return TorusSolution(grid, u, spec.k, dict(spec.params), diagnostics(st), history, spec)


# ---------------------------------------------------------------------------
# manufactured problems
# ---------------------------------------------------------------------------

@dataclass
class Manufactured:
    spec: ProblemSpec
    u_star: np.ndarray
    alpha: float


def _background(grid: TorusGrid, seed: int, p_amp: float, a_amp: float):
    n = grid.n
    rng = np.random.default_rng(seed)
    R = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    H0 = R @ R.conj().T
    H0 /= np.linalg.eigvalsh(H0)[-1]
    phase = rng.uniform(0, 2 * np.pi)
    w = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
    ph = rng.uniform(0, 2 * np.pi, n)
    X = grid.coords()
    env = 1 + 0.5 * np.sin(2 * np.pi * (X[0] + X[-1]) + phase)
    P = p_amp * env[..., None, None] * H0
    P = np.broadcast_to(P, grid.shape + (n, n)).copy()
    a = np.empty(grid.shape + (n,), complex)
    for i in range(n):
        a[..., i] = a_amp * w[i] * np.cos(2 * np.pi * (X[2 * i] + X[2 * i + 1]) + ph[i])
    return P, a


def manufactured_u(grid: TorusGrid, alpha: float):
    X = grid.coords()
    u = np.zeros(grid.shape)
    first = np.zeros(grid.shape + (grid.n,), complex)
    second = np.zeros(grid.shape + (grid.n, grid.n), complex)
    for i in range(grid.n):
        x, y = X[2 * i], X[2 * i + 1]
        c, s = np.cos(2 * np.pi * x), np.sin(2 * np.pi * y)
        u = u + alpha * (c + s)
        first[..., i] = -np.pi * alpha * (np.sin(2 * np.pi * x) + 1j * np.cos(2 * np.pi * y))
        second[..., i, i] = -np.pi ** 2 * alpha * (c + s)
    return u, {"first": first, "second": second}


def manufactured_problem(grid: TorusGrid, k: int = 2, alpha: float = 0.1, mu: float = 1.0,
                         nu: float = 0.1, seed: int = 0, *, variant: str = "discrete",
                         eps: float = 1.0, p_amp: float = 0.2, a_amp: float = 0.2,
                         q_slope: float = 0.0, max_halvings: int = 10) -> Manufactured:
    """Problem with known solution u* = alpha sum_i (cos 2 pi x_i + sin 2 pi y_i).

    ``variant="discrete"`` builds psi from the discrete operators, so u* solves
    the grid equation exactly; ``"continuum"`` builds psi from the exact
    derivatives, so the grid solution differs from u* by the O(h^2) truncation.
    alpha is halved until chi[u*] is in Gamma_k at every grid point and psi
    is positive for every |t| <= sup|u*| with v = Du*.
    """
    if variant not in ("discrete", "continuum"):
        raise ValueError(f"unknown variant {variant!r}")
    if not 1 <= k <= grid.n:
        raise ValueError("need 1 <= k <= n")
    if mu <= 0:
        raise ValueError("mu must be positive so psi increases in u")
    P, a = _background(grid, seed, p_amp, a_amp)
    a0 = alpha
    for _ in range(max_halvings + 1):
        u_star, exact = manufactured_u(grid, alpha)
        base_spec = ProblemSpec(k, eps, P, a, QuadraticForcing(np.zeros(grid.shape), mu, nu), q_slope)
        d_disc = wirtinger(u_star, grid)
        chi_d = assemble_chi(u_star, base_spec, grid, d_disc)
        chi_c = assemble_chi(u_star, base_spec, grid, exact)
        wd = eigh_jacobi(chi_d, check=False)[0]
        wc = eigh_jacobi(chi_c, check=False)[0]
        # psi must also stay positive for |t| <= sup|u*|, the range Newton crosses from u = 0
        reach = float(np.abs(u_star).max())
        base_min = min(sigma(wd, k).min(), sigma(wc, k).min()) if k else 0.0
        psi_floor = base_min - mu * 2 * reach
        if np.all(admissible_mask(wd, k)) and np.all(admissible_mask(wc, k)) and psi_floor > 0:
            break
        alpha *= 0.5
    else:
        raise InadmissibleError(f"no admissible amplitude after {max_halvings} halvings of {a0}")
    if variant == "discrete":
        base, vref = sigma(wd, k), d_disc["first"]
    else:
        base, vref = sigma(wc, k), exact["first"]
    psi = QuadraticForcing(base, mu, nu, u_star, vref)
    params = {"kind": "manufactured", "n": grid.n, "k": k, "alpha": a0, "alpha_used": alpha,
              "mu": mu, "nu": nu, "seed": seed, "variant": variant, "eps": eps, "p_amp": p_amp,
              "a_amp": a_amp, "q_slope": q_slope}
    spec = ProblemSpec(k, eps, P, a, psi, q_slope, params)
    return Manufactured(spec, u_star, alpha)


def problem_from_params(grid: TorusGrid, params: dict) -> ProblemSpec:
    """Rebuild a ProblemSpec recorded in a snapshot or config."""
    kind = params.get("kind", "manufactured")
    keys = ("k", "alpha", "mu", "nu", "seed", "variant", "eps", "p_amp", "a_amp", "q_slope")
    kw = {key: params[key] for key in keys if key in params}
    m = manufactured_problem(grid, **kw)
    if kind == "manufactured":
        return m.spec
    if kind == "trivial":
        return trivial_problem(m.spec, grid)
    raise ValueError(f"unknown problem kind {kind!r}")


def trivial_problem(spec: ProblemSpec, grid: TorusGrid) -> ProblemSpec:
    """Same chi' and a, with psi chosen so that u = 0 solves the equation."""
    psi_end = spec.psi if isinstance(spec.psi, QuadraticForcing) else spec.psi.end
    w = eigh_jacobi(spec.chi_prime(np.zeros(grid.shape)), check=False)[0]
    psi0 = QuadraticForcing(sigma(w, spec.k), psi_end.mu, psi_end.nu, 0.0, 0.0)
    params = dict(spec.params, kind="trivial")
    return replace(spec, psi=psi0, params=params)


# ---------------------------------------------------------------------------
# continuity path
# ---------------------------------------------------------------------------

class ContinuationError(SolverError):
    def __init__(self, msg, rows):
        super().__init__(msg)
        self.rows = rows


@dataclass
class PathReport:
    rows: list
    solution: TorusSolution


def continuity_path(spec_end: ProblemSpec, grid: TorusGrid, steps: int,
                    config: NewtonConfig | None = None,
                    spec_start: ProblemSpec | None = None) -> PathReport:
    """Track psi_s = (1 - s) psi_0 + s psi_end for s = 1/steps, ..., 1 with warm starts."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    start = spec_start or trivial_problem(spec_end, grid)
    psi0 = start.psi
    psi1 = spec_end.psi
    u = np.zeros(grid.shape)
    st0 = evaluate(u, start, grid)
    if not st0.admissible:
        raise InadmissibleError("trivial start is not admissible")
    rows = []
    sol = None
    for j in range(1, steps + 1):
        s = j / steps
        spec_s = replace(spec_end, psi=BlendedForcing(psi0, psi1, s),
                         params=dict(spec_end.params, continuation_s=s))
        try:
            sol = newton_solve(spec_s, grid, u, config)
        except SolverError as exc:
            raise ContinuationError(f"continuation failed at s={s}: {exc}", rows) from exc
        u = sol.u
        dg = sol.diagnostics
        rows.append({
            "s": s,
            "iterations": len(sol.history) - 1,
            "residual_inf": dg["residual_inf"],
            "max_lambda1": dg["max_lambda1"],
            "max_grad": dg["max_grad"],
            "min_lambda_n": dg["min_lambda_n"],
            "max_abs_u": dg["max_abs_u"],
            "lambda1_over_grad": dg["max_lambda1"] / (1 + dg["max_grad"] ** 2),
            "residual_history": [h["residual_inf"] for h in sol.history],
        })
    sol.spec_params = dict(spec_end.params)
    sol.spec = spec_end
    return PathReport(rows, sol)


# ---------------------------------------------------------------------------
# weighted norms
# ---------------------------------------------------------------------------

def weighted_norms(u, spec: ProblemSpec, grid: TorusGrid, pointwise: bool = False) -> dict:
    """sigma_k-weighted norms of the holomorphic and mixed Hessians.

    |DDu|^2 = sum_m r_m^H G r_m with r_m = (u_{m1}, ..., u_{mn}) and
    |DDbar u|^2 = tr(G H H) with H = (u_{p mbar}); G = d sigma_k / d chi.
    """
    st = evaluate(u, spec, grid)
    if not st.admissible:
        raise InadmissibleError("weighted norms need an admissible u")
    st.derivs = wirtinger(st.u, grid)
    f = sigma_grad(st.w, spec.k)
    G = (st.V * f[..., None, :]) @ np.conj(np.swapaxes(st.V, -1, -2))
    Hh = st.derivs["holo"]
    Hm = st.derivs["second"]
    ddu = np.real(np.einsum("...mq,...qp,...mp->...", np.conj(Hh), G, Hh))
    ddbar = np.real(np.einsum("...qp,...pm,...mq->...", G, Hm, Hm))
    if pointwise:
        return {"ddu_norm": ddu, "ddbar_norm": ddbar, "G": G}
    return {"ddu_norm": float(ddu.max()), "ddbar_norm": float(ddbar.max())}


def error_order(hs, errs) -> float:
    """Least-squares slope of log(err) against log(h)."""
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


def sup_norm(x) -> float:
    return float(np.abs(x).max())
