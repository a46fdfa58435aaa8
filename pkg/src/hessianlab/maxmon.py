"""Maximum-principle diagnostics on a grid solution.

The auxiliary function is

    Q = log lambda_1 + exp(N |Du|^2) + exp(Lambda (T - u)),

with S = sup |Du|^2 + 1 and T = sup |u| + 1 taken from the solution itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hessolve import ProblemSpec, TorusGrid, d1, evaluate, problem_from_params
from .symmcalc import Spectrum, hermitian_eigen

AUTO_HEADROOM = 1.25


@dataclass(frozen=True)
class TestFunctionParams:
    N: float = 2.0
    Lambda: float | None = None  # None selects Lambda automatically

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not self.N > 1:
            raise ValueError("N must exceed 1")
        if self.Lambda is not None and not self.Lambda > self.N:
            raise ValueError("Lambda must exceed N")


@dataclass(frozen=True)
class Bounds:
    S: float
    T: float
    sup_u: float


def solution_bounds(u, first) -> Bounds:
    g2 = np.sum(np.abs(first) ** 2, axis=-1)
    return Bounds(float(g2.max()) + 1.0, float(np.abs(u).max()) + 1.0, float(np.max(u)))


def auto_lambda(N: float, b: Bounds) -> float:
    """Smallest Lambda with Lambda (T - t) > N s + log 2 on the whole grid, plus headroom."""
    need = (N * b.S + math.log(2.0)) / (b.T - b.sup_u)
    return AUTO_HEADROOM * max(need, N)


def resolve_lambda(params: TestFunctionParams, b: Bounds) -> float:
    return auto_lambda(params.N, b) if params.Lambda is None else float(params.Lambda)


def perturbed_lambda(chi_at_point) -> Spectrum:
    """Spectrum of chi - B with B = diag(0, 1, ..., 1) in the eigenframe of chi."""
    lam = hermitian_eigen(chi_at_point).spectrum.values
    shift = np.ones_like(lam)
    shift[0] = 0.0
    return Spectrum(lam - shift)


def sign_condition(N: float, Lam: float, s: float, t: float, T: float) -> float:
    """phi'' - 2 phi'^2 / phi_u with phi(s) = e^{Ns}, phi_u(t) = e^{Lambda (T - t)}."""
    return N * N * math.exp(N * s) - 2 * N * N * math.exp(2 * N * s) / math.exp(Lam * (T - t))


def _q_field(lam1, g2, u, N, Lam, T):
    if np.any(lam1 <= 0):
        raise ValueError("lambda_1 <= 0 somewhere: log undefined (solution not admissible)")
    return np.log(lam1) + np.exp(N * g2) + np.exp(Lam * (T - u))


def build_Q(u, spec: ProblemSpec, grid: TorusGrid, params: TestFunctionParams) -> np.ndarray:
    st = evaluate(u, spec, grid)
    g2 = np.sum(np.abs(st.derivs["first"]) ** 2, axis=-1)
    b = solution_bounds(st.u, st.derivs["first"])
    return _q_field(st.w[..., 0], g2, st.u, params.N, resolve_lambda(params, b), b.T)


@dataclass(frozen=True)
class MonitorReport:
    argmax_index: tuple
    Q_max: float
    grad_Q_norm: float
    lambda1_at_max: float
    sign_condition: float
    perturbed_spectrum: Spectrum
    final_bound_terms: dict
    N: float
    Lambda: float
    Lambda_auto: bool
    S: float
    T: float

    @property
    def gap(self) -> float:
        v = self.perturbed_spectrum.values
        return float(v[0] - v[1])

    def as_dict(self) -> dict:
        return {
            "argmax_index": list(self.argmax_index),
            "Q_max": self.Q_max,
            "grad_Q_norm": self.grad_Q_norm,
            "lambda1_at_max": self.lambda1_at_max,
            "sign_condition": self.sign_condition,
            "perturbed_spectrum": self.perturbed_spectrum.values.tolist(),
            "perturbed_gap": self.gap,
            "final_bound_terms": self.final_bound_terms,
            "N": self.N,
            "Lambda": self.Lambda,
            "Lambda_auto": self.Lambda_auto,
            "S": self.S,
            "T": self.T,
        }


def critical_check(u, spec: ProblemSpec, grid: TorusGrid,
                   params: TestFunctionParams | None = None) -> MonitorReport:
    params = params or TestFunctionParams()
    st = evaluate(u, spec, grid)
    if not st.admissible:
        raise ValueError("critical_check needs an admissible solution")
    first = st.derivs["first"]
    g2 = np.sum(np.abs(first) ** 2, axis=-1)
    b = solution_bounds(st.u, first)
    Lam = resolve_lambda(params, b)
    N = params.N
    Q = _q_field(st.w[..., 0], g2, st.u, N, Lam, b.T)
    # np.argmax returns the first maximum in C order: smallest multi-index on ties
    flat = int(np.argmax(Q))
    idx = tuple(int(i) for i in np.unravel_index(flat, Q.shape))
    grad = max(abs(float(d1(Q, a, grid.h)[idx])) for a in range(Q.ndim))
    s, t = float(g2[idx]), float(st.u[idx])
    phi_s = math.exp(N * s)
    phi_t = math.exp(Lam * (b.T - t))
    terms = {"minus_C_phi_t_prime": -Lam * phi_t, "C_phi_s_prime": N * phi_s, "constant": 1.0}
    return MonitorReport(
        argmax_index=idx,
        Q_max=float(Q[idx]),
        grad_Q_norm=grad,
        lambda1_at_max=float(st.w[idx][0]),
        sign_condition=sign_condition(N, Lam, s, t, b.T),
        perturbed_spectrum=perturbed_lambda(st.chi[idx]),
        final_bound_terms=terms,
        N=float(N),
        Lambda=float(Lam),
        Lambda_auto=params.Lambda is None,
        S=b.S,
        T=b.T,
    )


def monitor_snapshot(doc: dict, params: TestFunctionParams | None = None) -> MonitorReport:
    """Run critical_check on a loaded snapshot document."""
    grid = TorusGrid(doc["n"], doc["N"])
    spec = problem_from_params(grid, doc["spec"])
    return critical_check(doc["u"], spec, grid, params)
