"""Adiabatic flame temperature for a fixed complete-combustion product set."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import NoBracket, NoConvergence
from .stoich import MixtureSpec, complete_products, mixture_enthalpy
from .thermo import R_UNIVERSAL, ThermoDatabase, cp_R, h_molar


@dataclass(frozen=True)
class SolverOptions:
    t_lo: float = 250.0
    t_hi: float = 6500.0
    abs_tol_T: float = 1e-4
    rel_tol_H: float = 1e-10
    max_iter: int = 100

    def __post_init__(self):
        if not self.t_lo < self.t_hi:
            raise ValueError("t_lo must be below t_hi")
        if min(self.abs_tol_T, self.rel_tol_H) <= 0 or self.max_iter < 1:
            raise ValueError("tolerances and max_iter must be positive")


@dataclass(frozen=True)
class AftResult:
    t_ad: float
    products: MixtureSpec
    h_target: float
    residual: float
    iterations: int
    extrapolated: bool


@dataclass
class RootResult:
    x: float
    f: float
    iterations: int
    bracket: tuple[float, float]


def newton_bisect(
    func: Callable[[float], tuple[float, float, float]],
    lo: float,
    hi: float,
    xtol: float,
    max_iter: int = 100,
    x0: float | None = None,
) -> RootResult:
    """Root of an increasing-or-decreasing function bracketed by [lo, hi].

    ``func(x)`` returns ``(f, df, ftol)``; iteration stops once ``|f| <= ftol``.
    Newton steps falling outside the current bracket, or not shrinking the
    step fast enough, are replaced by bisection.
    """
    f_lo, _, tol_lo = func(lo)
    if abs(f_lo) <= tol_lo:
        return RootResult(lo, f_lo, 0, (lo, lo))
    f_hi, _, tol_hi = func(hi)
    if abs(f_hi) <= tol_hi:
        return RootResult(hi, f_hi, 0, (hi, hi))
    if (f_lo > 0) == (f_hi > 0):
        raise NoBracket(f"f({lo:g}) = {f_lo:.6g} and f({hi:g}) = {f_hi:.6g} have the same sign")
    # orient so that f(xl) < 0 < f(xh)
    xl, xh = (lo, hi) if f_lo < 0 else (hi, lo)

    x = 0.5 * (lo + hi) if x0 is None else x0
    dx_old = dx = abs(hi - lo)
    f, df, ftol = func(x)
    for it in range(1, max_iter + 1):
        newton_out = ((x - xh) * df - f) * ((x - xl) * df - f) > 0 or df == 0
        if newton_out or abs(2 * f) > abs(dx_old * df):
            dx_old = dx
            dx = 0.5 * (xh - xl)
            x = xl + dx
        else:
            dx_old = dx
            dx = f / df
            x -= dx
        f, df, ftol = func(x)
        if abs(f) <= ftol and abs(dx) <= xtol:
            return RootResult(x, f, it, (min(xl, xh), max(xl, xh)))
        if f < 0:
            xl = x
        else:
            xh = x
    raise NoConvergence(
        f"no convergence after {max_iter} iterations",
        iterations=max_iter,
        x=x,
        residual=f,
        bracket=(min(xl, xh), max(xl, xh)),
    )


def solve_aft_complete(
    reactants: MixtureSpec, db: ThermoDatabase, opts: SolverOptions | None = None
) -> AftResult:
    """Temperature at which complete-combustion products carry the reactant enthalpy."""
    opts = opts or SolverOptions()
    products = complete_products(reactants, db)
    h_target, _ = mixture_enthalpy(reactants, db)
    prod = [(db[c.species], c.moles) for c in products.entries]

    def F(T):
        h_sum = 0.0
        h_abs = 0.0
        cp_sum = 0.0
        n_sum = 0.0
        for sp, n in prod:
            n_sum += n
            h = n * h_molar(sp, T).value
            h_sum += h
            h_abs += abs(h)
            cp_sum += n * cp_R(sp, T).value
        scale = h_abs + abs(h_target) + R_UNIVERSAL * T * n_sum
        return h_sum - h_target, R_UNIVERSAL * cp_sum, opts.rel_tol_H * scale

    root = newton_bisect(F, opts.t_lo, opts.t_hi, opts.abs_tol_T, opts.max_iter)
    extrapolated = any(not sp.poly.in_range(root.x) for sp, _ in prod)
    return AftResult(
        t_ad=root.x,
        products=products.at_temperature(root.x),
        h_target=h_target,
        residual=root.f,
        iterations=root.iterations,
        extrapolated=extrapolated,
    )
