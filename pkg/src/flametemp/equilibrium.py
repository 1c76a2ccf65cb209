"""
Ideal-gas chemical equilibrium by Gibbs free-energy minimization.

The fixed (T, P) problem is solved with the reduced Newton iteration on the
element potentials and the log of total moles (Gordon & McBride, NASA
RP-1311, gas phase only). The constant (H, P) problem wraps it in a scalar
iteration on temperature.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import NoCandidates, NoConvergence, SingularSystem
from .stoich import ONE_ATM, MixtureSpec, RichMixtureError, complete_products, element_totals, mixture_enthalpy
from .thermo import R_UNIVERSAL, PolyTable, ThermoDatabase

log = logging.getLogger(__name__)

P_STANDARD = ONE_ATM

# minor species may not climb above this mole fraction in a single step
_MINOR_CAP_LN = math.log(1e-4)
_MAJOR_X = 1e-8
_TRACE_START = 1e-10
_FEASIBLE = 1e-8
# about 100 ulp of the largest element abundance
_RESOLVE_X = 1e-14
_RCOND = 1e-13
_EPS = float(np.finfo(float).eps)
_NOISE_ULPS = 100.0
_MAX_HALVINGS = 6


@dataclass(frozen=True)
class TP:
    T: float


@dataclass(frozen=True)
class HP:
    h_target: float
    t_guess: float = 2500.0


@dataclass(frozen=True)
class EquilibriumOptions:
    trace_floor: float = 1e-30
    tol_element: float = 1e-10
    tol_stationarity: float = 1e-8
    max_iter: int = 200
    max_step: float = 2.0
    hp_tol_H: float = 1e-9
    hp_max_outer: int = 60
    t_lo: float = 200.0
    t_hi: float = 6500.0
    warm_start: bool = True

    def __post_init__(self):
        for name in ("trace_floor", "tol_element", "tol_stationarity", "max_step", "hp_tol_H"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iter < 1 or self.hp_max_outer < 1:
            raise ValueError("iteration limits must be positive")
        if not 0 < self.t_lo < self.t_hi:
            raise ValueError("need 0 < t_lo < t_hi")


@dataclass(frozen=True)
class EquilibriumProblem:
    b: Mapping[str, float]
    candidates: tuple[str, ...]
    mode: Union[TP, HP]
    pressure: float = ONE_ATM
    n_init: Mapping[str, float] | None = None

    def __post_init__(self):
        b = {el.upper(): float(v) for el, v in self.b.items() if v > 0}
        if any(v < 0 for v in self.b.values()):
            raise ValueError("element abundances must be non-negative")
        if not b:
            raise ValueError("element vector has no positive entry")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "candidates", tuple(c.upper() for c in self.candidates))
        if not self.pressure > 0:
            raise ValueError("pressure must be positive")


@dataclass
class EquilibriumSolution:
    species: tuple[str, ...]
    n: np.ndarray
    n_tot: float
    T: float
    pressure: float
    lam: dict[str, float]
    g_total: float
    iterations: int
    converged: bool
    max_element_residual: float
    max_stationarity_residual: float
    extrapolated: bool = False
    floored: np.ndarray = field(default=None, repr=False)
    h_total: float | None = None
    outer_iterations: int = 0

    def moles(self) -> dict[str, float]:
        return dict(zip(self.species, self.n.tolist()))

    def mole_fractions(self, cutoff: float = 1e-12) -> dict[str, float]:
        """Mole fractions sorted by descending value (ties by name); values below ``cutoff`` reported as 0."""
        x = self.n / self.n_tot
        pairs = [(sp, float(v) if v >= cutoff else 0.0) for sp, v in zip(self.species, x)]
        return dict(sorted(pairs, key=lambda p: (-p[1], p[0])))


def candidate_species(db: ThermoDatabase, b: Mapping[str, float]) -> list[str]:
    """Gas species whose elements all have positive abundance, in database order."""
    present = {el.upper() for el, v in b.items() if v > 0}
    if not present:
        raise ValueError("element vector has no positive entry")
    out = [sp.name for sp in db if sp.phase.upper() == "G" and set(sp.composition) <= present]
    if not out:
        raise NoCandidates(f"no gas species can be formed from elements {sorted(present)}")
    return out


class _System:
    """Stoichiometry and thermo arrays for one candidate set."""

    def __init__(self, prob: EquilibriumProblem, db: ThermoDatabase):
        self.species = prob.candidates
        records = [db[name] for name in self.species]
        self.elements = tuple(el for el in db.elements if el in prob.b) + tuple(
            sorted(set(prob.b) - set(db.elements))
        )
        missing = set(self.elements) - {el for sp in records for el in sp.composition}
        if missing:
            raise SingularSystem(f"no candidate species carries {sorted(missing)}", sorted(missing))
        for sp in records:
            extra = set(sp.composition) - set(self.elements)
            if extra:
                raise ValueError(f"candidate {sp.name} contains {sorted(extra)} absent from the element vector")
        self.A = np.array([[sp.composition.get(el, 0.0) for el in self.elements] for sp in records])
        self.b = np.array([prob.b[el] for el in self.elements])
        if np.linalg.matrix_rank(self.A) < len(self.elements):
            raise SingularSystem(
                f"element-species matrix is rank deficient for elements {list(self.elements)}",
                self.elements,
            )
        self.table = PolyTable(records)
        self.ln_p = math.log(prob.pressure / P_STANDARD)


def _default_start(sys: _System, n_init: Mapping[str, float] | None) -> np.ndarray:
    names = sys.species
    if n_init:
        n = np.array([max(float(n_init.get(sp, 0.0)), 0.0) for sp in names])
        total = n.sum()
        if total > 0:
            return np.maximum(n, _TRACE_START * total)
    b = dict(zip(sys.elements, sys.b))
    # complete-combustion style start: C -> CO2, H -> H2O, spare O -> O2, N -> N2
    major = {
        "CO2": b.get("C", 0.0),
        "H2O": b.get("H", 0.0) / 2,
        "O2": (b.get("O", 0.0) - 2 * b.get("C", 0.0) - b.get("H", 0.0) / 2) / 2,
        "N2": b.get("N", 0.0) / 2,
        "AR": b.get("AR", 0.0),
    }
    usable = set(b) <= {"C", "H", "O", "N", "AR"} and major["O2"] >= 0
    usable = usable and all(sp in names for sp, v in major.items() if v > 0)
    if usable:
        n = np.array([major.get(sp, 0.0) for sp in names])
        return np.maximum(n, _TRACE_START * n.sum())
    return np.full(len(names), sys.b.sum() / len(names))


def _gibbs(g0: np.ndarray, ln_n: np.ndarray, ln_p: float) -> float:
    n = np.exp(ln_n)
    return float(n @ (g0 + ln_n - math.log(n.sum()) + ln_p))


def _solve_tp(
    sys: _System, T: float, n0: np.ndarray, opts: EquilibriumOptions, polish: int = 0
) -> EquilibriumSolution:
    """Fixed (T, P) Newton iteration; ``polish`` extra full steps are taken after convergence."""
    A, b = sys.A, sys.b
    ne = len(b)
    b_scale = b.max()
    g0 = sys.table.g_RT(T)
    ln_floor = math.log(opts.trace_floor)
    ln_resolve = math.log(_RESOLVE_X)

    ln_n = np.log(n0)
    ln_N = math.log(n0.sum())
    pi = np.zeros(ne)
    worst_el = worst_stat = math.inf
    worst_species = None

    for it in range(1, opts.max_iter + 1):
        n = np.exp(ln_n)
        mu = g0 + ln_n - ln_N + sys.ln_p
        # species below double-precision resolution of the element balance stay out of the matrix
        active = ln_n - ln_N > ln_resolve
        na = np.where(active, n, 0.0)
        b_act = A.T @ na
        N = math.exp(ln_N)

        M = np.empty((ne + 1, ne + 1))
        M[:ne, :ne] = (A.T * na) @ A
        M[:ne, ne] = b_act
        M[ne, :ne] = b_act
        M[ne, ne] = na.sum() - N
        rhs = np.empty(ne + 1)
        rhs[:ne] = b - b_act + A.T @ (na * mu)
        rhs[ne] = N - na.sum() + na @ mu
        sol = _newton_solve(M, rhs, np.append(pi, 0.0))
        if sol is None:
            raise SingularSystem(
                f"Newton matrix singular at iteration {it} (T = {T:.6g} K)", sys.elements
            )
        pi, dln_N = sol[:ne], float(sol[ne])
        dln_n = -mu + A @ pi + dln_N

        ln_x = ln_n - math.log(n.sum())
        # species whose equilibrium value lies under the floor only need to sit on it
        target = A @ pi - g0 - sys.ln_p
        retained = target > ln_floor
        stat = np.where(retained, np.abs(ln_x - target), np.maximum(ln_x - ln_floor, 0.0))
        worst_stat = float(stat.max())
        worst_el = float(np.abs(A.T @ n - b).max() / b_scale)
        # a trace species' log-amount is only resolvable to about 100 ulp of the total
        allowed = opts.tol_stationarity + np.where(retained, _NOISE_ULPS * _EPS / np.exp(ln_x), 0.0)
        converged = worst_el <= opts.tol_element and bool(np.all(stat <= allowed))
        if converged and polish == 0:
            return _finish(sys, T, n, pi, it, True, worst_el, worst_stat, ~retained, g0)
        if converged:
            polish -= 1
        worst_species = sys.species[int(np.argmax(stat))]

        # step control: bound |dln n| of major species, keep minor species from jumping up
        major = ln_x > math.log(_MAJOR_X)
        big = max(abs(dln_N), float(np.abs(dln_n[major]).max()) if major.any() else 0.0)
        lam = 1.0 if big <= opts.max_step else opts.max_step / big
        rising = ~major & (dln_n - dln_N > 0)
        if rising.any():
            lam2 = np.abs((_MINOR_CAP_LN - ln_x[rising]) / (dln_n[rising] - dln_N))
            lam = min(lam, float(lam2.min()))

        # G is only a meaningful merit once the element balance holds
        if not converged and worst_el <= _FEASIBLE and lam * float(np.abs(dln_n[major]).max(initial=0.0)) > 1e-3:
            g_old = _gibbs(g0, ln_n, sys.ln_p)
            trial_lam = lam
            for _ in range(_MAX_HALVINGS):
                trial = np.maximum(ln_n + trial_lam * dln_n, ln_floor + ln_N + trial_lam * dln_N)
                if _gibbs(g0, trial, sys.ln_p) <= g_old:
                    lam = trial_lam
                    break
                trial_lam *= 0.5

        log.debug(
            "T=%.6g it=%d lam=%.3g element=%.3g stationarity=%.3g (%s)",
            T, it, lam, worst_el, worst_stat, worst_species,
        )
        ln_N += lam * dln_N
        ln_n = np.maximum(ln_n + lam * dln_n, ln_floor + ln_N)

    raise NoConvergence(
        f"TP equilibrium not converged in {opts.max_iter} iterations at T = {T:.6g} K "
        f"(element residual {worst_el:.3g}, stationarity {worst_stat:.3g} at {worst_species})",
        iterations=opts.max_iter,
        element_residual=worst_el,
        stationarity_residual=worst_stat,
        worst_species=worst_species,
        T=T,
    )


def _newton_solve(M: np.ndarray, rhs: np.ndarray, y_prev: np.ndarray) -> np.ndarray | None:
    """Solve the reduced Newton system as the minimum-norm change from ``y_prev``.

    Directions the active species do not resolve keep their previous value,
    so trace amounts set from the potentials cannot jump between iterations.
    """
    d = np.sqrt(np.abs(np.diag(M)))
    # the total-moles row has a near-zero diagonal; scale it by sqrt(N) instead
    d[-1] = math.sqrt(max(float(np.abs(M[-1, :-1]).max()), 1e-300))
    d[d == 0] = 1.0
    Ms = M / d[:, None] / d[None, :]
    r = (rhs - M @ y_prev) / d
    if not (np.all(np.isfinite(Ms)) and np.all(np.isfinite(r))):
        return None
    dy, _, rank, _ = np.linalg.lstsq(Ms, r, rcond=_RCOND)
    return None if rank == 0 else y_prev + dy / d


def _finish(sys, T, n, pi, it, converged, worst_el, worst_stat, floored, g0) -> EquilibriumSolution:
    n_tot = float(n.sum())
    mu = g0 + np.log(n / n_tot) + sys.ln_p
    extrap = sys.table.extrapolated(T)
    return EquilibriumSolution(
        species=sys.species,
        n=n.copy(),
        n_tot=n_tot,
        T=T,
        pressure=P_STANDARD * math.exp(sys.ln_p),
        lam=dict(zip(sys.elements, pi.tolist())),
        g_total=float(n @ mu),
        iterations=it,
        converged=converged,
        max_element_residual=worst_el,
        max_stationarity_residual=worst_stat,
        extrapolated=bool(extrap[~floored].any()),
        floored=floored,
    )


def equilibrate_TP(prob: EquilibriumProblem, db: ThermoDatabase, opts: EquilibriumOptions | None = None):
    """Minimize G at fixed temperature and pressure subject to element balance."""
    opts = opts or EquilibriumOptions()
    if not isinstance(prob.mode, TP):
        raise TypeError("equilibrate_TP needs a TP-mode problem")
    if not prob.mode.T > 0:
        raise ValueError("temperature must be positive")
    sys = _System(prob, db)
    sol = _solve_tp(sys, prob.mode.T, _default_start(sys, prob.n_init), opts)
    sol.h_total = _enthalpy(sys, sol)[0]
    return sol


def _enthalpy(sys: _System, sol: EquilibriumSolution) -> tuple[float, float, float]:
    """Total enthalpy (J), its magnitude scale (J) and frozen heat capacity (J/K)."""
    T = sol.T
    h = sys.table.h_RT(T) * R_UNIVERSAL * T
    cp = R_UNIVERSAL * float(sol.n @ sys.table.cp_R(T))
    return float(sol.n @ h), float(sol.n @ np.abs(h)) + R_UNIVERSAL * T * sol.n_tot, cp


def equilibrate_HP(prob: EquilibriumProblem, db: ThermoDatabase, opts: EquilibriumOptions | None = None):
    """Equilibrium composition and temperature at fixed enthalpy and pressure."""
    opts = opts or EquilibriumOptions()
    if not isinstance(prob.mode, HP):
        raise TypeError("equilibrate_HP needs an HP-mode problem")
    h_target = prob.mode.h_target
    sys = _System(prob, db)
    start = _default_start(sys, prob.n_init)

    T = min(max(prob.mode.t_guess, opts.t_lo), opts.t_hi)
    lo = hi = None  # (T, F) with F < 0 and F > 0
    prev = None
    n_start = start
    total_inner = 0
    for outer in range(1, opts.hp_max_outer + 1):
        try:
            # the extra step keeps composition noise well under the enthalpy tolerance
            sol = _solve_tp(sys, T, n_start, opts, polish=1)
        except NoConvergence as exc:
            raise NoConvergence(
                f"outer HP iteration {outer} at T = {T:.6g} K: {exc}",
                outer_iteration=outer,
                **exc.diagnostics,
            ) from exc
        total_inner += sol.iterations
        H, scale, cp = _enthalpy(sys, sol)
        F = H - h_target
        collapsed = lo is not None and hi is not None and abs(hi[0] - lo[0]) <= 1e-12 * T
        if abs(F) <= opts.hp_tol_H * (scale + abs(h_target)) or collapsed:
            sol.h_total = H
            sol.iterations = total_inner
            sol.outer_iterations = outer
            return sol
        if F < 0:
            lo = (T, F)
        else:
            hi = (T, F)

        slope = cp
        if prev is not None and prev[0] != T:
            secant = (F - prev[1]) / (T - prev[0])
            if secant > 0:
                slope = secant
        prev = (T, F)
        T_new = T - F / slope

        if lo is not None and hi is not None:
            a, b_ = lo[0], hi[0]
            if not min(a, b_) < T_new < max(a, b_):
                T_new = 0.5 * (a + b_)
        else:
            T_new = min(max(T_new, T - 1500.0, opts.t_lo), T + 1500.0, opts.t_hi)
            if T_new == T:
                raise NoConvergence(
                    f"HP bracket exhausted at T = {T:.6g} K (enthalpy residual {F:.6g} J)",
                    outer_iteration=outer,
                    T=T,
                    residual=F,
                )
        T = T_new
        n_start = sol.n if opts.warm_start else start

    raise NoConvergence(
        f"HP equilibrium not converged in {opts.hp_max_outer} outer iterations",
        outer_iteration=opts.hp_max_outer,
        bracket=(lo and lo[0], hi and hi[0]),
    )


def equilibrium_aft(
    reactants: MixtureSpec,
    db: ThermoDatabase,
    opts: EquilibriumOptions | None = None,
    candidates: Sequence[str] | None = None,
    t_guess: float = 2500.0,
) -> EquilibriumSolution:
    """Chemical-equilibrium adiabatic flame temperature of a reactant mixture."""
    b = element_totals(reactants, db)
    h_target, _ = mixture_enthalpy(reactants, db)
    cand = tuple(candidates) if candidates is not None else tuple(candidate_species(db, b))
    try:
        n_init = complete_products(reactants, db).moles
    except RichMixtureError:
        n_init = None
    prob = EquilibriumProblem(b, cand, HP(h_target, t_guess), reactants.pressure, n_init)
    return equilibrate_HP(prob, db, opts)
