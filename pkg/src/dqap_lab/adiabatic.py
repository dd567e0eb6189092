"""Continuous-time interpolation runs and schedule diagnostics.

The reference process ramps the even bond family in linearly on top of
the odd family over a total time T.  Time stepping uses a commutator
expansion of the ordered exponential over each slice; because both
instantaneous generators are quadratic, each step is a single-particle
matrix exponential acting on the orbitals.

The closed-form optimal ramp keeps the adiabaticity rate uniform along
the path.  Writing g for 2 pi / L, the ramp and instantaneous gap are

    ramp(s) = cos g - sin g * tan(a s + b),     s in [0, 1]
    gap(x)  = 2 t sqrt((x - cos g)^2 + sin^2 g)

with a = -atan(sin g / (1 - cos g)), b = atan(cos g / sin g); the
coefficients satisfy ramp(0) = 0 and ramp(1) = 1 identically, and the
ramp solves  x'' = 2 (x - cos g) x'^2 / ((x - cos g)^2 + sin^2 g).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .ansatz import DqapParams, ImagParams
from .errors import NoConvergence, OpenShellError
from .lattice import LatticeSpec, build_v1, build_v2, exact_ground_state, initial_state
from .slater import SlaterState, apply_bond_layer, overlap

_GAP_TOL = 1e-10


@dataclass(frozen=True)
class EvolutionPlan:
    """Total ramp time T sliced into M equal steps; expansion order 1 or 2."""

    T: float
    M: int
    order: int = 1

    def __post_init__(self):
        if self.T <= 0 or self.M < 1:
            raise ValueError(f"need T > 0 and M >= 1, got T={self.T}, M={self.M}")
        if self.order not in (1, 2):
            raise ValueError(f"order must be 1 or 2, got {self.order}")

    @property
    def delta_tau(self) -> float:
        return self.T / self.M


def _ramp_hopping(spec, s):
    return build_v1(spec) + s * build_v2(spec)


def magnus_step(state: SlaterState, spec: LatticeSpec, plan: EvolutionPlan, m: int):
    """Advance one slice, from time (m-1) dt to m dt (m = 1..M).

    The first-order generator is -i dt/2 times the sum of the endpoint
    hopping matrices; order 2 adds the commutator correction
    dt^2/6 [H_next, H_prev].  Either generator is anti-Hermitian, so
    the step is exactly unitary (exponentiated by eigendecomposition).
    """
    if not 1 <= m <= plan.M:
        raise ValueError(f"slice index {m} outside 1..{plan.M}")
    dt = plan.delta_tau
    h_prev = _ramp_hopping(spec, (m - 1) * dt / plan.T)
    h_next = _ramp_hopping(spec, m * dt / plan.T)
    herm = 0.5 * dt * (h_next + h_prev)  # i times the anti-Hermitian generator
    if plan.order == 2:
        herm = herm + 1j * (dt**2 / 6.0) * (h_next @ h_prev - h_prev @ h_next)
    w, u = np.linalg.eigh(herm)
    step = (u * np.exp(-1j * w)) @ u.conj().T
    return SlaterState(
        step @ state.orbitals, normalized=state.normalized, log_scale=state.log_scale
    )


def evolve_linear_schedule(spec: LatticeSpec, plan: EvolutionPlan):
    """Run the full linear ramp from the dimer state.

    Returns
    -------
    (state, eps) : final SlaterState and the terminal distance
        sqrt(2 - 2 |<exact|state>|) to the exact ground state.
    """
    state = SlaterState(initial_state(spec))
    for m in range(1, plan.M + 1):
        state = magnus_step(state, spec, plan, m)
    exact, _ = exact_ground_state(spec)
    ov = overlap(SlaterState(exact), state)
    return state, float(np.sqrt(max(2.0 - 2.0 * abs(ov), 0.0)))


def find_T_epsilon(
    spec: LatticeSpec,
    target_eps: float,
    dtau: float = 0.01,
    order: int = 1,
    t_start: float = 1.0,
    t_cap: float = 1e6,
) -> float:
    """Smallest ramp time reaching the target terminal distance.

    Brackets by doubling from t_start, then bisects to 1% relative
    width.  The slice count tracks T so the step stays at most `dtau`.
    Raises NoConvergence if the cap is hit before the target.
    """

    def eps_at(T):
        plan = EvolutionPlan(T=T, M=max(1, round(T / dtau)), order=order)
        return evolve_linear_schedule(spec, plan)[1]

    t_hi = t_start
    while eps_at(t_hi) > target_eps:
        t_hi *= 2.0
        if t_hi > t_cap:
            raise NoConvergence(
                f"no T <= {t_cap} reaches eps <= {target_eps} for L={spec.L}"
            )
    t_lo = t_hi / 2.0
    if t_hi == t_start:
        while t_lo > 1e-6 and eps_at(t_lo) <= target_eps:
            t_lo /= 2.0
    while (t_hi - t_lo) / t_hi > 0.01:
        mid = 0.5 * (t_lo + t_hi)
        if eps_at(mid) <= target_eps:
            t_hi = mid
        else:
            t_lo = mid
    return t_hi


def qab_schedule(L: int, s):
    """Closed-form uniform-adiabaticity ramp value(s) at s in [0, 1]."""
    if L < 4:
        raise ValueError(f"ramp needs L >= 4, got {L}")
    g = 2.0 * np.pi / L
    a = -np.arctan(np.sin(g) / (1.0 - np.cos(g)))
    b = np.arctan(np.cos(g) / np.sin(g))
    return np.cos(g) - np.sin(g) * np.tan(a * np.asarray(s, dtype=float) + b)


def qab_gap(L: int, chi, t: float = 1.0):
    """Instantaneous spectral gap along the ramp, 2t sqrt((x-cos g)^2 + sin^2 g)."""
    g = 2.0 * np.pi / L
    chi = np.asarray(chi, dtype=float)
    return 2.0 * t * np.sqrt((chi - np.cos(g)) ** 2 + np.sin(g) ** 2)


@dataclass(frozen=True)
class ScheduleSample:
    s: float
    chi: float
    gap: float


def qab_samples(L: int, n: int = 1001, t: float = 1.0):
    """Uniform sampling of the closed-form ramp and its gap."""
    s = np.linspace(0.0, 1.0, n)
    chi = qab_schedule(L, s)
    gap = qab_gap(L, chi, t)
    return [ScheduleSample(float(a), float(b), float(c)) for a, b, c in zip(s, chi, gap)]


def _ramp_ground_state(spec, chi):
    h = build_v1(spec) + chi * build_v2(spec)
    vals, vecs = np.linalg.eigh(h)
    gap = vals[spec.N] - vals[spec.N - 1]
    if gap < _GAP_TOL * spec.t:
        raise OpenShellError(f"degenerate ramp point chi={chi} for L={spec.L}")
    return SlaterState(vecs[:, : spec.N])


def _partial_circuit_state(spec, params, m, alpha):
    """Circuit state after m layers with the last odd-family angle scaled by alpha."""
    state = SlaterState(initial_state(spec))
    for k in range(m - 1):
        state = apply_bond_layer(state, 2, params.angles[k, 1], spec, mode="real")
        state = apply_bond_layer(state, 1, params.angles[k, 0], spec, mode="real")
    if m >= 1:
        state = apply_bond_layer(state, 2, params.angles[m - 1, 1], spec, mode="real")
        state = apply_bond_layer(
            state, 1, alpha * params.angles[m - 1, 0], spec, mode="real"
        )
    return state


def scheduling_overlap(
    spec: LatticeSpec, params: DqapParams, m: int, chi: float, alpha: float = 1.0
) -> float:
    """Squared overlap of the m-layer circuit prefix with a ramp ground state.

    The prefix applies layers 1..m-1 in full and scales the odd-family
    angle of layer m by alpha (m = 0 is the bare dimer state).  Used to
    read off which ramp point the circuit has reached after m layers.
    """
    if not 0 <= m <= params.M:
        raise ValueError(f"prefix depth {m} outside 0..{params.M}")
    target = _ramp_ground_state(spec, chi)
    state = _partial_circuit_state(spec, params, m, alpha)
    return float(abs(overlap(target, state)) ** 2)


def maximize_overlap(
    spec: LatticeSpec,
    params: DqapParams,
    m: int,
    alpha: float | None = None,
    grid_step: float = 0.01,
    bound: float = 1.5,
    xtol: float = 1e-4,
):
    """Best (chi, alpha) for the m-layer prefix by grid scan plus refinement.

    Scans chi (and alpha unless fixed) over [0, bound] with the given
    step, then runs a bounded scalar refinement around the best cell,
    one axis at a time.  Returns (chi, alpha, overlap_sq).
    """
    if not 0 <= m <= params.M:
        raise ValueError(f"prefix depth {m} outside 0..{params.M}")
    chis = np.arange(0.0, bound + grid_step / 2, grid_step)
    alphas = np.array([alpha]) if alpha is not None else chis

    # The prefix below the alpha-scaled half-layer is fixed; cache it,
    # and diagonalize each grid ramp point once.
    base = None
    if m >= 1:
        base = _partial_circuit_state(spec, params, m - 1, 1.0)
        base = apply_bond_layer(base, 2, params.angles[m - 1, 1], spec, mode="real")

    def prefix_state(al):
        if m == 0:
            return SlaterState(initial_state(spec))
        return apply_bond_layer(base, 1, al * params.angles[m - 1, 0], spec, mode="real")

    targets = {}

    def value(chi, al):
        chi = float(chi)
        if chi not in targets:
            targets[chi] = _ramp_ground_state(spec, chi)
        return float(abs(overlap(targets[chi], prefix_state(float(al)))) ** 2)

    grid_targets = [_ramp_ground_state(spec, float(c)) for c in chis]
    f_best, chi_best, al_best = -1.0, 0.0, float(alphas[0])
    for al in alphas:
        st = prefix_state(float(al))
        for chi, tgt in zip(chis, grid_targets):
            f = float(abs(overlap(tgt, st)) ** 2)
            if f > f_best:
                f_best, chi_best, al_best = f, float(chi), float(al)
    for _ in range(2):
        res = minimize_scalar(
            lambda c: -value(c, al_best),
            bounds=(max(0.0, chi_best - grid_step), min(bound, chi_best + grid_step)),
            method="bounded",
            options={"xatol": xtol},
        )
        chi_best, f_best = float(res.x), float(-res.fun)
        if alpha is None:
            res = minimize_scalar(
                lambda a_: -value(chi_best, a_),
                bounds=(max(0.0, al_best - grid_step), min(bound, al_best + grid_step)),
                method="bounded",
                options={"xatol": xtol},
            )
            al_best, f_best = float(res.x), float(-res.fun)
    return chi_best, al_best, f_best


def aggregate_times(params: DqapParams) -> float:
    """Total schedule weight of an optimized table.

    Real-time tables aggregate to the plain angle sum (an effective
    total evolution time); imaginary tables to half the step sum (an
    effective inverse-temperature weight).
    """
    total = float(params.angles.sum())
    return 0.5 * total if isinstance(params, ImagParams) else total
