"""Natural-gradient minimization of the hopping energy over circuit angles.

The update solves (S + S* + ridge) dtheta = -delta_beta (f + f*) where S
is the overlap metric of the parameter derivatives and f the force
vector.  Both are assembled from the stacked derivatives of the circuit
state; for unnormalized imaginary-time states every trace carries the
inverse Gram factor, which makes all quantities invariant under the
column rescaling done inside the derivative engine.

With the metric on the left this flow is a discretized imaginary-time
evolution projected onto the variational manifold, so the energy trace
is non-increasing for small delta_beta.  That bound is first order; at
finite delta_beta a shift along a soft metric mode can leave the linear
regime, so the run loop halves any shift that would raise the energy.
Well-conditioned steps are taken whole.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import (
    DqapParams,
    ImagParams,
    build_dqap_state,
    build_imag_state,
    state_and_derivatives,
)
from .errors import LinearSolveError, SingularOverlapError
from .lattice import LatticeSpec, build_hamiltonian, initial_state
from .slater import SlaterState, energy_expectation

_LSTSQ_CUTOFF = 1e-12
_MAX_HALVINGS = 60


@dataclass
class OptimizerConfig:
    """Knobs for the natural-gradient loop.

    init_mode is one of 'linear-schedule', 'random', 'zeros+noise',
    'warm-start' (the last requires explicit initial parameters).
    init_scale is the base step of the linear schedule and the upper
    bound of the random draw, in units of 1/t.
    """

    max_iters: int = 200_000
    energy_tol: float = 1e-13
    ridge: float = 1e-10
    delta_beta: float = 0.01
    init_mode: str = "linear-schedule"
    init_scale: float = 0.01
    seed: int | None = None


@dataclass
class NaturalGradientWorkspace:
    """Assembled metric S (K, K), force f (K,), and current energy."""

    metric: np.ndarray
    force: np.ndarray
    energy: float


@dataclass
class OptResult:
    params: DqapParams
    energy: float
    trace: np.ndarray
    iterations: int
    converged: bool


def assemble_metric_and_force(
    state: SlaterState, derivs: np.ndarray, h: np.ndarray
) -> NaturalGradientWorkspace:
    """Metric, force, and energy from a state and its derivative stacks.

    For a normalized state (real-time circuits, Psi+ Psi = 1):

        S_kk' = tr[A_k+ A_k'] - tr[A_k+ Psi Psi+ A_k']
        f_k   = tr[A_k+ (h Psi - Psi (Psi+ h Psi))]

    For an unnormalized state G the same expressions hold with every
    inner trace weighted by F = (G+ G)^(-1); the F factors are folded in
    through a Cholesky factor of F so both branches reduce to two Gram
    products over stacked matrices.
    """
    orb = state.orbitals
    kdim = derivs.shape[0]
    hpsi = h @ orb
    rhs = orb.conj().T @ hpsi
    if kdim == 0:
        if state.normalized:
            energy = float(np.trace(rhs).real)
        else:
            gram = orb.conj().T @ orb
            energy = float(np.trace(np.linalg.solve(gram, rhs)).real)
        empty = np.zeros((0, 0), dtype=complex)
        return NaturalGradientWorkspace(empty, np.zeros(0, dtype=complex), energy)

    if state.normalized:
        energy = float(np.trace(rhs).real)
        aflat = derivs.reshape(kdim, -1)
        term1 = aflat.conj() @ aflat.T
        proj = np.tensordot(derivs, orb.conj(), axes=([1], [0]))
        pflat = proj.reshape(kdim, -1)
        term2 = pflat.conj() @ pflat.T
        x = hpsi - orb @ rhs
        force = aflat.conj() @ x.ravel()
        return NaturalGradientWorkspace(term1 - term2, force, energy)

    gram = orb.conj().T @ orb
    fmat = np.linalg.inv(gram)
    fmat = 0.5 * (fmat + fmat.conj().T)
    energy = float(np.trace(fmat @ rhs).real)
    fhalf = np.linalg.cholesky(fmat)
    # first term: stacks weighted by F on the right
    yflat = (derivs @ fhalf).reshape(kdim, -1)
    term1 = yflat.conj() @ yflat.T
    # second term: projections G+ dG sandwiched between Cholesky factors
    z = np.tensordot(derivs, orb.conj(), axes=([1], [0]))  # z[k] = (G+ dG_k).T
    q = fhalf.T @ z @ fhalf.conj()  # equals (fhalf+ (G+ dG_k) fhalf).T
    qflat = q.reshape(kdim, -1)
    term2 = qflat.conj() @ qflat.T
    x = (hpsi - orb @ (fmat @ rhs)) @ fmat
    force = derivs.reshape(kdim, -1).conj() @ x.ravel()
    return NaturalGradientWorkspace(term1 - term2, force, energy)


def _solve_step(workspace: NaturalGradientWorkspace, config: OptimizerConfig):
    """Proposed angle shift: pseudo-solve of the regularized real system.

    The symmetrized metric is PSD up to rounding and factorized
    spectrally (Hermitian eigendecomposition).  Modes below 1e-12 of the
    top eigenvalue carry force components that are pure cancellation
    noise, and the ridge alone would amplify that noise into wild
    parameter jumps; those modes are truncated, the rest inverted with
    the ridge shift.
    """
    a = (workspace.metric + workspace.metric.conj()).real
    a = 0.5 * (a + a.T)
    b = -2.0 * config.delta_beta * workspace.force.real
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise LinearSolveError("metric eigendecomposition failed") from exc
    top = w[-1] if len(w) else 0.0
    if top <= 0.0:
        return np.zeros(len(b))
    keep = w > _LSTSQ_CUTOFF * top
    vk = v[:, keep]
    dtheta = vk @ ((vk.T @ b) / (w[keep] + config.ridge))
    if not np.all(np.isfinite(dtheta)):
        raise LinearSolveError("natural-gradient system produced non-finite step")
    return dtheta


def natural_gradient_step(
    workspace: NaturalGradientWorkspace,
    params: DqapParams,
    config: OptimizerConfig,
) -> DqapParams:
    """One update: solve the regularized real system and shift the angles."""
    return params.with_flat(params.flatten() + _solve_step(workspace, config))


def linear_schedule_params(m_layers, spec=None, scale=0.01, cls=DqapParams):
    """Angles of the discretized interpolation: odd family constant,
    even family ramping linearly to the full step over the M layers."""
    t = spec.t if spec is not None else 1.0
    dtau = scale / t
    table = np.empty((m_layers, 2))
    table[:, 0] = dtau
    table[:, 1] = dtau * np.arange(1, m_layers + 1) / max(m_layers, 1)
    return cls(table)


def _initial_params(spec, m_layers, config, init, cls):
    if init is not None:
        return cls(np.asarray(init.angles, dtype=float).copy())
    if config.init_mode == "warm-start":
        raise ValueError("init_mode 'warm-start' needs explicit initial parameters")
    if config.init_mode == "linear-schedule":
        return linear_schedule_params(m_layers, spec, config.init_scale, cls)
    rng = np.random.default_rng(config.seed)
    if config.init_mode == "random":
        return cls(rng.uniform(0.0, config.init_scale / spec.t, (m_layers, 2)))
    if config.init_mode == "zeros+noise":
        return cls(rng.uniform(0.0, 1e-2 * config.init_scale / spec.t, (m_layers, 2)))
    raise ValueError(f"unknown init_mode {config.init_mode!r}")


def _run(spec, params, mode, config):
    h = build_hamiltonian(spec)
    if params.M == 0:
        state = SlaterState(initial_state(spec))
        ws = assemble_metric_and_force(state, np.zeros((0, spec.L, spec.N)), h)
        return OptResult(params, ws.energy, np.array([ws.energy]), 0, True)
    state, derivs = state_and_derivatives(spec, params, mode=mode)
    ws = assemble_metric_and_force(state, derivs, h)
    trace = [ws.energy]
    converged = False
    it = 0
    build = build_imag_state if mode == "imag" else build_dqap_state
    while it < config.max_iters:
        dtheta = _solve_step(ws, config)
        flat = params.flatten()
        accepted = None
        scale = 1.0
        for _ in range(_MAX_HALVINGS):
            trial = params.with_flat(flat + scale * dtheta)
            try:
                energy = energy_expectation(build(spec, trial), h)
            except SingularOverlapError:
                scale *= 0.5
                continue
            if energy <= trace[-1]:
                accepted = trial
                break
            scale *= 0.5
        if accepted is None:
            # No scale of the proposed shift descends: the state sits at
            # the numerical floor of this basin.
            converged = True
            break
        params = accepted
        it += 1
        state, derivs = state_and_derivatives(spec, params, mode=mode)
        ws = assemble_metric_and_force(state, derivs, h)
        trace.append(ws.energy)
        if abs(trace[-1] - trace[-2]) / (abs(trace[-1]) + 1.0) < config.energy_tol:
            converged = True
            break
    return OptResult(params, trace[-1], np.asarray(trace), it, converged)


def optimize(
    spec: LatticeSpec,
    m_layers: int,
    config: OptimizerConfig | None = None,
    init: DqapParams | None = None,
) -> OptResult:
    """Minimize the hopping energy over an M-layer real-time circuit."""
    config = config or OptimizerConfig()
    params = _initial_params(spec, m_layers, config, init, DqapParams)
    return _run(spec, params, "real", config)


def optimize_imaginary(
    spec: LatticeSpec,
    m_layers: int,
    config: OptimizerConfig | None = None,
    init: ImagParams | None = None,
) -> OptResult:
    """Minimize the hopping energy over an M-layer imaginary-time circuit."""
    config = config or OptimizerConfig()
    params = _initial_params(spec, m_layers, config, init, ImagParams)
    return _run(spec, params, "imag", config)


def warm_start(params: DqapParams) -> DqapParams:
    """Grow an optimized M-layer table to M+1 layers.

    Inserts the average of layers j and j+1 after layer j, with
    j = M // 2 (for M = 1 the single layer is duplicated).  The new
    table is the usual initialization for the next optimization rung.
    """
    table = params.angles
    m = table.shape[0]
    if m == 0:
        raise ValueError("cannot warm-start from an empty table")
    if m == 1:
        new = np.vstack([table[0], table[0]])
    else:
        j = m // 2
        new = np.insert(table, j, 0.5 * (table[j - 1] + table[j]), axis=0)
    return type(params)(new)
