"""Layered bond-alternation circuits and their parameter derivatives.

One circuit layer applies the even-family exponential first, then the
odd-family one.  With M layers and two angles per layer there are
K = 2M parameters; the flat ordering follows application order,

    k = 0, 1, 2, 3, ...  ->  even(1), odd(1), even(2), odd(2), ...

The derivative engine runs a single forward pass.  After each
half-layer it transports the already-created derivative stacks with the
same 2x2 bond rotations as the state, then seeds the new derivative
with the bond generator applied to the current prefix state.  Every
seed therefore ends in the final frame, at total cost O(M^2 L N)
without any backward pass.

In imaginary mode the per-column rescaling applied to the prefix state
is applied to all live derivative stacks in the same step, which leaves
the metric, force, and energy of the natural-gradient equations
invariant (they only involve scale-cancelling ratios).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import LatticeSpec, bond_pairs, initial_state
from .slater import SlaterState, apply_bond_layer, _rescale_columns


def _as_table(values, name):
    tab = np.asarray(values, dtype=float)
    if tab.ndim != 2 or tab.shape[1] != 2:
        raise ValueError(f"{name} must have shape (M, 2), got {tab.shape}")
    return tab


@dataclass
class DqapParams:
    """Real-time layer angles, shape (M, 2): column 0 odd family, column 1 even."""

    angles: np.ndarray

    def __post_init__(self):
        self.angles = _as_table(self.angles, "angles")

    @property
    def M(self) -> int:
        return self.angles.shape[0]

    def flatten(self) -> np.ndarray:
        """Flat vector in application order: even(1), odd(1), even(2), ..."""
        return self.angles[:, ::-1].reshape(-1).copy()

    @classmethod
    def from_flat(cls, flat):
        flat = np.asarray(flat, dtype=float)
        return cls(flat.reshape(-1, 2)[:, ::-1])

    def with_flat(self, flat) -> "DqapParams":
        return type(self).from_flat(flat)


@dataclass
class ImagParams(DqapParams):
    """Imaginary-time step table, same layout and flat ordering as DqapParams."""


def _half_layers(table):
    """(family, angle) pairs in application order."""
    out = []
    for m in range(table.shape[0]):
        out.append((2, table[m, 1]))
        out.append((1, table[m, 0]))
    return out


def build_dqap_state(spec: LatticeSpec, params: DqapParams) -> SlaterState:
    """Apply the M-layer real-time circuit to the dimer state."""
    state = SlaterState(initial_state(spec))
    for family, ang in _half_layers(params.angles):
        state = apply_bond_layer(state, family, ang, spec, mode="real")
    return state


def build_imag_state(spec: LatticeSpec, params: ImagParams) -> SlaterState:
    """Apply the M-layer imaginary-time circuit to the dimer state."""
    state = SlaterState(initial_state(spec))
    for family, ang in _half_layers(params.angles):
        state = apply_bond_layer(state, family, ang, spec, mode="imag")
    return state


def intermediate_states(spec: LatticeSpec, params: DqapParams):
    """States after 0, 1, ..., M full layers (M+1 entries)."""
    state = SlaterState(initial_state(spec))
    out = [state]
    for m in range(params.M):
        state = apply_bond_layer(state, 2, params.angles[m, 1], spec, mode="real")
        state = apply_bond_layer(state, 1, params.angles[m, 0], spec, mode="real")
        out.append(state)
    return out


def _apply_generator(orb, a, b, w, t):
    """Bond-family generator -t*w*(c+_a c_b + h.c.) acting on orbitals."""
    out = np.zeros_like(orb)
    out[a] = -t * w[:, None] * orb[b]
    out[b] = -t * w[:, None] * orb[a]
    return out


def state_and_derivatives(spec: LatticeSpec, params: DqapParams, mode="real"):
    """Final state plus all K = 2M parameter derivatives in one pass.

    Returns
    -------
    (state, derivs) : SlaterState and complex array (K, L, N).
        derivs[k] is the derivative of the final orbital matrix with
        respect to flat parameter k, in the same column scaling as the
        state (imaginary mode rescales both together).
    """
    table = params.angles
    m_layers = table.shape[0]
    k_total = 2 * m_layers
    orb = initial_state(spec).astype(complex)
    derivs = np.zeros((k_total, spec.L, spec.N), dtype=complex)
    pairs = {f: bond_pairs(spec, f) for f in (1, 2)}
    factor = -1j if mode == "real" else -1.0
    log_scale = 0.0
    k = 0
    for family, ang in _half_layers(table):
        a, b, w = pairs[family]
        th = ang * spec.t
        if mode == "real":
            c, s = np.cos(th), 1j * np.sin(th) * w
        else:
            c, s = np.cosh(th), np.sinh(th) * w
        ra, rb = orb[a], orb[b]
        orb[a] = c * ra + s[:, None] * rb
        orb[b] = s[:, None] * ra + c * rb
        if k:
            da, db = derivs[:k, a, :], derivs[:k, b, :]
            derivs[:k, a, :] = c * da + s[None, :, None] * db
            derivs[:k, b, :] = s[None, :, None] * da + c * db
        derivs[k] = factor * _apply_generator(orb, a, b, w, spec.t)
        k += 1
        if mode == "imag":
            f = np.abs(orb).max(axis=0)
            orb /= f
            derivs[:k] /= f[None, None, :]
            log_scale += float(np.log(f).sum())
    state = SlaterState(orb, normalized=(mode == "real"), log_scale=log_scale)
    return state, derivs


def dqap_param_derivatives(spec: LatticeSpec, params: DqapParams) -> np.ndarray:
    """Derivatives of the real-time circuit state, stacked (K, L, N)."""
    return state_and_derivatives(spec, params, mode="real")[1]


def imag_param_derivatives(spec: LatticeSpec, params: ImagParams) -> np.ndarray:
    """Derivatives of the imaginary-time circuit state, stacked (K, L, N).

    Column scalings match those of `build_imag_state` at the same
    parameters (the forward passes are identical), so the two calls can
    be combined.
    """
    return state_and_derivatives(spec, params, mode="imag")[1]


def orbital_support(state: SlaterState, threshold: float = 1e-12) -> np.ndarray:
    """Minimal cyclic window length holding each orbital's support.

    An entry counts as occupied when its magnitude exceeds `threshold`.
    The window is cyclic: support {L-1, 0} has extent 2.  Returns an
    int array of length N.
    """
    L = state.L
    out = np.zeros(state.N, dtype=int)
    mag = np.abs(state.orbitals) > threshold
    for n in range(state.N):
        pos = np.flatnonzero(mag[:, n])
        if len(pos) == 0:
            continue
        if len(pos) == 1:
            out[n] = 1
            continue
        gaps = np.diff(pos)
        wrap = pos[0] + L - pos[-1]
        out[n] = L - max(gaps.max(), wrap) + 1
    return out
