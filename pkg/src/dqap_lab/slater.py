"""Slater-determinant states and the operations closed over them.

A determinant state is an L x N orbital matrix; the physical state is
the antisymmetrized product of its columns.  Quadratic-exponential
layers act column-wise, so every circuit in this package stays inside
this family and all expectation values reduce to determinants and
linear solves.

Imaginary-time layers destroy normalization.  Rather than renormalize
(which would discard the overall weight), each column is rescaled by
its largest entry magnitude after every imaginary layer and the sum of
log factors is accumulated on the state; `overlap` folds the
accumulator back in.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, SingularOverlapError
from .lattice import LatticeSpec, bond_pairs

# Relative determinant magnitude below which overlaps are treated as zero.
_SINGULAR_TOL = 1e-14


@dataclass
class SlaterState:
    """Determinant state: orbitals (L, N), plus bookkeeping.

    `normalized` asserts orthonormal columns (true for every state built
    from exact orbitals or real-time layers only).  `log_scale` is the
    accumulated log of column rescalings pulled out of the orbitals by
    imaginary-time layers; the stored matrix times exp(log_scale) is the
    true (unnormalized) state.
    """

    orbitals: np.ndarray
    normalized: bool = True
    log_scale: float = 0.0

    def __post_init__(self):
        self.orbitals = np.asarray(self.orbitals, dtype=complex)
        if self.orbitals.ndim != 2:
            raise DimensionMismatch(f"orbitals must be 2d, got {self.orbitals.shape}")
        if self.orbitals.shape[0] < self.orbitals.shape[1]:
            raise DimensionMismatch(
                f"more orbitals than sites: {self.orbitals.shape}"
            )

    @property
    def L(self) -> int:
        return self.orbitals.shape[0]

    @property
    def N(self) -> int:
        return self.orbitals.shape[1]

    def copy(self) -> "SlaterState":
        return replace(self, orbitals=self.orbitals.copy())


def _check_compatible(psi: SlaterState, phi: SlaterState):
    if psi.L != phi.L or psi.N != phi.N:
        raise DimensionMismatch(
            f"states have shapes {psi.orbitals.shape} and {phi.orbitals.shape}"
        )


def _overlap_matrix(psi, phi):
    return psi.orbitals.conj().T @ phi.orbitals


def _solve_overlap(a, rhs):
    """Solve a @ x = rhs, rejecting relative determinants below tolerance."""
    scale = np.linalg.norm(a, axis=0)
    if np.any(scale == 0.0):
        raise SingularOverlapError("overlap matrix has a null column")
    sign, logdet = np.linalg.slogdet(a)
    if sign == 0 or logdet - np.log(scale).sum() < np.log(_SINGULAR_TOL):
        raise SingularOverlapError("overlap determinant vanishes to tolerance")
    return np.linalg.solve(a, rhs)


def overlap(psi: SlaterState, phi: SlaterState) -> complex:
    """Many-body overlap <psi|phi> = det(Psi+ Phi), with scale factors restored.

    Uses the pivoted-LU determinant.  For heavily scaled imaginary-time
    states the exp of the accumulated log factors can overflow; compare
    ratios of overlaps in that regime.
    """
    _check_compatible(psi, phi)
    det = np.linalg.det(_overlap_matrix(psi, phi))
    return complex(det * np.exp(psi.log_scale + phi.log_scale))


def transition_density(psi: SlaterState, phi: SlaterState) -> np.ndarray:
    """Normalized one-body transition matrix between determinant states.

    Returns the L x L matrix P with

        P[i, j] = <psi| c+_j c_i |phi> / <psi|phi>,

    i.e. P = Phi (Psi+ Phi)^(-1) Psi+.  With psi = phi this is the
    one-particle density matrix projector (idempotent, trace N);
    column-scale accumulators cancel in the ratio.

    Raises
    ------
    SingularOverlapError
        If det(Psi+ Phi) is below 1e-14 relative to its column norms.
    """
    _check_compatible(psi, phi)
    a = _overlap_matrix(psi, phi)
    x = _solve_overlap(a, psi.orbitals.conj().T)
    return phi.orbitals @ x


def two_body_expectation(psi, phi, x, y, yp, xp) -> complex:
    """Normalized <psi| c+_x c+_y c_yp c_xp |phi> by the two-term Wick sum.

    Indices are 0-based sites.  Built from the transition matrix G with
    G[x, xp] = <c+_x c_xp>:  G[x,xp] G[y,yp] - G[x,yp] G[y,xp].
    """
    p = transition_density(psi, phi)
    g = p.T  # g[x, xp] = <c+_x c_xp>
    return complex(g[x, xp] * g[y, yp] - g[x, yp] * g[y, xp])


def _rescale_columns(orb):
    """Divide each column by its max abs entry; return the log-factor sum."""
    f = np.abs(orb).max(axis=0)
    orb /= f
    return float(np.log(f).sum())


def apply_bond_layer(
    state: SlaterState,
    family: int,
    angle: float,
    spec: LatticeSpec,
    mode: str = "real",
) -> SlaterState:
    """Apply exp(-i*angle*V_family) (real) or exp(-angle*V_family) (imag).

    Each bond of the family mixes exactly one pair of sites, so the
    exponential acts as independent 2x2 blocks.  With the bond operator
    -t*w*(c+_a c_b + h.c.) the block on (a, b) is

        real:  [[cos(angle*t), i*w*sin(angle*t)], [i*w*sin(angle*t), cos(angle*t)]]
        imag:  [[cosh(angle*t), w*sinh(angle*t)], [w*sinh(angle*t), cosh(angle*t)]]

    where w = +1 in the bulk and w = gamma on the boundary bond.
    Real mode preserves the `normalized` flag; imaginary mode clears it
    and rescales columns into `log_scale`.
    """
    if state.L != spec.L:
        raise DimensionMismatch(f"state has L={state.L}, spec has L={spec.L}")
    a, b, w = bond_pairs(spec, family)
    th = angle * spec.t
    orb = state.orbitals.copy()
    ra, rb = orb[a], orb[b]
    if mode == "real":
        c, s = np.cos(th), 1j * np.sin(th) * w
        orb[a] = c * ra + s[:, None] * rb
        orb[b] = s[:, None] * ra + c * rb
        return SlaterState(orb, normalized=state.normalized, log_scale=state.log_scale)
    if mode == "imag":
        c, s = np.cosh(th), np.sinh(th) * w
        orb[a] = c * ra + s[:, None] * rb
        orb[b] = s[:, None] * ra + c * rb
        dlog = _rescale_columns(orb)
        return SlaterState(orb, normalized=False, log_scale=state.log_scale + dlog)
    raise ValueError(f"mode must be 'real' or 'imag', got {mode!r}")


def energy_expectation(state: SlaterState, h: np.ndarray) -> float:
    """Normalized quadratic expectation Re tr[(Psi+ Psi)^(-1) Psi+ h Psi]."""
    if h.shape != (state.L, state.L):
        raise DimensionMismatch(f"h has shape {h.shape}, state has L={state.L}")
    rhs = state.orbitals.conj().T @ (h @ state.orbitals)
    if state.normalized:
        return float(np.trace(rhs).real)
    gram = _overlap_matrix(state, state)
    try:
        val = np.trace(np.linalg.solve(gram, rhs))
    except np.linalg.LinAlgError as exc:
        raise SingularOverlapError("state Gram matrix is singular") from exc
    return float(val.real)
