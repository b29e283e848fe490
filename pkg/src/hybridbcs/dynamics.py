"""Right-hand side of the hybrid equations of motion for (n_k, Delta_k).

The generator splits into a full-Lindblad part and loss/pump corrections
weighted by (alpha - 1); alpha = 1 recovers the Lindblad dynamics, alpha = 0
the normalized no-click (non-Hermitian) dynamics. The hybrid correction
functions return the unprefactored terms so that alpha sweeps can reuse a
single evaluation; rhs_total applies the (alpha - 1) prefactors.

Self-consistent fields (n, Delta, Phi) are recomputed at every evaluation:
the adaptive integrator assumes a pure function of the state. Occupations
are not clamped; physicality (0 <= n_k <= 1, zeta_k <= 1) is monitored by
tests, not enforced here.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import BlowupError, ConfigurationError
from .lattice import BandGrid


@dataclass(frozen=True)
class SystemParams:
    """Interaction, rates and hybrid parameters for one run.

    alpha_loss and alpha_pump may differ in principle; all protocols in this
    package use alpha_loss == alpha_pump.
    """

    u: float
    gamma: float
    pump: float
    alpha_loss: float
    alpha_pump: float
    grid: BandGrid

    def __post_init__(self):
        if self.u < 0 or self.gamma < 0 or self.pump < 0:
            raise ConfigurationError("u, gamma and pump must be non-negative")
        if not (0.0 <= self.alpha_loss <= 1.0) or not (0.0 <= self.alpha_pump <= 1.0):
            raise ConfigurationError("alpha parameters must lie in [0, 1]")


@dataclass
class BcsState:
    """Per-mode occupations n_k (per spin) and pairing amplitudes Delta_k."""

    t: float
    n_k: np.ndarray
    d_k: np.ndarray

    def __post_init__(self):
        self.n_k = np.asarray(self.n_k, dtype=float)
        self.d_k = np.asarray(self.d_k, dtype=complex)
        if self.n_k.shape != self.d_k.shape:
            raise ConfigurationError("n_k and d_k must have the same length")

    def copy(self):
        return BcsState(t=self.t, n_k=self.n_k.copy(), d_k=self.d_k.copy())


@dataclass
class StateDerivative:
    """Time derivative with the same shape as BcsState."""

    dn_k: np.ndarray
    dd_k: np.ndarray

    def __add__(self, other):
        return StateDerivative(self.dn_k + other.dn_k, self.dd_k + other.dd_k)

    def scaled(self, factor):
        return StateDerivative(factor * self.dn_k, factor * self.dd_k)


def density(state, grid):
    """Total density n = 2 sum_k w_k n_k (factor 2 for spin)."""
    return 2.0 * float(np.sum(grid.weights * state.n_k))


def order_parameter(state, grid):
    """Order parameter Delta = sum_k w_k Delta_k."""
    return complex(np.sum(grid.weights * state.d_k))


def gap_field(state, params):
    """Complex pairing drive Phi = (-|U| + i(Gamma - P)) Delta."""
    delta = order_parameter(state, params.grid)
    return (-params.u + 1j * (params.gamma - params.pump)) * delta


def rhs_lindblad(state, params):
    """Full-Lindblad equations of motion for (n_k, Delta_k)."""
    grid = params.grid
    n = density(state, grid)
    phi = gap_field(state, params)
    gamma, pump = params.gamma, params.pump
    hole = 1.0 - 0.5 * n
    dn = (-2.0 * np.imag(phi * np.conj(state.d_k))
          - gamma * n * state.n_k
          + 2.0 * pump * hole * (1.0 - state.n_k))
    dd = (2j * grid.energies * state.d_k
          - 1j * phi * (2.0 * state.n_k - 1.0)
          - gamma * n * state.d_k
          - 2.0 * pump * hole * state.d_k)
    return StateDerivative(dn, dd)


def rhs_hybrid_loss(state, params):
    """Loss correction terms, without the (alpha_loss - 1) prefactor."""
    grid = params.grid
    n = density(state, grid)
    delta = order_parameter(state, grid)
    gamma = params.gamma
    re_dd = np.real(delta * np.conj(state.d_k))
    dn = (-gamma * n * (state.n_k ** 2 - np.abs(state.d_k) ** 2)
          - 4.0 * gamma * re_dd * state.n_k)
    dd = 2.0 * gamma * (-n * state.d_k * state.n_k
                        + delta * state.n_k ** 2
                        - np.conj(delta) * state.d_k ** 2)
    return StateDerivative(dn, dd)


def rhs_hybrid_pump(state, params):
    """Pump correction terms, without the (alpha_pump - 1) prefactor."""
    grid = params.grid
    n = density(state, grid)
    delta = order_parameter(state, grid)
    pump = params.pump
    hole_k = 1.0 - state.n_k
    re_dd = np.real(delta * np.conj(state.d_k))
    dn = (2.0 * pump * (1.0 - 0.5 * n) * (hole_k ** 2 - np.abs(state.d_k) ** 2)
          + 4.0 * pump * re_dd * hole_k)
    dd = 2.0 * pump * ((2.0 - n) * state.d_k * (state.n_k - 1.0)
                       + delta * hole_k ** 2
                       - np.conj(delta) * state.d_k ** 2)
    return StateDerivative(dn, dd)


def rhs_total(state, params):
    """Hybrid generator: Lindblad + (alpha-1)-weighted loss and pump terms."""
    out = rhs_lindblad(state, params)
    if params.gamma != 0.0 and params.alpha_loss != 1.0:
        out = out + rhs_hybrid_loss(state, params).scaled(params.alpha_loss - 1.0)
    if params.pump != 0.0 and params.alpha_pump != 1.0:
        out = out + rhs_hybrid_pump(state, params).scaled(params.alpha_pump - 1.0)
    bad = ~(np.isfinite(out.dn_k) & np.isfinite(out.dd_k.real) & np.isfinite(out.dd_k.imag))
    if np.any(bad):
        mode = int(np.argmax(bad))
        raise BlowupError(f"non-finite derivative at mode {mode}, t={state.t}",
                          t=state.t, mode=mode)
    return out


def particle_hole_transform(state, grid):
    """Map n_k -> 1 - n_k, Delta_k -> -Delta_k* with eps_k -> -eps_k relabeling.

    Exchanges the roles of losses and pumps; requires a PH-symmetric grid.
    """
    partner = grid.ph_partner_indices()
    n_k = 1.0 - state.n_k[partner]
    d_k = -np.conj(state.d_k[partner])
    return BcsState(t=state.t, n_k=n_k, d_k=d_k)
