"""Discretized flat-density-of-states band.

All momentum sums are quadrature sums over this grid: a smooth function f
of the band energy is integrated as sum_k w_k f(eps_k), with sum_k w_k = 1.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class BandGrid:
    """Discretized band of width `bandwidth` with flat density of states.

    Immutable after construction; safe to share between threads.
    """

    n_modes: int
    energies: np.ndarray
    weights: np.ndarray
    bandwidth: float

    def __post_init__(self):
        energies = np.asarray(self.energies, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "weights", weights)
        if self.n_modes < 1 or len(energies) != self.n_modes or len(weights) != self.n_modes:
            raise ConfigurationError("energies/weights length must equal n_modes")
        if self.bandwidth <= 0:
            raise ConfigurationError("bandwidth must be positive")
        if np.any(weights <= 0):
            raise ConfigurationError("quadrature weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ConfigurationError("quadrature weights must sum to 1")
        energies.setflags(write=False)
        weights.setflags(write=False)

    def ph_partner_indices(self):
        """Index array j' with eps_{j'} = -eps_j and w_{j'} = w_j.

        Raises ConfigurationError if the grid is not particle-hole symmetric.
        """
        order = np.argsort(self.energies, kind="stable")
        rev = np.argsort(-self.energies, kind="stable")
        partner = np.empty(self.n_modes, dtype=int)
        partner[order] = rev
        tol = 1e-12 * self.bandwidth
        if not np.allclose(self.energies[partner], -self.energies, atol=tol, rtol=0):
            raise ConfigurationError("grid is not particle-hole symmetric")
        if not np.allclose(self.weights[partner], self.weights, atol=1e-14, rtol=0):
            raise ConfigurationError("grid weights are not particle-hole symmetric")
        return partner

    def nearest_mode(self, energy):
        """Index of the grid mode closest to the requested energy."""
        return int(np.argmin(np.abs(self.energies - energy)))


def build_flat_band(bandwidth, n_modes):
    """Midpoint-rule discretization of the flat band on [-W/2, W/2].

    n_modes must be even so the Fermi level eps = 0 falls between modes and
    the grid is exactly particle-hole symmetric; no mode sits at eps = 0 or
    at the band edges.
    """
    if bandwidth <= 0:
        raise ConfigurationError("bandwidth must be positive")
    if n_modes < 2 or n_modes % 2 != 0:
        raise ConfigurationError("n_modes must be an even integer >= 2")
    j = np.arange(n_modes)
    energies = -bandwidth / 2 + (j + 0.5) * bandwidth / n_modes
    weights = np.full(n_modes, 1.0 / n_modes)
    return BandGrid(n_modes=n_modes, energies=energies, weights=weights,
                    bandwidth=float(bandwidth))


def revival_time(grid):
    """Finite-grid dephasing revival time, 2*pi*n_modes / W."""
    return 2.0 * np.pi * grid.n_modes / grid.bandwidth
