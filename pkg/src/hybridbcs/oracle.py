"""Exact small-cluster validation of the variational equations of motion.

Every dissipative term of the mode-resolved dynamics is checked against
brute-force dense algebra on clusters of 2 (default) or 3 sites: the
normalized hybrid observable equation of motion evaluated on a Gaussian
BCS-type Fock state must reproduce the variational right-hand side term by
term, since all traces Wick-factorize exactly on a Gaussian state.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import fock
from .dynamics import BcsState, SystemParams, order_parameter, rhs_total
from .errors import ConfigurationError
from .lattice import BandGrid


def exact_hybrid_rhs(rho, hamiltonian, jumps, alpha, observable):
    """d<O>/dt of the normalized hybrid dynamics by dense matrix algebra.

    Three contributions: the commutator term, the alpha-weighted recycling
    term, and the (alpha - 1) anticommutator term minus its disconnected
    (normalization) part. `alpha` may be a scalar or a per-jump sequence.
    """
    dim = rho.shape[0]
    if hamiltonian.shape[0] != dim or observable.shape[0] != dim:
        raise ConfigurationError("operator dimensions do not match the state")
    alphas = np.broadcast_to(alpha, (len(jumps),)) if len(jumps) else []
    tr = np.trace(rho)
    ev = lambda op: np.trace(rho @ op) / tr
    total = -1j * ev(fock.commutator(observable, hamiltonian))
    for jump, a in zip(jumps, alphas):
        jd = fock.dagger(jump)
        jdj = jd @ jump
        total += 0.5 * a * (ev(jd @ fock.commutator(observable, jump))
                            - ev(fock.commutator(observable, jd) @ jump))
        total += 0.5 * (a - 1.0) * (ev(fock.anticommutator(jdj, observable))
                                    - 2.0 * ev(jdj) * ev(observable))
    return total


class MomentumCluster:
    """L-site periodic cluster in the momentum basis with (k up, -k down) pairing.

    Momentum m pairs with m' = (L - m) % L; the Jordan-Wigner mode ordering
    places the two members of every pairing channel adjacently so Gaussian
    pair states factorize. Site operators are Fourier combinations of the
    momentum operators.
    """

    def __init__(self, energies):
        energies = np.asarray(energies, dtype=float)
        n_sites = len(energies)
        for m in range(n_sites):
            mp = (n_sites - m) % n_sites
            if abs(energies[m] - energies[mp]) > 1e-12:
                raise ConfigurationError("energies must satisfy eps(k) = eps(-k)")
        self.n_sites = n_sites
        self.energies = energies
        self.up = {}
        self.down = {}
        order = []  # (momentum, spin) in JW order, pairing partners adjacent
        seen = set()
        for m in range(n_sites):
            if m in seen:
                continue
            mp = (n_sites - m) % n_sites
            seen.update((m, mp))
            if mp == m:
                order += [(m, "up"), (m, "down")]
            else:
                order += [(m, "up"), (mp, "down"), (mp, "up"), (m, "down")]
        for idx, (m, spin) in enumerate(order):
            (self.up if spin == "up" else self.down)[m] = idx
        self.c = fock.annihilation_operators(2 * n_sites)
        self.dim = self.c[0].shape[0]
        # c_{i sigma} = (1/sqrt(L)) sum_k exp(i k r_i) c_{k sigma}
        phases = np.exp(2j * np.pi * np.outer(np.arange(n_sites), np.arange(n_sites))
                        / n_sites) / np.sqrt(n_sites)
        self.site_up = [sum(phases[i, m] * self.c[self.up[m]] for m in range(n_sites))
                        for i in range(n_sites)]
        self.site_down = [sum(phases[i, m] * self.c[self.down[m]] for m in range(n_sites))
                          for i in range(n_sites)]

    def pairing_channels(self):
        """(mode a, mode b) = (k up, -k down) JW index pairs, one per momentum."""
        return [(self.up[m], self.down[(self.n_sites - m) % self.n_sites])
                for m in range(self.n_sites)]

    def occupation_operator(self, m, spin="up"):
        c = self.c[self.up[m] if spin == "up" else self.down[m]]
        return fock.dagger(c) @ c

    def pairing_operator(self, m):
        a, b = self.pairing_channels()[m]
        return fock.dagger(self.c[a]) @ fock.dagger(self.c[b])

    def gaussian_state(self, n_k, d_k):
        # The mode ordering makes every channel JW-adjacent (b = a + 1), so the
        # Gaussian state is a plain product of commuting pair blocks.
        pairs = self.pairing_channels()
        return fock.pair_condensate_state(self.c, pairs, list(n_k), list(d_k))

    def mean_field_hamiltonian(self, delta, u):
        """Pairing-channel mean-field Hamiltonian with instantaneous Delta.

        Kinetic part sum_{k sigma} eps_k n_{k sigma} plus the local pairing
        -|U| Delta sum_i c_{i down} c_{i up} + h.c.; no Hartree shift.
        """
        h = np.zeros((self.dim, self.dim), dtype=complex)
        for m in range(self.n_sites):
            h += self.energies[m] * (self.occupation_operator(m, "up")
                                     + self.occupation_operator(m, "down"))
        pair_sum = np.zeros_like(h)
        for i in range(self.n_sites):
            pair_sum += self.site_down[i] @ self.site_up[i]
        h += -u * delta * pair_sum + np.conj(-u * delta) * fock.dagger(pair_sum)
        return h

    def jump_operators(self, gamma, pump):
        """Per-site pair-loss and pair-pump jump operators with their alphas' slots."""
        losses, pumps = [], []
        for i in range(self.n_sites):
            if gamma > 0:
                losses.append(np.sqrt(2.0 * gamma) * self.site_down[i] @ self.site_up[i])
            if pump > 0:
                pumps.append(np.sqrt(2.0 * pump)
                             * fock.dagger(self.site_up[i]) @ fock.dagger(self.site_down[i]))
        return losses, pumps


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst_residual: float
    tolerance: float
    detail: str = ""

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        line = (f"[{status}] {self.name}: worst residual {self.worst_residual:.3e} "
                f"(tolerance {self.tolerance:.1e})")
        return line + (f" -- {self.detail}" if self.detail else "")


def check_eom_equivalence(state, params, corrupt=None):
    """Compare rhs_total against the exact hybrid EOM on the matching cluster.

    The grid must have one mode per cluster momentum with equal weights 1/L.
    Returns (max_residual, detail) where detail names the worst offending
    (operator, mode) pair.
    """
    grid = params.grid
    n_sites = grid.n_modes
    if not np.allclose(grid.weights, 1.0 / n_sites):
        raise ConfigurationError("cluster comparison needs uniform weights 1/L")
    cluster = MomentumCluster(grid.energies)
    rho = cluster.gaussian_state(state.n_k, state.d_k)
    delta = order_parameter(state, grid)
    h = cluster.mean_field_hamiltonian(delta, params.u)
    losses, pumps = cluster.jump_operators(params.gamma, params.pump)
    jumps = losses + pumps
    alphas = [params.alpha_loss] * len(losses) + [params.alpha_pump] * len(pumps)

    variational = rhs_total(state, params)
    dn = variational.dn_k.astype(float).copy()
    dd = variational.dd_k.astype(complex).copy()
    if corrupt == "occupation":
        dn = dn + 1e-3
    elif corrupt == "pairing":
        dd = dd + 1e-3

    worst = (0.0, "")
    for m in range(n_sites):
        exact_n = exact_hybrid_rhs(rho, h, jumps, alphas, cluster.occupation_operator(m))
        res = abs(exact_n - dn[m])
        if res > worst[0]:
            worst = (res, f"operator=n_k mode={m} alpha={params.alpha_loss}")
        exact_d = exact_hybrid_rhs(rho, h, jumps, alphas, cluster.pairing_operator(m))
        res = abs(exact_d - dd[m])
        if res > worst[0]:
            worst = (res, f"operator=Delta_k mode={m} alpha={params.alpha_loss}")
    return worst


def random_physical_state(rng, n_modes, margin=0.95):
    """Random (n_k, Delta_k) with zeta_k <= 1 (sub-unit pseudospin length)."""
    n_k = rng.uniform(0.15, 0.85, size=n_modes)
    mag = np.sqrt(rng.uniform(0.0, margin, size=n_modes) * n_k * (1.0 - n_k))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=n_modes)
    return BcsState(t=0.0, n_k=n_k, d_k=mag * np.exp(1j * phase))


def cluster_grid(n_sites, energy_scale=0.5):
    """Uniform-weight grid matching an L-site cluster, eps(k) = eps(-k)."""
    if n_sites == 2:
        energies = np.array([-energy_scale, energy_scale])
    elif n_sites == 3:
        energies = np.array([0.0, energy_scale, energy_scale])
    else:
        raise ConfigurationError("cluster size must be 2 or 3")
    return BandGrid(n_modes=n_sites, energies=energies,
                    weights=np.full(n_sites, 1.0 / n_sites), bandwidth=1.0)


def run_eom_suite(seeds=20, n_sites=2, u=1.0, tolerance=1e-10, corrupt=None):
    """EOM equivalence over random states and an (alpha, Gamma, P) grid."""
    grid = cluster_grid(n_sites)
    points = [(a, g, p)
              for a in (0.0, 0.5, 1.0)
              for g, p in ((0.3, 0.0), (0.0, 0.25), (0.3, 0.25))]
    worst = (0.0, "")
    for seed in range(seeds):
        rng = np.random.default_rng(1000 + seed)
        state = random_physical_state(rng, n_sites)
        if n_sites == 3:
            # The variational manifold assumes n_k = n_{-k}, Delta_k = Delta_{-k}.
            state.n_k[2] = state.n_k[1]
            state.d_k[2] = state.d_k[1]
        for a, g, p in points:
            params = SystemParams(u=u, gamma=g, pump=p, alpha_loss=a, alpha_pump=a,
                                  grid=grid)
            res, detail = check_eom_equivalence(state, params, corrupt=corrupt)
            if res > worst[0]:
                worst = (res, f"seed={seed} {detail} gamma={g} pump={p}")
    return CheckReport("eom-equivalence", worst[0] <= tolerance, worst[0],
                       tolerance, worst[1])


def _random_interaction(rng, n_orb):
    """Random U_abcd with U_abcd = U_badc and Hermiticity U*_abcd = U_dcba."""
    raw = rng.normal(size=(n_orb,) * 4) + 1j * rng.normal(size=(n_orb,) * 4)
    sym = raw + raw.transpose(1, 0, 3, 2)
    return 0.5 * (sym + np.conj(sym.transpose(3, 2, 1, 0)))


def check_hf_trace_identity(seed=0, n_orb=4, kappa_single=None):
    """Gaussian trace identity for the generic two-body-loss Liouvillian.

    Tr(rho_aux L_1[rho_0]) must equal Tr(rho_aux L_HF[rho_0]) for a normal
    Gaussian rho_0 and any rho_aux that is (at most) quadratic in the
    fermion operators; operators with more fermion lines can absorb extra
    contractions from the quartic generator, which the single-particle
    reduction by construction drops. Returns the absolute residual.
    """
    rng = np.random.default_rng(7000 + seed)
    c = fock.annihilation_operators(n_orb)
    dim = c[0].shape[0]

    t_hop = rng.normal(size=(n_orb, n_orb)) + 1j * rng.normal(size=(n_orb, n_orb))
    t_hop = 0.5 * (t_hop + t_hop.conj().T)
    u4 = _random_interaction(rng, n_orb)
    if kappa_single is not None:
        a0, b0, val = kappa_single
        kappa = np.zeros((n_orb, n_orb))
        kappa[a0, b0] = kappa[b0, a0] = val
    else:
        kappa = rng.uniform(0.0, 1.0, size=(n_orb, n_orb))
    s = np.sqrt(kappa)
    # The jump operator only sees the antisymmetric part of sqrt(kappa) (it
    # multiplies c_a c_b), and only that part carries the pair-exchange
    # symmetry the effective couplings rely on.
    s_eff = 0.5 * (s - s.T)

    h_many = np.zeros((dim, dim), dtype=complex)
    for a in range(n_orb):
        for b in range(n_orb):
            h_many += t_hop[a, b] * fock.dagger(c[a]) @ c[b]
    for a in range(n_orb):
        for b in range(n_orb):
            for cc in range(n_orb):
                for d in range(n_orb):
                    if u4[a, b, cc, d] != 0:
                        h_many += 0.5 * u4[a, b, cc, d] * (
                            fock.dagger(c[a]) @ fock.dagger(c[b]) @ c[cc] @ c[d])

    jump = np.zeros((dim, dim), dtype=complex)
    for a in range(n_orb):
        for b in range(n_orb):
            jump += s[a, b] * c[a] @ c[b]

    h1 = rng.normal(size=(n_orb, n_orb)) + 1j * rng.normal(size=(n_orb, n_orb))
    rho0 = fock.thermal_gaussian(c, 0.5 * (h1 + h1.conj().T))
    z = rng.normal(size=(3, n_orb, n_orb)) + 1j * rng.normal(size=(3, n_orb, n_orb))
    rho_aux = (rng.normal() + 1j * rng.normal()) * np.eye(dim, dtype=complex)
    for a in range(n_orb):
        for b in range(n_orb):
            rho_aux += (z[0, a, b] * fock.dagger(c[a]) @ c[b]
                        + z[1, a, b] * fock.dagger(c[a]) @ fock.dagger(c[b])
                        + z[2, a, b] * c[a] @ c[b])

    jd = fock.dagger(jump)
    lhs_gen = (-1j * fock.commutator(h_many, rho0)
               + jump @ rho0 @ jd - 0.5 * fock.anticommutator(jd @ jump, rho0))
    lhs = np.trace(rho_aux @ lhs_gen)

    g = np.array([[fock.expectation(rho0, fock.dagger(c[a]) @ c[d])
                   for d in range(n_orb)] for a in range(n_orb)])
    v4 = u4 - u4.transpose(0, 1, 3, 2)
    heff = t_hop + np.einsum("ad,abcd->bc", g, v4)
    h_hf = np.zeros((dim, dim), dtype=complex)
    for b in range(n_orb):
        for cc in range(n_orb):
            h_hf += heff[b, cc] * fock.dagger(c[b]) @ c[cc]

    gamma4 = np.einsum("ba,cd->abcd", s_eff, s_eff)
    gbar = gamma4 - gamma4.transpose(0, 1, 3, 2)
    m_eff = 2.0 * np.einsum("ad,abcd->bc", g, gbar)
    rhs_gen = -1j * fock.commutator(h_hf, rho0)
    for b in range(n_orb):
        for cc in range(n_orb):
            if m_eff[b, cc] != 0:
                rhs_gen += m_eff[b, cc] * (
                    c[cc] @ rho0 @ fock.dagger(c[b])
                    - 0.5 * fock.anticommutator(fock.dagger(c[b]) @ c[cc], rho0))
    rhs = np.trace(rho_aux @ rhs_gen)
    return abs(lhs - rhs)


def run_hf_suite(seeds=10, tolerance=1e-12):
    worst = (0.0, "")
    for seed in range(seeds):
        res = check_hf_trace_identity(seed=seed)
        if res > worst[0]:
            worst = (res, f"seed={seed}")
    # Single symmetric kappa entry: the antisymmetrization is nontrivial.
    res = check_hf_trace_identity(seed=99, kappa_single=(0, 2, 0.7))
    if res > worst[0]:
        worst = (res, "kappa_single")
    return CheckReport("hf-trace-identity", worst[0] <= tolerance, worst[0],
                       tolerance, worst[1])


def _hybrid_liouvillian(rho, hamiltonian, jumps, alphas):
    gen = -1j * fock.commutator(hamiltonian, rho)
    for jump, a in zip(jumps, alphas):
        jd = fock.dagger(jump)
        gen += a * jump @ rho @ jd - 0.5 * fock.anticommutator(jd @ jump, rho)
    return gen


def check_norm_conserving_equivalence(rho, hamiltonian, jumps, alpha, observable, dt):
    """One Euler step under the raw hybrid generator (then normalized) vs one
    step under the norm-conserving generator; returns (residual, trace_defect).

    The two observable values agree to O(dt^2); trace_defect is
    |Tr L-bar[rho]|, zero for the norm-conserving generator.
    """
    alphas = np.broadcast_to(alpha, (len(jumps),))
    rho = rho / np.trace(rho)
    gen = _hybrid_liouvillian(rho, hamiltonian, jumps, alphas)
    leak = sum((a - 1.0) * fock.expectation(rho, fock.dagger(j) @ j)
               for j, a in zip(jumps, alphas))
    gen_bar = gen - rho * leak
    trace_defect = abs(np.trace(gen_bar))

    rho_a = rho + dt * gen
    val_a = np.trace(rho_a @ observable) / np.trace(rho_a)
    rho_b = rho + dt * gen_bar
    val_b = np.trace(rho_b @ observable) / np.trace(rho_b)
    return abs(val_a - val_b), trace_defect


def nh_finite_difference_rhs(rho, hamiltonian, jumps, observable, dt=1e-6):
    """d<O>/dt in the no-click limit from the normalized NH propagator."""
    h_nh = hamiltonian.astype(complex).copy()
    for jump in jumps:
        h_nh += -0.5j * fock.dagger(jump) @ jump

    def value(step):
        u = expm(-1j * h_nh * step)
        rho_t = u @ rho @ fock.dagger(u)
        return np.trace(rho_t @ observable) / np.trace(rho_t)

    return (value(dt) - value(-dt)) / (2.0 * dt)


def run_norm_conserving_suite(seeds=5, tolerance=0.1):
    """Richardson dt^2 order check of the norm-conserving equivalence."""
    cluster = MomentumCluster([-0.4, 0.4])
    worst_slope_err = (0.0, "")
    trace_tol_ok = True
    for seed in range(seeds):
        rng = np.random.default_rng(3000 + seed)
        state = random_physical_state(rng, 2)
        rho = cluster.gaussian_state(state.n_k, state.d_k)
        delta = np.mean(state.d_k)
        h = cluster.mean_field_hamiltonian(delta, 1.0)
        losses, pumps = cluster.jump_operators(0.3, 0.2)
        jumps = losses + pumps
        obs = cluster.occupation_operator(0)
        for alpha in (0.0, 0.5):
            dts = np.array([4e-3, 2e-3, 1e-3])
            res = []
            for dt in dts:
                r, defect = check_norm_conserving_equivalence(rho, h, jumps, alpha,
                                                              obs, dt)
                res.append(r)
                if defect > 1e-13:
                    trace_tol_ok = False
            slope = np.polyfit(np.log(dts), np.log(res), 1)[0]
            err = abs(slope - 2.0)
            if err > worst_slope_err[0]:
                worst_slope_err = (err, f"seed={seed} alpha={alpha} slope={slope:.3f}")
    passed = worst_slope_err[0] <= tolerance and trace_tol_ok
    detail = worst_slope_err[1] + ("" if trace_tol_ok else "; trace defect > 1e-13")
    return CheckReport("norm-conserving-richardson", passed, worst_slope_err[0],
                       tolerance, detail)


def run_nh_suite(seeds=5, tolerance=1e-8):
    """No-click limit: the alpha = 0 generator must match a central finite
    difference of normalized observables propagated with exp(-i H_nh t)."""
    cluster = MomentumCluster([-0.4, 0.4])
    worst = (0.0, "")
    for seed in range(seeds):
        rng = np.random.default_rng(4000 + seed)
        state = random_physical_state(rng, 2)
        rho = cluster.gaussian_state(state.n_k, state.d_k)
        delta = np.mean(state.d_k)
        h = cluster.mean_field_hamiltonian(delta, 1.0)
        losses, pumps = cluster.jump_operators(0.3, 0.2)
        jumps = losses + pumps
        for m in range(2):
            for obs, name in ((cluster.occupation_operator(m), "n_k"),
                              (cluster.pairing_operator(m), "Delta_k")):
                fd = nh_finite_difference_rhs(rho, h, jumps, obs)
                ex = exact_hybrid_rhs(rho, h, jumps, 0.0, obs)
                res = abs(fd - ex)
                if res > worst[0]:
                    worst = (res, f"seed={seed} operator={name} mode={m}")
    return CheckReport("no-click-propagator", worst[0] <= tolerance, worst[0],
                       tolerance, worst[1])


def run_all_checks(seeds=20, n_sites=2, corrupt=None):
    """All oracle suites; returns a list of CheckReport."""
    if n_sites not in (2, 3):
        raise ConfigurationError("oracle supports 2 or 3 sites only")
    return [
        run_eom_suite(seeds=seeds, n_sites=n_sites, corrupt=corrupt),
        run_hf_suite(seeds=10),
        run_norm_conserving_suite(),
        run_nh_suite(),
    ]
