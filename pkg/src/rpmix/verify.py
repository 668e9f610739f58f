"""Consistency checks between the recombination-model evolution routes.

Three routes to the surviving-pair state are compared on a common grid:

A. Normalize the exact solution of the unnormalized projection-
   replacement flow at each time.
B. Integrate the normalized nonlinear flow directly.
C. Reconstruct the kinetic mixture w_0(t) rho_0 + w_T(t) rho_T from the
   closed-form survival fractions and a chosen weight scheme.

With the survival-normalized ("corrected") weights, A, B, and C agree to
integration accuracy; that agreement is the package's headline check.
With the disputed exponential weights, route C instead follows the
alternative normalized equation, and the discrepancy check passes
exactly when the resulting divergence from route B is significantly
nonzero, because a confirmed discrepancy is the expected outcome.

All deviations are Frobenius distances at grid points; a check's
tolerance scales as dt^4 when the fixed integration step is changed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .integrator import IntegrationError, Trajectory, analytic_jones_hore, integrate
from .kinetics import (
    P_FLOOR,
    mixture_from_initial,
    mixture_rhs,
    reconstruct,
    weight_rate,
    weights_at,
)
from .models import ModelKind, ModelSingular, RateParams, rhs_normalized_jones_hore
from .spinspace import (
    DensityMatrix,
    electron_pair_space,
    frobenius_distance,
    normalize,
    preset_state,
    random_density_matrix,
    singlet_probability,
    two_level_space,
)

BASE_TOL = 1e-8
BASE_DT_SCALE = 1e-3  # reference step is 1e-3 / k_S
DISCREPANCY_MARGIN = 10.0  # "significantly nonzero" = margin x tolerance
FD_STEP_SCALE = 1e-5
FD_TOL = 1e-6


@dataclass(frozen=True)
class Scenario:
    """One verification scenario: an initial state and integration setup."""

    label: str
    rho_init: DensityMatrix
    k_s: float = 1.0
    t_end: float = 10.0
    n_snapshots: int = 101
    dt: float | None = None

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_snapshots)

    @property
    def step(self) -> float:
        return self.dt if self.dt is not None else BASE_DT_SCALE / self.k_s

    def descriptor(self) -> dict:
        m = self.rho_init.matrix
        return {
            "label": self.label,
            "dim": self.rho_init.dim,
            "singlet_indices": list(self.rho_init.space.singlet_indices),
            "initial_state": [[float(z.real), float(z.imag)] for z in m.reshape(-1)],
            "k_S": self.k_s,
            "t_end": self.t_end,
            "n_snapshots": self.n_snapshots,
            "dt": self.step,
            "method": "rk4-fixed",
        }


@dataclass(frozen=True)
class CheckRecord:
    """Outcome of one check, with the tolerance it was judged against."""

    name: str
    max_deviation: float | None
    t_at_max: float | None
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_deviation": self.max_deviation,
            "t_at_max": self.t_at_max,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "details": self.details,
            "error": self.error,
        }


@dataclass(frozen=True)
class DivergenceCurve:
    """Singlet-probability curves of the two weight-scheme reconstructions."""

    times: np.ndarray
    p_singlet_corrected: np.ndarray
    p_singlet_kominis: np.ndarray

    @property
    def delta(self) -> np.ndarray:
        return self.p_singlet_corrected - self.p_singlet_kominis


@dataclass(frozen=True)
class ConsistencyReport:
    """All check outcomes for one scenario."""

    scenario: dict
    checks: tuple[CheckRecord, ...]
    divergence: DivergenceCurve | None = None

    @property
    def all_passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_dict(self, divergence_ref: str | None = None) -> dict:
        return {
            "scenario": self.scenario,
            "checks": [check.to_dict() for check in self.checks],
            "divergence_curve": divergence_ref,
            "all_passed": self.all_passed,
        }


def _tolerance(k_s: float, dt: float | None) -> float:
    step = dt if dt is not None else BASE_DT_SCALE / k_s
    return BASE_TOL * (step * k_s / BASE_DT_SCALE) ** 4


def _route_b(rho_init: DensityMatrix, k_s: float, grid, dt: float | None) -> Trajectory:
    return integrate(
        ModelKind.NORMALIZED_JONES_HORE,
        rho_init,
        RateParams(k_s=k_s),
        grid,
        method="rk4-fixed",
        dt=dt if dt is not None else BASE_DT_SCALE / k_s,
    )


def _max_over_grid(times, deviations) -> tuple[float, float]:
    idx = int(np.argmax(deviations))
    return float(deviations[idx]), float(times[idx])


def check_route_equivalence(
    rho_init: DensityMatrix, k_s: float, grid, dt: float | None = None
) -> CheckRecord:
    """Normalized exact unnormalized solution vs directly integrated normalized flow."""
    params = RateParams(k_s=k_s)
    traj = _route_b(rho_init, k_s, grid, dt)
    deviations = [
        frobenius_distance(normalize(analytic_jones_hore(rho_init, params, t)), state)
        for t, state in zip(traj.times, traj.states)
    ]
    tol = _tolerance(k_s, dt)
    worst, t_at = _max_over_grid(traj.times, deviations)
    return CheckRecord("route-equivalence", worst, t_at, tol, worst <= tol)


def check_mixture_identity(
    rho_init: DensityMatrix,
    k_s: float,
    grid,
    dt: float | None = None,
    scheme: str = "corrected",
) -> CheckRecord:
    """Kinetic-mixture reconstruction vs the integrated normalized flow.

    Also compares the mixture's derivative against the normalized flow's
    right-hand side at every grid point. With the corrected weights both
    deviations stay at integration accuracy; with the disputed scheme
    this check is expected to fail for 0 < p_T < 1.
    """
    params = RateParams(k_s=k_s)
    mix = mixture_from_initial(rho_init)
    traj = _route_b(rho_init, k_s, grid, dt)
    state_devs = []
    rhs_devs = []
    for t, state in zip(traj.times, traj.states):
        w = weights_at(t, mix, k_s, scheme)
        recon = reconstruct(w, mix)
        state_devs.append(frobenius_distance(recon, state))
        rhs_devs.append(
            frobenius_distance(mixture_rhs(mix, w, k_s), rhs_normalized_jones_hore(recon, params))
        )
    tol = _tolerance(k_s, dt)
    state_worst, t_state = _max_over_grid(traj.times, state_devs)
    rhs_worst, t_rhs = _max_over_grid(traj.times, rhs_devs)
    worst, t_at = max((state_worst, t_state), (rhs_worst, t_rhs))
    return CheckRecord(
        "mixture-identity",
        worst,
        t_at,
        tol,
        state_worst <= tol and rhs_worst <= tol,
        details={
            "scheme": scheme,
            "state_deviation": state_worst,
            "rhs_deviation": rhs_worst,
        },
    )


def check_kominis_discrepancy(
    rho_init: DensityMatrix, k_s: float, grid, dt: float | None = None
) -> tuple[CheckRecord, DivergenceCurve]:
    """Quantify how far the disputed weights drift from the normalized flow.

    Passes when the divergence is significantly nonzero (at least
    DISCREPANCY_MARGIN times the integration tolerance) and the disputed
    reconstruction agrees with direct integration of the alternative
    normalized equation, confirming that the two are the same dynamics.
    """
    mix = mixture_from_initial(rho_init)
    if not 0.0 < mix.p_t < 1.0:
        raise ValueError(
            f"discrepancy check requires 0 < p_T < 1, got p_T = {mix.p_t:.6g}"
        )
    traj = _route_b(rho_init, k_s, grid, dt)
    params = RateParams(k_s=k_s)
    alt_traj = integrate(
        ModelKind.NORMALIZED_KOMINIS,
        rho_init,
        params,
        grid,
        method="rk4-fixed",
        dt=dt if dt is not None else BASE_DT_SCALE / k_s,
    )

    p_corr = np.empty(traj.times.size)
    p_dis = np.empty(traj.times.size)
    frob_devs = np.empty(traj.times.size)
    alt_devs = np.empty(traj.times.size)
    for i, (t, state) in enumerate(zip(traj.times, traj.states)):
        disputed = reconstruct(weights_at(t, mix, k_s, "kominis"), mix)
        corrected = reconstruct(weights_at(t, mix, k_s, "corrected"), mix)
        p_corr[i] = singlet_probability(corrected)
        p_dis[i] = singlet_probability(disputed)
        frob_devs[i] = frobenius_distance(disputed, state)
        alt_devs[i] = frobenius_distance(disputed, alt_traj.states[i])

    tol = _tolerance(k_s, dt)
    curve = DivergenceCurve(traj.times, p_corr, p_dis)
    max_p_diff, t_at = _max_over_grid(traj.times, np.abs(curve.delta))
    max_frob, _ = _max_over_grid(traj.times, frob_devs)
    max_alt, _ = _max_over_grid(traj.times, alt_devs)
    passed = max_p_diff >= DISCREPANCY_MARGIN * tol and max_alt <= tol
    record = CheckRecord(
        "kominis-discrepancy",
        max_p_diff,
        t_at,
        DISCREPANCY_MARGIN * tol,
        passed,
        details={
            "max_frobenius_deviation": max_frob,
            "alternative_flow_agreement": max_alt,
            "p_T": mix.p_t,
        },
    )
    return record, curve


def check_weight_derivative(
    rho_init: DensityMatrix,
    k_s: float,
    t_samples=None,
    fd_step: float | None = None,
) -> CheckRecord:
    """Central finite difference of the corrected weights vs the weight rate.

    Also records the largest disagreement between the two algebraic
    forms of the weight derivative along the samples.
    """
    mix = mixture_from_initial(rho_init)
    if not mix.p_t > 0.0:
        raise ValueError(f"weight-derivative check requires p_T > 0, got {mix.p_t:.6g}")
    if t_samples is None:
        t_samples = np.array([0.1, 0.5, 1.0, 2.0, 5.0]) / k_s
    h = fd_step if fd_step is not None else FD_STEP_SCALE / k_s

    devs = []
    form_gap = 0.0
    for t in np.asarray(t_samples, dtype=float):
        w = weights_at(t, mix, k_s, "corrected")
        rho_nr = reconstruct(w, mix)
        rate = weight_rate(w, rho_nr, mix, k_s)
        kinetic_form = -k_s * w[0] * (w[1] + mix.p_t * w[0])
        form_gap = max(form_gap, abs(kinetic_form - rate))
        w_plus = weights_at(t + h, mix, k_s, "corrected")
        w_minus = weights_at(t - h, mix, k_s, "corrected")
        devs.append(abs(rate - (w_plus[0] - w_minus[0]) / (2.0 * h)))

    worst, t_at = _max_over_grid(np.asarray(t_samples, dtype=float), devs)
    return CheckRecord(
        "weight-derivative",
        worst,
        t_at,
        FD_TOL,
        worst <= FD_TOL and form_gap <= 1e-13,
        details={"form_disagreement": form_gap, "fd_step": h},
    )


def check_kominis_singularity(
    rho_init: DensityMatrix, k_s: float, grid, dt: float | None = None
) -> CheckRecord:
    """Confirm the alternative normalized flow is undefined from singlet-pure states.

    Passes when integration raises the singular-model error while the
    regular normalized flow from the same state stays constant.
    """
    params = RateParams(k_s=k_s)
    step = dt if dt is not None else BASE_DT_SCALE / k_s
    raised = False
    message = None
    try:
        integrate(ModelKind.NORMALIZED_KOMINIS, rho_init, params, grid, method="rk4-fixed", dt=step)
    except ModelSingular as exc:
        raised = True
        message = str(exc)
    traj = _route_b(rho_init, k_s, grid, dt)
    drift = max(frobenius_distance(state, rho_init) for state in traj.states)
    tol = _tolerance(k_s, dt)
    return CheckRecord(
        "kominis-singularity",
        drift,
        None,
        tol,
        raised and drift <= tol,
        details={"singular_message": message, "regular_flow_drift": drift},
    )


def default_battery() -> list[Scenario]:
    """Built-in scenario set: two-level mixtures, superpositions, random states."""
    sp2 = two_level_space()
    sp4 = electron_pair_space()
    scenarios = []
    for p_t in (0.0, 0.25, 0.5, 0.75, 1.0):
        rho = DensityMatrix(sp2, np.diag([1.0 - p_t, p_t]).astype(complex))
        scenarios.append(Scenario(label=f"two-level-mixed-pT-{p_t:.2f}", rho_init=rho))
    scenarios.append(
        Scenario(label="two-level-superposition-equal", rho_init=preset_state(sp2, "st-superposition"))
    )
    psi = np.array([np.sqrt(0.25), np.sqrt(0.75)], dtype=complex)
    scenarios.append(
        Scenario(
            label="two-level-superposition-skew",
            rho_init=DensityMatrix(sp2, np.outer(psi, psi.conj())),
        )
    )
    for seed in (1, 2, 3):
        scenarios.append(
            Scenario(
                label=f"four-level-random-seed-{seed}",
                rho_init=random_density_matrix(sp4, seed),
            )
        )
    return scenarios


def run_scenario(scenario: Scenario, scheme: str = "corrected") -> ConsistencyReport:
    """Run every check applicable to the scenario's initial state."""
    rho, k_s, grid, dt = scenario.rho_init, scenario.k_s, scenario.grid, scenario.dt
    p_t = mixture_from_initial(rho).p_t
    checks: list[CheckRecord] = []
    divergence = None

    def contained(name, fn):
        try:
            return fn()
        except (ModelSingular, IntegrationError, ValueError) as exc:
            return CheckRecord(name, None, None, _tolerance(k_s, dt), False, error=str(exc))

    checks.append(contained("route-equivalence", lambda: check_route_equivalence(rho, k_s, grid, dt)))
    checks.append(
        contained("mixture-identity", lambda: check_mixture_identity(rho, k_s, grid, dt, scheme))
    )
    if p_t > P_FLOOR:
        checks.append(contained("weight-derivative", lambda: check_weight_derivative(rho, k_s)))
    if P_FLOOR < p_t < 1.0 - P_FLOOR:
        outcome = contained(
            "kominis-discrepancy", lambda: check_kominis_discrepancy(rho, k_s, grid, dt)
        )
        if isinstance(outcome, tuple):
            record, divergence = outcome
            checks.append(record)
        else:
            checks.append(outcome)
    elif p_t <= P_FLOOR:
        checks.append(
            contained("kominis-singularity", lambda: check_kominis_singularity(rho, k_s, grid, dt))
        )
    return ConsistencyReport(scenario.descriptor(), tuple(checks), divergence)


def run_suite(scenarios=None, scheme: str = "corrected") -> list[ConsistencyReport]:
    """Run the checks over a scenario battery (the built-in one by default)."""
    if scenarios is None:
        scenarios = default_battery()
    return [run_scenario(s, scheme) for s in scenarios]
