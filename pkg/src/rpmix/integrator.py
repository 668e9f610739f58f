"""Time evolution of the master-equation variants.

Two steppers act on the raw density matrix:

- "rk4-fixed": classic fourth-order Runge-Kutta with a uniform substep,
  the workhorse for convergence-order and consistency tests.
- "rk45-adaptive": Fehlberg embedded 4(5) pair with standard
  error-controlled step adjustment (safety factor 0.9, step clamped to
  [1e-12, t_end]); the fifth-order solution is propagated.

Every accepted step is followed by re-symmetrization
rho <- (rho + rho^dagger)/2, which keeps snapshots exactly Hermitian.
Positivity is monitored at each snapshot but never projected: a
violation beyond the fail tolerance aborts the run, because hiding it
would mask exactly the model pathologies this package exists to expose.

For the Hamiltonian-free linear flows the exact propagators are
available as oracles: the projection-replacement equation damps every
matrix block except the triplet-triplet one at rate k_S, while the
anticommutator equation damps the singlet-singlet block at k_S and the
singlet-triplet coherences at k_S/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import ModelKind, ModelSingular, RateParams, rhs_function
from .spinspace import (
    PSD_FAIL_TOL,
    TRACE_TOL,
    DensityMatrix,
    validate,
)

METHODS = ("rk4-fixed", "rk45-adaptive")
DEFAULT_REL_TOL = 1e-9
DEFAULT_ABS_TOL = 1e-12
MIN_STEP = 1e-12


class IntegrationError(Exception):
    """Raised when a run cannot be completed (step underflow, invalid state)."""


@dataclass(frozen=True)
class ObservableSeries:
    """Per-snapshot scalar observables, aligned with Trajectory.times."""

    trace: np.ndarray
    p_singlet: np.ndarray
    p_triplet: np.ndarray
    min_eigenvalue: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Snapshots of one integration, aligned with a strictly increasing grid."""

    times: np.ndarray
    states: tuple[DensityMatrix, ...]
    observables: ObservableSeries


def _resymmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _rk4_step(f, m: np.ndarray, h: float) -> np.ndarray:
    k1 = f(m)
    k2 = f(m + (0.5 * h) * k1)
    k3 = f(m + (0.5 * h) * k2)
    k4 = f(m + h * k3)
    return m + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


# Fehlberg 4(5) tableau: stage coefficients, then the 4th- and 5th-order weights.
_FEHLBERG_A = (
    (),
    (1.0 / 4.0,),
    (3.0 / 32.0, 9.0 / 32.0),
    (1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0),
    (439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0),
    (-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0),
)
_FEHLBERG_B4 = (25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -1.0 / 5.0, 0.0)
_FEHLBERG_B5 = (
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
)


def _rkf45_step(f, m: np.ndarray, h: float):
    """One Fehlberg trial step: returns (5th-order result, error estimate)."""
    k = [f(m)]
    for row in _FEHLBERG_A[1:]:
        stage = m + h * sum(a * ki for a, ki in zip(row, k))
        k.append(f(stage))
    m4 = m + h * sum(b * ki for b, ki in zip(_FEHLBERG_B4, k) if b != 0.0)
    m5 = m + h * sum(b * ki for b, ki in zip(_FEHLBERG_B5, k) if b != 0.0)
    return m5, m5 - m4


def _advance_fixed(f, m: np.ndarray, t0: float, t1: float, dt: float) -> np.ndarray:
    n_sub = max(1, int(np.ceil((t1 - t0) / dt - 1e-12)))
    h = (t1 - t0) / n_sub
    for _ in range(n_sub):
        m = _resymmetrize(_rk4_step(f, m, h))
    return m


def _advance_adaptive(
    f,
    m: np.ndarray,
    t0: float,
    t1: float,
    h: float,
    rel_tol: float,
    abs_tol: float,
    t_end: float,
):
    """Error-controlled advance over [t0, t1]; returns (state, last step size)."""
    t = t0
    while t < t1 - 1e-15 * max(1.0, t1):
        h = min(h, t1 - t)
        trial, err = _rkf45_step(f, m, h)
        scale = abs_tol + rel_tol * np.maximum(np.abs(m), np.abs(trial))
        err_ratio = float(np.max(np.abs(err) / scale))
        if not np.isfinite(err_ratio):
            raise IntegrationError(f"non-finite error estimate at t = {t:.12g}")
        if err_ratio <= 1.0:
            t += h
            m = _resymmetrize(trial)
            factor = 5.0 if err_ratio == 0.0 else min(5.0, 0.9 * err_ratio ** -0.2)
        else:
            factor = max(0.2, 0.9 * err_ratio ** -0.2)
            if h <= MIN_STEP:
                raise IntegrationError(
                    f"step size underflow at t = {t:.12g} (error ratio {err_ratio:.3g})"
                )
        h = min(max(h * factor, MIN_STEP), t_end)
    return m, h


def integrate(
    model: ModelKind,
    rho_init: DensityMatrix,
    params: RateParams,
    grid,
    method: str = "rk45-adaptive",
    dt: float | None = None,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
) -> Trajectory:
    """Integrate the selected master equation over a snapshot grid.

    Parameters
    ----------
    grid : array-like
        Strictly increasing times starting at 0; a snapshot is recorded
        at every grid point. No interpolation happens between points.
    dt : float, optional
        Substep for "rk4-fixed"; defaults to 1e-3 / k_S.

    Raises
    ------
    IntegrationError
        On step underflow or when a snapshot violates the positivity or
        trace tolerances (verdict "fail" from validate).
    ModelSingular
        Propagated from the normalized-kominis flow where the equation
        is genuinely undefined; re-raised with the failure time attached.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; valid methods: {', '.join(METHODS)}")
    times = np.asarray(grid, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise ValueError("grid must be a one-dimensional sequence of times")
    if times[0] != 0.0:
        raise ValueError(f"grid must start at 0, got {times[0]}")
    if times.size > 1 and np.any(np.diff(times) <= 0.0):
        raise ValueError("grid times must be strictly increasing")

    report = validate(rho_init)
    if not report.ok:
        raise IntegrationError(f"initial state fails validation: {'; '.join(report.issues)}")
    if model.is_normalized and abs(rho_init.trace - 1.0) > TRACE_TOL:
        raise IntegrationError(
            f"{model.value} requires a unit-trace initial state, got trace {rho_init.trace:.12g}"
        )

    space = rho_init.space
    f = rhs_function(model, space, params)
    if dt is None:
        dt = 1e-3 / params.k_s if params.k_s > 0 else float(times[-1]) / 1000.0
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    t_end = float(times[-1]) if times[-1] > 0 else 1.0

    states = [rho_init]
    m = rho_init.matrix
    h = 0.1 * t_end
    for i in range(1, times.size):
        t0, t1 = float(times[i - 1]), float(times[i])
        try:
            if method == "rk4-fixed":
                m = _advance_fixed(f, m, t0, t1, dt)
            else:
                m, h = _advance_adaptive(f, m, t0, t1, h, rel_tol, abs_tol, t_end)
        except ModelSingular as exc:
            raise ModelSingular(f"at t in ({t0:.6g}, {t1:.6g}]: {exc}") from exc
        try:
            states.append(DensityMatrix(space, m))
        except ValueError as exc:
            raise IntegrationError(f"invalid state at t = {t1:.6g}: {exc}") from exc

    observables = _observe(states)
    for t, state, min_eig in zip(times, states, observables.min_eigenvalue):
        if min_eig < -PSD_FAIL_TOL:
            raise IntegrationError(
                f"positivity violated at t = {t:.6g}: min eigenvalue {min_eig:.3e}"
            )
        if state.trace <= 0.0 or state.trace > 1.0 + TRACE_TOL:
            raise IntegrationError(
                f"trace out of range at t = {t:.6g}: {state.trace:.12g}"
            )
    return Trajectory(times=times, states=tuple(states), observables=observables)


def _observe(states) -> ObservableSeries:
    n = len(states)
    trace = np.empty(n)
    p_s = np.empty(n)
    p_t = np.empty(n)
    min_eig = np.empty(n)
    for i, state in enumerate(states):
        diag = np.diagonal(state.matrix).real
        trace[i] = diag.sum()
        p_s[i] = diag @ state.space.singlet_diag
        p_t[i] = diag @ state.space.triplet_diag
        min_eig[i] = float(np.linalg.eigvalsh(state.matrix)[0])
    return ObservableSeries(trace=trace, p_singlet=p_s, p_triplet=p_t, min_eigenvalue=min_eig)


def analytic_jones_hore(rho_init: DensityMatrix, params: RateParams, t: float) -> DensityMatrix:
    """Exact H-free solution of the projection-replacement flow.

    rho(t) = Q_T rho_0 Q_T + e^{-k_S t} (rho_0 - Q_T rho_0 Q_T): every
    block except the triplet-triplet one decays at rate k_S.
    """
    if params.hamiltonian is not None:
        raise ValueError("analytic propagator is only valid without a Hamiltonian")
    if t < 0.0:
        raise ValueError("time must be nonnegative")
    tt = rho_init.space.triplet_mask
    factor = tt + np.exp(-params.k_s * t) * (1.0 - tt)
    return DensityMatrix(rho_init.space, factor * rho_init.matrix)


def analytic_haberkorn(rho_init: DensityMatrix, params: RateParams, t: float) -> DensityMatrix:
    """Exact H-free solution of the anticommutator flow.

    rho(t) = e^{-(k_S/2) Q_S t} rho_0 e^{-(k_S/2) Q_S t}: the
    singlet-singlet block decays at k_S, singlet-triplet coherences at
    k_S/2, and the triplet-triplet block is constant.
    """
    if params.hamiltonian is not None:
        raise ValueError("analytic propagator is only valid without a Hamiltonian")
    if t < 0.0:
        raise ValueError("time must be nonnegative")
    s = np.exp(-0.5 * params.k_s * t * rho_init.space.singlet_diag)
    return DensityMatrix(rho_init.space, s[:, None] * rho_init.matrix * s[None, :])
