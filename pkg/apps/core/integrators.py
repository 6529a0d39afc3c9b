"""
Time integration of the Schroedinger equation i hbar dpsi/dt = H(g(t)) psi
for Hamiltonians linear in the field, H(g) = static + g * field.

Two state layouts are supported:

* ``evolve_state`` propagates one state vector under a dense or sparse
  matrix operator (``RampedOperator``).
* ``evolve_pairs`` propagates a batch of independent two-level systems whose
  generators are given as Bloch vectors, H_n(g) = (static_n + g field_n) . sigma.
"""
import logging
import math

import numpy as np
from scipy import linalg, sparse
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply

from .exceptions import IntegrationError, NormDriftError
from .models import UnitsConvention

logger = logging.getLogger(__name__)

# Gauss-Legendre nodes of the fourth-order Magnus step, relative to the step.
_GAUSS_OFFSET = math.sqrt(3.0) / 6.0
_GAUSS_NODES = (0.5 - _GAUSS_OFFSET, 0.5 + _GAUSS_OFFSET)

# DOP853 uses twelve right-hand side evaluations per accepted step.
_EVALS_PER_STEP = 12


class RampedOperator:
    """Matrix Hamiltonian H(g) = static + g * field."""

    def __init__(self, static, field):
        if static.shape != field.shape or static.shape[0] != static.shape[1]:
            raise ValueError('static and field parts must be square and of equal shape')
        self.is_sparse = sparse.issparse(static) or sparse.issparse(field)
        if self.is_sparse:
            self.static = sparse.csr_matrix(static, dtype=complex)
            self.field = sparse.csr_matrix(field, dtype=complex)
        else:
            self.static = np.asarray(static, dtype=complex)
            self.field = np.asarray(field, dtype=complex)
        self._commutator = None

    @property
    def dim(self):
        return self.static.shape[0]

    def at(self, g):
        return self.static + g * self.field

    def apply(self, g, psi):
        return self.static @ psi + g * (self.field @ psi)

    @property
    def commutator(self):
        """[field, static], cached."""
        if self._commutator is None:
            self._commutator = self.field @ self.static - self.static @ self.field
        return self._commutator

    def __add__(self, other):
        """Add a static perturbation."""
        return RampedOperator(self.static + other, self.field)


def _check_budget(steps, opts):
    if steps > opts.max_steps:
        raise IntegrationError(
            f'{steps} steps requested, more than max_steps={opts.max_steps}'
        )


def _check_norm(psi, opts, channel=None):
    drift = abs(np.vdot(psi, psi).real - 1.0)
    if drift > opts.norm_tolerance:
        raise NormDriftError(f'norm drifted by {drift:.3e}', channel=channel)


def evolve_state(operator, schedule, psi0, opts, units=None, observer=None):
    """
    Propagate ``psi0`` from s=0 to s=1 along ``schedule``.

    ``observer(t, psi)`` is called at every fixed step, or at 65 evenly
    spaced times for the adaptive method.
    """
    units = units or UnitsConvention()
    psi = np.array(psi0, dtype=complex)
    hbar = units.hbar
    T = schedule.duration

    if opts.method == 'adaptive':
        psi = _adaptive_state(operator, schedule, psi, opts, hbar, observer)
    else:
        steps = opts.step_count(T)
        _check_budget(steps, opts)
        h = T / steps
        stepper = _rk4_state if opts.method == 'rk4' else _magnus_state
        for i in range(steps):
            psi = stepper(operator, schedule, psi, i * h, h, hbar)
            if observer is not None:
                observer((i + 1) * h, psi)
        logger.debug('%s: %d steps of %.4g on dimension %d', opts.method, steps, h, operator.dim)

    _check_norm(psi, opts)
    return psi


def _rk4_state(operator, schedule, psi, t, h, hbar):
    def rhs(tau, y):
        return (-1j / hbar) * operator.apply(schedule.field_at_time(tau), y)

    k1 = rhs(t, psi)
    k2 = rhs(t + h / 2, psi + (h / 2) * k1)
    k3 = rhs(t + h / 2, psi + (h / 2) * k2)
    k4 = rhs(t + h, psi + h * k3)
    return psi + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def _magnus_state(operator, schedule, psi, t, h, hbar):
    g1 = schedule.field_at_time(t + _GAUSS_NODES[0] * h)
    g2 = schedule.field_at_time(t + _GAUSS_NODES[1] * h)
    g_mid = 0.5 * (g1 + g2)
    omega = (-1j * h / hbar) * operator.at(g_mid)
    if g2 != g1:
        omega = omega - (math.sqrt(3.0) * h * h * (g2 - g1) / (12.0 * hbar * hbar)) * operator.commutator
    if operator.is_sparse:
        return expm_multiply(sparse.csr_matrix(omega), psi)
    return linalg.expm(omega) @ psi


def _adaptive_state(operator, schedule, psi, opts, hbar, observer):
    budget = opts.max_steps * _EVALS_PER_STEP
    calls = 0

    def rhs(t, y):
        nonlocal calls
        calls += 1
        if calls > budget:
            raise IntegrationError(f'adaptive integration exceeded max_steps={opts.max_steps}')
        return (-1j / hbar) * operator.apply(schedule.field_at_time(t), y)

    t_eval = np.linspace(0.0, schedule.duration, 65) if observer is not None else None
    sol = solve_ivp(
        rhs, (0.0, schedule.duration), psi, method='DOP853',
        rtol=opts.rtol, atol=opts.atol, t_eval=t_eval,
    )
    if not sol.success:
        raise IntegrationError(f'adaptive integration failed: {sol.message}')
    logger.debug('adaptive: %d evaluations on dimension %d', sol.nfev, operator.dim)
    if observer is not None:
        for t, y in zip(sol.t, sol.y.T):
            observer(t, y)
    return sol.y[:, -1]


def pauli_apply(v, psi):
    """(v . sigma) psi for batches: ``v`` has shape (M, 3), ``psi`` (M, 2)."""
    vx, vy, vz = v[:, 0], v[:, 1], v[:, 2]
    up, down = psi[:, 0], psi[:, 1]
    return np.stack(
        [vz * up + (vx - 1j * vy) * down, (vx + 1j * vy) * up - vz * down],
        axis=1,
    )


def evolve_pairs(static, field, schedule, amps0, opts, units=None, labels=None):
    """
    Propagate independent two-level systems H_n(g) = (static_n + g field_n) . sigma.

    ``static`` and ``field`` are (M, 3) Bloch-vector arrays and ``amps0`` is
    (M, 2). ``labels`` name the systems in error messages (default 0..M-1).
    """
    units = units or UnitsConvention()
    static = np.asarray(static, dtype=float)
    field = np.asarray(field, dtype=float)
    amps = np.array(amps0, dtype=complex)
    labels = list(range(len(amps))) if labels is None else list(labels)
    hbar = units.hbar
    T = schedule.duration

    if opts.method == 'adaptive':
        amps = np.stack([
            _adaptive_pair(static[i], field[i], schedule, amps[i], opts, hbar, labels[i])
            for i in range(len(amps))
        ]) if len(amps) else amps
    else:
        steps = opts.step_count(T)
        _check_budget(steps, opts)
        h = T / steps
        stepper = _rk4_pairs if opts.method == 'rk4' else _magnus_pairs
        for i in range(steps):
            amps = stepper(static, field, schedule, amps, i * h, h, hbar)
        logger.debug('%s: %d steps of %.4g for %d pairs', opts.method, steps, h, len(amps))

    if len(amps):
        drift = np.abs(np.sum(np.abs(amps) ** 2, axis=1) - 1.0)
        worst = int(np.argmax(drift))
        if drift[worst] > opts.norm_tolerance:
            raise NormDriftError(f'norm drifted by {drift[worst]:.3e}', channel=labels[worst])
    return amps


def _rk4_pairs(static, field, schedule, amps, t, h, hbar):
    def rhs(tau, y):
        return (-1j / hbar) * pauli_apply(static + schedule.field_at_time(tau) * field, y)

    k1 = rhs(t, amps)
    k2 = rhs(t + h / 2, amps + (h / 2) * k1)
    k3 = rhs(t + h / 2, amps + (h / 2) * k2)
    k4 = rhs(t + h, amps + h * k3)
    return amps + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def _magnus_pairs(static, field, schedule, amps, t, h, hbar):
    a1 = static + schedule.field_at_time(t + _GAUSS_NODES[0] * h) * field
    a2 = static + schedule.field_at_time(t + _GAUSS_NODES[1] * h) * field
    # exp(-i c.sigma) with the commutator correction folded into c.
    c = (h / (2 * hbar)) * (a1 + a2) + (math.sqrt(3.0) * h * h / (6 * hbar * hbar)) * np.cross(a2, a1)
    angle = np.linalg.norm(c, axis=1)
    sinc = np.sinc(angle / np.pi)
    return np.cos(angle)[:, None] * amps - 1j * sinc[:, None] * pauli_apply(c, amps)


def _adaptive_pair(static, field, schedule, amps, opts, hbar, label):
    budget = opts.max_steps * _EVALS_PER_STEP
    calls = 0

    def rhs(t, y):
        nonlocal calls
        calls += 1
        if calls > budget:
            raise IntegrationError(
                f'adaptive integration exceeded max_steps={opts.max_steps}', channel=label,
            )
        v = static + schedule.field_at_time(t) * field
        return (-1j / hbar) * np.array([
            v[2] * y[0] + (v[0] - 1j * v[1]) * y[1],
            (v[0] + 1j * v[1]) * y[0] - v[2] * y[1],
        ])

    sol = solve_ivp(
        rhs, (0.0, schedule.duration), amps, method='DOP853',
        rtol=opts.rtol, atol=opts.atol,
    )
    if not sol.success:
        raise IntegrationError(f'adaptive integration failed: {sol.message}', channel=label)
    return sol.y[:, -1]
