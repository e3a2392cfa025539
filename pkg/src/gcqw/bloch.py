"""
Continuum (coupled-mode) limit of the walk and its comparison with the
discrete dynamics.

For the symmetric coin ``[[i d, a], [a, i d]]`` each coin component obeys a
two-step recursion. Written with the general site phase ``phi`` it reads::

    alpha_{c,n}(t+1) = exp(i(phi(n) + phi(n-s))) alpha_{c,n}(t-1)
                       + i d exp(i phi(n-s)) (alpha_{c,n-1}(t) + alpha_{c,n+1}(t)),

with ``s = (-1)**c``. For ``phi(n) = n Phi`` and ``c = 0`` this is the form
with ``exp(i(2n-1)Phi)`` and ``exp(i(n-1)Phi)``; for ``c = 1`` the phases
are ``exp(i(2n+1)Phi)`` and ``exp(i(n+1)Phi)`` instead.

For ``|n| << T~ = 2 pi / Phi`` a single component follows the coupled-mode
equation ``d alpha_n/dt = i n Phi alpha_n + (i d/2)(alpha_{n-1} + alpha_{n+1})``,
whose return probability from ``alpha_n(0) = delta_n0`` is
``J0((d T~/pi) sin(pi t/T~))**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .analytics import bessel_j0, find_recurrences, sigma_max, RecurrenceEvent
from .errors import DomainError, TruncationError, UnsupportedError, ValidationError
from .walk import (CoinSpec, CoinVariant, InitialState, PhaseKind, PhaseProfile, TimeSeries,
                   WalkConfig, WalkState, choose_cycle_size, evolve, return_probability_observer,
                   sigma_observer, signed_positions, step)

__all__ = [
    "ModeLattice",
    "recursion_residuals",
    "check_recursive_equation",
    "trajectory",
    "default_n_max",
    "default_dt",
    "integrate_coupled_modes",
    "closed_form_bloch",
    "BlochComparison",
    "discrete_vs_continuum",
]

NORM_TOL = 1e-8
LEAK_TOL = 1e-8
DOUBLING_TOL = 1e-8


def _site_phases(config: WalkConfig, form: str) -> NDArray[np.float64]:
    if form == "printed":
        if config.phase.kind not in (PhaseKind.HARMONIC, PhaseKind.IRRATIONAL):
            raise UnsupportedError("the printed recursion assumes phi(n) = n Phi")
        return config.phase.Phi * signed_positions(config.N)
    return config.phase.phases(config.N)


def recursion_residuals(trajectory: Sequence[WalkState], config: WalkConfig,
                        form: str = "general") -> NDArray[np.float64]:
    """
    ``|LHS - RHS|`` of the two-step recursion, shape ``(len(trajectory)-2, 2, N)``.

    ``form="general"`` uses the site phases of ``config`` for each coin
    component as derived above. ``form="printed"`` applies the
    ``exp(i(2n-1)Phi)``, ``exp(i(n-1)Phi)`` phases to both components, with
    ``n`` the signed site position; it is exact for ``c = 0`` only.
    """
    if config.coin.variant is not CoinVariant.SYMMETRIC:
        raise UnsupportedError("the recursion holds for the symmetric coin only")
    if form not in ("general", "printed"):
        raise DomainError(f"unknown recursion form {form!r}")
    if len(trajectory) < 3:
        raise DomainError("need at least three consecutive time slices")
    for a, b in zip(trajectory, trajectory[1:]):
        if b.t != a.t + 1:
            raise DomainError(f"time slices are not consecutive: t={a.t} then t={b.t}")
    d = config.coin.d
    phi = _site_phases(config, form)
    res = []
    for prev, cur, nxt in zip(trajectory, trajectory[1:], trajectory[2:]):
        out = np.empty((2, config.N))
        for c in range(2):
            if form == "printed":
                # (2n - 1) Phi and (n - 1) Phi for both components
                onsite = np.exp(1j * (2 * phi - config.phase.Phi))
                hop = np.exp(1j * (phi - config.phase.Phi))
            else:
                phi_back = np.roll(phi, 1 if c == 0 else -1)  # phi(n - (-1)^c)
                onsite = np.exp(1j * (phi + phi_back))
                hop = np.exp(1j * phi_back)
            a_prev, a_cur, a_next = prev.amplitudes[c], cur.amplitudes[c], nxt.amplitudes[c]
            lhs = a_next - a_prev
            rhs = (onsite - 1) * a_prev + 1j * d * hop * (np.roll(a_cur, 1) + np.roll(a_cur, -1))
            out[c] = np.abs(lhs - rhs)
        res.append(out)
    return np.asarray(res)


def check_recursive_equation(trajectory: Sequence[WalkState], config: WalkConfig,
                             form: str = "general") -> float:
    """Largest recursion residual over ``(t, c, n)``."""
    return float(recursion_residuals(trajectory, config, form).max())


def trajectory(config: WalkConfig, t_max: int) -> list[WalkState]:
    """All states ``t = 0..t_max`` (cycle semantics, no line check)."""
    states = [config.initial_state()]
    for _ in range(t_max):
        states.append(step(states[-1], config))
    return states


@dataclass
class ModeLattice:
    """Truncated mode amplitudes ``alpha_n`` for ``n`` in ``[-n_max, n_max]``."""

    n_max: int
    amplitudes: NDArray[np.complex128]
    Phi: float
    d: float
    t: float = 0.0

    @classmethod
    def localized(cls, n_max: int, Phi: float, d: float) -> "ModeLattice":
        a = np.zeros(2 * n_max + 1, dtype=np.complex128)
        a[n_max] = 1.0
        return cls(n_max, a, Phi, d)

    @property
    def n(self) -> NDArray[np.int64]:
        return np.arange(-self.n_max, self.n_max + 1)

    @property
    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @property
    def edge_population(self) -> float:
        return float(max(abs(self.amplitudes[0]) ** 2, abs(self.amplitudes[-1]) ** 2))

    def rhs(self, a: NDArray[np.complex128]) -> NDArray[np.complex128]:
        nb = np.zeros_like(a)
        nb[1:] += a[:-1]
        nb[:-1] += a[1:]
        return 1j * self.Phi * self.n * a + 0.5j * self.d * nb

    def rk4_step(self, dt: float) -> None:
        a = self.amplitudes
        k1 = self.rhs(a)
        k2 = self.rhs(a + 0.5 * dt * k1)
        k3 = self.rhs(a + 0.5 * dt * k2)
        k4 = self.rhs(a + dt * k3)
        self.amplitudes = a + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        self.t += dt


def default_n_max(d: float, T_tilde: float, t_max: float) -> int:
    """``ceil(d T~) + 20``; with no gradient the spread ``d t_max`` sets the scale."""
    scale = T_tilde if math.isfinite(T_tilde) else t_max
    return math.ceil(d * scale) + 20


def default_dt(T_tilde: float) -> float:
    return min(0.01, T_tilde / 1000) if math.isfinite(T_tilde) else 0.01


def _run(Phi, d, n_steps, dt, n_max, stride):
    lat = ModeLattice.localized(n_max, Phi, d)
    t_out, p_out = [0.0], [1.0]
    leak, drift = 0.0, 0.0
    for i in range(1, n_steps + 1):
        lat.rk4_step(dt)
        if i % stride == 0 or i == n_steps:
            t_out.append(i * dt)
            p_out.append(abs(lat.amplitudes[n_max]) ** 2)
            leak = max(leak, lat.edge_population)
            drift = max(drift, abs(lat.norm - 1))
    return np.asarray(t_out), np.asarray(p_out), leak, drift


def integrate_coupled_modes(Phi: float, d: float, t_max: float, dt: float | None = None,
                            n_max: int | None = None, output_step: float | None = None,
                            check_doubling: bool = True) -> TimeSeries:
    """
    Integrate the coupled-mode equation with fixed-step RK4 from ``alpha_n = delta_n0``.

    Parameters
    ----------
    Phi, d : float
        Phase gradient and coupling amplitude.
    t_max : float
    dt : float, optional
        Upper bound on the step; defaults to ``min(0.01, T~/1000)``. The step
        actually used divides ``t_max`` (or ``output_step``) evenly.
    n_max : int, optional
        Truncation radius; defaults to ``ceil(d T~) + 20``.
    output_step : float, optional
        Record ``P`` every ``output_step`` time units instead of every step.
    check_doubling : bool
        Repeat with half the step and require ``|dP(t_max)| < 1e-8``.

    Returns
    -------
    TimeSeries
        ``P(t) = |alpha_0(t)|**2`` with float times.

    Raises
    ------
    TruncationError
        Edge population exceeded 1e-8; the message names a sufficient ``n_max``.
    ValidationError
        Norm drift above 1e-8 or the step-doubling check failed.
    """
    if t_max < 0:
        raise DomainError(f"t_max must be >= 0, got {t_max}")
    if not 0 <= d <= 1:
        raise DomainError(f"d must lie in [0, 1], got {d}")
    T_tilde = 2 * math.pi / abs(Phi) if Phi else math.inf
    dt = default_dt(T_tilde) if dt is None else dt
    n_max = default_n_max(d, T_tilde, t_max) if n_max is None else int(n_max)
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if output_step is None:
        stride = 1
        n_steps = math.ceil(t_max / dt)
        h = t_max / n_steps if n_steps else dt
    else:
        stride = math.ceil(output_step / dt)
        h = output_step / stride
        n_steps = stride * math.ceil(t_max / output_step - 1e-9)

    t, P, leak, drift = _run(Phi, d, n_steps, h, n_max, stride)
    if leak > LEAK_TOL:
        raise TruncationError("leakage", f"edge population {leak:.3e} exceeds {LEAK_TOL:g} "
                              f"with n_max={n_max}; try n_max={2 * n_max}",
                              n_max=n_max, required_n_max=2 * n_max, leakage=leak)
    if drift > NORM_TOL:
        raise ValidationError("norm_drift", f"norm drift {drift:.3e} exceeds {NORM_TOL:g}",
                              drift=drift, dt=h)
    if check_doubling and n_steps:
        _, P_half, _, _ = _run(Phi, d, 2 * n_steps, h / 2, n_max, 2 * n_steps)
        diff = abs(P_half[-1] - P[-1])
        if diff >= DOUBLING_TOL:
            raise ValidationError("step_doubling",
                                  f"halving dt changed P(t_max) by {diff:.3e}; reduce dt below {h:g}",
                                  difference=diff, dt=h)
    return TimeSeries("P_ode", t, list(P))


def closed_form_bloch(d: float, T_tilde: float, t):
    """``J0((d T~/pi) sin(pi t/T~))**2``; ``T~ = inf`` gives ``J0(d t)**2``."""
    if not T_tilde > 0:
        raise DomainError(f"T~ must be positive, got {T_tilde}")
    t = np.asarray(t, dtype=float)
    if math.isinf(T_tilde):
        arg = d * t
    else:
        arg = d * T_tilde / math.pi * np.sin(math.pi * t / T_tilde)
    return bessel_j0(arg) ** 2


@dataclass
class BlochComparison:
    D: float
    Phi: float
    T_tilde: float
    t: NDArray[np.int64]
    P_discrete: NDArray[np.float64]
    P_continuum: NDArray[np.float64]
    sigma: NDArray[np.float64]
    recurrences: list[RecurrenceEvent]
    max_deviation: float
    sigma_max_formula: float
    diagnostics: list[str] = field(default_factory=list)

    @property
    def max_sigma(self) -> float:
        return float(self.sigma.max())

    @property
    def peak_offsets(self) -> list[float]:
        """Discrete peak time minus the continuum recurrence time it shadows."""
        return [ev.t - ev.predicted_t for ev in self.recurrences]


def discrete_vs_continuum(D: float, Phi: float, t_max: int, N: int | None = None,
                          initial: InitialState | None = None,
                          threshold: float = 0.99) -> BlochComparison:
    """
    Run the symmetric-coin walk with linear phase ``n Phi`` and set its
    return probability against the continuum prediction.

    The coupled-mode model tracks one coin component, so the default start
    is site 0 with coin state ``|0>``. Deviation is measured over even
    ``t`` (odd ``t`` have ``P = 0`` exactly).
    """
    if not 0 <= D <= 1:
        raise DomainError(f"D must lie in [0, 1], got {D}")
    if Phi == 0:
        raise DomainError("Phi must be non-zero for a finite recurrence period")
    N = choose_cycle_size(1, t_max) if N is None else N
    initial = InitialState.localized(0, 1.0, 0.0) if initial is None else initial
    config = WalkConfig(N, CoinSpec.from_probability(D, CoinVariant.SYMMETRIC),
                        PhaseProfile.irrational(Phi), initial)
    series = evolve(config, t_max, [return_probability_observer(), sigma_observer()])
    t = series["P"].t
    P = series["P"].as_array()
    T_tilde = 2 * math.pi / abs(Phi)
    d = math.sqrt(D)
    Pc = closed_form_bloch(d, T_tilde, t)
    even = t % 2 == 0
    diagnostics: list[str] = []
    events = find_recurrences(t, P, T_tilde, threshold, diagnostics=diagnostics)
    return BlochComparison(D, Phi, T_tilde, t, P, Pc, series["sigma"].as_array(), events,
                           float(np.abs(P[even] - Pc[even]).max()), sigma_max(D, T_tilde),
                           diagnostics)
