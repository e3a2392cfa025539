"""
State-vector simulation of the generalized coined quantum walk on an N-cycle.

One step applies the coin ``C`` on the internal two-level space, then the
conditional shift ``S_c`` which moves coin state ``c=0`` one site up and
``c=1`` one site down while imprinting the phase ``phi(n)`` of the site the
particle leaves::

    U_phi = (sum_c |c><c| (x) S_{c,phi}) (C (x) I),
    S_{c,phi} |n> = exp(i phi(n)) |n + (-1)^c  mod N>.

Amplitudes are stored as a ``(2, N)`` complex array, coin index major and
site index minor.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import DimensionError, DomainError, LineSemanticsError

__all__ = [
    "CoinVariant",
    "CoinSpec",
    "PhaseKind",
    "PhaseProfile",
    "InitialState",
    "WalkConfig",
    "WalkState",
    "PositionDistribution",
    "TimeSeries",
    "Observer",
    "build_coin",
    "step",
    "evolve",
    "return_probability",
    "position_distribution",
    "sigma",
    "choose_cycle_size",
    "signed_positions",
    "return_probability_observer",
    "sigma_observer",
    "distribution_observer",
    "norm_observer",
]

DEFAULT_COIN_STATE = (1 / math.sqrt(2), -1 / math.sqrt(2))
NORM_TOL = 1e-12


class CoinVariant(str, enum.Enum):
    STANDARD = "standard"
    SYMMETRIC = "symmetric"


@dataclass(frozen=True)
class CoinSpec:
    """
    Coin parametrised by the diabatic amplitude ``d``.

    ``STANDARD`` is ``[[d, a], [a, -d]]``; ``SYMMETRIC`` is
    ``[[i d, a], [a, i d]]``, with ``a = sqrt(1 - d**2)``.
    """

    d: float
    variant: CoinVariant = CoinVariant.STANDARD

    def __post_init__(self):
        if not (0.0 <= self.d <= 1.0) or math.isnan(self.d):
            raise DomainError(f"coin amplitude d must lie in [0, 1], got {self.d}")
        object.__setattr__(self, "variant", CoinVariant(self.variant))

    @classmethod
    def from_probability(cls, D: float, variant=CoinVariant.STANDARD) -> "CoinSpec":
        if not (0.0 <= D <= 1.0):
            raise DomainError(f"diabatic probability D must lie in [0, 1], got {D}")
        return cls(math.sqrt(D), variant)

    @property
    def a(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.d * self.d))

    @property
    def D(self) -> float:
        return self.d * self.d


def build_coin(spec: CoinSpec) -> NDArray[np.complex128]:
    """Return the 2x2 coin matrix for ``spec``."""
    d, a = spec.d, spec.a
    if spec.variant is CoinVariant.STANDARD:
        return np.array([[d, a], [a, -d]], dtype=np.complex128)
    return np.array([[1j * d, a], [a, 1j * d]], dtype=np.complex128)


def signed_positions(N: int, origin: int = 0) -> NDArray[np.int64]:
    """Displacement of each site from ``origin``, taken in ``[-N/2, N/2)``."""
    n = np.arange(N, dtype=np.int64)
    half = N // 2
    return (n - origin + half) % N - half


class PhaseKind(str, enum.Enum):
    CONSTANT = "constant"
    HARMONIC = "harmonic"
    IRRATIONAL = "irrational"
    TABLE = "table"


@dataclass(frozen=True)
class PhaseProfile:
    """
    Site-dependent phase ``phi(n)`` picked up when leaving site ``n``.

    Use the constructors :meth:`constant`, :meth:`harmonic`,
    :meth:`irrational` and :meth:`table`.

    For ``HARMONIC`` profiles ``phi(n) = 2 pi q n / p`` is exactly periodic
    on any cycle whose length is a multiple of ``p``. ``IRRATIONAL``
    profiles have no such period, so ``phi`` is evaluated on the signed
    displacement in ``[-N/2, N/2)``; the unavoidable phase jump then sits at
    the antipode of site 0, which a walk started near 0 cannot reach before
    ``t = N/2``.
    """

    kind: PhaseKind
    phi0: float = 0.0
    q: int = 0
    p: int = 1
    Phi_value: float = 0.0
    values: tuple = field(default=(), repr=False)

    @classmethod
    def constant(cls, phi0: float = 0.0) -> "PhaseProfile":
        return cls(PhaseKind.CONSTANT, phi0=float(phi0))

    @classmethod
    def harmonic(cls, q: int, p: int) -> "PhaseProfile":
        q, p = int(q), int(p)
        if p < 1:
            raise DomainError(f"p must be >= 1, got {p}")
        if not 0 <= q < p:
            raise DomainError(f"q must satisfy 0 <= q < p, got q={q}, p={p}")
        if math.gcd(q, p) != 1:
            raise DomainError(f"q and p must be coprime, got q={q}, p={p}")
        return cls(PhaseKind.HARMONIC, q=q, p=p)

    @classmethod
    def irrational(cls, Phi: float) -> "PhaseProfile":
        if not math.isfinite(Phi):
            raise DomainError(f"Phi must be finite, got {Phi}")
        return cls(PhaseKind.IRRATIONAL, Phi_value=float(Phi))

    @classmethod
    def table(cls, values: Iterable[float]) -> "PhaseProfile":
        return cls(PhaseKind.TABLE, values=tuple(float(v) for v in values))

    @property
    def Phi(self) -> float:
        """Phase gradient per site (0 for constant and table profiles)."""
        if self.kind is PhaseKind.HARMONIC:
            return 2 * math.pi * self.q / self.p
        if self.kind is PhaseKind.IRRATIONAL:
            return self.Phi_value
        return 0.0

    @property
    def continuum_period(self) -> float:
        """``2 pi / Phi``; infinite when there is no gradient."""
        Phi = self.Phi
        return math.inf if Phi == 0 else 2 * math.pi / abs(Phi)

    def phases(self, N: int) -> NDArray[np.float64]:
        if self.kind is PhaseKind.CONSTANT:
            return np.full(N, self.phi0)
        if self.kind is PhaseKind.HARMONIC:
            # reduce q*n mod p first so large n does not lose precision
            n = np.arange(N, dtype=np.int64)
            return 2 * np.pi * ((self.q * n) % self.p) / self.p
        if self.kind is PhaseKind.IRRATIONAL:
            return self.Phi_value * signed_positions(N)
        if len(self.values) != N:
            raise DimensionError(f"phase table has {len(self.values)} entries, cycle has N={N}")
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True)
class InitialState:
    """
    Starting state: a single site with coin amplitudes ``(c0, c1)`` or an
    arbitrary ``(2, N)`` amplitude array.

    The default coin state ``(1, -1)/sqrt(2)`` spreads symmetrically for the
    standard coin and reproduces ``P(T) = (1 - D_eff)**2`` exactly. Coin
    states with a complex ratio ``c1/c0`` do not.
    """

    site: int = 0
    coin: tuple = DEFAULT_COIN_STATE
    vector: NDArray[np.complex128] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.vector is not None:
            v = np.asarray(self.vector, dtype=np.complex128)
            if v.ndim != 2 or v.shape[0] != 2:
                raise DimensionError(f"custom initial vector must have shape (2, N), got {v.shape}")
            norm = float(np.vdot(v, v).real)
            if abs(norm - 1) > NORM_TOL:
                raise DomainError(f"initial vector norm is {norm}, expected 1")
            v = v.copy()
            v.setflags(write=False)
            object.__setattr__(self, "vector", v)
            return
        c = tuple(complex(x) for x in self.coin)
        if len(c) != 2:
            raise DimensionError("coin amplitudes must be a pair")
        norm = abs(c[0]) ** 2 + abs(c[1]) ** 2
        if abs(norm - 1) > NORM_TOL:
            raise DomainError(f"coin amplitudes have norm {norm}, expected 1")
        object.__setattr__(self, "coin", c)

    @classmethod
    def localized(cls, site: int = 0, c0: complex = 1.0, c1: complex = 0.0,
                  normalize: bool = False) -> "InitialState":
        if normalize:
            s = math.sqrt(abs(c0) ** 2 + abs(c1) ** 2)
            if s == 0:
                raise DomainError("coin amplitudes are both zero")
            c0, c1 = c0 / s, c1 / s
        return cls(site=int(site), coin=(c0, c1))

    def amplitudes(self, N: int) -> NDArray[np.complex128]:
        if self.vector is not None:
            if self.vector.shape[1] != N:
                raise DimensionError(f"custom initial vector has N={self.vector.shape[1]}, config has N={N}")
            return np.array(self.vector)
        if not 0 <= self.site < N:
            raise DomainError(f"initial site {self.site} outside [0, {N})")
        psi = np.zeros((2, N), dtype=np.complex128)
        psi[:, self.site] = self.coin
        return psi


@dataclass(frozen=True)
class WalkConfig:
    N: int
    coin: CoinSpec
    phase: PhaseProfile = field(default_factory=PhaseProfile.constant)
    initial: InitialState = field(default_factory=InitialState)

    def __post_init__(self):
        if self.N < 2:
            raise DomainError(f"cycle length N must be >= 2, got {self.N}")
        if self.phase.kind is PhaseKind.HARMONIC and self.N % self.phase.p:
            raise DomainError(f"N={self.N} is not a multiple of p={self.phase.p}")
        if self.phase.kind is PhaseKind.TABLE and len(self.phase.values) != self.N:
            raise DimensionError(f"phase table has {len(self.phase.values)} entries, cycle has N={self.N}")

    @cached_property
    def coin_matrix(self) -> NDArray[np.complex128]:
        return build_coin(self.coin)

    @cached_property
    def phase_factors(self) -> NDArray[np.complex128]:
        return np.exp(1j * self.phase.phases(self.N))

    @property
    def origin(self) -> int:
        return self.initial.site if self.initial.vector is None else 0

    def initial_state(self) -> "WalkState":
        return WalkState(0, self.initial.amplitudes(self.N))


@dataclass
class WalkState:
    t: int
    amplitudes: NDArray[np.complex128]

    @property
    def N(self) -> int:
        return self.amplitudes.shape[1]

    @property
    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def copy(self) -> "WalkState":
        return WalkState(self.t, self.amplitudes.copy())


@dataclass(frozen=True)
class PositionDistribution:
    """Site probabilities of a walk state at time ``t``."""

    probabilities: NDArray[np.float64]
    t: int
    origin: int = 0

    @property
    def N(self) -> int:
        return len(self.probabilities)

    @property
    def displacements(self) -> NDArray[np.int64]:
        return signed_positions(self.N, self.origin)


@dataclass
class TimeSeries:
    name: str
    t: NDArray[np.int64]
    values: list

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values)

    def __len__(self):
        return len(self.t)


def _apply(psi: NDArray[np.complex128], coin: NDArray[np.complex128],
           phase_factors: NDArray[np.complex128]) -> NDArray[np.complex128]:
    # psi: (..., 2, N); every output amplitude depends on two input amplitudes
    up = (coin[0, 0] * psi[..., 0, :] + coin[0, 1] * psi[..., 1, :]) * phase_factors
    down = (coin[1, 0] * psi[..., 0, :] + coin[1, 1] * psi[..., 1, :]) * phase_factors
    out = np.empty_like(psi)
    out[..., 0, :] = np.roll(up, 1, axis=-1)
    out[..., 1, :] = np.roll(down, -1, axis=-1)
    return out


def step(state: WalkState, config: WalkConfig) -> WalkState:
    """Apply ``U_phi`` once and return the new state at ``t + 1``."""
    if state.amplitudes.shape != (2, config.N):
        raise DimensionError(f"state shape {state.amplitudes.shape} does not match (2, {config.N})")
    return WalkState(state.t + 1, _apply(state.amplitudes, config.coin_matrix, config.phase_factors))


def return_probability(state: WalkState, initial: WalkState) -> float:
    """``|<psi(t)|psi(0)>|**2``."""
    if state.amplitudes.shape != initial.amplitudes.shape:
        raise DimensionError(
            f"shape mismatch: {state.amplitudes.shape} vs {initial.amplitudes.shape}")
    return abs(np.vdot(state.amplitudes, initial.amplitudes)) ** 2


def position_distribution(state: WalkState, origin: int = 0) -> PositionDistribution:
    p = (state.amplitudes.real ** 2 + state.amplitudes.imag ** 2).sum(axis=0)
    return PositionDistribution(p, state.t, origin)


def sigma(dist: PositionDistribution) -> float:
    """Standard deviation of the signed displacement from ``dist.origin``.

    Raises :class:`LineSemanticsError` once ``t >= N/2``, where the cycle
    no longer mimics the line.
    """
    if 2 * dist.t >= dist.N:
        raise LineSemanticsError(
            f"sigma undefined at t={dist.t} on an N={dist.N} cycle (requires t < N/2)")
    x = dist.displacements
    p = dist.probabilities
    mean = np.dot(p, x)
    return math.sqrt(max(0.0, float(np.dot(p, (x - mean) ** 2))))


def choose_cycle_size(p: int, t_max: int) -> int:
    """Smallest multiple of ``p`` that is at least ``2*t_max + 4``."""
    if p < 1 or t_max < 0:
        raise DomainError(f"need p >= 1 and t_max >= 0, got p={p}, t_max={t_max}")
    return p * math.ceil((2 * t_max + 4) / p)


@dataclass(frozen=True)
class Observer:
    """Named measurement taken every ``every`` steps (and at t=0)."""

    name: str
    fn: Callable[[WalkState, WalkState, WalkConfig], object]
    every: int = 1


def return_probability_observer(every: int = 1) -> Observer:
    return Observer("P", lambda s, s0, cfg: return_probability(s, s0), every)


def sigma_observer(every: int = 1) -> Observer:
    return Observer("sigma", lambda s, s0, cfg: sigma(position_distribution(s, cfg.origin)), every)


def distribution_observer(every: int = 1) -> Observer:
    return Observer("distribution",
                    lambda s, s0, cfg: position_distribution(s, cfg.origin).probabilities, every)


def norm_observer(every: int = 1) -> Observer:
    return Observer("norm", lambda s, s0, cfg: s.norm, every)


def evolve(config: WalkConfig, t_max: int, observers: Sequence[Observer] = (),
           line: bool = True, keep_final: bool = False):
    """
    Run the walk for ``t_max`` steps, recording each observer.

    Parameters
    ----------
    config : WalkConfig
    t_max : int
        Number of steps.
    observers : sequence of Observer
        Each is evaluated at ``t = 0`` and every ``observer.every`` steps.
    line : bool
        Require ``t_max < N/2`` so the run is indistinguishable from the
        infinite line.
    keep_final : bool
        Also return the final :class:`WalkState`.

    Returns
    -------
    dict[str, TimeSeries] (and the final state if ``keep_final``)
    """
    if t_max < 0:
        raise DomainError(f"t_max must be >= 0, got {t_max}")
    if line and 2 * t_max >= config.N:
        raise LineSemanticsError(
            f"t_max={t_max} reaches N/2 on an N={config.N} cycle; "
            f"use N >= {choose_cycle_size(1, t_max)} or pass line=False")
    for obs in observers:
        if obs.every < 1:
            raise DomainError(f"observer cadence must be >= 1, got {obs.every}")

    initial = config.initial_state()
    series = {obs.name: TimeSeries(obs.name, [], []) for obs in observers}
    coin, phases = config.coin_matrix, config.phase_factors
    psi = initial.amplitudes
    for t in range(t_max + 1):
        if t:
            psi = _apply(psi, coin, phases)
        due = [obs for obs in observers if t % obs.every == 0]
        if due:
            state = WalkState(t, psi)
            for obs in due:
                ts = series[obs.name]
                ts.t.append(t)
                ts.values.append(obs.fn(state, initial, config))
    for ts in series.values():
        ts.t = np.asarray(ts.t, dtype=np.int64)
    if keep_final:
        return series, WalkState(t_max, psi)
    return series
