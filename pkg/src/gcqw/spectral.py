"""
Quasi-energy spectrum of the harmonic-phase walk operator.

Three independent routes are provided:

* :func:`closed_form_spectrum` evaluates the analytic eigenvalues
  ``r_jus`` labelled by ``j`` (cluster momentum), ``u`` (branch) and ``s``
  (p-th root index);
* :func:`numeric_spectrum` uses the period-``p`` translation symmetry to
  split ``U_phi`` into ``N/p`` Bloch blocks of size ``2p`` and diagonalizes
  each block densely;
* :func:`trace_moments` compares ``Tr U**k``, obtained by propagating every
  basis vector with the walk itself, to ``sum r**k``.

For even ``p`` the eigenvalue expression ``omega**s (2 i lam z - 1)`` is
kept as printed (``even_form="printed"``) and is flagged wherever it leaves
the unit circle. ``even_form="corrected"`` evaluates
``omega**s (2 i lam w - 1)**(1/p)`` with the un-rooted
``w = (-1)**u sqrt(1 - lam**2) - i lam``, which matches the numeric
spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import linear_sum_assignment

from .analytics import period_T
from .errors import DomainError
from .walk import CoinSpec, CoinVariant, PhaseProfile, WalkConfig, build_coin, _apply

__all__ = [
    "SpectralParams",
    "SpectrumEntry",
    "Spectrum",
    "BandSummary",
    "effective_amplitude",
    "closed_form_spectrum",
    "numeric_spectrum",
    "spectrum_distance",
    "trace_moment_residuals",
    "trace_moments",
    "band_summary",
    "heuristic_band_width",
]

UNIT_TOL = 1e-9


def effective_amplitude(d: float, p: int) -> tuple[float, float]:
    """Return ``(d_eff, D_eff)`` with ``d_eff = d**(T/2)``."""
    if not 0.0 <= d <= 1.0:
        raise DomainError(f"d must lie in [0, 1], got {d}")
    d_eff = d ** (period_T(p) / 2)
    return d_eff, d_eff * d_eff


@dataclass(frozen=True)
class SpectralParams:
    N: int
    p: int
    q: int
    d: float
    variant: CoinVariant = CoinVariant.STANDARD

    def __post_init__(self):
        # reuse the walk-side validation of (q, p) and N
        PhaseProfile.harmonic(self.q, self.p)
        if self.N < 2 or self.N % self.p:
            raise DomainError(f"N={self.N} must be a multiple of p={self.p} and >= 2")
        if not 0.0 <= self.d <= 1.0:
            raise DomainError(f"d must lie in [0, 1], got {self.d}")

    @classmethod
    def from_probability(cls, N: int, p: int, q: int, D: float, **kw) -> "SpectralParams":
        return cls(N, p, q, math.sqrt(D), **kw)

    @property
    def T(self) -> int:
        return period_T(self.p)

    @property
    def d_eff(self) -> float:
        return effective_amplitude(self.d, self.p)[0]

    @property
    def D_eff(self) -> float:
        return effective_amplitude(self.d, self.p)[1]

    def walk_config(self) -> WalkConfig:
        return WalkConfig(self.N, CoinSpec(self.d, self.variant), PhaseProfile.harmonic(self.q, self.p))


@dataclass(frozen=True)
class SpectrumEntry:
    j: int
    u: int
    s: int
    eigenvalue: complex
    quasi_energy: float
    unit_ok: bool


@dataclass
class Spectrum:
    """
    Eigenvalues with labels. ``u`` and ``s`` are -1 for numerically obtained
    entries, whose ``j`` is the Bloch block index.
    """

    eigenvalues: NDArray[np.complex128]
    j: NDArray[np.int64]
    u: NDArray[np.int64]
    s: NDArray[np.int64]
    source: str

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def quasi_energies(self) -> NDArray[np.float64]:
        """``Arg(r)`` in ``(-pi, pi]``."""
        e = np.angle(self.eigenvalues)
        return np.where(e <= -np.pi, np.pi, e)

    @property
    def unit_deviation(self) -> NDArray[np.float64]:
        return np.abs(np.abs(self.eigenvalues) - 1.0)

    @property
    def unit_ok(self) -> NDArray[np.bool_]:
        return self.unit_deviation <= UNIT_TOL

    @property
    def valid(self) -> bool:
        return bool(self.unit_ok.all())

    def entries(self) -> Iterator[SpectrumEntry]:
        for r, e, ok, j, u, s in zip(self.eigenvalues, self.quasi_energies, self.unit_ok,
                                     self.j, self.u, self.s):
            yield SpectrumEntry(int(j), int(u), int(s), complex(r), float(e), bool(ok))


def closed_form_spectrum(params: SpectralParams, even_form: str = "printed") -> Spectrum:
    """
    Analytic eigenvalues of ``U_phi`` for the standard coin.

    ``z_ju`` takes the principal ``p``-th root; ``omega_p**s`` supplies the
    other branches. Entries off the unit circle are flagged in
    ``Spectrum.unit_ok`` rather than raising.
    """
    if even_form not in ("printed", "corrected"):
        raise DomainError(f"unknown even_form {even_form!r}")
    N, p = params.N, params.p
    T, d_eff = params.T, params.d_eff
    M = N // p
    j = np.repeat(np.arange(M), 2 * p)
    u = np.tile(np.repeat(np.arange(2), p), M)
    s = np.tile(np.arange(p), 2 * M)
    lam = d_eff * np.sin(np.pi * T * j / N)
    w = (-1.0) ** u * np.sqrt(1.0 - lam ** 2) - 1j * lam
    omega = np.exp(2j * np.pi * s / p)
    if p % 2:
        r = omega * w ** (1.0 / p)
    elif even_form == "printed":
        r = omega * (2j * lam * w ** (1.0 / p) - 1.0)
    else:
        r = omega * (2j * lam * w - 1.0) ** (1.0 / p)
    label = "closed_form" if p % 2 or even_form == "printed" else "closed_form_corrected"
    return Spectrum(r.astype(np.complex128), j, u, s, label)


def bloch_block(params: SpectralParams, j: int) -> NDArray[np.complex128]:
    """
    ``2p x 2p`` block of ``U_phi`` acting on Bloch vectors
    ``psi[c, m + p l] = exp(2 pi i j l / M) w[c, m]``; rows and columns are
    ordered ``c * p + m``.
    """
    p, M = params.p, params.N // params.p
    coin = build_coin(CoinSpec(params.d, params.variant))
    phases = np.exp(2j * np.pi * ((params.q * np.arange(p)) % p) / p)
    bloch = np.exp(2j * np.pi * j / M)
    B = np.zeros((2 * p, 2 * p), dtype=np.complex128)
    for c in range(2):
        shift = 1 if c == 0 else -1
        for m_src in range(p):
            m_dst = m_src + shift
            factor = 1.0
            if m_dst == p:
                m_dst, factor = 0, 1 / bloch
            elif m_dst == -1:
                m_dst, factor = p - 1, bloch
            for c_src in range(2):
                B[c * p + m_dst, c_src * p + m_src] += coin[c, c_src] * phases[m_src] * factor
    return B


def numeric_spectrum(params: SpectralParams) -> Spectrum:
    """Eigenvalues from dense diagonalization of the ``N/p`` Bloch blocks."""
    M = params.N // params.p
    vals = [np.linalg.eigvals(bloch_block(params, j)) for j in range(M)]
    r = np.concatenate(vals).astype(np.complex128)
    j = np.repeat(np.arange(M), 2 * params.p)
    neg = -np.ones(len(r), dtype=np.int64)
    return Spectrum(r, j, neg, neg.copy(), "numeric")


def spectrum_distance(a: Spectrum, b: Spectrum) -> float:
    """
    Largest eigenvalue mismatch between two spectra viewed as multisets.

    Eigenvalues are paired by minimum-cost assignment on ``|r_a - r_b|``,
    which handles the ``+-pi`` seam that a plain sort by quasi-energy would
    split.
    """
    if len(a) != len(b):
        raise DomainError(f"spectra have different sizes: {len(a)} vs {len(b)}")
    cost = np.abs(a.eigenvalues[:, None] - b.eigenvalues[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def _trace_powers(config: WalkConfig, k_max: int) -> NDArray[np.complex128]:
    N = config.N
    basis = np.eye(2 * N, dtype=np.complex128).reshape(2 * N, 2, N)
    psi = basis
    traces = np.empty(k_max, dtype=np.complex128)
    for k in range(k_max):
        psi = _apply(psi, config.coin_matrix, config.phase_factors)
        traces[k] = np.einsum("bb->", psi.reshape(2 * N, 2 * N))
    return traces


def trace_moment_residuals(params: SpectralParams, k_max: int, spectrum: Spectrum) -> NDArray[np.float64]:
    """``|Tr U**k - sum r**k|`` for ``k = 1..k_max``; trace via walk propagation."""
    if k_max < 1:
        raise DomainError(f"k_max must be >= 1, got {k_max}")
    traces = _trace_powers(params.walk_config(), k_max)
    k = np.arange(1, k_max + 1)
    moments = (spectrum.eigenvalues[None, :] ** k[:, None]).sum(axis=1)
    return np.abs(traces - moments)


def trace_moments(params: SpectralParams, k_max: int, spectrum: Spectrum | None = None) -> float:
    """Max trace-moment residual; defaults to the closed-form spectrum."""
    if spectrum is None:
        spectrum = closed_form_spectrum(params)
    return float(trace_moment_residuals(params, k_max, spectrum).max())


@dataclass(frozen=True)
class BandSummary:
    index: int
    e_min: float
    e_max: float
    width: float
    count: int


def heuristic_band_width(p: int, d_eff: float) -> float:
    """Narrow-band estimate ``(2 pi / 2p) d_eff``."""
    return math.pi / p * d_eff


def band_summary(spectrum: Spectrum | NDArray, gap_factor: float = 5.0,
                 degenerate_tol: float = 1e-9) -> list[BandSummary]:
    """
    Cluster quasi-energies into bands on the circle.

    Levels closer than ``degenerate_tol`` are merged first. A gap between
    distinct levels larger than ``gap_factor`` times the median such gap
    starts a new band. If every distinct level is at least three-fold
    degenerate (the ``d = 0`` limit) each level is its own zero-width band.
    The scan begins after the widest gap so no band is cut at the ``+-pi``
    seam; band edges are reported unwrapped, so ``e_max`` may exceed ``pi``.
    """
    e = spectrum.quasi_energies if isinstance(spectrum, Spectrum) else np.asarray(spectrum, float)
    e = np.sort(np.mod(e, 2 * np.pi))
    n = len(e)
    if n == 0:
        return []
    gaps = np.diff(np.append(e, e[0] + 2 * np.pi))
    start = (int(np.argmax(gaps)) + 1) % n
    e = np.concatenate([e[start:], e[:start] + 2 * np.pi])
    inner = np.diff(e)
    distinct = inner > degenerate_tol
    multiplicity = np.diff(np.concatenate([[0], np.flatnonzero(distinct) + 1, [n]]))
    if len(multiplicity) > 1 and multiplicity.min() >= 3:
        cuts = np.flatnonzero(distinct) + 1
    else:
        level_gaps = inner[distinct]
        threshold = gap_factor * float(np.median(level_gaps)) if len(level_gaps) else np.inf
        cuts = np.flatnonzero(distinct & (inner > threshold)) + 1
    bands = []
    for idx, members in enumerate(np.split(e, cuts)):
        lo, hi = float(members[0]), float(members[-1])
        # report centred on (-pi, pi]
        shift = 2 * np.pi * np.floor((lo + np.pi) / (2 * np.pi))
        bands.append(BandSummary(idx, lo - shift, hi - shift, hi - lo, len(members)))
    return bands
