"""
Experiment drivers behind the command-line subcommands.

Each driver returns a :class:`Table` holding ordered rows, the full
parameter set and summary values; :func:`write_csv` and :func:`write_json`
serialize it deterministically.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, TextIO

import numpy as np

from . import __version__
from .analytics import effective_probability, period_T, predict_PkT, predict_PT, predict_sigma, sigma_max
from .bloch import discrete_vs_continuum, integrate_coupled_modes
from .errors import DomainError, ValidationError
from .spectral import SpectralParams, closed_form_spectrum, numeric_spectrum, spectrum_distance
from .walk import (CoinSpec, CoinVariant, InitialState, Observer, PhaseProfile, WalkConfig,
                   choose_cycle_size, evolve, return_probability_observer, sigma_observer)

NORM_DRIFT_TOL = 1e-10
MAX_SITES = 4_000_000


@dataclass
class Table:
    command: str
    columns: list[str]
    rows: list[tuple]
    params: dict
    summary: dict = field(default_factory=dict)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def write_csv(table: Table, fh: TextIO) -> None:
    fh.write(f"# gcqw {__version__} {table.command}\n")
    fh.write("# params: " + json.dumps(_jsonable(table.params), sort_keys=True) + "\n")
    for key in sorted(table.summary):
        fh.write(f"# summary {key}={_fmt(table.summary[key])}\n")
    fh.write(",".join(table.columns) + "\n")
    for row in table.rows:
        fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(table: Table, fh: TextIO) -> None:
    doc = {
        "tool": "gcqw",
        "version": __version__,
        "command": table.command,
        "params": _jsonable(table.params),
        "summary": _jsonable(table.summary),
        "columns": table.columns,
        "rows": [_jsonable(list(r)) for r in table.rows],
    }
    json.dump(doc, fh, sort_keys=True, indent=1)
    fh.write("\n")


def _map(fn: Callable, items: Sequence, jobs: int) -> list:
    # Executor.map keeps input order, so output is independent of scheduling
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _check_norm(state, label: str) -> None:
    drift = abs(state.norm - 1.0)
    if drift > NORM_DRIFT_TOL:
        raise ValidationError("norm_drift", f"{label}: norm drift {drift:.3e} exceeds {NORM_DRIFT_TOL:g}",
                              drift=drift)


def _initial_params(initial: InitialState) -> dict:
    return {"site": initial.site,
            "coin": [[c.real, c.imag] for c in initial.coin]}


def _simulate_P(D, p, q, N, t_max, variant, initial):
    config = WalkConfig(N, CoinSpec.from_probability(D, variant), PhaseProfile.harmonic(q, p), initial)
    series, final = evolve(config, t_max, [return_probability_observer()], keep_final=True)
    _check_norm(final, f"D={D}")
    return series["P"].as_array()


def _sweep_point(args):
    D, p, q, N, T, variant, initial = args
    return _simulate_P(D, p, q, N, T, variant, initial)[T]


def recurrence_sweep(p: int, Ds: Sequence[float], q: int = 1, N: int | None = None,
                     variant=CoinVariant.STANDARD, initial: InitialState | None = None,
                     jobs: int = 1) -> Table:
    """Simulated versus predicted return probability after one period for each ``D``."""
    initial = initial or InitialState()
    T = period_T(p)
    N = choose_cycle_size(p, T) if N is None else N
    Ds = sorted(float(D) for D in Ds)
    sims = _map(_sweep_point, [(D, p, q, N, T, variant, initial) for D in Ds], jobs)
    rows = [(D, sim, predict_PT(D, p)) for D, sim in zip(Ds, sims)]
    params = {"p": p, "q": q, "N": N, "T": T, "D": Ds, "coin": CoinVariant(variant).value,
              "initial": _initial_params(initial)}
    err = max(abs(r[1] - r[2]) for r in rows) if rows else 0.0
    return Table("recurrence-sweep", ["D", "P_T_simulated", "P_T_formula"], rows, params,
                 {"max_abs_error": err})


def multi_recurrence(p: int, D: float, q: int = 1, k_max: int = 30, N: int | None = None,
                     variant=CoinVariant.STANDARD, initial: InitialState | None = None) -> Table:
    """Return probability at every multiple ``kT`` against ``J0(2k sqrt(D_eff))**2``."""
    initial = initial or InitialState()
    T = period_T(p)
    t_max = k_max * T
    N = choose_cycle_size(p, t_max) if N is None else N
    P = _simulate_P(D, p, q, N, t_max, variant, initial)
    k = np.arange(k_max + 1)
    formula = predict_PkT(D, p, k)
    sim = P[k * T]
    rows = [(int(kk), float(s), float(f)) for kk, s, f in zip(k, sim, formula)]
    summary = {"max_abs_error": float(np.abs(sim - formula).max()),
               "first_min_k_simulated": int(_first_local_min(sim)),
               "first_min_k_formula": int(_first_local_min(formula))}
    params = {"p": p, "q": q, "D": D, "N": N, "T": T, "k_max": k_max,
              "coin": CoinVariant(variant).value, "initial": _initial_params(initial)}
    return Table("multi-recurrence", ["k", "P_kT_simulated", "P_kT_formula"], rows, params, summary)


def _first_local_min(values) -> int:
    v = np.asarray(values)
    for i in range(1, len(v) - 1):
        if v[i] <= v[i - 1] and v[i] <= v[i + 1]:
            return i
    return int(np.argmin(v))


def sigma_dynamics(p: int, D: float, q: int = 1, t_max: int = 600, N: int | None = None,
                   variant=CoinVariant.STANDARD, initial: InitialState | None = None,
                   cadence: int = 1) -> Table:
    """Simulated standard deviation versus the ballistic law."""
    initial = initial or InitialState()
    N = choose_cycle_size(p, t_max) if N is None else N
    if N > MAX_SITES:
        suggestion = (MAX_SITES // p * p - 4) // 2
        raise DomainError(f"t_max={t_max} needs N={N} sites, above the budget of {MAX_SITES}; "
                          f"use t_max <= {suggestion}")
    config = WalkConfig(N, CoinSpec.from_probability(D, variant), PhaseProfile.harmonic(q, p), initial)
    series, final = evolve(config, t_max, [sigma_observer(cadence)],
                           keep_final=True)
    _check_norm(final, "sigma-dynamics")
    t = series["sigma"].t
    sig = series["sigma"].as_array()
    formula = predict_sigma(D, p, t)
    rows = [(int(a), float(b), float(c)) for a, b, c in zip(t, sig, formula)]
    params = {"p": p, "q": q, "D": D, "N": N, "t_max": t_max, "cadence": cadence,
              "coin": CoinVariant(variant).value, "initial": _initial_params(initial)}
    summary = {"D_eff": effective_probability(D, p), "T": period_T(p)}
    late = (t >= 0.75 * t_max) & (formula > 0)
    if late.any():
        summary["late_slope_ratio"] = float(np.mean(sig[late] / formula[late]))
    return Table("sigma-dynamics", ["t", "sigma_simulated", "sigma_ballistic_formula"], rows, params, summary)


def _spectrum_point(args):
    N, p, q, d, even_form = args
    params = SpectralParams(N, p, q, d)
    num = numeric_spectrum(params)
    closed = closed_form_spectrum(params, even_form)
    return num, closed


def spectrum_levels(p: int, q: int, N: int, ds: Sequence[float], even_form: str = "printed",
                    jobs: int = 1) -> Table:
    """
    Quasi-energy levels across a grid of ``d``.

    Numeric levels are always emitted. Closed-form levels are emitted only
    when every eigenvalue is on the unit circle; otherwise the grid point is
    listed in ``summary`` and the numeric spectrum stands alone.
    """
    ds = sorted(float(d) for d in ds)
    results = _map(_spectrum_point, [(N, p, q, d, even_form) for d in ds], jobs)
    rows = []
    rejected = []
    worst = 0.0
    for d, (num, closed) in zip(ds, results):
        D_eff = SpectralParams(N, p, q, d).D_eff
        for e in np.sort(num.quasi_energies):
            rows.append((d, D_eff, float(e), "numeric"))
        if closed.valid:
            worst = max(worst, spectrum_distance(closed, num))
            for e in np.sort(closed.quasi_energies):
                rows.append((d, D_eff, float(e), closed.source))
        else:
            rejected.append(d)
    params = {"p": p, "q": q, "N": N, "d": ds, "even_form": even_form}
    summary = {"closed_form_max_distance": worst,
               "closed_form_rejected_d": ";".join(_fmt(d) for d in rejected) or "none"}
    return Table("spectrum", ["d", "D_eff", "quasi_energy", "source"], rows, params, summary)


def bloch_compare(D: float, Phi: float, t_max: int, N: int | None = None) -> Table:
    """Discrete return probability against the coupled-mode integration and its closed form."""
    N = choose_cycle_size(1, t_max) if N is None else N
    cmp = discrete_vs_continuum(D, Phi, t_max, N)
    d = math.sqrt(D)
    ode = integrate_coupled_modes(Phi, d, float(t_max), output_step=1.0)
    P_ode = ode.as_array()
    rows = [(int(t), float(a), float(b), float(c))
            for t, a, b, c in zip(cmp.t, cmp.P_discrete, P_ode, cmp.P_continuum)]
    summary = {
        "T_tilde": cmp.T_tilde,
        "max_abs_deviation_even_t": cmp.max_deviation,
        "ode_vs_closed_form": float(np.abs(P_ode - cmp.P_continuum).max()),
        "peaks": ";".join(f"{ev.predicted_t:.6g}->{ev.t}:{ev.kind.value}:{ev.P:.6g}"
                          for ev in cmp.recurrences) or "none",
    }
    params = {"D": D, "phi": Phi, "t_max": t_max, "N": N,
              "coin": "symmetric", "initial": {"site": 0, "coin": [[1.0, 0.0], [0.0, 0.0]]}}
    return Table("bloch-compare", ["t", "P_discrete", "P_ode", "P_closed_form"], rows, params, summary)


def localization(D: float, Phi: float, t_max: int, N: int | None = None,
                 variant=CoinVariant.STANDARD, initial: InitialState | None = None) -> Table:
    """Standard deviation for a linear phase ``n Phi``; bounded for irrational ``Phi/2pi``."""
    initial = initial or InitialState()
    N = choose_cycle_size(1, t_max) if N is None else N
    config = WalkConfig(N, CoinSpec.from_probability(D, variant), PhaseProfile.irrational(Phi), initial)
    series, final = evolve(config, t_max, [sigma_observer()], keep_final=True)
    _check_norm(final, "localization")
    t = series["sigma"].t
    sig = series["sigma"].as_array()
    T_tilde = 2 * math.pi / abs(Phi)
    half = t <= t_max // 2
    summary = {"max_sigma": float(sig.max()),
               "sigma_max_formula": sigma_max(D, T_tilde),
               "running_max_half": float(sig[half].max()),
               "T_tilde": T_tilde}
    params = {"D": D, "phi": Phi, "N": N, "t_max": t_max, "coin": CoinVariant(variant).value,
              "initial": _initial_params(initial)}
    rows = [(int(a), float(b)) for a, b in zip(t, sig)]
    return Table("localization", ["t", "sigma"], rows, params, summary)


def evolve_dump(config: WalkConfig, t_max: int, cadence: int = 1, line: bool = False) -> Table:
    """Raw amplitudes every ``cadence`` steps, coin-major then site order."""
    snap = Observer("amplitudes", lambda s, s0, cfg: s.amplitudes.copy(), cadence)
    series, final = evolve(config, t_max, [snap], line=line, keep_final=True)
    _check_norm(final, "evolve")
    rows = []
    for t, amps in zip(series["amplitudes"].t, series["amplitudes"].values):
        for c in range(2):
            for n in range(config.N):
                a = amps[c, n]
                rows.append((int(t), c, n, float(a.real), float(a.imag)))
    params = {"N": config.N, "d": config.coin.d, "coin": config.coin.variant.value,
              "phase": config.phase.kind.value, "Phi": config.phase.Phi, "t_max": t_max,
              "cadence": cadence}
    if config.initial.vector is None:
        params["initial"] = _initial_params(config.initial)
    return Table("evolve", ["t", "c", "n", "re", "im"], rows, params,
                 {"final_norm": final.norm})
