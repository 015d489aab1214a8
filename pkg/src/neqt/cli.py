"""Command-line interface: config ingestion, subcommands, CSV/JSON emission.

Output conventions: data tables are RFC-4180-style CSV with '.' decimals and
17 significant digits, preceded by '#' comment lines carrying the run
manifest (gnuplot-compatible via `set datafile commentschars "#"`); reports
are JSON on stdout.  Identical config and flags produce byte-identical CSV
files, so the embedded manifest carries no timestamps; a sidecar JSON
manifest (--manifest) records wall-clock time when provenance is wanted.

Exit codes: 0 success, 1 validation/config error, 2 numerical failure
(singular resolvent, quadrature, spectral screen, plateau rejection),
64 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .correlators import (GREEN_KINDS, fourier_transform, green_function,
                          lesser_fourier_direct, ness_density_matrix, parse_site,
                          site_label, steady_current_from_lesser)
from .errors import ConfigError, NeqtError
from .hartree_fock import build_potential, hf_system
from .leads import BandGeometry
from .model import SystemConfig, config_hash, load_config
from .oracle import (OracleConfig, evolve_adiabatic, evolve_free,
                     evolve_interacting, initial_state_independence)
from .quadrature import QuadratureSpec
from .spectral import ScanSpec, check_spectral_condition
from .transport import (energy_sum_rule, entropy_production, lb_currents,
                        onsager_matrix, transmission_batch)
from .utils import resolve_threads

USAGE_ERROR = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def emit_csv(columns: Sequence[str], rows, path: str, manifest: dict) -> None:
    """Write a rectangular table: '#' manifest comments, header, 17-digit data.

    Values round-trip bit-for-bit through the printed representation.
    """
    rows = [list(r) for r in rows]
    for r in rows:
        if len(r) != len(columns):
            raise ValueError(f"ragged row of length {len(r)}, expected {len(columns)}")
    lines = [f"# {key}: {json.dumps(manifest[key], sort_keys=True)}"
             for key in sorted(manifest)]
    lines.append(",".join(columns))
    lines.extend(",".join(_fmt(v) for v in r) for r in rows)
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise NeqtError(f"cannot write {path}: {exc}") from exc


def write_gnuplot_stub(csv_path: str, columns: Sequence[str]) -> None:
    """Drop a minimal gnuplot script next to a CSV file."""
    gp = csv_path + ".gp" if not csv_path.endswith(".csv") else csv_path[:-4] + ".gp"
    plots = ", ".join(
        f"'{csv_path}' using 1:{i + 2} with lines title '{name}'"
        for i, name in enumerate(columns[1:]))
    body = (
        "set datafile separator \",\"\n"
        "set datafile commentschars \"#\"\n"
        f"set xlabel '{columns[0]}'\n"
        f"plot {plots}\n"
    )
    try:
        with open(gp, "w") as fh:
            fh.write(body)
    except OSError:
        pass  # the stub is a convenience; never fail the run over it


def _manifest(args, config: SystemConfig, extra: Optional[dict] = None) -> dict:
    man = {
        "tool": f"neqt {__version__}",
        "subcommand": args.command,
        "config": args.config,
        "config_sha256": config_hash(config),
        "tolerance": args.tol,
    }
    if getattr(args, "seed", None) is not None:
        man["seed"] = args.seed
    if extra:
        man.update(extra)
    return man


def _write_sidecar(args, manifest: dict) -> None:
    if getattr(args, "manifest", None):
        doc = dict(manifest)
        doc["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        with open(args.manifest, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _quad(args) -> QuadratureSpec:
    return QuadratureSpec(tol=args.tol, threads=resolve_threads(args.threads))


def _print_json(doc: dict) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True))


# -- subcommand handlers -------------------------------------------------------


def _cmd_check_spectral(args) -> int:
    config = load_config(args.config)
    report = check_spectral_condition(config, ScanSpec(),
                                      threads=resolve_threads(args.threads))
    _print_json(report.to_dict())
    _write_sidecar(args, _manifest(args, config))
    return 0 if report.passed else 2


def _cmd_transmission(args) -> int:
    config = load_config(args.config)
    geometry = BandGeometry.from_config(config)
    lo = args.emin if args.emin is not None else geometry.thresholds[0]
    hi = args.emax if args.emax is not None else geometry.thresholds[-1]
    Es = np.linspace(lo, hi, args.ne)
    T = transmission_batch(config, Es)
    m = config.n_leads
    columns = ["E"] + [f"T_{j + 1}_{k + 1}" for j in range(m) for k in range(m) if j != k]
    rows = []
    for i, E in enumerate(Es):
        row = [E] + [T[i, j, k] for j in range(m) for k in range(m) if j != k]
        rows.append(row)
    man = _manifest(args, config, {"E_min": lo, "E_max": hi, "n_points": args.ne})
    if args.out:
        emit_csv(columns, rows, args.out, man)
        write_gnuplot_stub(args.out, columns)
    else:
        _print_json({"E": Es.tolist(),
                     "T": {f"{j + 1}->{k + 1}": T[:, k, j].tolist()
                           for j in range(m) for k in range(m) if j != k}})
    _write_sidecar(args, man)
    return 0


def _cmd_currents(args) -> int:
    config = load_config(args.config)
    obs = lb_currents(config, _quad(args))
    doc = {
        "charge_currents": obs.charge_currents.tolist(),
        "energy_currents": obs.energy_currents.tolist(),
        "entropy_production": obs.entropy_production,
        "charge_sum_rule": obs.charge_sum,
        "energy_sum_rule": energy_sum_rule(config, obs),
        "quadrature_error": {"charge": obs.charge_error, "energy": obs.energy_error},
    }
    _print_json(doc)
    man = _manifest(args, config)
    if args.out:
        columns = ["lead", "charge_current", "energy_current"]
        rows = [[j + 1, obs.charge_currents[j], obs.energy_currents[j]]
                for j in range(config.n_leads)]
        emit_csv(columns, rows, args.out, man)
        write_gnuplot_stub(args.out, columns)
    _write_sidecar(args, man)
    return 0


def _cmd_entropy(args) -> int:
    config = load_config(args.config)
    result = entropy_production(config, _quad(args))
    _print_json({
        "entropy_production": result.rate,
        "strictly_positive": result.strictly_positive,
        "error_estimate": result.error,
    })
    _write_sidecar(args, _manifest(args, config))
    return 0


def _cmd_onsager(args) -> int:
    config = load_config(args.config)
    result = onsager_matrix(config, step=args.step, quad=_quad(args))
    m = config.n_leads
    L = result.values
    _print_json({
        "onsager": L.tolist(),
        "step": result.step,
        "fd_error": result.fd_error,
        "asymmetry": float(np.max(np.abs(L - L.T))),
        "column_sums": L.sum(axis=0).tolist(),
    })
    man = _manifest(args, config, {"fd_step": result.step})
    if args.out:
        columns = ["j"] + [f"L_j_{k + 1}" for k in range(m)]
        rows = [[j + 1] + [L[j, k] for k in range(m)] for j in range(m)]
        emit_csv(columns, rows, args.out, man)
    _write_sidecar(args, man)
    return 0


def _cmd_greens(args) -> int:
    config = load_config(args.config)
    x = parse_site(args.x)
    y = parse_site(args.y)
    quad = _quad(args)
    man = _manifest(args, config, {
        "kind": args.kind, "x": args.x, "y": args.y,
        "normalization": "G(t)=i<a^* a(t)>-type; Ghat(w)=int G(t) e^{+iwt} dt",
    })
    if args.fourier:
        geometry = BandGeometry.from_config(config)
        lo = args.wmin if args.wmin is not None else geometry.thresholds[0] - 0.5
        hi = args.wmax if args.wmax is not None else geometry.thresholds[-1] + 0.5
        omegas = np.linspace(lo, hi, args.nw)
        if args.kind == "lesser":
            vals = lesser_fourier_direct(config, omegas, x, y)
        else:
            ts = np.arange(-args.tmax, args.tmax + 0.5 * args.dt, args.dt)
            gf = green_function(config, args.kind, ts, x, y, quad)
            vals = fourier_transform(gf, omegas).freq_values
        columns = ["omega", "Re_G", "Im_G"]
        rows = [[w, v.real, v.imag] for w, v in zip(omegas, vals)]
    else:
        ts = np.arange(-args.tmax if args.kind in ("retarded",) else 0.0,
                       args.tmax + 0.5 * args.dt, args.dt)
        gf = green_function(config, args.kind, ts, x, y, quad)
        columns = ["t", "Re_G", "Im_G"]
        rows = [[t, v.real, v.imag] for t, v in zip(ts, gf.values)]
    if args.out:
        emit_csv(columns, rows, args.out, man)
        write_gnuplot_stub(args.out, columns)
    else:
        _print_json({"columns": columns, "rows": [[_fmt(v) for v in r] for r in rows[:20]],
                     "truncated": len(rows) > 20})
    _write_sidecar(args, man)
    return 0


def _cmd_hartree_fock(args) -> int:
    config = load_config(args.config)
    quad = _quad(args)
    pot = build_potential(config, quad)
    base = config.with_sample_hamiltonian(config.sample.hamiltonian, interaction_strength=0.0)
    obs0 = lb_currents(base, quad)
    shifted = hf_system(config, quad, potential=pot)
    obs_hf = lb_currents(shifted, quad)
    _print_json({
        "xi": config.sample.interaction_strength,
        "v_hartree": [[v.real for v in row] for row in pot.hartree],
        "v_exchange_re": [[v.real for v in row] for row in pot.exchange],
        "v_exchange_im": [[v.imag for v in row] for row in pot.exchange],
        "charge_currents_xi0": obs0.charge_currents.tolist(),
        "charge_currents_hf": obs_hf.charge_currents.tolist(),
        "energy_currents_hf": obs_hf.energy_currents.tolist(),
    })
    man = _manifest(args, config)
    if args.out:
        columns = ["lead", "J_xi0", "J_hf", "Eflux_xi0", "Eflux_hf"]
        rows = [[j + 1, obs0.charge_currents[j], obs_hf.charge_currents[j],
                 obs0.energy_currents[j], obs_hf.energy_currents[j]]
                for j in range(config.n_leads)]
        emit_csv(columns, rows, args.out, man)
        write_gnuplot_stub(args.out, columns)
    _write_sidecar(args, man)
    return 0


def _cmd_oracle(args) -> int:
    config = load_config(args.config)
    ocfg = OracleConfig(
        lead_truncation=args.L,
        dt=args.dt,
        t_max=args.tmax,
        switching=args.ramp,
        ramp_time=args.t0,
        sample_state=args.sample_state,
    )
    if args.mode == "free":
        run = evolve_free(config, ocfg)
    elif args.mode == "interacting":
        run = evolve_interacting(config, ocfg)
    elif args.mode == "adiabatic":
        run = evolve_adiabatic(config, ocfg)
    else:
        rng = np.random.default_rng(args.seed)
        report = initial_state_independence(
            config, ocfg, ("empty", "half", "full", "random"), rng=rng)
        _print_json(report.to_dict())
        _write_sidecar(args, _manifest(args, config))
        return 0

    summary = {
        "mode": run.mode,
        "scenario": run.scenario,
        "plateau_charge": run.plateau.values.tolist(),
        "plateau_slopes": run.plateau.slopes.tolist(),
        "plateau_converged": [bool(v) for v in run.plateau.converged],
        "plateau_window": list(run.plateau.window),
        "plateau_energy": run.energy_plateau.values.tolist(),
        "recurrence_time": run.recurrence_time,
        "particle_drift": run.particle_drift,
        "hermiticity_drift": run.hermiticity_drift,
        "metadata": run.metadata,
    }
    _print_json(summary)
    if not all(run.plateau.converged):
        print("warning: plateau fit not converged on every lead", file=sys.stderr)
    man = _manifest(args, config, {"L": args.L, "mode": args.mode})
    if args.out:
        m = config.n_leads
        n = config.n_sites
        columns = (["t"] + [f"j_{j + 1}" for j in range(m)]
                   + [f"e_{j + 1}" for j in range(m)] + [f"n_{x}" for x in range(n)])
        rows = []
        for i, t in enumerate(run.times):
            rows.append([t] + [run.charge_currents[j, i] for j in range(m)]
                        + [run.energy_currents[j, i] for j in range(m)]
                        + [run.densities[x, i] for x in range(n)])
        emit_csv(columns, rows, args.out, man)
        write_gnuplot_stub(args.out, columns)
    _write_sidecar(args, man)
    return 0 if all(run.plateau.converged) else 2


# -- argument wiring -----------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="JSON system description")
    p.add_argument("--out", help="CSV output path (a .gp gnuplot stub is written next to it)")
    p.add_argument("--tol", type=float, default=1e-10, help="quadrature tolerance")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (NEQT_THREADS as fallback)")
    p.add_argument("--seed", type=int, default=None, help="seed for randomized sweeps")
    p.add_argument("--manifest", help="write a JSON manifest (with timestamp) here")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="neqt",
                     description="steady-state transport for wired tight-binding samples")
    parser.add_argument("--version", action="version", version=f"neqt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-spectral", help="screen for bound states / real resonances")
    _add_common(p)

    p = sub.add_parser("transmission", help="energy sweep of the transmission matrix")
    _add_common(p)
    p.add_argument("--emin", type=float, default=None)
    p.add_argument("--emax", type=float, default=None)
    p.add_argument("--ne", type=int, default=1000)

    p = sub.add_parser("currents", help="steady charge/energy currents")
    _add_common(p)

    p = sub.add_parser("entropy", help="entropy production rate")
    _add_common(p)

    p = sub.add_parser("onsager", help="linear-response matrix at equilibrium")
    _add_common(p)
    p.add_argument("--step", type=float, default=None, help="finite-difference step in mu")

    p = sub.add_parser("greens", help="Green-Keldysh functions")
    _add_common(p)
    p.add_argument("--kind", choices=GREEN_KINDS, default="lesser")
    p.add_argument("--x", default="0", help="site: 'k' (sample) or 'j:x' (lead)")
    p.add_argument("--y", default="0")
    p.add_argument("--tmax", type=float, default=50.0)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--fourier", action="store_true")
    p.add_argument("--wmin", type=float, default=None)
    p.add_argument("--wmax", type=float, default=None)
    p.add_argument("--nw", type=int, default=800)

    p = sub.add_parser("hartree-fock", help="mean-field potential and corrected currents")
    _add_common(p)

    p = sub.add_parser("oracle", help="finite-lead brute-force evolution")
    _add_common(p)
    p.add_argument("--mode", choices=("free", "interacting", "adiabatic", "independence"),
                   default="free")
    p.add_argument("--L", type=int, default=400, help="lead truncation")
    p.add_argument("--tmax", type=float, default=None)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--ramp", choices=("sudden", "linear_ramp", "smooth_ramp"),
                   default="sudden")
    p.add_argument("--t0", type=float, default=0.0, help="ramp duration |t0|")
    p.add_argument("--sample-state", default="half",
                   choices=("half", "empty", "full"), dest="sample_state")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else USAGE_ERROR

    handlers = {
        "check-spectral": _cmd_check_spectral,
        "transmission": _cmd_transmission,
        "currents": _cmd_currents,
        "entropy": _cmd_entropy,
        "onsager": _cmd_onsager,
        "greens": _cmd_greens,
        "hartree-fock": _cmd_hartree_fock,
        "oracle": _cmd_oracle,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NeqtError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
