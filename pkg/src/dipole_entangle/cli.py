"""
Command-line driver.

Every subcommand writes one CSV table (``--out``, default stdout) preceded by
``#`` metadata lines carrying the schema version, a hash of the resolved
configuration and the seed.  Settings come from an optional JSON file given
with ``--config``; command-line flags override file values.

Exit codes: 0 success, 2 configuration error, 3 numerical contract
violation, 4 I/O error.  Failures print a JSON error record on stderr.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .efficiency import CollectionWindow, pair_probability_analytic, pair_probability_numeric
from .errors import ContractViolation
from .geometry import find_detector_rings, placement_config
from .io import config_hash, write_table
from .measures import entanglement_of_formation
from .montecarlo import coincidence_window_analysis, run_campaign, summarize
from .postselection import analytic_pair_state, conditional_pair_state, source_fidelity_a01
from .sources import PAIR_LABELS, SourcePairConfig, dicke_basis_vector, fidelity, ket

EXIT_CONFIG = 2
EXIT_CONTRACT = 3
EXIT_IO = 4

DEFAULT_DOMEGA = 2.0 * math.pi * (1.0 - math.cos(0.02))


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    gamma0: float = 1.0
    gamma1: float = 1.0
    k0d: float = 2.0 * math.pi
    initial_state: object = "22"
    theta_b: float = math.pi / 3.0
    phi_b: float = 0.0
    grid: int = 50
    theta_range: tuple = (0.0, math.pi)
    phi_range: tuple = (0.0, 2.0 * math.pi)
    t1: float = 0.3
    t2: float = 0.8
    domega: float = DEFAULT_DOMEGA
    seed: int = 0
    n_cycles: int = 20_000
    cone_bias: float = 1.0 / 3.0
    workers: int = 1
    delta_t: float = 10.0
    t_rep: float = 1000.0
    tol: float = 1e-9

    def validate(self):
        if self.grid < 2:
            raise ConfigError("grid must be at least 2")
        if self.n_cycles < 1:
            raise ConfigError("n_cycles must be positive")
        if self.tol <= 0 or self.domega <= 0:
            raise ConfigError("tolerances and solid angles must be positive")
        if not 0 <= self.t1 <= self.t2:
            raise ConfigError("need 0 <= t1 <= t2")

    def source_config(self) -> SourcePairConfig:
        return SourcePairConfig(
            gamma0=self.gamma0,
            gamma1=self.gamma1,
            k0d=self.k0d,
            initial_state=parse_state(self.initial_state),
        )

    def record(self) -> dict:
        d = asdict(self)
        d["theta_range"] = list(self.theta_range)
        d["phi_range"] = list(self.phi_range)
        return d


_NAMED = {
    "22": lambda: ket(2, 2),
    "00": lambda: ket(0, 0),
    "22+00": lambda: (ket(2, 2) + ket(0, 0)) / math.sqrt(2.0),
    "s01": lambda: dicke_basis_vector("symmetric", 0, 1),
    "a01": lambda: dicke_basis_vector("antisymmetric", 0, 1),
}


def parse_state(spec) -> np.ndarray:
    """A named state ("22", "22+00", ...) or nine amplitudes, each a number or [re, im]."""
    if isinstance(spec, str):
        if spec not in _NAMED:
            raise ConfigError(f"unknown initial state {spec!r}; choose from {sorted(_NAMED)}")
        return _NAMED[spec]()
    vals = [complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v) for v in spec]
    if len(vals) != 9:
        raise ConfigError("initial state needs 9 amplitudes")
    v = np.array(vals)
    return v / np.linalg.norm(v)


def resolve_config(args) -> RunConfig:
    values = {}
    if args.config:
        try:
            with open(args.config) as fh:
                values = json.load(fh)
        except OSError:
            raise
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
    known = {f.name for f in fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for name in known:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    for key in ("theta_range", "phi_range"):
        if key in values:
            values[key] = tuple(float(x) for x in values[key])
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def _meta(run: RunConfig, **extra) -> dict:
    meta = {"config_hash": config_hash(run.record()), "seed": run.seed, "version": __version__}
    meta.update(extra)
    return meta


def cmd_ef_map(run: RunConfig, out):
    thetas = np.linspace(*run.theta_range, run.grid)
    phis = np.linspace(*run.phi_range, run.grid)
    rows = []
    for th in thetas:
        for ph in phis:
            rep = entanglement_of_formation(analytic_pair_state(th, ph))
            rows.append((float(th), float(ph), rep.ef, rep.concurrence, rep.p_mix))
    write_table(out, "ef-map", _meta(run), ["theta", "phi", "ef", "concurrence", "p"], rows)


def cmd_rings(run: RunConfig, out):
    cfg = run.source_config()
    rows = []
    for parity in ("plus", "minus"):
        for ring in find_detector_rings(cfg, parity, run.tol):
            rows.append((parity, ring.order, ring.cos_alpha, math.acos(ring.cos_alpha), ring.residual))
    write_table(out, "rings", _meta(run, k0d=cfg.k0d), ["parity", "order", "cos_alpha", "alpha", "residual"], rows)


def cmd_pair_state(run: RunConfig, out):
    cfg, geom_a, geom_b = placement_config(run.source_config(), run.theta_b, run.phi_b)
    pair, source, density = conditional_pair_state(geom_a, geom_b, run.t1 / cfg.gamma, run.t2 / cfg.gamma, cfg)
    analytic = analytic_pair_state(run.theta_b, run.phi_b)
    # fix the global phase on the largest analytic amplitude for a readable dump
    ref = int(np.argmax(np.abs(analytic)))
    pair = pair * np.exp(1j * (np.angle(analytic[ref]) - np.angle(pair[ref])))
    rep = entanglement_of_formation(pair)
    meta = _meta(
        run,
        k0d_used=cfg.k0d,
        theta_b_used=geom_b.theta,
        fidelity_analytic=fidelity(pair, analytic),
        source_fidelity_a01=source_fidelity_a01(source),
        density=density,
        concurrence=rep.concurrence,
        ef=rep.ef,
    )
    rows = [
        (label, pair[i].real, pair[i].imag, analytic[i].real, analytic[i].imag)
        for i, label in enumerate(PAIR_LABELS)
    ]
    write_table(out, "pair-state", meta, ["label", "re", "im", "analytic_re", "analytic_im"], rows)


def _window(run: RunConfig) -> CollectionWindow:
    return CollectionWindow(run.domega, run.domega, run.theta_b, run.phi_b)


def cmd_efficiency(run: RunConfig, out):
    base = run.source_config()
    win = _window(run)
    cfg, _, geom_b = placement_config(base, run.theta_b, run.phi_b)
    analytic = pair_probability_analytic(cfg, win)
    numeric = pair_probability_numeric(cfg, win)
    stats = summarize(
        run_campaign(cfg, win, run.n_cycles, run.seed, cone_bias=run.cone_bias, workers=run.workers)
    )
    rel = (lambda x: abs(x - analytic) / analytic) if analytic > 0 else (lambda x: abs(x))
    rows = [
        ("analytic", analytic, 0.0, 0.0, ""),
        ("numeric", numeric, rel(numeric), 0.0, ""),
        (
            "montecarlo",
            stats.estimated_p,
            rel(stats.estimated_p),
            stats.standard_error,
            (stats.estimated_p - analytic) / stats.standard_error if stats.standard_error > 0 else "",
        ),
    ]
    meta = _meta(run, k0d_used=cfg.k0d, theta_b_used=geom_b.theta, n_pairs=stats.n_pairs_in_cones)
    write_table(out, "efficiency", meta, ["method", "P", "rel_err", "stderr", "z_score"], rows)


def cmd_simulate(run: RunConfig, out):
    cfg, _, geom_b = placement_config(run.source_config(), run.theta_b, run.phi_b)
    win = _window(run)
    gamma = cfg.gamma
    t_rep = run.t_rep / gamma
    delta_t = run.delta_t / gamma
    outcomes = run_campaign(
        cfg,
        win,
        run.n_cycles,
        run.seed,
        t_max=t_rep - delta_t,
        cone_bias=run.cone_bias,
        workers=run.workers,
    )
    stats = summarize(outcomes)
    rows = []
    stream = []
    for cyc in outcomes:
        for t, th, ph, pol, det in cyc.photons:
            rows.append((cyc.index, t, th, ph, pol, det, cyc.weight))
            stream.append((cyc.index, t, det))
    counts = coincidence_window_analysis(stream, delta_t, t_rep, gamma)
    meta = _meta(
        run,
        k0d_used=cfg.k0d,
        theta_b_used=geom_b.theta,
        n_cycles=stats.n_cycles,
        n_pairs_in_cones=stats.n_pairs_in_cones,
        estimated_p=stats.estimated_p,
        standard_error=stats.standard_error,
        pol_counts=" ".join(str(int(c)) for c in stats.pol_counts),
        window_pairs=counts.pairs,
        window_accidentals=counts.accidentals,
        window_missed=counts.missed,
    )
    write_table(
        out,
        "events",
        meta,
        ["cycle_index", "time", "theta", "phi", "polarization", "detector", "weight"],
        rows,
    )


COMMANDS = {
    "ef-map": cmd_ef_map,
    "rings": cmd_rings,
    "pair-state": cmd_pair_state,
    "efficiency": cmd_efficiency,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dipole-entangle",
        description="Postselected photon-pair entanglement from two distant Lambda-type sources.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with run settings")
        p.add_argument("--out", default="-", help="output CSV path (default stdout)")
        p.add_argument("--seed", type=int)
        p.add_argument("--gamma0", type=float)
        p.add_argument("--gamma1", type=float)
        p.add_argument("--k0d", type=float)
        p.add_argument("--theta-b", dest="theta_b", type=float)
        p.add_argument("--phi-b", dest="phi_b", type=float)
        p.add_argument("--n-cycles", dest="n_cycles", type=int)
        p.add_argument("--grid", type=int)
        p.add_argument("--domega", type=float, help="detector solid angle in sr")
        p.add_argument("--workers", type=int)
        p.add_argument("--initial-state", dest="initial_state")
    return parser


def _fail(code: int, exc: Exception) -> int:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = resolve_config(args)
        run.source_config()
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    except (ValueError, TypeError) as exc:
        return _fail(EXIT_CONFIG, exc)
    try:
        COMMANDS[args.command](run, args.out)
    except ContractViolation as exc:
        return _fail(EXIT_CONTRACT, exc)
    except OSError as exc:
        return _fail(EXIT_IO, OSError(f"{args.out}: {exc}"))
    except ValueError as exc:
        return _fail(EXIT_CONFIG, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
