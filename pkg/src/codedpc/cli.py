"""Experiment runner: policy sweeps, per-state action tables, coding runs.

Subcommands
    sweep      CSV of the four policies and their relative gains per SNR point
    policies   CSV of per-state optimal and semi-coordinated actions
    simulate   JSON report of one block-coding simulation

Configuration comes from an optional flat key=value file plus command-line
flags (flags win).  Exit codes: 0 success, 1 usage error, 2 solver or
simulation failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import icmodel
from .coding import CodingConfig, CodingConfigError, run as run_coding
from .constraint import info_constraint_gap
from .optimizer import (
    ConvergenceError,
    SolverOptions,
    best_actions,
    costless_bound,
    expected_payoff,
    solve,
)
from .probability import compose

USAGE_ERROR = 1
RUN_ERROR = 2

SWEEP_COLUMNS = (
    "snr_db",
    "fpc",
    "spc",
    "ocpc",
    "costless",
    "gain_ocpc_vs_fpc_pct",
    "gain_costless_vs_fpc_pct",
    "gain_ocpc_vs_spc_pct",
    "gain_costless_vs_spc_pct",
    "status",
)

# key -> (parser, default).  Flags use the same names with '-' for '_'.
CONFIG_SCHEMA: dict[str, tuple] = {
    "regime": (str, "hir"),
    "payoff": (str, "log"),
    "snr_start": (float, 0.0),
    "snr_stop": (float, 40.0),
    "snr_step": (float, 1.0),
    "snr": (float, 10.0),
    "gmin": (float, 0.1),
    "gmax": (float, 1.9),
    "sigma2": (float, 1.0),
    "p11": (float, None),
    "p12": (float, None),
    "p21": (float, None),
    "p22": (float, None),
    "tol_payoff": (float, 1e-5),
    "outer_steps": (int, 60),
    "max_inner_iter": (int, 50_000),
    "min_slack": (float, 0.0),
    "target": (str, "solver"),
    "sim_n": (int, 200),
    "sim_blocks": (int, 50),
    "sim_rate": (float, None),
    "sim_epsilon": (float, 0.2),
    "sim_seed": (int, 0),
}


class UsageError(Exception):
    pass


def read_config(path: str) -> dict:
    """Parse a flat key=value file; '#' starts a comment."""
    values: dict = {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
        key, _, text = line.partition("=")
        key = key.strip()
        text = text.strip()
        if key not in CONFIG_SCHEMA:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        parser = CONFIG_SCHEMA[key][0]
        try:
            values[key] = parser(text)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {text!r}") from exc
    return values


def _settings(args: argparse.Namespace) -> dict:
    merged = {key: default for key, (_, default) in CONFIG_SCHEMA.items()}
    if getattr(args, "config", None):
        merged.update(read_config(args.config))
    for key in CONFIG_SCHEMA:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    if merged["regime"] not in icmodel.REGIME_PROBS:
        raise UsageError(f"regime must be one of {sorted(icmodel.REGIME_PROBS)}, got {merged['regime']!r}")
    if merged["payoff"] not in ("log", "linear"):
        raise UsageError(f"payoff must be 'log' or 'linear', got {merged['payoff']!r}")
    if merged["target"] not in ("solver", "spc", "fpc"):
        raise UsageError(f"target must be solver, spc or fpc, got {merged['target']!r}")
    if merged["snr_step"] <= 0:
        raise UsageError(f"snr_step must be positive, got {merged['snr_step']!r}")
    return merged


def _ic_config(settings: dict, snr_db: float) -> icmodel.ICConfig:
    probs = list(icmodel.REGIME_PROBS[settings["regime"]])
    for i, key in enumerate(("p11", "p12", "p21", "p22")):
        if settings[key] is not None:
            probs[i] = settings[key]
    try:
        return icmodel.ICConfig(
            snr_db=snr_db,
            p_gmin=tuple(probs),
            g_min=settings["gmin"],
            g_max=settings["gmax"],
            sigma2=settings["sigma2"],
            payoff_form=settings["payoff"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _solver_options(settings: dict) -> SolverOptions:
    return SolverOptions(
        tol_payoff=settings["tol_payoff"],
        outer_steps=settings["outer_steps"],
        max_inner_iter=settings["max_inner_iter"],
    )


def _fmt(value: float) -> str:
    return format(float(value), ".12g")


def _snr_grid(settings: dict) -> list[float]:
    start, stop, step = settings["snr_start"], settings["snr_stop"], settings["snr_step"]
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    if count < 1:
        raise UsageError(f"empty SNR grid: start {start}, stop {stop}, step {step}")
    return [start + k * step for k in range(count)]


def cmd_sweep(args: argparse.Namespace, out) -> int:
    settings = _settings(args)
    opts = _solver_options(settings)
    rows = [",".join(SWEEP_COLUMNS)]
    for snr_db in _snr_grid(settings):
        cfg = _ic_config(settings, snr_db)
        prior = icmodel.build_state_prior(cfg)
        channel = icmodel.identity_observation_channel()
        payoff = icmodel.build_payoff_table(cfg)
        fpc = expected_payoff(icmodel.fpc_distribution(cfg), payoff)
        spc = expected_payoff(icmodel.spc_distribution(cfg), payoff)
        bound = costless_bound(prior, payoff)
        status = "ok"
        try:
            ocpc = solve(prior, channel, payoff, options=opts).payoff
        except ConvergenceError as exc:
            status = "no_certificate"
            if exc.result is None:
                raise
            ocpc = exc.result.payoff
        rows.append(
            ",".join(
                (
                    _fmt(snr_db),
                    _fmt(fpc),
                    _fmt(spc),
                    _fmt(ocpc),
                    _fmt(bound),
                    _fmt(100.0 * (ocpc / fpc - 1.0)),
                    _fmt(100.0 * (bound / fpc - 1.0)),
                    _fmt(100.0 * (ocpc / spc - 1.0)),
                    _fmt(100.0 * (bound / spc - 1.0)),
                    status,
                )
            )
        )
    out.write("\n".join(rows) + "\n")
    return 0


def cmd_policies(args: argparse.Namespace, out) -> int:
    settings = _settings(args)
    cfg = _ic_config(settings, settings["snr"])
    prior = icmodel.build_state_prior(cfg)
    payoff = icmodel.build_payoff_table(cfg)
    pairs = best_actions(payoff)
    spc = icmodel.spc_distribution(cfg)
    levels = cfg.power_levels
    rows = ["state,g11,g12,g21,g22,prob,best_x1,best_x2,best_payoff,spc_x1"]
    for s, gains in enumerate(icmodel.gain_states(cfg)):
        b1, b2 = pairs[s]
        spc_x1 = int(np.argmax(spc.pmf[s].sum(axis=1)))
        rows.append(
            ",".join(
                (
                    str(s),
                    _fmt(gains.g11),
                    _fmt(gains.g12),
                    _fmt(gains.g21),
                    _fmt(gains.g22),
                    _fmt(prior.probs[s]),
                    _fmt(levels[b1]),
                    _fmt(levels[b2]),
                    _fmt(payoff.values[s, b1, b2]),
                    _fmt(levels[spc_x1]),
                )
            )
        )
    out.write("\n".join(rows) + "\n")
    return 0


def cmd_simulate(args: argparse.Namespace, out) -> int:
    settings = _settings(args)
    cfg = _ic_config(settings, settings["snr"])
    prior = icmodel.build_state_prior(cfg)
    channel = icmodel.identity_observation_channel()
    payoff = icmodel.build_payoff_table(cfg)
    if settings["target"] == "fpc":
        target = icmodel.fpc_distribution(cfg)
    elif settings["target"] == "spc":
        target = icmodel.spc_distribution(cfg)
    else:
        target = solve(
            prior,
            channel,
            payoff,
            min_slack=settings["min_slack"],
            options=_solver_options(settings),
        ).qbar
    sim_cfg = CodingConfig(
        target=target,
        channel=channel,
        prior=prior,
        payoff=payoff,
        block_length=settings["sim_n"],
        num_blocks=settings["sim_blocks"],
        rate=settings["sim_rate"],
        epsilon=settings["sim_epsilon"],
        seed=settings["sim_seed"],
    )
    result = run_coding(sim_cfg)
    gap = info_constraint_gap(compose(target, channel))
    report = {
        "settings": {
            "regime": settings["regime"],
            "payoff": settings["payoff"],
            "snr_db": settings["snr"],
            "target": settings["target"],
            "block_length": settings["sim_n"],
            "num_blocks": settings["sim_blocks"],
            "epsilon": settings["sim_epsilon"],
            "seed": settings["sim_seed"],
        },
        "rate": sim_cfg.resolved_rate,
        "codebook_size": sim_cfg.codebook_size,
        "info_coordination_bits": sim_cfg.info_coordination,
        "info_channel_bits": sim_cfg.info_channel,
        "target_payoff": expected_payoff(target, payoff),
        "target_slack": -gap,
        "result": result.to_dict(),
    }
    out.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codedpc",
        description="Coded power control experiments on the two-pair interference channel.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("sweep", "sweep the four policies over an SNR grid (CSV)"),
        ("policies", "per-state optimal actions at one SNR (CSV)"),
        ("simulate", "one block-coding simulation (JSON)"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key=value configuration file")
        p.add_argument("--output", help="write to this file instead of stdout")
        for key, (kind, _) in CONFIG_SCHEMA.items():
            p.add_argument(f"--{key.replace('_', '-')}", type=kind, dest=key, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with its own code; normalize usage failures to 1
        return 0 if exc.code in (0, None) else USAGE_ERROR
    handler = {"sweep": cmd_sweep, "policies": cmd_policies, "simulate": cmd_simulate}[
        args.command
    ]
    try:
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="") as out:
                return handler(args, out)
        return handler(args, sys.stdout)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (ConvergenceError, CodingConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUN_ERROR


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
