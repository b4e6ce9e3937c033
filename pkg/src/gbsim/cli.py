"""Command-line experiment runner.

Three subcommands:

* ``simulate`` - build a seeded pipeline, write one pattern-distribution
  file per requested photon total plus an observables summary.
* ``train``    - run gradient descent, write the trace, before/after
  distributions, the enhancement summary and the trained parameters.
* ``verify``   - run the built-in oracle battery and invariant sweeps.

Configuration is a flat ``key = value`` text file with ``[experiment]`` and
``[train]`` sections; every flag mirrors a config key and wins over the
file. ``--seed`` overrides every seed field at once. Output files carry the
config hash and the seeds in a ``#`` header block, and a run is a pure
function of its config: re-running writes byte-identical files.

Exit codes: 0 success, 1 usage/config error, 2 numerical or verification
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .observables import diff_photon_sq, mean_photon
from .patterns import distribution
from .training import (
    PipelineSpec,
    TrainableInterferometer,
    TrainingConfig,
    TrainingDivergence,
    build_pipeline,
    final_params_document,
    trace_to_csv,
    train,
)
from .verify import run_battery

__all__ = ["ExperimentConfig", "load_config", "main"]


class ConfigError(ValueError):
    """Malformed config file or flag combination."""


@dataclass(frozen=True)
class ExperimentConfig:
    modes: int = 6
    squeeze_r: tuple = (0.88,)
    squeeze_phi: tuple = (math.pi / 4,)
    haar_seed: int = 7
    pattern_totals: tuple = (2,)
    out: str = "gbsim-out"
    train: TrainingConfig = field(default_factory=TrainingConfig)

    def __post_init__(self):
        if self.modes < 1:
            raise ConfigError("modes must be positive")
        r = _broadcast(self.squeeze_r, self.modes, "squeeze_r")
        phi = _broadcast(self.squeeze_phi, self.modes, "squeeze_phi")
        if any(v < 0 for v in r):
            raise ConfigError("squeeze_r entries must be non-negative")
        totals = tuple(int(t) for t in self.pattern_totals)
        if any(t < 0 or t > self.modes for t in totals):
            raise ConfigError(
                "pattern totals must lie in [0, modes] for binary patterns"
            )
        object.__setattr__(self, "squeeze_r", r)
        object.__setattr__(self, "squeeze_phi", phi)
        object.__setattr__(self, "pattern_totals", totals)

    def pipeline_spec(self, params=None) -> PipelineSpec:
        trainable = (
            TrainableInterferometer.identity(self.modes)
            if params is None
            else TrainableInterferometer(self.modes, params)
        )
        return PipelineSpec(
            self.modes,
            np.array(self.squeeze_r),
            np.array(self.squeeze_phi),
            self.haar_seed,
            trainable,
        )

    def canonical_lines(self) -> list:
        """Key = value lines that define the experiment (output dir excluded,
        so the hash names the physics, not the disk layout)."""
        t = self.train
        return [
            f"experiment.modes = {self.modes}",
            "experiment.squeeze_r = " + ",".join(f"{v:.17g}" for v in self.squeeze_r),
            "experiment.squeeze_phi = "
            + ",".join(f"{v:.17g}" for v in self.squeeze_phi),
            f"experiment.haar_seed = {self.haar_seed}",
            "experiment.pattern_totals = "
            + ",".join(str(v) for v in self.pattern_totals),
            f"train.learning_rate = {t.learning_rate:.17g}",
            f"train.max_epochs = {t.max_epochs}",
            f"train.target_diff = {t.target_diff:.17g}",
            f"train.grad_method = {t.grad_method}",
            f"train.fd_step = {t.fd_step:.17g}",
            f"train.seed = {t.seed}",
            f"train.log_every = {t.log_every}",
        ]

    def config_hash(self) -> str:
        text = "\n".join(self.canonical_lines())
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _broadcast(values, n: int, key: str) -> tuple:
    values = tuple(float(v) for v in np.atleast_1d(values))
    if len(values) == 1:
        return values * n
    if len(values) != n:
        raise ConfigError(f"{key} needs 1 or {n} values, got {len(values)}")
    return values


# ---------------------------------------------------------------------------
# Config file parsing
# ---------------------------------------------------------------------------

_EXPERIMENT_KEYS = {
    "modes",
    "squeeze_r",
    "squeeze_phi",
    "haar_seed",
    "pattern_totals",
    "out",
}
_TRAIN_KEYS = {
    "learning_rate",
    "max_epochs",
    "target_diff",
    "grad_method",
    "fd_step",
    "seed",
    "log_every",
}


def parse_config_text(text: str) -> ExperimentConfig:
    section = "experiment"
    exp: dict = {}
    trn: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("experiment", "train"):
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if section == "experiment":
            if key not in _EXPERIMENT_KEYS:
                raise ConfigError(f"line {lineno}: unknown experiment key '{key}'")
            exp[key] = value
        else:
            if key not in _TRAIN_KEYS:
                raise ConfigError(f"line {lineno}: unknown train key '{key}'")
            trn[key] = value
    return _build_config(exp, trn)


def _build_config(exp: dict, trn: dict) -> ExperimentConfig:
    try:
        train_cfg = TrainingConfig(
            learning_rate=float(trn.get("learning_rate", 0.02)),
            max_epochs=int(trn.get("max_epochs", 20000)),
            target_diff=float(trn.get("target_diff", 0.05)),
            grad_method=str(trn.get("grad_method", "forward_jet")),
            fd_step=float(trn.get("fd_step", 1e-5)),
            seed=int(trn.get("seed", 0)),
            log_every=int(trn.get("log_every", 50)),
        )
        return ExperimentConfig(
            modes=int(exp.get("modes", 6)),
            squeeze_r=_float_list(exp.get("squeeze_r", "0.88")),
            squeeze_phi=_float_list(exp.get("squeeze_phi", str(math.pi / 4))),
            haar_seed=int(exp.get("haar_seed", 7)),
            pattern_totals=_int_list(exp.get("pattern_totals", "2")),
            out=str(exp.get("out", "gbsim-out")),
            train=train_cfg,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _float_list(value) -> tuple:
    if isinstance(value, str):
        return tuple(float(v) for v in value.split(",") if v.strip())
    return tuple(np.atleast_1d(value).astype(float))


def _int_list(value) -> tuple:
    if isinstance(value, str):
        return tuple(int(v) for v in value.split(",") if v.strip())
    return tuple(np.atleast_1d(value).astype(int))


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        config = parse_config_text(text)
    else:
        config = ExperimentConfig()
    return _apply_overrides(config, overrides)


def _apply_overrides(config: ExperimentConfig, ov: dict) -> ExperimentConfig:
    exp_kwargs: dict = {}
    if ov.get("modes") is not None:
        exp_kwargs["modes"] = ov["modes"]
    if ov.get("squeeze_r") is not None:
        exp_kwargs["squeeze_r"] = _float_list(ov["squeeze_r"])
        # Re-broadcast from scratch rather than against the old mode count.
    if ov.get("squeeze_phi") is not None:
        exp_kwargs["squeeze_phi"] = _float_list(ov["squeeze_phi"])
    if ov.get("haar_seed") is not None:
        exp_kwargs["haar_seed"] = ov["haar_seed"]
    if ov.get("totals") is not None:
        exp_kwargs["pattern_totals"] = _int_list(ov["totals"])
    if ov.get("out") is not None:
        exp_kwargs["out"] = ov["out"]
    train_kwargs: dict = {}
    if ov.get("epochs") is not None:
        train_kwargs["max_epochs"] = ov["epochs"]
    if ov.get("lr") is not None:
        train_kwargs["learning_rate"] = ov["lr"]
    if ov.get("target_diff") is not None:
        train_kwargs["target_diff"] = ov["target_diff"]
    if ov.get("grad_method") is not None:
        train_kwargs["grad_method"] = ov["grad_method"]
    if ov.get("seed") is not None:
        exp_kwargs["haar_seed"] = ov["seed"]
        train_kwargs["seed"] = ov["seed"]
    try:
        new_train = replace(config.train, **train_kwargs) if train_kwargs else config.train
        # Collapse previously broadcast vectors so a changed mode count can
        # re-broadcast scalars cleanly.
        base = {
            "modes": config.modes,
            "squeeze_r": _collapse(config.squeeze_r),
            "squeeze_phi": _collapse(config.squeeze_phi),
            "haar_seed": config.haar_seed,
            "pattern_totals": config.pattern_totals,
            "out": config.out,
        }
        base.update(exp_kwargs)
        return ExperimentConfig(train=new_train, **base)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _collapse(values: tuple) -> tuple:
    return values[:1] if len(set(values)) == 1 else values


# ---------------------------------------------------------------------------
# Output writing
# ---------------------------------------------------------------------------


def _header(config: ExperimentConfig, kind: str, extra: dict) -> str:
    lines = [
        f"# gbsim {kind}",
        f"# config_hash = {config.config_hash()}",
        f"# modes = {config.modes}",
        "# squeeze_r = " + ",".join(f"{v:.17g}" for v in config.squeeze_r),
        "# squeeze_phi = " + ",".join(f"{v:.17g}" for v in config.squeeze_phi),
        f"# haar_seed = {config.haar_seed}",
        f"# train_seed = {config.train.seed}",
    ]
    lines += [f"# {k} = {v}" for k, v in extra.items()]
    return "\n".join(lines) + "\n"


def _write(path: Path, content: str):
    path.write_text(content, newline="\n")


def _distribution_text(config, state, total: int, label: str) -> str:
    dist = distribution(state, total)
    header = _header(config, "distribution", {"total_photons": total, "stage": label})
    return header + dist.to_text()


def cmd_simulate(config: ExperimentConfig) -> int:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    state = build_pipeline(config.pipeline_spec())
    for total in config.pattern_totals:
        text = _distribution_text(config, state, total, "simulate")
        _write(out / f"distribution_total{total}.txt", text)
    lines = [_header(config, "observables", {})]
    means = [mean_photon(state, j) for j in range(config.modes)]
    for j, m in enumerate(means):
        lines.append(f"mean_n{j} = {m:.12g}")
    lines.append(f"total_mean = {sum(means):.12g}")
    if config.modes >= 2:
        lines.append(f"diff_sq_01 = {diff_photon_sq(state, 0, 1):.12g}")
    _write(out / "observables.txt", "\n".join(lines) + "\n")
    return 0


def cmd_train(config: ExperimentConfig) -> int:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = config.pipeline_spec()
    trace = train(spec, config.train)
    initial_state = build_pipeline(spec)
    final_state = build_pipeline(spec.with_params(trace.final_params))
    _write(
        out / "trace.csv",
        _header(config, "trace", {"stopped_by_target": trace.stopped_by_target})
        + trace_to_csv(trace),
    )
    _write(
        out / "params_final.txt",
        _header(config, "params", {}) + final_params_document(trace, spec, config.train),
    )
    ratio_lines = [
        _header(config, "enhancement", {}).rstrip("\n"),
        "pattern total initial final ratio",
    ]
    for total in config.pattern_totals:
        before = distribution(initial_state, total)
        after = distribution(final_state, total)
        _write(
            out / f"distribution_total{total}_epoch0.txt",
            _header(config, "distribution", {"total_photons": total, "stage": "epoch0"})
            + before.to_text(),
        )
        _write(
            out / f"distribution_total{total}_final.txt",
            _header(config, "distribution", {"total_photons": total, "stage": "final"})
            + after.to_text(),
        )
        for (pattern, p0), (_, p1) in zip(
            sorted(before.entries, key=lambda e: e[0].counts),
            sorted(after.entries, key=lambda e: e[0].counts),
        ):
            ratio = "inf" if p0 == 0 else f"{p1 / p0:.6g}"
            ratio_lines.append(
                f"{pattern.digits()} {total} {p0:.11e} {p1:.11e} {ratio}"
            )
    _write(out / "enhancement.txt", "\n".join(ratio_lines) + "\n")
    return 0


def cmd_verify() -> int:
    results = run_battery()
    failed = False
    for res in results:
        tag = "PASS" if res.passed else "FAIL"
        print(f"{tag} {res.name}: {res.detail}")
        failed = failed or not res.passed
    return 2 if failed else 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def _add_common(parser):
    parser.add_argument("--config", help="path to a key = value config file")
    parser.add_argument("--modes", type=int)
    parser.add_argument("--squeeze-r", dest="squeeze_r")
    parser.add_argument("--squeeze-phi", dest="squeeze_phi")
    parser.add_argument("--haar-seed", dest="haar_seed", type=int)
    parser.add_argument("--totals", help="comma-separated photon totals")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="override every seed field")


def _add_train_flags(parser):
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--target-diff", dest="target_diff", type=float)
    parser.add_argument("--grad-method", dest="grad_method",
                        choices=("forward_jet", "central_difference"))


def main(argv=None) -> int:
    parser = _Parser(prog="gbsim", description="Phase-space GBS experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p_sim = sub.add_parser("simulate", help="write pattern distributions")
    _add_common(p_sim)
    p_train = sub.add_parser("train", help="optimize the trainable layer")
    _add_common(p_train)
    _add_train_flags(p_train)
    sub.add_parser("verify", help="run the oracle battery")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "verify":
        return cmd_verify()
    try:
        config = load_config(args.config, vars(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "simulate":
            return cmd_simulate(config)
        return cmd_train(config)
    except TrainingDivergence as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
