"""Command-line entry point: ``treenoise {tree,perturb,eval,demo}``.

A run is described by a JSON config (``--config``); flags override it.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 failed
internal check.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import dataset as dsmod
from .dataset import Dataset, DatasetError, Schema
from .evaluation import compare_runs
from .perturb import PerturbConfig, PerturbError, pipeline
from .tree import BuildParams, build, gain, partition_entropy, entropy, best_numeric_split, similarity

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_CHECK = 4

PRESETS = ("liver", "car", "bhp", "census")


class ConfigError(ValueError):
    pass


class CheckFailed(RuntimeError):
    pass


@dataclass
class RunConfig:
    dataset: str | None = None
    preset: str | None = None
    schema: list[dict] | None = None
    domain_overrides: dict[str, list[float]] = field(default_factory=dict)
    build: dict = field(default_factory=dict)
    perturb: dict = field(default_factory=dict)
    test_fraction: float = 0.3
    seed: int = 42
    out: str | None = None
    report: str | None = None

    def build_params(self) -> BuildParams:
        try:
            return BuildParams(**self.build)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad build parameters: {exc}") from exc

    def perturb_config(self) -> PerturbConfig:
        try:
            return PerturbConfig(**{"seed": self.seed, **self.perturb})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad perturb parameters: {exc}") from exc

    def overrides(self) -> dict:
        if self.preset == "liver" and not self.domain_overrides:
            return dict(dsmod.LIVER_DOMAIN_OVERRIDES)
        return {k: tuple(v) for k, v in self.domain_overrides.items()}

    def load(self) -> Dataset:
        if self.preset == "liver":
            return dsmod.embedded_liver_sample()
        if not self.dataset:
            raise ConfigError("no dataset path given")
        if self.preset == "bhp":
            return dsmod.load_bhp(self.dataset)
        if self.preset == "car":
            return dsmod.load_csv(self.dataset, dsmod.CAR_SCHEMA)
        if self.preset == "census":
            return dsmod.load_csv(self.dataset, dsmod.CENSUS_SCHEMA)
        if not self.schema:
            raise ConfigError("config needs a schema or a preset")
        try:
            schema = Schema.from_spec(self.schema)
        except (DatasetError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return dsmod.load_csv(self.dataset, schema)


def read_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        return RunConfig(**doc)
    except TypeError as exc:
        raise ConfigError(f"unknown config key: {exc}") from exc


def _parse_shift(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected ATTR=VALUE, got {text!r}")
    try:
        return name, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number in {text!r}") from None


def apply_flags(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    for name in ("dataset", "preset", "out", "report", "seed"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "test_fraction", None) is not None:
        cfg.test_fraction = args.test_fraction
    flag_map = {
        "p": "p",
        "noise_mode": "noise_mode",
        "scale_lrpa": "noise_scale_lrpa",
        "scale_lwpa": "noise_scale_lwpa",
        "wrap": "wrap_mode",
        "lwpa_scope": "lwpa_scope",
        "capt_target": "capt_target",
        "sibling_rule": "capt_sibling_rule",
    }
    for flag, key in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            cfg.perturb[key] = value
    if getattr(args, "capt", None) is not None:
        cfg.perturb["capt"] = args.capt == "on"
    if getattr(args, "inject_shift", None):
        shifts = dict(cfg.perturb.get("inject_shift", {}))
        shifts.update(dict(args.inject_shift))
        cfg.perturb["inject_shift"] = shifts
        cfg.perturb.setdefault("noise_mode", "per-attribute")
    if getattr(args, "criterion", None) is not None:
        cfg.build["criterion"] = args.criterion
    return cfg


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_tree(cfg: RunConfig, fmt: str = "text") -> int:
    ds = cfg.load()
    tree = build(ds, cfg.build_params())
    if fmt == "json":
        sys.stdout.write(tree.to_json() + "\n")
    else:
        sys.stdout.write(tree.to_text())
    if cfg.out:
        Path(cfg.out).write_text(tree.to_json() + "\n")
    return EXIT_OK


def cmd_perturb(cfg: RunConfig, fmt: str = "text") -> int:
    ds = cfg.load()
    result = pipeline(ds, cfg.build_params(), cfg.perturb_config(), cfg.overrides())
    _emit(result.perturbed.to_csv_text(), cfg.out)
    if cfg.report:
        Path(cfg.report).write_text(result.report.to_json() + "\n")
    return EXIT_OK


def cmd_eval(cfg: RunConfig, fmt: str = "text") -> int:
    ds = cfg.load()
    report = compare_runs(
        ds, cfg.build_params(), cfg.perturb_config(), cfg.test_fraction, cfg.seed, cfg.overrides()
    )
    sys.stdout.write(report.to_json() + "\n" if fmt == "json" else report.to_table())
    if cfg.report:
        Path(cfg.report).write_text(report.to_json() + "\n")
    return EXIT_OK


def _check(ok: bool, what: str) -> None:
    if not ok:
        raise CheckFailed(what)


def cmd_demo() -> int:
    """Liver walkthrough: split statistics, the induced tree, the shifted table."""
    ds = dsmod.embedded_liver_sample()
    out = sys.stdout.write
    counts = ds.class_counts()
    info = entropy(counts)

    def parts(attr):
        col = ds.column(attr)
        return [
            {c: int(((col == v) & (ds.labels == c)).sum()) for c in counts}
            for v in sorted(set(col))
        ]

    info_liver = partition_entropy(parts("LiverSize"))
    g_liver = gain(counts, parts("LiverSize"))
    g_pizza = gain(counts, parts("EatsPizza"))
    threshold, g_weight = best_numeric_split(ds, "PatientsWeight")
    out(f"Info(S)                 = {info:.3f} bits\n")
    out(f"Info_LiverSize(S)       = {info_liver:.3f} bits\n")
    out(f"Gain(LiverSize)         = {info:.3f} - {info_liver:.3f} = {round(info, 3) - round(info_liver, 3):.3f}"
        f" (unrounded {g_liver:.4f})\n")
    out(f"Gain(EatsPizza)         = {g_pizza:.4f}\n")
    out(f"Gain(PatientsWeight)    = {g_weight:.4f} (threshold {threshold:g})\n\n")
    _check(abs(info - 0.940) <= 1e-3 and abs(info_liver - 0.694) <= 1e-3, "entropy values")
    _check(abs(g_liver - 0.246) <= 1e-3 and abs(g_pizza - 0.048) <= 1e-3 and abs(g_weight - 0.103) <= 1e-3, "gains")

    cfg = PerturbConfig(noise_mode="per-attribute", inject_shift={"PatientsWeight": -4.26}, capt=False, p=1.0)
    result = pipeline(ds, BuildParams(), cfg, dsmod.LIVER_DOMAIN_OVERRIDES)
    out("Tree on the original table:\n" + result.tree.to_text() + "\n")
    rebuilt = build(result.perturbed)
    out("Tree on the shifted table:\n" + rebuilt.to_text() + "\n")
    out("Shifted table:\n" + result.perturbed.to_csv_text() + "\n")
    sim = similarity(result.tree, rebuilt, "ignore")
    out(f"similarity {sim:.3f}\n")
    _check(result.tree.root.test.attribute == "LiverSize", "root split")
    _check(sim == 1.0, "tree similarity")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--dataset", help="CSV path (overrides config)")
    p.add_argument("--preset", choices=PRESETS, help="built-in schema/dataset")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--report")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--criterion", choices=("gain", "gain_ratio"))


def _add_perturb_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--inject-shift", type=_parse_shift, action="append", metavar="ATTR=VALUE")
    p.add_argument("--p", type=float)
    p.add_argument("--noise-mode", choices=("per-record", "per-attribute"))
    p.add_argument("--scale-lrpa", type=float)
    p.add_argument("--scale-lwpa", type=float)
    p.add_argument("--wrap", choices=("modular", "paper-literal"))
    p.add_argument("--lwpa-scope", choices=("tree", "all"))
    p.add_argument("--capt-target", choices=("class", "all-categorical"))
    p.add_argument("--capt", choices=("on", "off"))
    p.add_argument("--sibling-rule", choices=("literal", "leaf-siblings-only"))


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treenoise", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_tree = sub.add_parser("tree", help="induce and print a decision tree")
    _add_common(p_tree)
    p_pert = sub.add_parser("perturb", help="write a perturbed copy of a dataset")
    _add_common(p_pert)
    _add_perturb_flags(p_pert)
    p_eval = sub.add_parser("eval", help="compare accuracy before and after perturbation")
    _add_common(p_eval)
    _add_perturb_flags(p_eval)
    p_eval.add_argument("--test-fraction", type=float)
    sub.add_parser("demo", help="run the Liver walkthrough")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "demo":
            return cmd_demo()
        cfg = apply_flags(read_config(args.config), args)
        if cfg.preset is not None and cfg.preset not in PRESETS:
            raise ConfigError(f"unknown preset {cfg.preset!r}")
        handler = {"tree": cmd_tree, "perturb": cmd_perturb, "eval": cmd_eval}[args.command]
        return handler(cfg, args.format)
    except ConfigError as exc:
        print(f"treenoise: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetError, PerturbError) as exc:
        print(f"treenoise: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CheckFailed as exc:
        print(f"treenoise: internal check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except BrokenPipeError:
        # downstream reader (e.g. head) went away; silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
