"""Tree-guided perturbation of a dataset.

Numeric attributes get Gaussian noise whose scale depends on whether the
attribute steers the record's own leaf (reaching-path attributes, small
noise) or not (wrong-path attributes, larger noise). Out-of-domain results
are wrapped back into the attribute's domain. Class labels (and optionally
categorical features) are rewritten per leaf by CAPT.

All random draws come from generators keyed by ``(seed, stage, column)`` and
indexed by row, so a record's noise does not depend on processing order.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Mapping, NamedTuple

import numpy as np

from .dataset import Dataset, DomainRange, NormalFit, compute_domains, fit_normals
from .paths import RoutedPath, Scope, SiblingRule, has_siblings, path_sets, population_from_values, route_all
from .tree import BuildParams, DecisionTree, build

logger = logging.getLogger(__name__)

STAGE_LRPA = 1
STAGE_LWPA = 2
STAGE_CAPT = 3
STAGE_CONSTANT = 4


class PerturbError(ValueError):
    pass


class NoiseMode(str, Enum):
    PER_RECORD = "per-record"
    PER_ATTRIBUTE_CONSTANT = "per-attribute"


class WrapMode(str, Enum):
    MODULAR = "modular"
    PAPER_LITERAL = "paper-literal"


class CaptTarget(str, Enum):
    CLASS_COLUMN = "class"
    ALL_CATEGORICAL = "all-categorical"


@dataclass(frozen=True)
class PerturbConfig:
    """Knobs of the perturbation pipeline.

    ``noise_scale_lrpa`` and ``noise_scale_lwpa`` multiply each attribute's
    standard deviation. ``inject_shift`` pins the noise of named numeric
    attributes to a fixed constant for every record, bypassing the draw.
    """

    p: float = 0.9
    noise_mode: NoiseMode = NoiseMode.PER_RECORD
    noise_scale_lrpa: float = 0.05
    noise_scale_lwpa: float = 0.15
    noise_mean: float = 0.0
    wrap_mode: WrapMode = WrapMode.MODULAR
    lwpa_scope: Scope = Scope.ALL_FEATURES
    capt: bool = True
    capt_target: CaptTarget = CaptTarget.CLASS_COLUMN
    capt_sibling_rule: SiblingRule = SiblingRule.LITERAL
    seed: int = 0
    inject_shift: Mapping[str, float] = field(default_factory=dict)
    std_ddof: int = 0

    def __post_init__(self):
        for name, enum in (
            ("noise_mode", NoiseMode),
            ("wrap_mode", WrapMode),
            ("lwpa_scope", Scope),
            ("capt_target", CaptTarget),
            ("capt_sibling_rule", SiblingRule),
        ):
            object.__setattr__(self, name, enum(getattr(self, name)))
        object.__setattr__(self, "inject_shift", {k: float(v) for k, v in dict(self.inject_shift).items()})
        if not 0.0 <= self.p <= 1.0:
            raise PerturbError(f"p must be in [0, 1], got {self.p}")
        if self.noise_scale_lrpa < 0 or self.noise_scale_lwpa < 0:
            raise PerturbError("noise scales must be >= 0")

    def with_(self, **changes) -> "PerturbConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: (v.value if isinstance(v, Enum) else v) for k, v in d.items()}


IDENTITY = PerturbConfig(p=1.0, noise_scale_lrpa=0.0, noise_scale_lwpa=0.0, capt=False)


@dataclass
class PerturbReport:
    changed_cells: dict[str, int] = field(default_factory=dict)
    wrap_events: dict[str, int] = field(default_factory=dict)
    capt_relabels: int = 0
    constant_shifts: dict[str, float] = field(default_factory=dict)
    injected_shifts: dict[str, float] = field(default_factory=dict)
    capt_leaves: list[dict] = field(default_factory=list)
    domains: dict[str, list[float]] = field(default_factory=dict)
    fits: dict[str, dict[str, float]] = field(default_factory=dict)

    def merge(self, other: "PerturbReport") -> "PerturbReport":
        out = PerturbReport(
            dict(self.changed_cells),
            dict(self.wrap_events),
            self.capt_relabels + other.capt_relabels,
            {**self.constant_shifts, **other.constant_shifts},
            {**self.injected_shifts, **other.injected_shifts},
            self.capt_leaves + other.capt_leaves,
            {**self.domains, **other.domains},
            {**self.fits, **other.fits},
        )
        for k, v in other.changed_cells.items():
            out.changed_cells[k] = out.changed_cells.get(k, 0) + v
        for k, v in other.wrap_events.items():
            out.wrap_events[k] = out.wrap_events.get(k, 0) + v
        return out

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# Wrapping.

def v_wrap_array(values, domain: DomainRange, mode: WrapMode | str = WrapMode.MODULAR) -> np.ndarray:
    """Map out-of-domain values back into ``[a, a + D]``; in-domain values pass through.

    Modular wrapping runs modulo ``D + 1`` on integer domains, where an
    overflow by ``d`` lands on ``a + d - 1``, and modulo ``D`` on continuous
    ones. ``PAPER_LITERAL`` returns ``a + d - 1`` with ``d`` the signed
    excursion past the violated bound, which for underflow is below ``a``.
    """
    if domain.D < 0:
        raise PerturbError("domain width must be >= 0")
    x = np.array(values, dtype=np.float64, copy=True)
    a, top = domain.low, domain.high
    out = (x < a) | (x > top)
    if not out.any():
        return x
    xo = x[out]
    if WrapMode(mode) is WrapMode.PAPER_LITERAL:
        d = np.where(xo > top, xo - top, xo - a)
        x[out] = a + d - 1.0
        return x
    if domain.D == 0:
        x[out] = a
        return x
    period = domain.D + 1.0 if domain.integer else domain.D
    x[out] = np.clip(a + np.mod(xo - a, period), a, top)
    return x


def v_wrap(value: float, domain: DomainRange, mode: WrapMode | str = WrapMode.MODULAR) -> float:
    return float(v_wrap_array([value], domain, mode)[0])


# Numeric stages.

def _rng(cfg: PerturbConfig, stage: int, column: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, stage, column])


def constant_shifts(ds: Dataset, tree: DecisionTree, fits: Mapping[str, NormalFit], cfg: PerturbConfig) -> dict[str, float]:
    """One shift per numeric feature for ``PER_ATTRIBUTE_CONSTANT`` mode.

    Attributes tested somewhere in the tree draw at the reaching-path scale,
    the rest at the wrong-path scale. Injected shifts take precedence.
    """
    tested = tree.tested_attributes()
    shifts = {}
    for j, attr in enumerate(ds.schema.names):
        if attr not in ds.numeric_features:
            continue
        if attr in cfg.inject_shift:
            shifts[attr] = cfg.inject_shift[attr]
            continue
        if attr not in fits:
            continue
        alpha = cfg.noise_scale_lrpa if attr in tested else cfg.noise_scale_lwpa
        z = _rng(cfg, STAGE_CONSTANT, j).standard_normal()
        shifts[attr] = float(cfg.noise_mean + alpha * fits[attr].std * z)
    return shifts


def _check_inject(ds: Dataset, cfg: PerturbConfig) -> None:
    bad = [a for a in cfg.inject_shift if a not in ds.numeric_features]
    if bad:
        raise PerturbError(f"inject_shift names unknown or non-numeric attributes: {bad}")


def _set_masks(ds: Dataset, tree: DecisionTree, paths: list[RoutedPath], scope: Scope, reaching: bool):
    """Boolean row mask per numeric feature: is it in that row's LRPA (or LWPA)?"""
    by_leaf: dict[int, frozenset] = {}
    for path in paths:
        if path.leaf_id not in by_leaf:
            sets = path_sets(path, tree, scope)
            by_leaf[path.leaf_id] = sets.lrpa if reaching else sets.lwpa
    leaf_ids = np.array([p.leaf_id for p in paths], dtype=np.int64)
    masks = {}
    for attr in ds.numeric_features:
        leaves = [lid for lid, s in by_leaf.items() if attr in s]
        masks[attr] = np.isin(leaf_ids, leaves)
    return masks


def _add_noise(ds, tree, fits, domains, cfg: PerturbConfig, paths, stage: int):
    _check_inject(ds, cfg)
    if paths is None:
        paths = route_all(tree, ds, cfg.capt_sibling_rule)
    if len(paths) != ds.n:
        raise PerturbError("paths do not match dataset length")
    reaching = stage == STAGE_LRPA
    scope = Scope.TREE_TESTED if reaching else cfg.lwpa_scope
    alpha = cfg.noise_scale_lrpa if reaching else cfg.noise_scale_lwpa
    masks = _set_masks(ds, tree, paths, scope, reaching)
    report = PerturbReport()
    shifts = None
    if cfg.noise_mode is NoiseMode.PER_ATTRIBUTE_CONSTANT:
        shifts = constant_shifts(ds, tree, fits, cfg)
    new_cols = {}
    for j, attr in enumerate(ds.schema.names):
        if attr not in masks or not masks[attr].any():
            continue
        rows = np.flatnonzero(masks[attr])
        if attr not in domains or (attr not in fits and attr not in cfg.inject_shift):
            raise PerturbError(f"missing normal fit or domain for attribute {attr!r}")
        x = ds.column(attr)
        if attr in cfg.inject_shift:
            noise = np.full(rows.size, cfg.inject_shift[attr])
            report.injected_shifts[attr] = cfg.inject_shift[attr]
        elif shifts is not None:
            noise = np.full(rows.size, shifts[attr])
            report.constant_shifts[attr] = shifts[attr]
        else:
            z = _rng(cfg, stage, j).standard_normal(ds.n)[rows]
            noise = cfg.noise_mean + alpha * fits[attr].std * z
        new = x[rows] + noise
        outside = ~domains[attr].contains(new)
        if outside.any():
            new = v_wrap_array(new, domains[attr], cfg.wrap_mode)
        col = np.array(x, copy=True)
        col[rows] = new
        new_cols[attr] = col
        report.changed_cells[attr] = int(np.count_nonzero(new != x[rows]))
        report.wrap_events[attr] = int(np.count_nonzero(outside))
    out = ds.replace(new_cols) if new_cols else ds
    return out, report


def ptlrpa(ds: Dataset, tree: DecisionTree, fits, domains, cfg: PerturbConfig, paths=None):
    """Noise on each record's numeric reaching-path attributes.

    Returns ``(perturbed, report)``. ``paths`` may carry precomputed routes
    (e.g. from the unperturbed data) and otherwise are computed from ``ds``.
    """
    return _add_noise(ds, tree, fits, domains, cfg, paths, STAGE_LRPA)


def ptlwpa(ds: Dataset, tree: DecisionTree, fits, domains, cfg: PerturbConfig, paths=None):
    """Noise on each record's numeric wrong-path attributes (scope per ``cfg.lwpa_scope``)."""
    return _add_noise(ds, tree, fits, domains, cfg, paths, STAGE_LWPA)


# Categorical stage.

def capt(ds: Dataset, tree: DecisionTree, cfg: PerturbConfig, paths=None):
    """Leaf-level relabelling of the class column (or every categorical column).

    Leaves without siblings keep homogeneous records as they are; in a
    heterogeneous one each record is redrawn with probability ``1 - p`` from
    the leaf's labels, weighted ``q = m/(m+k)`` for the majority and
    ``l_i = n_i/(n_i+k)`` for minority label ``i`` (weights normalised).
    Leaves with siblings have every record set to the leaf majority.
    """
    if not 0.0 <= cfg.p <= 1.0:
        raise PerturbError(f"p must be in [0, 1], got {cfg.p}")
    if paths is None:
        paths = route_all(tree, ds, cfg.capt_sibling_rule)
    leaf_ids = np.array([p.leaf_id for p in paths], dtype=np.int64)
    targets = [ds.class_name]
    if cfg.capt_target is CaptTarget.ALL_CATEGORICAL:
        targets += ds.categorical_features
    sibling = {lid: has_siblings(tree, lid, cfg.capt_sibling_rule) for lid in tree.leaves}

    report = PerturbReport()
    new_cols = {}
    for col in targets:
        j = ds.schema.index(col)
        orig = ds.column(col)
        new = np.array(orig, copy=True)
        rng = _rng(cfg, STAGE_CAPT, j)
        u = rng.random(ds.n)
        pick = rng.random(ds.n)
        for lid in sorted(tree.leaves):
            idx = np.flatnonzero(leaf_ids == lid)
            pop = population_from_values(idx, orig[idx])
            if idx.size == 0:
                continue
            stats = {"leaf": lid, "column": col, "records": int(idx.size), "majority": pop.majority, "m": pop.m}
            if sibling[lid]:
                new[idx] = pop.majority
                stats["branch"] = "majority"
            elif not pop.heterogeneous:
                stats["branch"] = "homogeneous"
            else:
                minority = pop.minorities
                k = sum(minority.values())
                q = pop.m / (pop.m + k)
                ell = {c: n_i / (n_i + k) for c, n_i in sorted(minority.items())}
                labels = np.array([pop.majority, *ell], dtype=object)
                weights = np.array([q, *ell.values()])
                cdf = np.cumsum(weights / weights.sum())
                cdf[-1] = 1.0
                redraw = u[idx] < (1.0 - cfg.p)
                choice = labels[np.minimum(np.searchsorted(cdf, pick[idx], side="right"), labels.size - 1)]
                new[idx[redraw]] = choice[redraw]
                stats.update(branch="shuffle", n=minority, t=pop.t, k=k, q=q, l=ell, redrawn=int(redraw.sum()))
            report.capt_leaves.append(stats)
        changed = int(np.count_nonzero(new != orig))
        report.changed_cells[col] = changed
        report.capt_relabels += changed
        new_cols[col] = new
    return ds.replace(new_cols), report


# Full pipeline.

class PipelineResult(NamedTuple):
    perturbed: Dataset
    tree: DecisionTree
    report: PerturbReport


def pipeline(
    ds: Dataset,
    build_params: BuildParams | None = None,
    cfg: PerturbConfig | None = None,
    domain_overrides: Mapping[str, tuple[float, float]] | None = None,
) -> PipelineResult:
    """Build the tree on ``ds``, then run reaching-path noise, wrong-path noise and CAPT.

    Every stage routes records through the tree using the original values,
    so the stages touch disjoint cells and their order does not matter.
    """
    cfg = cfg or PerturbConfig()
    _check_inject(ds, cfg)
    tree = build(ds, build_params)
    domains = compute_domains(ds, domain_overrides)
    fits = fit_normals(ds, cfg.std_ddof)
    paths = route_all(tree, ds, cfg.capt_sibling_rule)

    out, report = ptlrpa(ds, tree, fits, domains, cfg, paths)
    out, r = ptlwpa(out, tree, fits, domains, cfg, paths)
    report = report.merge(r)
    if cfg.capt:
        out, r = capt(out, tree, cfg, paths)
        report = report.merge(r)
    report.domains = {k: [d.low, d.high] for k, d in domains.items()}
    report.fits = {k: {"mean": f.mean, "std": f.std} for k, f in fits.items()}
    if sum(report.wrap_events.values()):
        logger.info("wrap events: %s", report.wrap_events)
    return PipelineResult(out, tree, report)
