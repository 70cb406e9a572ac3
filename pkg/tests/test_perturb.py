import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from treenoise.dataset import (
    LIVER_DOMAIN_OVERRIDES,
    Dataset,
    DomainRange,
    Schema,
    compute_domains,
    fit_normals,
)
from treenoise.paths import Scope, SiblingRule
from treenoise.perturb import (
    IDENTITY,
    PerturbConfig,
    PerturbError,
    PerturbReport,
    WrapMode,
    capt,
    constant_shifts,
    pipeline,
    ptlrpa,
    ptlwpa,
    v_wrap,
    v_wrap_array,
)
from treenoise.tree import BuildParams, build, similarity

SHIFTED_WEIGHTS = [65.74, 85.74, 80.74, 90.74, 65.74, 85.74, 73.74, 60.74, 70.74, 75.74, 65.74, 75.74, 75.74, 91.74]

MIXED = Schema.from_spec(
    [
        {"name": "u", "kind": "numeric"},
        {"name": "v", "kind": "numeric"},
        {"name": "w", "kind": "numeric"},
        {"name": "c", "kind": "categorical"},
        {"name": "y", "kind": "categorical", "role": "class"},
    ]
)


def mixed_rows(n, seed):
    rng = np.random.default_rng(seed)
    u = rng.integers(0, 100, n)
    v = rng.normal(50, 10, n).round(2)
    w = rng.uniform(0, 10, n).round(3)
    c = rng.choice(["p", "q", "r"], n)
    y = np.where(u + rng.normal(0, 15, n) > 50, "A", np.where(c == "p", "B", "C"))
    return list(zip(u.tolist(), v.tolist(), w.tolist(), c.tolist(), y.tolist()))


def one_leaf(labels):
    """Dataset whose tree cannot split: a single heterogeneous leaf."""
    schema = Schema.from_spec([{"name": "x", "kind": "numeric"}, {"name": "y", "kind": "categorical", "role": "class"}])
    ds = Dataset.from_rows(schema, [(1.0, lab) for lab in labels])
    return ds, build(ds)


class TestVWrap:
    dom = DomainRange(1.0, 99.0, integer=True)

    def test_in_domain(self):
        assert v_wrap(50, self.dom) == 50
        assert v_wrap(50, self.dom, "paper-literal") == 50

    def test_overflow_both_modes(self):
        assert v_wrap(103, self.dom) == 3
        assert v_wrap(103, self.dom, WrapMode.PAPER_LITERAL) == 3

    def test_underflow(self):
        assert v_wrap(0, self.dom) == 100
        # the literal formula is kept for comparison and lands below a
        assert v_wrap(0, self.dom, "paper-literal") == -1

    def test_zero_width(self):
        assert v_wrap(7.5, DomainRange(3.0, 0.0)) == 3.0

    def test_continuous(self):
        dom = DomainRange(0.0, 10.0)
        assert v_wrap(12.5, dom) == pytest.approx(2.5)
        assert v_wrap(-1.0, dom) == pytest.approx(9.0)

    def test_negative_width_rejected(self):
        with pytest.raises(Exception):
            v_wrap(1.0, DomainRange(0.0, -1.0))

    @settings(max_examples=300)
    @given(
        st.floats(-1e6, 1e6),
        st.floats(0, 1e4),
        st.booleans(),
        st.lists(st.floats(-1e7, 1e7), min_size=40, max_size=40),
    )
    def test_range_and_identity(self, a, D, integer, values):
        # 300 examples x 40 values: 12 000 cases
        dom = DomainRange(a, D, integer)
        out = v_wrap_array(values, dom)
        assert ((out >= dom.low) & (out <= dom.high)).all()
        inside = dom.contains(np.array(values))
        assert (out[inside] == np.array(values)[inside]).all()
        lit = v_wrap_array(values, dom, "paper-literal")
        assert (lit[inside] == np.array(values)[inside]).all()

    @settings(max_examples=300)
    @given(st.integers(-1000, 1000), st.integers(1, 500), st.data())
    def test_overflow_agreement(self, a, D, data):
        d = data.draw(st.integers(1, D))
        dom = DomainRange(float(a), float(D), integer=True)
        x = a + D + d
        assert v_wrap(x, dom) == v_wrap(x, dom, "paper-literal") == a + d - 1
        assert v_wrap(x, dom) == oracles.modular_wrap_integer(x, a, D)

    @settings(max_examples=200)
    @given(st.integers(-100, 100), st.integers(0, 60), st.integers(-1000, 1000))
    def test_integer_lattice_oracle(self, a, D, x):
        dom = DomainRange(float(a), float(D), integer=True)
        assert v_wrap(x, dom) == oracles.modular_wrap_integer(x, a, D)


class TestCapt:
    def test_weights_reported(self):
        ds, tree = one_leaf(["A", "A", "A", "S", "S"])
        _, report = capt(ds, tree, PerturbConfig(p=0.5))
        (leaf,) = report.capt_leaves
        assert leaf["branch"] == "shuffle"
        assert (leaf["m"], leaf["k"], leaf["t"]) == (3, 2, 1)
        assert leaf["q"] == pytest.approx(3 / 5)
        assert leaf["l"] == {"S": pytest.approx(0.5)}

    def test_p_one_no_siblings_identity(self):
        ds, tree = one_leaf(["A", "A", "A", "S", "S"])
        out, report = capt(ds, tree, PerturbConfig(p=1.0))
        assert out.equals(ds) and report.capt_relabels == 0

    def test_redraw_frequencies(self):
        ds, tree = one_leaf(["A"] * 300 + ["S"] * 200)
        out, _ = capt(ds, tree, PerturbConfig(p=0.0, seed=3))
        share = np.mean(out.labels == "A")
        assert share == pytest.approx(0.6 / 1.1, abs=0.07)
        assert set(out.labels) <= {"A", "S"}

    def test_homogeneous_untouched(self):
        ds, tree = one_leaf(["A"] * 5)
        out, report = capt(ds, tree, PerturbConfig(p=0.0))
        assert out.equals(ds)
        assert report.capt_leaves[0]["branch"] == "homogeneous"

    def test_sibling_leaves_take_majority(self, liver):
        # depth 1: the NORMAL and SHRINKED leaves are mixed
        tree = build(liver, BuildParams(max_depth=1))
        out, report = capt(liver, tree, PerturbConfig(p=1.0))
        pred = tree.predict(liver)
        assert (out.labels == pred).all()
        assert report.capt_relabels == int((liver.labels != pred).sum())

    def test_all_categorical_target(self, liver):
        tree = build(liver, BuildParams(max_depth=1))
        out, _ = capt(liver, tree, PerturbConfig(capt_target="all-categorical"))
        # LiverSize is constant within each depth-1 leaf, so it cannot move
        assert (out.column("LiverSize") == liver.column("LiverSize")).all()
        assert set(out.column("EatsPizza")) <= {"YES", "NO"}

    def test_bad_p(self):
        with pytest.raises(PerturbError):
            PerturbConfig(p=1.5)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.sampled_from("ABC"), min_size=1, max_size=30), st.floats(0, 1), st.integers(0, 1000))
    def test_labels_stay_in_leaf(self, labels, p, seed):
        ds, tree = one_leaf(labels)
        out, _ = capt(ds, tree, PerturbConfig(p=p, seed=seed))
        assert set(out.labels) <= set(labels)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**20))
    def test_p_one_identity_under_leaf_sibling_rule(self, seed):
        ds = Dataset.from_rows(MIXED, mixed_rows(60, seed))
        tree = build(ds, BuildParams(max_depth=2))
        cfg = PerturbConfig(p=1.0, capt_sibling_rule=SiblingRule.LEAF_SIBLINGS_ONLY, seed=seed)
        out, report = capt(ds, tree, cfg)
        changed = np.flatnonzero(out.labels != ds.labels)
        shuffled = {s["leaf"] for s in report.capt_leaves if s["branch"] != "majority"}
        leaf_of = tree.assign_leaves(ds)
        assert not any(leaf_of[i] in shuffled for i in changed)


class TestNoise:
    def _prepared(self, n=80, seed=0):
        ds = Dataset.from_rows(MIXED, mixed_rows(n, seed))
        tree = build(ds, BuildParams(max_depth=3))
        wide = {a: (-1e9, 1e9) for a in ds.numeric_features}
        return ds, tree, fit_normals(ds), compute_domains(ds, wide)

    def test_zero_noise_identity(self):
        ds, tree, fits, domains = self._prepared()
        cfg = PerturbConfig(noise_scale_lrpa=0.0, noise_scale_lwpa=0.0)
        assert ptlrpa(ds, tree, fits, domains, cfg)[0].equals(ds)
        assert ptlwpa(ds, tree, fits, domains, cfg)[0].equals(ds)

    def test_identity_pipeline_one_leaf(self):
        ds, _ = one_leaf(["A", "B", "A"])
        out = pipeline(ds, None, IDENTITY)
        assert out.perturbed.equals(ds)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**20), st.sampled_from(["tree", "all"]))
    def test_touched_cells_match_oracle(self, seed, scope):
        ds = Dataset.from_rows(MIXED, mixed_rows(50, seed))
        tree = build(ds, BuildParams(max_depth=3))
        fits = fit_normals(ds)
        domains = compute_domains(ds, {a: (-1e9, 1e9) for a in ds.numeric_features})
        cfg = PerturbConfig(seed=seed, lwpa_scope=scope)
        doc = json.loads(tree.to_json())
        rows = ds.rows()
        for stage, reaching in ((ptlrpa, True), (ptlwpa, False)):
            out, _ = stage(ds, tree, fits, domains, cfg)
            touched = {
                (i, a)
                for a in ds.numeric_features
                for i in np.flatnonzero(out.column(a) != ds.column(a)).tolist()
            }
            expected = oracles.expected_cells(doc, rows, set(ds.numeric_features), ds.feature_names, scope, reaching)
            # every cell with nonzero std is moved with probability one
            expected = {(i, a) for i, a in expected if fits[a].std > 0}
            assert touched == expected

    def test_single_leaf_tree_scope(self):
        ds, tree = one_leaf(["A", "B"])
        fits, domains = fit_normals(ds), compute_domains(ds)
        out, _ = ptlwpa(ds, tree, fits, domains, PerturbConfig(lwpa_scope="tree"))
        assert out.equals(ds)

    def test_depth_one_all_features(self, liver):
        schema = Schema.from_spec(
            [
                {"name": "x", "kind": "numeric"},
                {"name": "z", "kind": "numeric"},
                {"name": "y", "kind": "categorical", "role": "class"},
            ]
        )
        ds = Dataset.from_rows(schema, [(1, 5, "A"), (2, 6, "A"), (9, 7, "B"), (10, 8, "B")])
        tree = build(ds)
        out, report = ptlwpa(ds, tree, fit_normals(ds), compute_domains(ds, {"z": (0, 100)}), PerturbConfig(lwpa_scope="all"))
        assert (out.column("x") == ds.column("x")).all()
        assert (out.column("z") != ds.column("z")).all()
        assert report.changed_cells == {"z": 4}

    def test_wrap_into_domain(self, liver):
        tree = build(liver)
        domains = compute_domains(liver)
        cfg = PerturbConfig(noise_mode="per-attribute", inject_shift={"PatientsWeight": 5.0})
        out, report = ptlrpa(liver, tree, fit_normals(liver), domains, cfg)
        col = out.column("PatientsWeight")
        dom = domains["PatientsWeight"]
        assert ((col >= dom.low) & (col <= dom.high)).all()
        # 95 sits on a weight-testing path: 95 + 5 overflows [65, 96] by 4 and lands on 65 + 4 - 1
        assert col[3] == 68.0
        assert report.wrap_events["PatientsWeight"] >= 1

    def test_missing_fit(self):
        ds, tree, fits, domains = self._prepared()
        with pytest.raises(PerturbError):
            ptlwpa(ds, tree, {}, domains, PerturbConfig())

    def test_unknown_inject_attribute(self, liver):
        with pytest.raises(PerturbError):
            pipeline(liver, None, PerturbConfig(inject_shift={"Height": 1.0}))

    def test_constant_shift_scales(self):
        ds, tree, fits, _ = self._prepared()
        cfg = PerturbConfig(noise_mode="per-attribute", noise_scale_lrpa=0.0, seed=5)
        shifts = constant_shifts(ds, tree, fits, cfg)
        for attr, s in shifts.items():
            if attr in tree.tested_attributes():
                assert s == 0.0
            else:
                assert s != 0.0


class TestPipeline:
    def test_shifted_liver(self, liver):
        cfg = PerturbConfig(noise_mode="per-attribute", inject_shift={"PatientsWeight": -4.26}, capt=False)
        result = pipeline(liver, None, cfg, LIVER_DOMAIN_OVERRIDES)
        got = [float(f"{v:.12g}") for v in result.perturbed.column("PatientsWeight")]
        assert got == SHIFTED_WEIGHTS
        for name in ("LiverSize", "EatsPizza", "DiagnosticClass"):
            assert (result.perturbed.column(name) == liver.column(name)).all()
        rebuilt = build(result.perturbed)
        assert similarity(result.tree, rebuilt, "ignore") == 1.0
        for a, b in zip(result.tree.thresholds("PatientsWeight"), rebuilt.thresholds("PatientsWeight")):
            assert b - a == pytest.approx(-4.26, abs=1e-9)

    def test_seed_determinism(self):
        ds = Dataset.from_rows(MIXED, mixed_rows(120, 1))
        a = pipeline(ds, None, PerturbConfig(seed=9)).perturbed.to_csv_text()
        b = pipeline(ds, None, PerturbConfig(seed=9)).perturbed.to_csv_text()
        c = pipeline(ds, None, PerturbConfig(seed=10)).perturbed.to_csv_text()
        assert a == b
        assert a != c

    def test_row_order_independence(self):
        ds = Dataset.from_rows(MIXED, mixed_rows(60, 2))
        tree = build(ds, BuildParams(max_depth=2))
        fits, domains = fit_normals(ds), compute_domains(ds, {a: (-1e9, 1e9) for a in ds.numeric_features})
        cfg = PerturbConfig(seed=4)
        full, _ = ptlrpa(ds, tree, fits, domains, cfg)
        part, _ = ptlrpa(ds.subset(range(30)), tree, fits, domains, cfg)
        for a in ds.numeric_features:
            assert (full.column(a)[:30] == part.column(a)).all()

    def test_report_shape(self, liver):
        result = pipeline(liver, None, PerturbConfig(seed=1), LIVER_DOMAIN_OVERRIDES)
        doc = json.loads(result.report.to_json())
        assert doc["domains"]["PatientsWeight"] == [1.0, 200.0]
        for attr, count in doc["changed_cells"].items():
            assert count <= liver.n

    def test_report_merge(self):
        a = PerturbReport(changed_cells={"x": 1}, wrap_events={"x": 2}, capt_relabels=1)
        b = PerturbReport(changed_cells={"x": 3, "z": 1}, capt_relabels=2)
        m = a.merge(b)
        assert m.changed_cells == {"x": 4, "z": 1}
        assert m.wrap_events == {"x": 2} and m.capt_relabels == 3

    def test_scope_enum_accepts_strings(self):
        assert PerturbConfig(lwpa_scope="tree").lwpa_scope is Scope.TREE_TESTED
