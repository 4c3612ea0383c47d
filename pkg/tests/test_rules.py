import json
import re

import numpy as np
import pytest

from idss.model import IdssModel, ModelConfig, Prototype, decide
from idss.features import FeatureSpaceDescriptor
from idss.rules import (
    RuleSet,
    explain_pixel,
    export_rules_json,
    export_rules_text,
    generate_rules,
    render_class_rule,
    render_rule_text,
)
from oracles import build_model

RULE_PATTERN = re.compile(r"IF (\(\S+ ~ -?\d+(?:\.\d+)?\)(?: AND )?)+ THEN \S+")


def parse_rule_text(text: str) -> tuple[list[tuple[str, float]], str]:
    """Test-only parser: recover (band, value) terms and the class name."""
    body, conclusion = text.split(" THEN ")
    terms = []
    for part in body.removeprefix("IF ").split(" AND "):
        band, value = part.strip("()").split(" ~ ")
        terms.append((band, float(value)))
    return terms, conclusion


class TestGenerateRules:
    def test_bijection_with_prototypes(self):
        rng = np.random.default_rng(0)
        model = build_model(rng, 17, 4)
        rules = generate_rules(model)
        assert sum(len(r) for r in rules.rules_by_class.values()) == 17
        for c, class_rules in rules.rules_by_class.items():
            assert len(class_rules) == sum(1 for p in model.prototypes if p.class_id == c)

    def test_terms_equal_raw_center_verbatim(self):
        rng = np.random.default_rng(1)
        model = build_model(rng, 5, 3)
        rules = generate_rules(model)
        for rule in rules.all_rules():
            p = model.prototypes[rule.prototype_index]
            assert [v for _, v in rule.terms] == [float(x) for x in p.raw_center]
            assert tuple(b for b, _ in rule.terms) == model.band_names
            assert rule.class_id == p.class_id
            assert rule.support_count == p.support_count

    def test_empty_model_rejected(self):
        model = IdssModel(
            config=ModelConfig(feature=FeatureSpaceDescriptor.raw(1)),
            prototypes=(),
            band_names=("b",),
        )
        with pytest.raises(ValueError):
            generate_rules(model)


class TestRenderRuleText:
    def fixture_rule(self):
        p = Prototype(2, np.array([0.5, 0.25]), np.array([0.5, 0.25]), 4)
        model = IdssModel(
            config=ModelConfig(m_per_class=1, k_neighbors=1, feature=FeatureSpaceDescriptor.raw(2)),
            prototypes=(p,),
            band_names=("B01", "B02"),
        )
        return generate_rules(model).all_rules()[0], model.class_names

    def test_template(self):
        rule, names = self.fixture_rule()
        assert render_rule_text(rule, names, precision=2) == "IF (B01 ~ 0.50) AND (B02 ~ 0.25) THEN Water"

    def test_round_half_even_at_precision_zero(self):
        rule, names = self.fixture_rule()
        text = render_rule_text(rule, names, precision=0)
        assert text == "IF (B01 ~ 0) AND (B02 ~ 0) THEN Water"

    def test_deterministic(self):
        rule, names = self.fixture_rule()
        assert render_rule_text(rule, names) == render_rule_text(rule, names)

    def test_parses_back_to_rendered_precision(self):
        rng = np.random.default_rng(3)
        model = build_model(rng, 6, 5)
        rules = generate_rules(model)
        for rule in rules.all_rules():
            text = render_rule_text(rule, rules.class_names, precision=3)
            terms, conclusion = parse_rule_text(text)
            assert conclusion == rules.class_names[rule.class_id]
            for (band, got), (want_band, want_value) in zip(terms, rule.terms):
                assert band == want_band
                assert got == pytest.approx(want_value, abs=5e-4)

    def test_or_combined_class_rule(self):
        rng = np.random.default_rng(4)
        model = build_model(rng, 9, 2)
        rules = generate_rules(model)
        some_class = next(iter(rules.rules_by_class))
        combined = render_class_rule(rules, some_class)
        assert combined.count("\nOR\n") == len(rules.rules_by_class[some_class]) - 1


class TestExplainPixel:
    def test_exact_prototype_match_tops_explanation(self):
        rng = np.random.default_rng(5)
        model = build_model(rng, 8, 3, k_neighbors=3)
        rules = generate_rules(model)
        target = model.prototypes[4]
        explanation = explain_pixel(target.latent_center, model, rules)
        top_rule, top_sim = explanation.neighbors[0]
        assert top_sim == 1.0
        assert top_rule.prototype_index == 4 or np.array_equal(
            model.prototypes[top_rule.prototype_index].latent_center, target.latent_center
        )

    def test_label_matches_decide(self):
        rng = np.random.default_rng(6)
        model = build_model(rng, 12, 4, k_neighbors=5)
        rules = generate_rules(model)
        for _ in range(100):
            f = rng.normal(0, 1, 4)
            assert explain_pixel(f, model, rules).label == decide(f, model).label

    def test_entry_count_and_ordering(self):
        rng = np.random.default_rng(7)
        model = build_model(rng, 10, 3, k_neighbors=3)
        rules = generate_rules(model)
        explanation = explain_pixel(rng.normal(0, 1, 3), model, rules)
        assert len(explanation.neighbors) == 3
        sims = [s for _, s in explanation.neighbors]
        assert sims == sorted(sims, reverse=True)


class TestExport:
    def test_text_export_one_line_per_rule_in_class_order(self, tmp_path):
        rng = np.random.default_rng(8)
        model = build_model(rng, 9, 2)
        rules = generate_rules(model)
        export_rules_text(rules, tmp_path / "rules.txt", precision=3)
        lines = (tmp_path / "rules.txt").read_text().splitlines()
        assert len(lines) == 9
        classes = [parse_rule_text(line)[1] for line in lines]
        order = {"Land": 1, "Water": 2, "Cloud": 3}
        ids = [order[c] for c in classes]
        assert ids == sorted(ids)

    def test_json_export_round_trips_terms(self, tmp_path):
        rng = np.random.default_rng(9)
        model = build_model(rng, 4, 3)
        rules = generate_rules(model)
        export_rules_json(rules, tmp_path / "rules.json")
        doc = json.loads((tmp_path / "rules.json").read_text())
        assert len(doc["rules"]) == 4
        for record in doc["rules"]:
            p = model.prototypes[record["prototype_index"]]
            assert list(record["terms"].values()) == [float(v) for v in p.raw_center]
            assert record["text"].startswith("IF (")
