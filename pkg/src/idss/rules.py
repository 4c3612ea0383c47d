"""Render the prototype pool as linguistic IF...THEN rules and explain decisions.

Each prototype becomes one rule whose terms are its raw-band means, so the
model can be audited band by band.  Rules are descriptive: the executable
semantics stay with the similarity kernel and the KNN vote.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from idss.model import IdssModel, PixelDecision, decide

SIMILAR_TO = "~"


@dataclass(frozen=True)
class Rule:
    """One prototype rendered as (band ~ value) terms plus its class conclusion."""

    class_id: int
    prototype_index: int
    terms: tuple[tuple[str, float], ...]
    support_count: int


@dataclass(frozen=True)
class RuleSet:
    """Per-class rule lists with the names needed to render them."""

    rules_by_class: dict[int, tuple[Rule, ...]]
    class_names: dict[int, str]
    band_names: tuple[str, ...]

    def all_rules(self) -> list[Rule]:
        out: list[Rule] = []
        for c in sorted(self.rules_by_class):
            out.extend(self.rules_by_class[c])
        return out


@dataclass(frozen=True)
class PixelExplanation:
    """A decision plus the rule and similarity of each of its K neighbors."""

    decision: PixelDecision
    neighbors: tuple[tuple[Rule, float], ...]

    @property
    def label(self) -> int:
        return self.decision.label


def generate_rules(model: IdssModel) -> RuleSet:
    """One rule per prototype; terms are the raw-center band values verbatim."""
    if not model.prototypes:
        raise ValueError("model has no prototypes")
    by_class: dict[int, list[Rule]] = {}
    for index, p in enumerate(model.prototypes):
        terms = tuple(zip(model.band_names, (float(v) for v in p.raw_center)))
        rule = Rule(
            class_id=p.class_id,
            prototype_index=index,
            terms=terms,
            support_count=p.support_count,
        )
        by_class.setdefault(p.class_id, []).append(rule)
    return RuleSet(
        rules_by_class={c: tuple(rules) for c, rules in by_class.items()},
        class_names=dict(model.class_names),
        band_names=model.band_names,
    )


def render_rule_text(rule: Rule, class_names: dict[int, str], precision: int = 4) -> str:
    """Render ``IF (B01 ~ v) AND ... THEN Class`` with round-half-even values."""
    parts = [f"({band} {SIMILAR_TO} {value:.{precision}f})" for band, value in rule.terms]
    conclusion = class_names.get(rule.class_id, f"class {rule.class_id}")
    return f"IF {' AND '.join(parts)} THEN {conclusion}"


def render_class_rule(rules: RuleSet, class_id: int, precision: int = 4) -> str:
    """OR-combine a class's rules into its single (but large) linguistic rule."""
    members = rules.rules_by_class.get(class_id, ())
    if not members:
        raise KeyError(f"no rules for class {class_id}")
    return "\nOR\n".join(render_rule_text(r, rules.class_names, precision) for r in members)


def explain_pixel(f: np.ndarray, model: IdssModel, rules: RuleSet) -> PixelExplanation:
    """Decide a pixel and pair each of its K neighbors with that prototype's rule."""
    decision = decide(f, model)
    by_index = {
        rule.prototype_index: rule
        for class_rules in rules.rules_by_class.values()
        for rule in class_rules
    }
    neighbors = tuple(
        (by_index[idx], sim)
        for idx, sim in zip(decision.neighbor_ids, decision.neighbor_similarities)
    )
    return PixelExplanation(decision=decision, neighbors=neighbors)


def export_rules_text(rules: RuleSet, path: Path | str, precision: int = 4) -> None:
    """Plain-text export: one rule per line, classes in id order."""
    lines = [
        render_rule_text(rule, rules.class_names, precision)
        for rule in rules.all_rules()
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def export_rules_json(rules: RuleSet, path: Path | str, precision: int = 4) -> None:
    """Structured export mirroring the model file's prototype records."""
    records = []
    for rule in rules.all_rules():
        records.append(
            {
                "class_id": rule.class_id,
                "prototype_index": rule.prototype_index,
                "support_count": rule.support_count,
                "terms": {band: value for band, value in rule.terms},
                "text": render_rule_text(rule, rules.class_names, precision),
            }
        )
    doc = {
        "class_names": {str(c): n for c, n in sorted(rules.class_names.items())},
        "band_names": list(rules.band_names),
        "rules": records,
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")
