"""
Validation structurelle de l'IR et recherche dans les sacs d'attributs.
"""
from typing import Iterable, List, Set

from app.policy.constants import MATCH_FUNCTIONS, POLICY_COMBINING_ALGS, RULE_COMBINING_ALGS
from app.policy.schema import (
    AttributeRef,
    Bag,
    Policy,
    PolicySet,
    PolicySetIdReference,
    Target,
)


def bag_lookup(bag: Bag, ref: AttributeRef) -> List[str]:
    """
    Valeurs du sac dont l'identifiant et le type correspondent à la référence.

    Returns:
        Les valeurs dans l'ordre d'insertion (liste vide si absent)
    """
    return [a.value for a in bag if a.ref == ref]


def _target_violations(owner: str, target: Target) -> List[str]:
    violations = []
    for clause in target.clauses():
        expected = MATCH_FUNCTIONS.get(clause.function)
        designator = clause.designator
        if expected is None:
            violations.append(f"unsupported-function: {owner}: {clause.function}")
        elif expected != designator.data_type:
            violations.append(
                f"type-mismatch: {owner}: {clause.function} / {designator.attribute_id} ({designator.data_type})"
            )
        if not designator.attribute_id or not designator.data_type:
            violations.append(f"empty-attribute: {owner}")
        if clause.literal != clause.literal.strip():
            violations.append(f"untrimmed-literal: {owner}: {clause.literal!r}")
    return violations


def well_formed(ps: PolicySet, known_ids: Iterable[str]) -> List[str]:
    """
    Vérifie les invariants d'un PolicySet et de ses descendants.

    Args:
        ps: Le PolicySet à vérifier
        known_ids: Identifiants résolvables par les PolicySetIdReference

    Returns:
        Violations triées (liste vide si bien formé)
    """
    known: Set[str] = set(known_ids)
    violations: List[str] = []
    seen: List[str] = []
    references: List[str] = []

    def walk_policy(policy: Policy) -> None:
        seen.append(policy.id)
        if not policy.id:
            violations.append("empty-id: Policy")
        if policy.combining not in RULE_COMBINING_ALGS:
            violations.append(f"unsupported-combining: {policy.id}: {policy.combining}")
        violations.extend(_target_violations(policy.id, policy.target))
        rule_ids = set()
        for rule in policy.rules:
            if not rule.id:
                violations.append(f"empty-id: Rule in {policy.id}")
            elif rule.id in rule_ids:
                violations.append(f"duplicate-id: {policy.id}/{rule.id}")
            rule_ids.add(rule.id)
            if rule.target is not None:
                violations.extend(_target_violations(f"{policy.id}/{rule.id}", rule.target))

    def walk_set(node: PolicySet) -> None:
        seen.append(node.id)
        if not node.id:
            violations.append("empty-id: PolicySet")
        if node.combining not in POLICY_COMBINING_ALGS:
            violations.append(f"unsupported-combining: {node.id}: {node.combining}")
        violations.extend(_target_violations(node.id, node.target))
        for child in node.children:
            if isinstance(child, PolicySetIdReference):
                references.append(child.ref)
            elif isinstance(child, Policy):
                walk_policy(child)
            else:
                walk_set(child)

    walk_set(ps)

    defined = set()
    for node_id in seen:
        if node_id and node_id in defined:
            violations.append(f"duplicate-id: {node_id}")
        defined.add(node_id)
    for ref in references:
        if ref not in known and ref not in defined:
            violations.append(f"dangling-ref: {ref}")

    return sorted(set(violations))
