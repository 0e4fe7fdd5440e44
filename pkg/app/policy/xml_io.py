"""
Parseur et sérialiseur entre le XML XACML 1.0 (PolicySet, Request, Response)
et l'IR de app.policy.schema.

En entrée, la forme non standard où un seul élément *Match contient plusieurs
paires (AttributeValue, Designator) est acceptée et éclatée en clauses
conjonctives. En sortie, chaque Match porte exactement une paire.
"""
import re
from typing import List, Optional, Tuple

from lxml import etree
from pydantic import BaseModel, Field

from app.policy.constants import (
    CONTEXT_NS,
    MATCH_FUNCTIONS,
    POLICY_COMBINING_ALGS,
    POLICY_NS,
    POLICY_PERMIT_OVERRIDES,
    RULE_COMBINING_ALGS,
    RULE_PERMIT_OVERRIDES,
    XSD_STRING,
)
from app.policy.schema import (
    Attribute,
    AttributeRef,
    Decision,
    Effect,
    MatchClause,
    MatchGroups,
    Policy,
    PolicySet,
    PolicySetIdReference,
    RequestCtx,
    ResponseCtx,
    Rule,
    Target,
)
from app.utils.errors import PRBACError
from app.utils.logging import get_logger

logger = get_logger(__name__)

_WHITESPACE = re.compile(r"\s+")

# Section du Target -> (conteneur, groupe, match, designator, joker)
_SECTIONS = {
    "subjects": ("Subjects", "Subject", "SubjectMatch", "SubjectAttributeDesignator", "AnySubject"),
    "resources": ("Resources", "Resource", "ResourceMatch", "ResourceAttributeDesignator", "AnyResource"),
    "actions": ("Actions", "Action", "ActionMatch", "ActionAttributeDesignator", "AnyAction"),
}
_CONTAINER_TO_SECTION = {spec[0]: name for name, spec in _SECTIONS.items()}


class PolicyParseError(PRBACError):
    """Erreur de lecture d'un document XACML."""


class ParseDiagnostics(BaseModel):
    """Avertissements (ligne, message) et normalisations appliquées."""
    warnings: List[Tuple[int, str]] = Field(default_factory=list)
    normalizations: List[str] = Field(default_factory=list)


# ---------------------------------------------------------------------------
# Lecture
# ---------------------------------------------------------------------------

def _parse_xml(data: bytes) -> etree._Element:
    parser = etree.XMLParser(remove_comments=True, resolve_entities=False, no_network=True)
    try:
        return etree.fromstring(data, parser)
    except etree.XMLSyntaxError as e:
        raise PolicyParseError("xml-syntax", e.msg, line=e.lineno) from e


def _local(el: etree._Element, namespace: str) -> str:
    qname = etree.QName(el)
    if qname.namespace != namespace:
        raise PolicyParseError("bad-namespace", f"{qname.text} (attendu {namespace})", line=el.sourceline)
    return qname.localname


def _elements(el: etree._Element):
    return (c for c in el if isinstance(c.tag, str))


def _uri_attr(el: etree._Element, name: str, diag: ParseDiagnostics) -> Optional[str]:
    """Lit un attribut URI en supprimant les blancs internes (retours à la ligne des figures)."""
    raw = el.get(name)
    if raw is None:
        return None
    value = _WHITESPACE.sub("", raw)
    if value != raw:
        diag.normalizations.append(f"ligne {el.sourceline}: blancs supprimés dans {name}")
    return value


def _text(el: etree._Element) -> str:
    return (el.text or "").strip()


def _parse_match(el: etree._Element, section: str, diag: ParseDiagnostics) -> List[MatchClause]:
    _, _, _, designator_tag, _ = _SECTIONS[section]
    function = _uri_attr(el, "MatchId", diag)
    if function not in MATCH_FUNCTIONS:
        raise PolicyParseError("unsupported-id", f"MatchId {function}", line=el.sourceline)

    values, designators = [], []
    for child in _elements(el):
        name = _local(child, POLICY_NS)
        if name == "AttributeValue":
            values.append(child)
        elif name.endswith("AttributeDesignator"):
            if name != designator_tag:
                diag.warnings.append((child.sourceline, f"{name} dans une section {section}"))
            designators.append(child)
        else:
            raise PolicyParseError("xml-syntax", f"élément inattendu {name}", line=child.sourceline)
    if not values or len(values) != len(designators):
        raise PolicyParseError("xml-syntax", "paires AttributeValue/Designator incomplètes", line=el.sourceline)

    if len(values) > 1:
        diag.normalizations.append(
            f"ligne {el.sourceline}: {etree.QName(el).localname} à {len(values)} paires éclaté en clauses conjonctives"
        )

    clauses = []
    for value_el, designator_el in zip(values, designators):
        data_type = _uri_attr(designator_el, "DataType", diag) or XSD_STRING
        value_type = _uri_attr(value_el, "DataType", diag)
        if value_type and value_type != data_type:
            diag.warnings.append((value_el.sourceline, f"DataType {value_type} différent du designator {data_type}"))
        clauses.append(MatchClause(
            function=function,
            literal=_text(value_el),
            designator=AttributeRef(
                attribute_id=_uri_attr(designator_el, "AttributeId", diag) or "",
                data_type=data_type,
            ),
        ))
    return clauses


def _parse_section(el: etree._Element, section: str, diag: ParseDiagnostics) -> MatchGroups:
    _, group_tag, match_tag, _, any_tag = _SECTIONS[section]
    groups = []
    matches_anything = False
    for group_el in _elements(el):
        name = _local(group_el, POLICY_NS)
        if name == any_tag:
            matches_anything = True
            continue
        if name != group_tag:
            raise PolicyParseError("xml-syntax", f"élément inattendu {name}", line=group_el.sourceline)
        clauses = []
        for match_el in _elements(group_el):
            if _local(match_el, POLICY_NS) != match_tag:
                raise PolicyParseError("xml-syntax", f"{match_tag} attendu", line=match_el.sourceline)
            clauses.extend(_parse_match(match_el, section, diag))
        groups.append(tuple(clauses))
    if matches_anything:
        diag.normalizations.append(f"ligne {el.sourceline}: {any_tag} lu comme section vide")
        return ()
    return tuple(groups)


def _parse_target(el: etree._Element, diag: ParseDiagnostics) -> Target:
    sections = {}
    for child in _elements(el):
        name = _local(child, POLICY_NS)
        section = _CONTAINER_TO_SECTION.get(name)
        if section is None:
            raise PolicyParseError("xml-syntax", f"section de Target inconnue {name}", line=child.sourceline)
        sections[section] = _parse_section(child, section, diag)
    return Target(**sections)


def _parse_rule(el: etree._Element, diag: ParseDiagnostics) -> Rule:
    effect = el.get("Effect")
    if effect not in (e.value for e in Effect):
        raise PolicyParseError("unsupported-id", f"Effect {effect}", line=el.sourceline)
    target = None
    for child in _elements(el):
        name = _local(child, POLICY_NS)
        if name == "Target":
            target = _parse_target(child, diag)
        elif name != "Description":
            raise PolicyParseError("xml-syntax", f"élément non supporté {name}", line=child.sourceline)
    return Rule(id=el.get("RuleId", ""), effect=Effect(effect), target=target)


def _combining(el: etree._Element, attr: str, supported: dict, default: str, diag: ParseDiagnostics) -> str:
    alg = _uri_attr(el, attr, diag)
    if alg is None:
        diag.normalizations.append(f"ligne {el.sourceline}: {attr} absent, {default} par défaut")
        return default
    if alg not in supported:
        raise PolicyParseError("unsupported-id", f"{attr} {alg}", line=el.sourceline)
    return alg


def _parse_policy(el: etree._Element, diag: ParseDiagnostics) -> Policy:
    combining = _combining(el, "RuleCombiningAlgId", RULE_COMBINING_ALGS, RULE_PERMIT_OVERRIDES, diag)
    target, rules = Target(), []
    for child in _elements(el):
        name = _local(child, POLICY_NS)
        if name == "Target":
            target = _parse_target(child, diag)
        elif name == "Rule":
            rules.append(_parse_rule(child, diag))
        elif name != "Description":
            raise PolicyParseError("xml-syntax", f"élément non supporté {name}", line=child.sourceline)
    return Policy(id=el.get("PolicyId", ""), combining=combining, target=target, rules=tuple(rules))


def _parse_policy_set(el: etree._Element, diag: ParseDiagnostics) -> PolicySet:
    combining = _combining(el, "PolicyCombiningAlgId", POLICY_COMBINING_ALGS, POLICY_PERMIT_OVERRIDES, diag)
    if el.get("PolicySetId") is None:
        diag.warnings.append((el.sourceline, "PolicySetId absent"))
    target, children = Target(), []
    for child in _elements(el):
        name = _local(child, POLICY_NS)
        if name == "Target":
            target = _parse_target(child, diag)
        elif name == "Policy":
            children.append(_parse_policy(child, diag))
        elif name == "PolicySet":
            children.append(_parse_policy_set(child, diag))
        elif name == "PolicySetIdReference":
            children.append(PolicySetIdReference(ref=_text(child)))
        elif name != "Description":
            raise PolicyParseError("xml-syntax", f"élément non supporté {name}", line=child.sourceline)
    return PolicySet(id=el.get("PolicySetId", ""), combining=combining, target=target, children=tuple(children))


def parse_policy_set(data: bytes) -> Tuple[PolicySet, ParseDiagnostics]:
    """
    Lit un document PolicySet XACML 1.0.

    Args:
        data: Le document XML encodé en UTF-8

    Returns:
        Tuple (PolicySet, diagnostics)

    Raises:
        PolicyParseError: "xml-syntax", "unsupported-id" ou "bad-namespace"
    """
    root = _parse_xml(data)
    if _local(root, POLICY_NS) != "PolicySet":
        raise PolicyParseError("xml-syntax", "élément racine PolicySet attendu", line=root.sourceline)
    diag = ParseDiagnostics()
    ps = _parse_policy_set(root, diag)
    if diag.normalizations:
        logger.debug("PolicySet normalisé", extra={"policy_set": ps.id, "normalizations": diag.normalizations})
    return ps, diag


def parse_request(data: bytes) -> RequestCtx:
    """
    Lit un contexte de requête XACML (Subject, Resource, Action).

    Raises:
        PolicyParseError: "xml-syntax" ou "bad-namespace"
    """
    root = _parse_xml(data)
    if _local(root, CONTEXT_NS) != "Request":
        raise PolicyParseError("xml-syntax", "élément racine Request attendu", line=root.sourceline)
    bags = {"Subject": [], "Resource": [], "Action": []}
    for section in _elements(root):
        name = _local(section, CONTEXT_NS)
        if name not in bags:
            raise PolicyParseError("xml-syntax", f"section de requête non supportée {name}", line=section.sourceline)
        for attr_el in _elements(section):
            if _local(attr_el, CONTEXT_NS) != "Attribute":
                raise PolicyParseError("xml-syntax", "Attribute attendu", line=attr_el.sourceline)
            attribute_id = attr_el.get("AttributeId")
            if not attribute_id:
                raise PolicyParseError("xml-syntax", "AttributeId absent", line=attr_el.sourceline)
            ref = AttributeRef(attribute_id=attribute_id, data_type=attr_el.get("DataType", XSD_STRING))
            for value_el in _elements(attr_el):
                if _local(value_el, CONTEXT_NS) != "AttributeValue":
                    raise PolicyParseError("xml-syntax", "AttributeValue attendu", line=value_el.sourceline)
                bags[name].append(Attribute(ref=ref, value=_text(value_el)))
    return RequestCtx(
        subject_attrs=tuple(bags["Subject"]),
        resource_attrs=tuple(bags["Resource"]),
        action_attrs=tuple(bags["Action"]),
    )


def parse_response(data: bytes) -> ResponseCtx:
    """Lit un document Response produit par serialize_response."""
    root = _parse_xml(data)
    if _local(root, CONTEXT_NS) != "Response":
        raise PolicyParseError("xml-syntax", "élément racine Response attendu", line=root.sourceline)
    decision = root.find(f"{{{CONTEXT_NS}}}Result/{{{CONTEXT_NS}}}Decision")
    status = root.find(f"{{{CONTEXT_NS}}}Result/{{{CONTEXT_NS}}}Status/{{{CONTEXT_NS}}}StatusCode")
    if decision is None or status is None:
        raise PolicyParseError("xml-syntax", "Decision ou StatusCode manquant", line=root.sourceline)
    try:
        return ResponseCtx(decision=Decision(_text(decision)), status=status.get("Value", ""))
    except ValueError as e:
        raise PolicyParseError("unsupported-id", str(e), line=decision.sourceline) from e


# ---------------------------------------------------------------------------
# Écriture
# ---------------------------------------------------------------------------

def _sub(parent: etree._Element, tag: str, ns: str = POLICY_NS, **attrs: str) -> etree._Element:
    el = etree.SubElement(parent, f"{{{ns}}}{tag}")
    for key, value in attrs.items():
        el.set(key, value)
    return el


def _write_target(parent: etree._Element, target: Target) -> None:
    target_el = _sub(parent, "Target")
    for section, (container, group_tag, match_tag, designator_tag, _) in _SECTIONS.items():
        groups = getattr(target, section)
        if not groups:
            continue
        container_el = _sub(target_el, container)
        for group in groups:
            group_el = _sub(container_el, group_tag)
            for clause in group:
                match_el = _sub(group_el, match_tag, MatchId=clause.function)
                value_el = _sub(match_el, "AttributeValue", DataType=clause.designator.data_type)
                value_el.text = clause.literal
                _sub(
                    match_el,
                    designator_tag,
                    AttributeId=clause.designator.attribute_id,
                    DataType=clause.designator.data_type,
                )


def _write_policy(parent: etree._Element, policy: Policy) -> None:
    el = _sub(parent, "Policy", PolicyId=policy.id, RuleCombiningAlgId=policy.combining)
    _write_target(el, policy.target)
    for rule in policy.rules:
        rule_el = _sub(el, "Rule", RuleId=rule.id, Effect=rule.effect.value)
        if rule.target is not None:
            _write_target(rule_el, rule.target)


def _write_policy_set(el: etree._Element, ps: PolicySet) -> None:
    el.set("PolicySetId", ps.id)
    el.set("PolicyCombiningAlgId", ps.combining)
    _write_target(el, ps.target)
    for child in ps.children:
        if isinstance(child, PolicySetIdReference):
            _sub(el, "PolicySetIdReference").text = child.ref
        elif isinstance(child, Policy):
            _write_policy(el, child)
        else:
            _write_policy_set(_sub(el, "PolicySet"), child)


def _to_bytes(root: etree._Element) -> bytes:
    return etree.tostring(root, xml_declaration=True, encoding="UTF-8", pretty_print=True)


def serialize_policy_set(ps: PolicySet) -> bytes:
    """
    Écrit un PolicySet sous forme canonique: une paire par Match,
    ordre d'attributs stable, sortie identique pour une IR identique.
    """
    root = etree.Element(f"{{{POLICY_NS}}}PolicySet", nsmap={None: POLICY_NS})
    _write_policy_set(root, ps)
    return _to_bytes(root)


def serialize_request(req: RequestCtx) -> bytes:
    """Écrit un contexte de requête: une balise Attribute par valeur du sac."""
    root = etree.Element(f"{{{CONTEXT_NS}}}Request", nsmap={None: CONTEXT_NS})
    for tag, bag in (("Subject", req.subject_attrs), ("Resource", req.resource_attrs), ("Action", req.action_attrs)):
        section = _sub(root, tag, ns=CONTEXT_NS)
        for attribute in bag:
            attr_el = _sub(section, "Attribute", ns=CONTEXT_NS, AttributeId=attribute.ref.attribute_id, DataType=attribute.ref.data_type)
            _sub(attr_el, "AttributeValue", ns=CONTEXT_NS).text = attribute.value
    return _to_bytes(root)


def serialize_response(r: ResponseCtx) -> bytes:
    """Écrit <Response><Result><Decision/><Status/></Result></Response>."""
    root = etree.Element(f"{{{CONTEXT_NS}}}Response", nsmap={None: CONTEXT_NS})
    result = _sub(root, "Result", ns=CONTEXT_NS)
    _sub(result, "Decision", ns=CONTEXT_NS).text = r.decision.value
    _sub(_sub(result, "Status", ns=CONTEXT_NS), "StatusCode", ns=CONTEXT_NS, Value=r.status)
    return _to_bytes(root)
