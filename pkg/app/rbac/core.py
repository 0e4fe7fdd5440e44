"""
Modèle SRBAC abstrait et oracle de décision par force brute.
Définit la sémantique de référence, indépendamment de XACML.
"""
import json
import re
from pathlib import Path
from typing import FrozenSet, Iterable, List, Set, Tuple, Union

from pydantic import ValidationError

from app.rbac.schema import (
    NULL_ACTION,
    ModelDocument,
    ParamBinding,
    Privilege,
    RoleInstance,
    Violation,
)
from app.policy.schema import Decision
from app.utils.errors import PRBACError
from app.utils.logging import get_logger

logger = get_logger(__name__)

IDENTIFIER = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
# Caractères interdits en XML 1.0
XML_ILLEGAL = re.compile("[^\t\n\r\x20-\ud7ff\ue000-\ufffd\U00010000-\U0010ffff]")


class ModelError(PRBACError):
    """Erreur du modèle: format de fichier ou identifiant inconnu."""


def load_model(source: Union[str, Path]) -> ModelDocument:
    """
    Charge un modèle JSON (chemin de fichier ou texte JSON).

    Raises:
        ModelError: "model-format" si le JSON est invalide ou contient des clés inconnues
    """
    if isinstance(source, Path) or not source.lstrip().startswith("{"):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    try:
        return ModelDocument.model_validate_json(text)
    except ValidationError as e:
        raise ModelError("model-format", str(e)) from e


def dump_model(doc: ModelDocument) -> str:
    """Sérialise le modèle en JSON canonique, relisible par load_model."""
    return json.dumps(doc.model_dump(mode="json"), indent=2, sort_keys=True, ensure_ascii=False)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _check_text(entity: str, value: str) -> List[Violation]:
    """Les littéraux compilés en XML doivent être sans espaces de bord et sans caractère interdit."""
    violations = []
    if value != value.strip():
        violations.append(Violation(entity=entity, rule="untrimmed", message=repr(value)))
    if XML_ILLEGAL.search(value):
        violations.append(Violation(entity=entity, rule="bad-char", message=repr(value)))
    return violations


def _check_bindings(entity: str, bindings: Iterable[ParamBinding], wildcard_ok: bool) -> List[Violation]:
    violations = []
    for b in bindings:
        if not b.name:
            violations.append(Violation(entity=entity, rule="empty-name", message="nom de paramètre vide"))
        elif not IDENTIFIER.match(b.name):
            violations.append(Violation(entity=entity, rule="bad-identifier", message=b.name))
        if b.is_wildcard and not wildcard_ok:
            violations.append(Violation(entity=entity, rule="wildcard-in-activation", message=b.name))
        elif not b.value or ":" in b.value:
            violations.append(Violation(entity=entity, rule="bad-value", message=f"{b.name}={b.value!r}"))
        violations.extend(_check_text(entity, b.value))
    return violations


def _find_cycles(doc: ModelDocument) -> List[FrozenSet[str]]:
    """Parcours en profondeur: un ensemble de rôles par cycle détecté."""
    edges = {r.name: [j for j in r.juniors if doc.role(j) is not None] for r in doc.roles}
    state = {}
    cycles = []

    def visit(node: str, path: List[str]) -> None:
        state[node] = "open"
        path.append(node)
        for nxt in edges.get(node, ()):
            if state.get(nxt) == "open":
                cycle = frozenset(path[path.index(nxt):])
                if cycle not in cycles:
                    cycles.append(cycle)
            elif nxt not in state:
                visit(nxt, path)
        path.pop()
        state[node] = "done"

    for name in edges:
        if name not in state:
            visit(name, [])
    return cycles


def validate_model(doc: ModelDocument) -> List[Violation]:
    """
    Vérifie tous les invariants du modèle.

    Args:
        doc: Le modèle à valider

    Returns:
        Liste des violations (vide si le modèle est valide)
    """
    violations: List[Violation] = []

    def dupes(kind: str, ids: List[str]) -> None:
        seen = set()
        for i in ids:
            if not i:
                violations.append(Violation(entity=kind, rule="empty-id"))
            elif i in seen:
                violations.append(Violation(entity=f"{kind} {i}", rule="duplicate-id"))
            seen.add(i)
            violations.extend(_check_text(f"{kind} {i}", i))

    dupes("user", [u.id for u in doc.users])
    dupes("role", [r.name for r in doc.roles])
    dupes("service", [s.id for s in doc.services])

    for role in doc.roles:
        entity = f"role {role.name}"
        if role.name and not IDENTIFIER.match(role.name):
            violations.append(Violation(entity=entity, rule="bad-identifier", message=role.name))
        if len(set(role.param_names)) != len(role.param_names):
            violations.append(Violation(entity=entity, rule="duplicate-param"))
        for p in role.param_names:
            if not IDENTIFIER.match(p):
                violations.append(Violation(entity=entity, rule="bad-identifier", message=p))
        for junior_name in role.juniors:
            if doc.role(junior_name) is None:
                violations.append(Violation(entity=entity, rule="unknown-junior", message=junior_name))

    for cycle in _find_cycles(doc):
        violations.append(Violation(entity=" -> ".join(sorted(cycle)), rule="hierarchy-cycle"))

    for service in doc.services:
        if not service.actions:
            violations.append(Violation(entity=f"service {service.id}", rule="empty-actions"))
        for action in service.actions:
            violations.extend(_check_text(f"service {service.id}", action))

    for ua in doc.ua:
        ri = ua.role_instance
        entity = f"ua {ua.user} -> {ri}"
        violations.extend(_check_text(entity, ua.user))
        violations.extend(_check_text(entity, ri.role))
        if doc.user(ua.user) is None:
            violations.append(Violation(entity=entity, rule="unknown-user", message=ua.user))
        role = doc.role(ri.role)
        if role is None:
            violations.append(Violation(entity=entity, rule="unknown-role", message=ri.role))
        elif sorted(b.name for b in ri.bindings) != sorted(role.param_names):
            violations.append(Violation(entity=entity, rule="binding-mismatch"))
        violations.extend(_check_bindings(entity, ri.bindings, wildcard_ok=False))

    for pa in doc.pa:
        priv = pa.privilege
        entity = f"pa {pa.role} -> ({priv.service}, {priv.action})"
        role = doc.role(pa.role)
        if role is None:
            violations.append(Violation(entity=entity, rule="unknown-role", message=pa.role))
        elif not {b.name for b in pa.role_param_pattern} <= set(role.param_names):
            violations.append(Violation(entity=entity, rule="pattern-name"))
        violations.extend(_check_bindings(entity, pa.role_param_pattern, wildcard_ok=True))
        violations.extend(_check_bindings(entity, priv.aparams, wildcard_ok=True))
        service = doc.service(priv.service)
        if service is None:
            violations.append(Violation(entity=entity, rule="unknown-service", message=priv.service))
        elif priv.action != NULL_ACTION and priv.action not in service.actions:
            violations.append(Violation(entity=entity, rule="unknown-action", message=priv.action))

    if violations:
        logger.debug("Modèle invalide", extra={"violations": len(violations)})
    return violations


# ---------------------------------------------------------------------------
# Sémantique de référence
# ---------------------------------------------------------------------------

def junior_closure(doc: ModelDocument, role: str) -> Set[str]:
    """Juniors transitifs d'un rôle (le rôle lui-même exclu)."""
    if doc.role(role) is None:
        raise ModelError("unknown-role", role)
    seen: Set[str] = set()
    stack = list(doc.role(role).juniors)
    while stack:
        name = stack.pop()
        if name in seen or name == role:
            continue
        seen.add(name)
        decl = doc.role(name)
        if decl is not None:
            stack.extend(decl.juniors)
    return seen


def enabled_role_instances(doc: ModelDocument, user_id: str) -> Set[RoleInstance]:
    """
    Instances de rôle attribuées à l'utilisateur (UA), sans expansion hiérarchique.

    Raises:
        ModelError: "unknown-user"
    """
    if doc.user(user_id) is None:
        raise ModelError("unknown-user", user_id)
    return {ua.role_instance for ua in doc.ua if ua.user == user_id}


def own_privileges(doc: ModelDocument, ri: RoleInstance) -> Set[Privilege]:
    """Privilèges non hérités: entrées PA du rôle lui-même dont le motif correspond."""
    return {
        pa.privilege
        for pa in doc.pa
        if pa.role == ri.role and not pa.privilege.is_null and pa.matches(ri)
    }


def authorized_privileges(doc: ModelDocument, ri: RoleInstance) -> Set[Privilege]:
    """
    Privilèges du rôle et de tous ses juniors transitifs (RBAC1).
    Les jokers des AParams restent symboliques; les actions "null" sont exclues.

    Raises:
        ModelError: "unknown-role"
    """
    roles = {ri.role} | junior_closure(doc, ri.role)
    return {
        pa.privilege
        for pa in doc.pa
        if pa.role in roles and not pa.privilege.is_null and pa.matches(ri)
    }


def privilege_covers(priv: Privilege, service: str, action: str, aparams: Iterable[ParamBinding]) -> bool:
    """Vrai si le privilège couvre la requête: chaque AParam littéral doit être présent."""
    if priv.service != service or priv.action != action:
        return False
    offered = set(aparams)
    return all(p.is_wildcard or p in offered for p in priv.aparams)


def oracle_decide(
    doc: ModelDocument,
    user_id: str,
    ri: RoleInstance,
    service: str,
    action: str,
    aparams: Iterable[ParamBinding] = (),
) -> Decision:
    """
    Oracle de référence: Permit ssi l'instance est activée pour l'utilisateur
    et qu'un privilège autorisé couvre (service, action, aparams).
    Ne retourne jamais Deny.
    """
    if doc.role(ri.role) is None:
        raise ModelError("unknown-role", ri.role)
    if ri not in enabled_role_instances(doc, user_id):
        return Decision.NOT_APPLICABLE
    aparams = tuple(aparams)
    if any(privilege_covers(p, service, action, aparams) for p in authorized_privileges(doc, ri)):
        return Decision.PERMIT
    return Decision.NOT_APPLICABLE


def service_relation(doc: ModelDocument) -> Set[Tuple[str, str]]:
    """Relation SR induite: (rôle, service) dès qu'une entrée PA du rôle ou d'un junior nomme le service."""
    direct = {}
    for pa in doc.pa:
        if not pa.privilege.is_null:
            direct.setdefault(pa.role, set()).add(pa.privilege.service)
    relation = set()
    for role in doc.roles:
        for name in {role.name} | junior_closure(doc, role.name):
            relation.update((role.name, s) for s in direct.get(name, ()))
    return relation
