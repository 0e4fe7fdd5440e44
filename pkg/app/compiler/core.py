"""
Compilation d'un modèle SRBAC en PolicySets XACML en couches:
- RAS: qui peut activer quelle instance de rôle (attribution)
- RPS: PolicySet de rôle ciblé sur le sujet, qui référence son PPS
- PPS: PolicySet de permissions, atteignable uniquement par référence
La hiérarchie RBAC1 devient des références PPS -> PPS.
"""
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

from pydantic import BaseModel, ConfigDict, model_validator

from app.policy.constants import (
    ACTION_ID,
    ACTIVATE_ROLE,
    ANY_URI_EQUAL,
    APARAMS,
    POLICY_PERMIT_OVERRIDES,
    RESOURCE_ID,
    RPARAMS,
    RULE_PERMIT_OVERRIDES,
    STRING_EQUAL,
    SUBJECT_ID,
    SUBJECT_ROLE,
    XSD_ANY_URI,
    XSD_STRING,
)
from app.policy.core import well_formed
from app.policy.schema import (
    Attribute,
    AttributeRef,
    Effect,
    MatchClause,
    Policy,
    PolicySet,
    PolicySetIdReference,
    RequestCtx,
    Rule,
    Target,
)
from app.policy.xml_io import serialize_policy_set
from app.pdp.core import PolicyStore
from app.rbac.core import junior_closure, own_privileges, validate_model
from app.rbac.schema import ModelDocument, ParamBinding, Privilege, RoleInstance
from app.utils.errors import PRBACError
from app.utils.logging import get_logger

logger = get_logger(__name__)

ROOTS_FILE = "roots.txt"


class CompilationError(PRBACError):
    """Le modèle est invalide: la liste des violations est jointe."""

    def __init__(self, violations: Sequence):
        self.violations = list(violations)
        super().__init__("invalid-model", "; ".join(str(v) for v in self.violations))


class PolicyKind(str, Enum):
    RPS = "RPS"
    PPS = "PPS"
    RAS = "RAS"


class NamingScheme(BaseModel):
    """Préfixes des identifiants de PolicySet et base des URIs de rôle."""
    rps_prefix: str = "RPS"
    pps_prefix: str = "PPS"
    ras_prefix: str = "RAS"
    role_value_base: str = "urn:example:role-values"

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def distinct_prefixes(self) -> "NamingScheme":
        if len({self.rps_prefix, self.pps_prefix, self.ras_prefix}) != 3:
            raise ValueError("les préfixes RPS, PPS et RAS doivent être distincts")
        return self

    def prefix(self, kind: PolicyKind) -> str:
        return {PolicyKind.RPS: self.rps_prefix, PolicyKind.PPS: self.pps_prefix, PolicyKind.RAS: self.ras_prefix}[kind]


DEFAULT_SCHEME = NamingScheme()


# ---------------------------------------------------------------------------
# Identifiants
# ---------------------------------------------------------------------------

def _encoded(bindings: Iterable[ParamBinding]) -> str:
    return ":".join(b.encoded() for b in bindings)


def policy_set_id(kind: PolicyKind, ri: RoleInstance, scheme: NamingScheme = DEFAULT_SCHEME) -> str:
    """"<KIND>:<rôle>:role[:<p1>-<v1>...]", liaisons dans l'ordre canonique."""
    base = f"{scheme.prefix(PolicyKind(kind))}:{ri.role}:role"
    return f"{base}:{_encoded(ri.bindings)}" if ri.bindings else base


def role_value_uri(ri: RoleInstance, scheme: NamingScheme = DEFAULT_SCHEME) -> str:
    """"<base>:<rôle>:rparams:<p1>-<v1>[...]", ou "<base>:<rôle>" sans paramètre."""
    base = f"{scheme.role_value_base}:{ri.role}"
    return f"{base}:rparams:{_encoded(ri.bindings)}" if ri.bindings else base


def parse_role_value_uri(uri: str, scheme: NamingScheme = DEFAULT_SCHEME) -> RoleInstance:
    """
    Inverse de role_value_uri.

    Raises:
        PRBACError: "bad-role-uri" si l'URI ne suit pas le schéma
    """
    prefix = scheme.role_value_base + ":"
    if not uri.startswith(prefix):
        raise PRBACError("bad-role-uri", uri)
    role, sep, params = uri[len(prefix):].partition(":rparams:")
    if not role or ":" in role or (sep and not params):
        raise PRBACError("bad-role-uri", uri)
    bindings = []
    for part in params.split(":") if sep else ():
        name, dash, value = part.partition("-")
        if not dash or not name or not value:
            raise PRBACError("bad-role-uri", uri)
        bindings.append(ParamBinding(name=name, value=value))
    return RoleInstance(role=role, bindings=tuple(bindings))


# ---------------------------------------------------------------------------
# Clauses et requêtes
# ---------------------------------------------------------------------------

def _clause(function: str, literal: str, attribute_id: str, data_type: str) -> MatchClause:
    return MatchClause(function=function, literal=literal, designator=AttributeRef(attribute_id=attribute_id, data_type=data_type))


def _string(literal: str, attribute_id: str) -> MatchClause:
    return _clause(STRING_EQUAL, literal, attribute_id, XSD_STRING)


def _attr(attribute_id: str, value: str, data_type: str = XSD_STRING) -> Attribute:
    return Attribute(ref=AttributeRef(attribute_id=attribute_id, data_type=data_type), value=value)


def build_access_request(
    ri: RoleInstance,
    service: str,
    action: str,
    aparams: Iterable[ParamBinding] = (),
    user: Optional[str] = None,
    scheme: NamingScheme = DEFAULT_SCHEME,
) -> RequestCtx:
    """Requête d'accès portant le rôle activé (URI + RParams), le service et l'action (+ AParams)."""
    subject = [_attr(SUBJECT_ID, user)] if user is not None else []
    subject.append(_attr(SUBJECT_ROLE, role_value_uri(ri, scheme), XSD_ANY_URI))
    subject.extend(_attr(RPARAMS, b.encoded()) for b in ri.bindings)
    actions = [_attr(ACTION_ID, action)]
    actions.extend(_attr(APARAMS, b.encoded()) for b in aparams)
    return RequestCtx(
        subject_attrs=tuple(subject),
        resource_attrs=(_attr(RESOURCE_ID, service),),
        action_attrs=tuple(actions),
    )


def build_activation_request(user: str, role_uri: str) -> RequestCtx:
    """Requête de phase 1: le sujet demande l'activation d'une URI de rôle."""
    return RequestCtx(
        subject_attrs=(_attr(SUBJECT_ID, user),),
        resource_attrs=(_attr(RESOURCE_ID, role_uri, XSD_ANY_URI),),
        action_attrs=(_attr(ACTION_ID, ACTIVATE_ROLE),),
    )


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------

def compile_rps(ri: RoleInstance, scheme: NamingScheme = DEFAULT_SCHEME) -> PolicySet:
    """PolicySet de rôle: cible sujet (URI de rôle ET un RParams par liaison), référence au PPS."""
    group = [_clause(ANY_URI_EQUAL, role_value_uri(ri, scheme), SUBJECT_ROLE, XSD_ANY_URI)]
    group.extend(_string(b.encoded(), RPARAMS) for b in ri.bindings)
    return PolicySet(
        id=policy_set_id(PolicyKind.RPS, ri, scheme),
        combining=POLICY_PERMIT_OVERRIDES,
        target=Target(subjects=(tuple(group),)),
        children=(PolicySetIdReference(ref=policy_set_id(PolicyKind.PPS, ri, scheme)),),
    )


def _privilege_policy(policy_id: str, privilege: Privilege) -> Policy:
    actions = [_string(privilege.action, ACTION_ID)]
    actions.extend(_string(b.encoded(), APARAMS) for b in privilege.aparams if not b.is_wildcard)
    rule_target = Target(
        resources=((_string(privilege.service, RESOURCE_ID),),),
        actions=(tuple(actions),),
    )
    return Policy(
        id=policy_id,
        combining=RULE_PERMIT_OVERRIDES,
        rules=(Rule(id="permit", effect=Effect.PERMIT, target=rule_target),),
    )


def compile_pps(
    ri: RoleInstance,
    privileges: Iterable[Privilege],
    junior_instances: Iterable[RoleInstance] = (),
    scheme: NamingScheme = DEFAULT_SCHEME,
) -> PolicySet:
    """
    PolicySet de permissions: cible vide, une Policy Permit par privilège propre,
    puis une référence au PPS de chaque junior direct.
    """
    pps_id = policy_set_id(PolicyKind.PPS, ri, scheme)
    children: List[Union[Policy, PolicySetIdReference]] = [
        _privilege_policy(f"{pps_id}:privilege:{index}", privilege)
        for index, privilege in enumerate(sorted(set(privileges), key=Privilege.sort_key))
    ]
    junior_ids = sorted({policy_set_id(PolicyKind.PPS, j, scheme) for j in junior_instances})
    children.extend(PolicySetIdReference(ref=j) for j in junior_ids)
    return PolicySet(id=pps_id, combining=POLICY_PERMIT_OVERRIDES, children=tuple(children))


def _ras_id(user: str, ri: RoleInstance, scheme: NamingScheme) -> str:
    suffix = policy_set_id(PolicyKind.RPS, ri, scheme)[len(scheme.rps_prefix) + 1:]
    return f"{scheme.ras_prefix}:{user}:{suffix}"


def compile_role_assignment(doc: ModelDocument, scheme: NamingScheme = DEFAULT_SCHEME) -> List[PolicySet]:
    """Un PolicySet RAS par entrée UA: le sujet peut activer l'URI de rôle de l'instance."""
    result = []
    seen = set()
    for ua in doc.ua:
        ras_id = _ras_id(ua.user, ua.role_instance, scheme)
        if ras_id in seen:
            continue
        seen.add(ras_id)
        target = Target(
            subjects=((_string(ua.user, SUBJECT_ID),),),
            resources=((_clause(ANY_URI_EQUAL, role_value_uri(ua.role_instance, scheme), RESOURCE_ID, XSD_ANY_URI),),),
            actions=((_string(ACTIVATE_ROLE, ACTION_ID),),),
        )
        policy = Policy(
            id=f"{ras_id}:policy",
            combining=RULE_PERMIT_OVERRIDES,
            rules=(Rule(id="permit", effect=Effect.PERMIT),),
        )
        result.append(PolicySet(id=ras_id, combining=POLICY_PERMIT_OVERRIDES, target=target, children=(policy,)))
    return result


def _junior_plan(doc: ModelDocument, ri: RoleInstance) -> Tuple[List[RoleInstance], Set[Privilege]]:
    """
    Juniors directs de ri: référencés par leur PPS quand l'instance restreinte
    suffit, sinon leurs privilèges (sous-arbre compris) sont recopiés.

    Une référence exige que les paramètres du junior soient liés par ri et
    couvrent ceux de tout son sous-arbre.
    """
    senior = doc.role(ri.role)
    references: List[RoleInstance] = []
    inlined: Set[Privilege] = set()
    for name in senior.juniors:
        scope = set(doc.role(name).param_names)
        subtree = {name} | junior_closure(doc, name)
        if scope <= set(senior.param_names) and all(set(doc.role(r).param_names) <= scope for r in subtree):
            references.append(RoleInstance(role=name, bindings=ri.restricted_to(scope)))
        else:
            inlined.update(
                pa.privilege
                for pa in doc.pa
                if pa.role in subtree and not pa.privilege.is_null and pa.matches(ri)
            )
    return references, inlined


def compile_model(doc: ModelDocument, scheme: NamingScheme = DEFAULT_SCHEME) -> PolicyStore:
    """
    Compile le modèle en un PolicyStore: RAS et RPS en racines, PPS hors racines.

    Raises:
        CompilationError: si validate_model signale des violations
    """
    violations = validate_model(doc)
    if violations:
        logger.warning("Compilation refusée: modèle invalide", extra={"violations": [str(v) for v in violations]})
        raise CompilationError(violations)

    ras = compile_role_assignment(doc, scheme)

    # Instances activées, puis instances induites pour les juniors
    instances: Dict[str, RoleInstance] = {}
    pending = [ua.role_instance for ua in doc.ua]
    while pending:
        ri = pending.pop()
        key = policy_set_id(PolicyKind.RPS, ri, scheme)
        if key in instances:
            continue
        instances[key] = ri
        pending.extend(_junior_plan(doc, ri)[0])

    rps, pps = [], []
    for key in sorted(instances):
        ri = instances[key]
        rps.append(compile_rps(ri, scheme))
        references, inlined = _junior_plan(doc, ri)
        pps.append(compile_pps(ri, own_privileges(doc, ri) | inlined, references, scheme))

    roots = [ps.id for ps in ras] + [ps.id for ps in rps]
    store = PolicyStore.build(ras + rps + pps, roots)

    known = set(store.by_id)
    for ps in store.policy_sets:
        problems = well_formed(ps, known)
        if problems:
            raise CompilationError(problems)

    logger.info(
        "Modèle compilé",
        extra={"ras": len(ras), "rps": len(rps), "pps": len(pps)},
    )
    return store


def policy_file_name(policy_set_id_: str) -> str:
    return policy_set_id_.replace(":", "_") + ".xml"


def write_policy_dir(store: PolicyStore, out_dir: Union[str, Path]) -> List[Path]:
    """
    Écrit un fichier XML par PolicySet de premier niveau et roots.txt.

    Returns:
        Les chemins écrits (roots.txt en dernier)
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for ps in store.policy_sets:
        path = out / policy_file_name(ps.id)
        path.write_bytes(serialize_policy_set(ps))
        written.append(path)
    roots = out / ROOTS_FILE
    roots.write_text("".join(f"{r}\n" for r in store.roots), encoding="utf-8")
    written.append(roots)
    logger.info("Politiques écrites", extra={"directory": str(out), "files": len(written)})
    return written
