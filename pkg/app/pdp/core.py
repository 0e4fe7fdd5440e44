"""
Point de décision (PDP): correspondance des Targets, évaluation récursive
PolicySet / Policy / Rule, algorithmes de combinaison et résolution des
références avec protection contre les cycles.
"""
from types import MappingProxyType
from typing import Iterable, List, Mapping, NamedTuple, Optional, Sequence, Set, Tuple, Union

from app.policy.constants import (
    ACTION_ID,
    ACTIVATE_ROLE,
    ANY_URI_EQUAL,
    DENY_OVERRIDES,
    MATCH_FUNCTIONS,
    PERMIT_OVERRIDES,
    POLICY_COMBINING_ALGS,
    POLICY_PERMIT_OVERRIDES,
    RESOURCE_ID,
    RULE_COMBINING_ALGS,
    STATUS_OK,
    XSD_ANY_URI,
    XSD_STRING,
)
from app.policy.core import bag_lookup
from app.policy.schema import (
    Attribute,
    AttributeRef,
    Bag,
    Decision,
    MatchClause,
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

Node = Union[PolicySet, Policy, Rule, PolicySetIdReference, str]


class CombiningError(PRBACError):
    """Algorithme de combinaison non supporté."""


class StoreError(PRBACError):
    """Construction d'un PolicyStore incohérent (identifiant dupliqué, racine absente)."""


class Outcome(NamedTuple):
    decision: Decision
    status: str = STATUS_OK


NOT_APPLICABLE = Outcome(Decision.NOT_APPLICABLE)


class EvalTrace:
    """Chemin courant (ensemble visited) et étapes (nœud, décision) pour le diagnostic."""

    def __init__(self):
        self.visited: Set[str] = set()
        self.steps: List[Tuple[str, Decision]] = []

    def record(self, node_id: str, decision: Decision) -> None:
        self.steps.append((node_id, decision))


class PolicyStore:
    """
    Instantané immuable des PolicySets chargés, indexés par identifiant,
    avec la liste ordonnée des racines évaluées au premier niveau.
    """

    def __init__(
        self,
        policy_sets: Sequence[PolicySet],
        roots: Sequence[str],
        by_id: Mapping[str, PolicySet],
        policies: Mapping[str, Policy],
    ):
        self._policy_sets = tuple(policy_sets)
        self._roots = tuple(roots)
        self._by_id = MappingProxyType(dict(by_id))
        self._policies = MappingProxyType(dict(policies))

    @classmethod
    def build(cls, policy_sets: Iterable[PolicySet], roots: Iterable[str]) -> "PolicyStore":
        """
        Indexe les PolicySets (y compris imbriqués) et leurs Policies.

        Raises:
            StoreError: "duplicate-id" ou "unknown-root"
        """
        policy_sets = tuple(policy_sets)
        by_id: dict = {}
        policies: dict = {}

        def index(ps: PolicySet) -> None:
            if ps.id in by_id:
                raise StoreError("duplicate-id", ps.id)
            by_id[ps.id] = ps
            for child in ps.children:
                if isinstance(child, PolicySet):
                    index(child)
                elif isinstance(child, Policy):
                    if child.id in policies:
                        raise StoreError("duplicate-id", child.id)
                    policies[child.id] = child

        for ps in policy_sets:
            index(ps)
        roots = tuple(roots)
        for root in roots:
            if root not in by_id:
                raise StoreError("unknown-root", root)
        return cls(policy_sets, roots, by_id, policies)

    @classmethod
    def empty(cls) -> "PolicyStore":
        return cls((), (), {}, {})

    @property
    def policy_sets(self) -> Tuple[PolicySet, ...]:
        """PolicySets de premier niveau, dans l'ordre de chargement."""
        return self._policy_sets

    @property
    def roots(self) -> Tuple[str, ...]:
        return self._roots

    @property
    def by_id(self) -> Mapping[str, PolicySet]:
        return self._by_id

    @property
    def policies(self) -> Mapping[str, Policy]:
        return self._policies

    def __len__(self) -> int:
        return len(self._policy_sets)


# ---------------------------------------------------------------------------
# Correspondance
# ---------------------------------------------------------------------------

def match_applies(clause: MatchClause, bag: Bag) -> bool:
    """
    Vrai si au moins une valeur du sac pour le designator égale le littéral.
    Les deux fonctions sont une égalité exacte de chaînes; anyURI-equal exige
    en plus le type #anyURI des deux côtés.
    """
    if clause.function == ANY_URI_EQUAL and clause.designator.data_type != XSD_ANY_URI:
        return False
    if MATCH_FUNCTIONS.get(clause.function) != clause.designator.data_type:
        return False
    return clause.literal in bag_lookup(bag, clause.designator)


def _section_applies(groups, bag: Bag) -> bool:
    if not groups:
        return True
    return any(all(match_applies(c, bag) for c in group) for group in groups)


def target_applies(t: Optional[Target], req: RequestCtx) -> bool:
    """Match ssi chaque section non vide a un groupe dont toutes les clauses sont vraies."""
    if t is None:
        return True
    return (
        _section_applies(t.subjects, req.subject_attrs)
        and _section_applies(t.resources, req.resource_attrs)
        and _section_applies(t.actions, req.action_attrs)
    )


# ---------------------------------------------------------------------------
# Combinaison
# ---------------------------------------------------------------------------

def _algorithm(alg: str) -> str:
    short = POLICY_COMBINING_ALGS.get(alg) or RULE_COMBINING_ALGS.get(alg)
    if short is None:
        raise CombiningError("unsupported-combining", alg)
    return short


def combine(alg: str, decisions: Sequence[Decision]) -> Decision:
    """
    Réduit une liste ordonnée de décisions selon l'algorithme (URI complet,
    famille policy- ou rule-combining).

    Raises:
        CombiningError: "unsupported-combining"
    """
    short = _algorithm(alg)
    if short == PERMIT_OVERRIDES:
        for winner in (Decision.PERMIT, Decision.DENY, Decision.INDETERMINATE):
            if winner in decisions:
                return winner
        return Decision.NOT_APPLICABLE
    if short == DENY_OVERRIDES:
        if Decision.DENY in decisions or Decision.INDETERMINATE in decisions:
            return Decision.DENY
        if Decision.PERMIT in decisions:
            return Decision.PERMIT
        return Decision.NOT_APPLICABLE
    # first-applicable: première décision applicable
    for decision in decisions:
        if decision is not Decision.NOT_APPLICABLE:
            return decision
    return Decision.NOT_APPLICABLE


def _combine_outcomes(alg: str, outcomes: Sequence[Outcome]) -> Outcome:
    try:
        decision = combine(alg, [o.decision for o in outcomes])
    except CombiningError:
        return Outcome(Decision.INDETERMINATE, "unsupported-combining")
    if decision is Decision.INDETERMINATE:
        cause = next(o.status for o in outcomes if o.decision is Decision.INDETERMINATE)
        return Outcome(decision, cause)
    return Outcome(decision)


# ---------------------------------------------------------------------------
# Évaluation
# ---------------------------------------------------------------------------

_EXHAUSTED = object()


class _Frame:
    """Nœud composite (Policy ou PolicySet) en cours d'évaluation."""

    __slots__ = ("node", "pending", "outcomes")

    def __init__(self, node: Union[Policy, PolicySet], children: Sequence):
        self.node = node
        self.pending = iter(children)
        self.outcomes: List[Outcome] = []


def _open(store: PolicyStore, node: Node, req: RequestCtx, trace: EvalTrace, stack: List[_Frame]) -> Optional[Outcome]:
    """Décide un nœud terminal, ou empile une frame pour un nœud composite (retourne None)."""
    if isinstance(node, (str, PolicySetIdReference)):
        ref = node if isinstance(node, str) else node.ref
        resolved = store.by_id.get(ref)
        if resolved is None:
            outcome = Outcome(Decision.INDETERMINATE, "dangling-ref")
            trace.record(ref, outcome.decision)
            return outcome
        node = resolved

    if isinstance(node, Rule):
        outcome = Outcome(Decision(node.effect.value)) if target_applies(node.target, req) else NOT_APPLICABLE
        trace.record(node.id, outcome.decision)
        return outcome

    if not target_applies(node.target, req):
        trace.record(node.id, Decision.NOT_APPLICABLE)
        return NOT_APPLICABLE

    if isinstance(node, Policy):
        stack.append(_Frame(node, node.rules))
        return None

    if node.id in trace.visited:
        outcome = Outcome(Decision.INDETERMINATE, "cycle")
        trace.record(node.id, outcome.decision)
        return outcome
    trace.visited.add(node.id)
    stack.append(_Frame(node, node.children))
    return None


def _close(frame: _Frame, trace: EvalTrace) -> Outcome:
    node = frame.node
    outcome = _combine_outcomes(node.combining, frame.outcomes)
    if isinstance(node, PolicySet):
        trace.visited.discard(node.id)
    trace.record(node.id, outcome.decision)
    return outcome


def _evaluate(store: PolicyStore, node: Node, req: RequestCtx, trace: EvalTrace) -> Outcome:
    # Pile explicite: la profondeur des chaînes de références n'est bornée que par le store
    stack: List[_Frame] = []
    outcome = _open(store, node, req, trace, stack)
    while stack:
        frame = stack[-1]
        if outcome is not None:
            frame.outcomes.append(outcome)
        child = next(frame.pending, _EXHAUSTED)
        if child is _EXHAUSTED:
            stack.pop()
            outcome = _close(frame, trace)
        else:
            outcome = _open(store, child, req, trace, stack)
    return outcome


def evaluate_node(store: PolicyStore, node: Node, req: RequestCtx, trace: Optional[EvalTrace] = None) -> Outcome:
    """
    Évalue un nœud (PolicySet, Policy, Rule ou référence) contre la requête.
    Les erreurs ne remontent jamais: elles deviennent Indeterminate avec un
    statut ("cycle", "dangling-ref").

    Returns:
        Outcome (décision, statut)
    """
    return _evaluate(store, node, req, trace if trace is not None else EvalTrace())


def decide(store: PolicyStore, req: RequestCtx, trace: Optional[EvalTrace] = None) -> ResponseCtx:
    """
    Évalue toutes les racines dans l'ordre et les combine en permit-overrides.
    Le statut porte la première cause d'Indeterminate le cas échéant.
    """
    trace = trace if trace is not None else EvalTrace()
    outcomes = [_evaluate(store, root, req, trace) for root in store.roots]
    outcome = _combine_outcomes(POLICY_PERMIT_OVERRIDES, outcomes)
    logger.debug("Décision rendue", extra={"decision": outcome.decision.value, "status": outcome.status})
    return ResponseCtx(decision=outcome.decision, status=outcome.status)


def _granted_role_uri(ps: PolicySet) -> Optional[str]:
    for group in ps.target.resources:
        for clause in group:
            if clause.designator.attribute_id == RESOURCE_ID and clause.designator.data_type == XSD_ANY_URI:
                return clause.literal
    return None


def enabled_roles_query(store: PolicyStore, subject_attrs: Bag, ras_prefix: str = "RAS:") -> List[str]:
    """
    URIs de rôle que le sujet peut activer: chaque PolicySet d'attribution
    (préfixe RAS) est évalué contre une requête synthétique "activate-role".

    Returns:
        URIs triées par identifiant de PolicySet
    """
    action = (Attribute(ref=AttributeRef(attribute_id=ACTION_ID, data_type=XSD_STRING), value=ACTIVATE_ROLE),)
    granted = []
    for ps_id in sorted(i for i in store.by_id if i.startswith(ras_prefix)):
        ps = store.by_id[ps_id]
        role_uri = _granted_role_uri(ps)
        if role_uri is None:
            continue
        req = RequestCtx(
            subject_attrs=tuple(subject_attrs),
            resource_attrs=(Attribute(ref=AttributeRef(attribute_id=RESOURCE_ID, data_type=XSD_ANY_URI), value=role_uri),),
            action_attrs=action,
        )
        if evaluate_node(store, ps, req).decision is Decision.PERMIT:
            granted.append(role_uri)
    return granted
