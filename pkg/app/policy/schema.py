"""
Représentation en mémoire du sous-ensemble XACML 1.x: PolicySet, Policy,
Rule, Target, Match, ainsi que les contextes de requête et de réponse.
Tous les objets sont immuables après construction.
"""
from enum import Enum
from typing import Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, model_validator

from app.policy.constants import STATUS_OK, XSD_STRING


class Decision(str, Enum):
    PERMIT = "Permit"
    DENY = "Deny"
    NOT_APPLICABLE = "NotApplicable"
    INDETERMINATE = "Indeterminate"


class Effect(str, Enum):
    PERMIT = "Permit"
    DENY = "Deny"


# Statuts d'erreur: une réponse qui les porte est forcément Indeterminate
ERROR_STATUSES = frozenset({
    "cycle", "dangling-ref", "unsupported-combining",
    "tampered", "expired", "future", "malformed-token",
})


class _Node(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class AttributeRef(_Node):
    attribute_id: str
    data_type: str = XSD_STRING


class MatchClause(_Node):
    function: str
    literal: str
    designator: AttributeRef


# Disjonction de groupes conjonctifs
MatchGroups = Tuple[Tuple[MatchClause, ...], ...]


class Target(_Node):
    """Une section vide s'applique à tout."""
    subjects: MatchGroups = ()
    resources: MatchGroups = ()
    actions: MatchGroups = ()

    @property
    def is_empty(self) -> bool:
        return not (self.subjects or self.resources or self.actions)

    def clauses(self):
        for section in (self.subjects, self.resources, self.actions):
            for group in section:
                yield from group


class Rule(_Node):
    id: str
    effect: Effect
    target: Optional[Target] = None


class Policy(_Node):
    id: str
    combining: str
    target: Target = Target()
    rules: Tuple[Rule, ...] = ()


class PolicySetIdReference(_Node):
    ref: str


class PolicySet(_Node):
    id: str
    combining: str
    target: Target = Target()
    children: Tuple[Union["PolicySet", Policy, PolicySetIdReference], ...] = ()

    def references(self) -> Tuple[str, ...]:
        return tuple(c.ref for c in self.children if isinstance(c, PolicySetIdReference))


PolicySet.model_rebuild()


class Attribute(_Node):
    ref: AttributeRef
    value: str


Bag = Tuple[Attribute, ...]


class RequestCtx(_Node):
    subject_attrs: Bag = ()
    resource_attrs: Bag = ()
    action_attrs: Bag = ()


class ResponseCtx(_Node):
    """Décision + statut. Un statut d'erreur implique Indeterminate et réciproquement."""
    decision: Decision
    status: str = STATUS_OK

    @model_validator(mode="after")
    def check_status(self) -> "ResponseCtx":
        if self.decision is Decision.INDETERMINATE and self.status == STATUS_OK:
            raise ValueError("une réponse Indeterminate doit porter un code d'erreur")
        if self.status in ERROR_STATUSES and self.decision is not Decision.INDETERMINATE:
            raise ValueError(f"le statut {self.status} impose Indeterminate")
        return self
