"""
Schémas du modèle SRBAC paramétré: utilisateurs, rôles paramétrés,
services, privilèges et relations UA / PA.
"""
from typing import Dict, Iterable, Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field, field_validator

WILDCARD = "*"
NULL_ACTION = "null"


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ParamBinding(_Frozen):
    """Couple (nom de paramètre, valeur). La valeur "*" est un joker."""
    name: str
    value: str

    @property
    def is_wildcard(self) -> bool:
        return self.value == WILDCARD

    def encoded(self) -> str:
        """Forme "<nom>-<valeur>" utilisée dans les attributs RParams / AParams."""
        return f"{self.name}-{self.value}"


def _sorted_bindings(bindings: Iterable[ParamBinding]) -> Tuple[ParamBinding, ...]:
    return tuple(sorted(bindings, key=lambda b: (b.name, b.value)))


class RoleDecl(_Frozen):
    """Rôle (rname, rparamset) et ses juniors directs (RBAC1)."""
    name: str
    param_names: Tuple[str, ...] = ()
    juniors: Tuple[str, ...] = ()


class RoleInstance(_Frozen):
    """Rôle activé avec des valeurs concrètes, liaisons triées par nom."""
    role: str
    bindings: Tuple[ParamBinding, ...] = ()

    @field_validator("bindings")
    @classmethod
    def canonical_order(cls, value: Tuple[ParamBinding, ...]) -> Tuple[ParamBinding, ...]:
        return _sorted_bindings(value)

    @classmethod
    def of(cls, role: str, **bindings: str) -> "RoleInstance":
        """Raccourci: RoleInstance.of("student", studentid="02123781")."""
        return cls(role=role, bindings=tuple(ParamBinding(name=k, value=v) for k, v in bindings.items()))

    def binding_map(self) -> Dict[str, str]:
        return {b.name: b.value for b in self.bindings}

    def restricted_to(self, names: Iterable[str]) -> Tuple[ParamBinding, ...]:
        """Liaisons limitées aux paramètres donnés (instance d'un junior)."""
        keep = set(names)
        return tuple(b for b in self.bindings if b.name in keep)

    def __str__(self) -> str:
        inner = ",".join(f"{b.name}={b.value}" for b in self.bindings)
        return f"{self.role}[{inner}]"


class User(_Frozen):
    id: str
    attributes: Dict[str, str] = Field(default_factory=dict)


class Service(_Frozen):
    """Service SRBAC: remplace la notion d'objet."""
    id: str
    actions: Tuple[str, ...] = ()


class Privilege(_Frozen):
    """Privilège paramétré (service, action) + paramètres AParams."""
    service: str
    action: str
    aparams: Tuple[ParamBinding, ...] = ()

    @field_validator("aparams")
    @classmethod
    def canonical_order(cls, value: Tuple[ParamBinding, ...]) -> Tuple[ParamBinding, ...]:
        return _sorted_bindings(value)

    @property
    def is_null(self) -> bool:
        return self.action == NULL_ACTION

    def sort_key(self) -> tuple:
        return (self.service, self.action, tuple((b.name, b.value) for b in self.aparams))


class PrivAssignment(_Frozen):
    """Entrée PA: motif de paramètres de rôle (jokers permis) -> privilège."""
    role: str
    role_param_pattern: Tuple[ParamBinding, ...] = ()
    privilege: Privilege

    @field_validator("role_param_pattern")
    @classmethod
    def canonical_order(cls, value: Tuple[ParamBinding, ...]) -> Tuple[ParamBinding, ...]:
        return _sorted_bindings(value)

    def matches(self, instance: RoleInstance) -> bool:
        """Vrai si chaque liaison du motif est un joker ou égale à celle de l'instance."""
        values = instance.binding_map()
        return all(p.is_wildcard or values.get(p.name) == p.value for p in self.role_param_pattern)


class UserAssignment(_Frozen):
    user: str
    role_instance: RoleInstance


class ModelDocument(_Frozen):
    """Le monde SRBAC déclaratif."""
    users: Tuple[User, ...] = ()
    roles: Tuple[RoleDecl, ...] = ()
    services: Tuple[Service, ...] = ()
    ua: Tuple[UserAssignment, ...] = ()
    pa: Tuple[PrivAssignment, ...] = ()

    def role(self, name: str) -> Optional[RoleDecl]:
        return next((r for r in self.roles if r.name == name), None)

    def user(self, user_id: str) -> Optional[User]:
        return next((u for u in self.users if u.id == user_id), None)

    def service(self, service_id: str) -> Optional[Service]:
        return next((s for s in self.services if s.id == service_id), None)


class Violation(_Frozen):
    """Violation d'invariant: l'entité fautive et la règle enfreinte."""
    entity: str
    rule: str
    message: str = ""

    def __str__(self) -> str:
        return f"{self.rule}: {self.entity}" + (f" ({self.message})" if self.message else "")
