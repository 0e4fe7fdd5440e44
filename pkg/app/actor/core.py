"""
Protocole Actor en deux requêtes.

Phase 1: le PDP autorise l'activation du rôle (PolicySets RAS), un jeton
HMAC-SHA-256 lié à (utilisateur, rôle, instant, contraintes) est émis.
Phase 2: le jeton accompagne la requête d'accès; il est vérifié avant
l'évaluation par le PDP.
"""
import hashlib
import hmac
from typing import Iterable, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.compiler.core import DEFAULT_SCHEME, NamingScheme, build_access_request, build_activation_request, role_value_uri
from app.pdp.core import PolicyStore, decide
from app.policy.schema import Decision, ResponseCtx
from app.rbac.schema import ParamBinding, RoleInstance
from app.utils.errors import PRBACError
from app.utils.logging import get_logger

logger = get_logger(__name__)

SEPARATOR = "|"
MAC_HEX_LENGTH = hashlib.sha256().digest_size * 2
ACTIVATION_DENIED = "activation-denied"


class ActorError(PRBACError):
    """Échec d'émission ou de vérification d'un jeton Actor."""


class ActorToken(BaseModel):
    user: str
    role_uri: str
    time: int = Field(ge=0)
    constraints: str = ""
    mac: str = Field(pattern=r"^[0-9a-f]{64}$")

    model_config = ConfigDict(frozen=True)

    def message(self) -> bytes:
        return canonical_message(self.user, self.role_uri, self.time, self.constraints)


def canonical_message(user: str, role_uri: str, time: int, constraints: str) -> bytes:
    for value in (user, role_uri, constraints):
        if SEPARATOR in value or "\n" in value or "\r" in value:
            raise ActorError("field-separator", value)
    return SEPARATOR.join((user, role_uri, str(time), constraints)).encode("utf-8")


def _mac(secret: bytes, message: bytes) -> str:
    return hmac.new(secret, message, hashlib.sha256).hexdigest()


def issue_token(secret: bytes, user: str, role_uri: str, time: int, constraints: str = "") -> ActorToken:
    """
    Émet un jeton signé.

    Raises:
        ActorError: "no-secret" si le secret est vide, "field-separator" si un champ contient "|"
    """
    if not secret:
        raise ActorError("no-secret")
    message = canonical_message(user, role_uri, time, constraints)
    return ActorToken(user=user, role_uri=role_uri, time=time, constraints=constraints, mac=_mac(secret, message))


def verify_token(secret: bytes, token: ActorToken, now: int, window_secs: int) -> None:
    """
    Vérifie le MAC (comparaison à temps constant) puis la fenêtre de validité.

    Raises:
        ValueError: si window_secs <= 0
        ActorError: "tampered", "future" ou "expired"
    """
    if window_secs <= 0:
        raise ValueError("window_secs doit être strictement positif")
    if not secret:
        raise ActorError("no-secret")
    expected = _mac(secret, token.message())
    if not hmac.compare_digest(expected, token.mac):
        raise ActorError("tampered", f"user={token.user}")
    if token.time > now:
        raise ActorError("future", f"time={token.time} now={now}")
    if now - token.time > window_secs:
        raise ActorError("expired", f"age={now - token.time}s window={window_secs}s")


def format_token(token: ActorToken) -> str:
    """Forme filaire: "user|role_uri|time|constraints|mac"."""
    return SEPARATOR.join((token.user, token.role_uri, str(token.time), token.constraints, token.mac))


def parse_token(line: str) -> ActorToken:
    """
    Raises:
        ActorError: "malformed-token"
    """
    parts = line.strip("\r\n").split(SEPARATOR)
    if len(parts) != 5:
        raise ActorError("malformed-token", f"{len(parts)} champs")
    user, role_uri, time, constraints, mac = parts
    if not time.isdigit():
        raise ActorError("malformed-token", "instant non numérique")
    try:
        return ActorToken(user=user, role_uri=role_uri, time=int(time), constraints=constraints, mac=mac)
    except ValueError as e:
        raise ActorError("malformed-token", str(e).splitlines()[0])


def activate(
    store: PolicyStore,
    secret: bytes,
    user: str,
    role_uri: str,
    now: int,
    constraints: str = "",
) -> ActorToken:
    """
    Phase 1: demande d'activation au PDP puis émission du jeton.

    Raises:
        ActorError: "activation-denied" si la décision n'est pas Permit
    """
    response = decide(store, build_activation_request(user, role_uri))
    if response.decision is not Decision.PERMIT:
        logger.info("Activation refusée", extra={"user": user, "role_uri": role_uri, "decision": response.decision.value})
        raise ActorError(ACTIVATION_DENIED, f"{user} -> {role_uri}")
    token = issue_token(secret, user, role_uri, now, constraints)
    logger.info("Rôle activé", extra={"user": user, "role_uri": role_uri})
    return token


def two_phase_decide(
    store: PolicyStore,
    secret: bytes,
    user: str,
    ri: RoleInstance,
    service: str,
    action: str,
    aparams: Iterable[ParamBinding],
    now: int,
    window_secs: int,
    constraints: str = "",
    scheme: NamingScheme = DEFAULT_SCHEME,
    token_time: Optional[int] = None,
) -> ResponseCtx:
    """
    Enchaîne les deux phases. Le jeton est émis à token_time (par défaut now)
    et vérifié à now, ce qui permet de rejouer un jeton vieilli.
    """
    role_uri = role_value_uri(ri, scheme)
    try:
        token = activate(store, secret, user, role_uri, now if token_time is None else token_time, constraints)
    except ActorError as e:
        if e.code != ACTIVATION_DENIED:
            raise
        return ResponseCtx(decision=Decision.NOT_APPLICABLE, status=ACTIVATION_DENIED)

    try:
        verify_token(secret, token, now, window_secs)
    except ActorError as e:
        logger.warning("Jeton Actor rejeté", extra={"user": user, "role_uri": role_uri, "code": e.code})
        return ResponseCtx(decision=Decision.INDETERMINATE, status=e.code)

    return decide(store, build_access_request(ri, service, action, aparams, user=user, scheme=scheme))
