from typing import Tuple

from fastapi import HTTPException, status

from app.actor.core import ActorError, ActorToken, parse_token, verify_token
from app.policy.constants import SUBJECT_ROLE, XSD_ANY_URI
from app.policy.core import bag_lookup
from app.policy.schema import AttributeRef, RequestCtx
from app.utils.logging import get_logger

logger = get_logger(__name__)

_ROLE_REF = AttributeRef(attribute_id=SUBJECT_ROLE, data_type=XSD_ANY_URI)


def split_actor_body(body: bytes) -> Tuple[ActorToken, bytes]:
    """
    Sépare le corps de /v1/actor/evaluate: ligne du jeton, ligne vide, Request XML.

    Raises:
        HTTPException: 401 "malformed-token"
    """
    text = body.decode("utf-8", errors="replace").replace("\r\n", "\n")
    token_line, sep, xml = text.partition("\n\n")
    if not sep:
        logger.warning("Corps Actor sans séparateur")
        raise HTTPException(status_code=status.HTTP_401_UNAUTHORIZED, detail="malformed-token")
    try:
        token = parse_token(token_line)
    except ActorError as e:
        logger.warning("Jeton Actor illisible", extra={"code": e.code})
        raise HTTPException(status_code=status.HTTP_401_UNAUTHORIZED, detail=e.code)
    return token, xml.encode("utf-8")


def check_actor_token(secret: bytes, token: ActorToken, request: RequestCtx, now: int, window_secs: int) -> None:
    """
    Vérifie le jeton puis sa cohérence avec le rôle porté par la requête.

    Raises:
        HTTPException: 401 avec le code de vérification ou "role-mismatch"
    """
    try:
        verify_token(secret, token, now, window_secs)
    except ActorError as e:
        logger.warning("Jeton Actor rejeté", extra={"user": token.user, "role_uri": token.role_uri, "code": e.code})
        raise HTTPException(status_code=status.HTTP_401_UNAUTHORIZED, detail=e.code)

    roles = set(bag_lookup(request.subject_attrs, _ROLE_REF))
    if roles != {token.role_uri}:
        logger.warning("Rôle de la requête différent du jeton", extra={"user": token.user, "role_uri": token.role_uri})
        raise HTTPException(status_code=status.HTTP_401_UNAUTHORIZED, detail="role-mismatch")

    logger.debug("Jeton Actor accepté", extra={"user": token.user, "role_uri": token.role_uri})
