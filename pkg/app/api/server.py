import time
from typing import Callable, Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import PlainTextResponse, Response
from starlette.concurrency import run_in_threadpool

from app.actor.core import ACTIVATION_DENIED, ActorError, activate, format_token
from app.api.auth import check_actor_token, split_actor_body
from app.compiler.core import DEFAULT_SCHEME, parse_role_value_uri
from app.pap.core import PolicyAdministrationPoint, PolicyLoadError
from app.pdp.core import decide, enabled_roles_query
from app.policy.schema import RequestCtx
from app.policy.xml_io import PolicyParseError, parse_request, serialize_response
from app.utils.errors import PRBACError
from app.utils.logging import get_contextualized_logger, get_logger
from app.utils.settings import ServiceConfig

logger = get_logger(__name__)

XML_MEDIA_TYPE = "application/xml"


def _now() -> int:
    return int(time.time())


def _parse_body(body: bytes) -> RequestCtx:
    try:
        return parse_request(body)
    except PolicyParseError as e:
        logger.warning("Requête XML refusée", extra={"code": e.code, "xml_line": e.line})
        raise HTTPException(status_code=400, detail=str(e))


def create_app(
    config: ServiceConfig,
    pap: Optional[PolicyAdministrationPoint] = None,
    clock: Callable[[], int] = _now,
) -> FastAPI:
    """
    Construit l'application FastAPI du service de décision.

    Args:
        config: Configuration du service
        pap: Point d'administration (par défaut chargé depuis config.policy_dir)
        clock: Horloge en secondes Unix, utilisée par le protocole Actor

    Raises:
        PRBACError: "no-secret" si actor_mode est actif sans secret
    """
    config.check_startup()
    secret = config.resolve_secret() if config.actor_mode else b""
    if pap is None:
        pap = PolicyAdministrationPoint(config.policy_dir)
        pap.reload()

    app = FastAPI(
        title="PRBAC Decision Service",
        description="PDP XACML pour rôles paramétrés (SRBAC)",
        version="0.1.0",
    )
    app.state.pap = pap

    @app.exception_handler(HTTPException)
    async def plain_text_errors(request: Request, exc: HTTPException):
        return PlainTextResponse(str(exc.detail), status_code=exc.status_code)

    def require_actor_mode() -> None:
        if not config.actor_mode:
            raise HTTPException(status_code=404, detail="actor mode disabled")

    @app.get("/v1/health", response_class=PlainTextResponse)
    async def health():
        return "ok"

    @app.post("/v1/evaluate")
    async def evaluate(request: Request):
        """Évalue un contexte Request XML; la décision est toujours renvoyée en 200."""
        snapshot_id, store = pap.snapshot()
        req = _parse_body(await request.body())
        response = await run_in_threadpool(decide, store, req)
        get_contextualized_logger(__name__, snapshot=snapshot_id).debug(
            "Requête évaluée", extra={"decision": response.decision.value, "status": response.status}
        )
        return Response(content=serialize_response(response), media_type=XML_MEDIA_TYPE)

    @app.post("/v1/roles", response_class=PlainTextResponse)
    async def roles(request: Request):
        """URIs de rôle activables par le sujet de la requête, une par ligne."""
        _, store = pap.snapshot()
        req = _parse_body(await request.body())
        granted = await run_in_threadpool(
            enabled_roles_query, store, req.subject_attrs, ras_prefix=f"{DEFAULT_SCHEME.ras_prefix}:"
        )
        return "\n".join(granted)

    @app.post("/v1/actor/activate", response_class=PlainTextResponse)
    async def actor_activate(request: Request):
        """Phase 1: corps "user|role_uri", renvoie la ligne du jeton."""
        require_actor_mode()
        _, store = pap.snapshot()
        line = (await request.body()).decode("utf-8", errors="replace").strip()
        user, sep, role_uri = line.partition("|")
        if not sep or not user or not role_uri:
            raise HTTPException(status_code=400, detail="user|role_uri attendu")
        try:
            ri = parse_role_value_uri(role_uri, DEFAULT_SCHEME)
        except ValueError:
            raise HTTPException(status_code=400, detail="bad-role-uri")
        except PRBACError as e:
            raise HTTPException(status_code=400, detail=e.code)
        logger.debug("Demande d'activation", extra={"user": user, "role": str(ri)})
        try:
            token = await run_in_threadpool(activate, store, secret, user, role_uri, clock())
        except ActorError as e:
            if e.code == ACTIVATION_DENIED:
                raise HTTPException(status_code=403, detail=ACTIVATION_DENIED)
            raise HTTPException(status_code=400, detail=e.code)
        return format_token(token) + "\n"

    @app.post("/v1/actor/evaluate")
    async def actor_evaluate(request: Request):
        """Phase 2: ligne du jeton, ligne vide, Request XML."""
        require_actor_mode()
        _, store = pap.snapshot()
        token, xml = split_actor_body(await request.body())
        req = _parse_body(xml)
        check_actor_token(secret, token, req, clock(), config.actor_window_secs)
        response = await run_in_threadpool(decide, store, req)
        return Response(content=serialize_response(response), media_type=XML_MEDIA_TYPE)

    @app.put("/v1/policies", response_class=PlainTextResponse)
    async def reload_policies():
        """Relit policy_dir et remplace l'instantané; 409 si le chargement échoue."""
        try:
            previous = await run_in_threadpool(pap.reload)
        except PolicyLoadError as e:
            raise HTTPException(status_code=409, detail="\n".join(e.diagnostics))
        snapshot_id, _ = pap.snapshot()
        logger.info("Politiques rechargées", extra={"previous": previous, "current": snapshot_id})
        return f"{snapshot_id}\n"

    logger.info("Application créée", extra={"policy_dir": config.policy_dir, "actor_mode": config.actor_mode})
    return app
