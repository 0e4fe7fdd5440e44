"""
Logs JSON structurés pour le moteur PRBAC.

Une ligne JSON par événement, sur stderr: stdout appartient aux sorties de la
CLI (XML de réponse, URIs de rôle, jetons).
"""
import json
import logging
import sys
from datetime import datetime, timezone
from typing import Any, Dict, Mapping, Optional, TextIO, Tuple

# Attributs propres à LogRecord: tout le reste vient de extra={...}
_RECORD_ATTRS = frozenset(vars(logging.LogRecord("", 0, "", 0, "", (), None))) | {"message", "asctime"}

# Champs jamais écrits en clair (secret des acteurs, MAC des jetons)
SENSITIVE_FIELDS = frozenset({"secret", "mac", "token"})
REDACTED = "***"

_QUIET_LOGGERS = ("uvicorn", "uvicorn.access", "fastapi")


def _event_fields(record: logging.LogRecord) -> Dict[str, Any]:
    fields: Dict[str, Any] = {}
    for key, value in record.__dict__.items():
        if key in _RECORD_ATTRS or key.startswith("_"):
            continue
        if key == "context" and isinstance(value, Mapping):
            fields.update(value)
        else:
            fields[key] = value
    return {k: (REDACTED if k in SENSITIVE_FIELDS else v) for k, v in fields.items()}


class JSONFormatter(logging.Formatter):
    """Formatteur JSON: horodatage UTC, niveau, emplacement et champs extra."""

    def format(self, record: logging.LogRecord) -> str:
        payload: Dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created, timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }
        payload.update(_event_fields(record))

        if record.exc_info and record.exc_info[0] is not None:
            error = record.exc_info[1]
            payload["exception"] = {"type": record.exc_info[0].__name__, "message": str(error)}
            code = getattr(error, "code", None)
            if isinstance(code, str):
                payload["exception"]["code"] = code

        return json.dumps(payload, default=str, ensure_ascii=False)


def setup_logging(log_level: str = "INFO", stream: Optional[TextIO] = None) -> None:
    """
    Installe un unique handler JSON sur le logger racine.

    Args:
        log_level: DEBUG, INFO, WARNING, ERROR ou CRITICAL
        stream: Flux de sortie (sys.stderr par défaut)
    """
    root = logging.getLogger()
    root.setLevel(getattr(logging, log_level.upper(), logging.INFO))
    for handler in root.handlers[:]:
        root.removeHandler(handler)

    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(JSONFormatter())
    root.addHandler(handler)

    for name in _QUIET_LOGGERS:
        logging.getLogger(name).setLevel(max(root.level, logging.WARNING))


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


class LoggerAdapter(logging.LoggerAdapter):
    """Ajoute un contexte fixe (ex: identifiant de snapshot) à chaque log."""

    def __init__(self, logger: logging.Logger, context: Optional[Dict[str, Any]] = None):
        super().__init__(logger, context or {})

    def process(self, msg: str, kwargs: Dict[str, Any]) -> Tuple[str, Dict[str, Any]]:
        extra = dict(kwargs.get("extra") or {})
        extra["context"] = {**self.extra, **extra.get("context", {})}
        kwargs["extra"] = extra
        return msg, kwargs


def get_contextualized_logger(name: str, **context: Any) -> LoggerAdapter:
    """Logger dont chaque événement porte les champs de `context`."""
    return LoggerAdapter(get_logger(name), context)
