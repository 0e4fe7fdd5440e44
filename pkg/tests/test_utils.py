import io
import json
import logging
import sys

import pytest
from pydantic import ValidationError

from app.utils.errors import PRBACError
from app.utils.logging import JSONFormatter, get_contextualized_logger, setup_logging
from app.utils.settings import ServiceConfig, get_settings


def test_settings_defaults(monkeypatch):
    for name in ("PRBAC_LISTEN", "PRBAC_POLICY_DIR", "PRBAC_ACTOR_MODE", "PRBAC_ACTOR_WINDOW_SECS"):
        monkeypatch.delenv(name, raising=False)
    config = ServiceConfig()
    assert config.host_port == ("127.0.0.1", 8080)
    assert config.actor_window_secs == 300
    assert config.actor_mode is False
    assert config.actor_secret_source == "PRBAC_ACTOR_SECRET"


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("PRBAC_LISTEN", "0.0.0.0:9090")
    monkeypatch.setenv("PRBAC_ACTOR_WINDOW_SECS", "60")
    monkeypatch.setenv("PRBAC_POLICY_DIR", "/srv/policies")
    config = get_settings()
    assert config.host_port == ("0.0.0.0", 9090)
    assert config.actor_window_secs == 60
    assert config.policy_dir == "/srv/policies"
    assert get_settings(policy_dir="other", listen_address=None).policy_dir == "other"


@pytest.mark.parametrize("overrides", [{"actor_window_secs": 0}, {"listen_address": "no-port"}])
def test_settings_validation(overrides):
    with pytest.raises(ValidationError):
        ServiceConfig(**overrides)


def test_startup_requires_secret_in_actor_mode(monkeypatch):
    monkeypatch.delenv("PRBAC_ACTOR_SECRET", raising=False)
    with pytest.raises(PRBACError) as exc:
        ServiceConfig(actor_mode=True).check_startup()
    assert exc.value.code == "no-secret"
    monkeypatch.setenv("PRBAC_ACTOR_SECRET", "key")
    ServiceConfig(actor_mode=True).check_startup()
    assert ServiceConfig().resolve_secret() == b"key"


def test_error_text():
    assert str(PRBACError("xml-syntax", "balise non fermée", line=3)) == "xml-syntax (ligne 3): balise non fermée"
    assert str(PRBACError("tampered")) == "tampered"


def test_json_log_lines():
    stream = io.StringIO()
    setup_logging("DEBUG", stream=stream)
    try:
        get_contextualized_logger("prbac.test", snapshot="abc").info("Décision", extra={"decision": "Permit"})
    finally:
        setup_logging("WARNING")
    record = json.loads(stream.getvalue().splitlines()[-1])
    assert record["message"] == "Décision"
    assert record["level"] == "INFO"
    assert record["decision"] == "Permit"
    assert record["snapshot"] == "abc"


def test_formatter_includes_exception():
    try:
        raise PRBACError("cycle")
    except PRBACError:
        record = logging.getLogger("prbac.test").makeRecord(
            "prbac.test", logging.ERROR, __file__, 1, "échec", (), exc_info=sys.exc_info()
        )
    payload = json.loads(JSONFormatter().format(record))
    assert payload["exception"] == {"type": "PRBACError", "message": "cycle", "code": "cycle"}


def test_sensitive_fields_redacted():
    stream = io.StringIO()
    setup_logging("INFO", stream=stream)
    try:
        logging.getLogger("prbac.test").info("Jeton émis", extra={"user": "u1", "mac": "ab" * 32})
    finally:
        setup_logging("WARNING")
    record = json.loads(stream.getvalue().splitlines()[-1])
    assert record["user"] == "u1"
    assert record["mac"] == "***"
