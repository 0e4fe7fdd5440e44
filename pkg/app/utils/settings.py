import os
import logging
from typing import Tuple
from pydantic import AliasChoices, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict
from dotenv import load_dotenv

from app.utils.errors import PRBACError

# Configuration basique du logging pour les messages de démarrage
logger = logging.getLogger("settings")

DEFAULT_SECRET_ENV = "PRBAC_ACTOR_SECRET"


class ServiceConfig(BaseSettings):
    """Configuration du service de décision (PDP/PAP)."""
    listen_address: str = Field(
        "127.0.0.1:8080",
        validation_alias=AliasChoices("listen_address", "PRBAC_LISTEN"),
    )
    policy_dir: str = "policies"
    actor_secret_source: str = DEFAULT_SECRET_ENV
    actor_window_secs: int = 300
    actor_mode: bool = False
    log_level: str = "INFO"

    model_config = SettingsConfigDict(
        env_prefix="PRBAC_",
        env_file=".env",
        populate_by_name=True,
        extra="ignore",
    )

    @field_validator("actor_window_secs")
    @classmethod
    def check_window(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("actor_window_secs doit être strictement positif")
        return value

    @field_validator("listen_address")
    @classmethod
    def check_listen_address(cls, value: str) -> str:
        host, sep, port = value.rpartition(":")
        if not sep or not host or not port.isdigit():
            raise ValueError(f"Adresse d'écoute invalide (host:port attendu): {value}")
        return value

    @property
    def host_port(self) -> Tuple[str, int]:
        """Découpe listen_address en (host, port)."""
        host, _, port = self.listen_address.rpartition(":")
        return host, int(port)

    def resolve_secret(self) -> bytes:
        """
        Lit le secret des acteurs depuis la variable d'environnement configurée.
        Le secret n'est jamais lu depuis un fichier de configuration.

        Returns:
            Le secret en octets (vide s'il n'est pas défini)
        """
        return os.environ.get(self.actor_secret_source, "").encode("utf-8")

    def check_startup(self) -> None:
        """
        Vérifie la configuration au démarrage.

        Raises:
            PRBACError: "no-secret" si le mode acteur est actif sans secret
        """
        if self.actor_mode and not self.resolve_secret():
            raise PRBACError("no-secret", f"{self.actor_secret_source} est vide alors que actor_mode=on")
        logger.info(
            "Configuration du service chargée",
            extra={
                "listen_address": self.listen_address,
                "policy_dir": self.policy_dir,
                "actor_mode": self.actor_mode,
                "actor_window_secs": self.actor_window_secs,
            },
        )


def get_settings(**overrides) -> ServiceConfig:
    """Retourne la configuration en se basant sur .env, les variables système et les surcharges."""
    load_dotenv()
    return ServiceConfig(**{k: v for k, v in overrides.items() if v is not None})
