from typing import Optional

import uvicorn

from app.api.server import create_app
from app.utils.logging import get_logger, setup_logging
from app.utils.settings import ServiceConfig, get_settings

logger = get_logger(__name__)


def start(config: Optional[ServiceConfig] = None):
    """
    Point d'entrée du service de décision.
    """
    config = config or get_settings()
    setup_logging(config.log_level)
    host, port = config.host_port
    logger.info(
        "Démarrage du serveur",
        extra={
            "host": host,
            "port": port,
            "policy_dir": config.policy_dir,
            "actor_mode": config.actor_mode,
        },
    )
    uvicorn.run(create_app(config), host=host, port=port, log_level=config.log_level.lower())


if __name__ == "__main__":
    start()
