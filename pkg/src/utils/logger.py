import logging
import logging.config

import yaml

from src.config.settings import settings

_configured = False


def get_logger(name: str) -> logging.Logger:
    global _configured
    if not _configured:
        path = settings.logging_config
        if path.exists():
            with open(path, encoding="utf-8") as f:
                logging.config.dictConfig(yaml.safe_load(f))
        else:
            logging.basicConfig(level=logging.INFO)
        _configured = True
    return logging.getLogger(name)
