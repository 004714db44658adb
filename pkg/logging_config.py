import logging
import logging.config
from pathlib import Path

LOG_FORMAT = "[%(asctime)s]-[%(name)s]-[%(levelname)s]: %(message)s"


def setup_logging(log_path: str | Path | None = None, verbose: bool = False):
    """Configure root logger: console always, file when log_path is given"""

    handlers = {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "standard",
            "level": "DEBUG" if verbose else "INFO",
        },
    }

    if log_path is not None:
        log_path = Path(log_path)
        log_path.parent.mkdir(exist_ok=True, parents=True)
        handlers["file"] = {
            "class": "logging.FileHandler",
            "filename": str(log_path),
            "formatter": "standard",
            "level": "DEBUG",
        }

    logging_config = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "standard": {"format": LOG_FORMAT},
        },
        "handlers": handlers,
        "root": {
            "handlers": list(handlers),
            "level": "DEBUG",
        },
    }
    logging.config.dictConfig(logging_config)
