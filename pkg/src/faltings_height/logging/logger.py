import logging
import logging.config
from pathlib import Path

from faltings_height.logging.ujson_file_handler import UJsonFileHandler

default_faltings_config = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "faltings_standard_color": {
            "()": "colorlog.ColoredFormatter",
            "format": "%(log_color)s%(asctime)s - %(name)s - %(levelname)s - %(reset)s %(white)s%(message)s",
        },
        "faltings_standard": {
            "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "faltings_standard_color",
        },
    },
    "root": {
        "handlers": ["console"],
        "level": "INFO",
    },
}

# overwriting defaults
colors = {"DEBUG": "cyan"}

logging.config.dictConfig(default_faltings_config)


# have this as a simple wrapper to ensure the updated config is used
def get_logger(
    name: str, add_console_handler: bool = False, colors: dict = colors
) -> logging.Logger:
    logger = logging.getLogger(name)
    root_logger = logging.getLogger()

    if add_console_handler:
        hdl = root_logger.handlers[0]
        hdl.formatter.log_colors.update(colors)
        if hdl not in logger.handlers:
            logger.addHandler(hdl)
        # do not propergate messages to root logger, the handler is attached
        logger.propagate = False

    return logger


def add_run_log(logger: logging.Logger, path: Path | str) -> UJsonFileHandler:
    """Attach a json-lines file handler, e.g. next to a run manifest"""
    hdl = UJsonFileHandler(str(path))
    hdl.setFormatter(
        logging.Formatter(
            default_faltings_config["formatters"]["faltings_standard"]["format"]
        )
    )
    logger.addHandler(hdl)
    return hdl


def remove_run_log(logger: logging.Logger, hdl: logging.Handler):
    logger.removeHandler(hdl)
    hdl.close()
