import logging
import sys

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def add_console_logging(level: int = logging.INFO) -> logging.Logger:
    root = logging.getLogger()
    root.setLevel(level)

    # Idempotent
    for existing in root.handlers:
        if getattr(existing, "_lfdfnet_console", False):
            return root

    handler = logging.StreamHandler(sys.stdout)
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._lfdfnet_console = True
    root.addHandler(handler)
    return root
