import json
import logging
import sys

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(message)s"
DIAGNOSTICS_LOGGER = "tabgraph.diagnostics"


class JsonLinesFormatter(logging.Formatter):
    """One JSON object per record; no timestamps so reruns stay identical."""

    def format(self, record):
        payload = {"level": record.levelname.lower(), "event": record.getMessage()}
        payload.update(getattr(record, "fields", {}))
        return json.dumps(payload, sort_keys=True, default=str)


def configure_logging(level="WARNING"):
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)
    diagnostics_logger()


def diagnostics_logger():
    logger = logging.getLogger(DIAGNOSTICS_LOGGER)
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(JsonLinesFormatter())
        logger.addHandler(handler)
        logger.propagate = False
        logger.setLevel(logging.INFO)
    return logger


def attach_file(path):
    """Mirror the diagnostics stream into a JSON-lines file; returns the handler."""
    handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    handler.setFormatter(JsonLinesFormatter())
    diagnostics_logger().addHandler(handler)
    return handler


def detach(handler):
    diagnostics_logger().removeHandler(handler)
    handler.close()


def warn(event, **fields):
    """Emit a warning record on the diagnostics stream and return it."""
    logging.warning(f"{event}: {fields}")
    diagnostics_logger().warning(event, extra={"fields": fields})
    return {"level": "warning", "event": event, **fields}
