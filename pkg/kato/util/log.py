import logging
import os
import sys

_RESET = "\x1b[0m"
_LEVEL_COLOURS = {
    logging.DEBUG: "\x1b[38;20m",
    logging.INFO: "\033[92m",
    logging.WARNING: "\x1b[33;20m",
    logging.ERROR: "\x1b[31;20m",
    logging.CRITICAL: "\x1b[31;1m",
}


class LogFormatter(logging.Formatter):
    """`LEVEL: time: message`, coloured by level when stderr is a terminal."""

    def __init__(self, colour: bool | None = None) -> None:
        super().__init__("%(levelname)s: %(asctime)s: %(message)s")
        self.colour = colour

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        colour = sys.stderr.isatty() if self.colour is None else self.colour
        if not colour:
            return line
        return _LEVEL_COLOURS.get(record.levelno, "") + line + _RESET


class RunAdapter(logging.LoggerAdapter):
    """Prefixes every message with the viscosity of the run it belongs to."""

    def process(self, msg, kwargs):
        return f"[nu={self.extra['nu']:g}] {msg}", kwargs


def run_logger(nu: float) -> RunAdapter:
    return RunAdapter(LOG, {"nu": nu})


def configure_verbosity(verbose: bool) -> int:
    """
    Set the level of LOG from the LOGLEVEL environment variable or the verbose flag.

    Returns:
        int: The level that was applied.
    """
    env_log_level = os.getenv("LOGLEVEL", "").upper()
    level = logging.getLevelName(env_log_level) if env_log_level else None
    if not isinstance(level, int):
        # Fall back to command line flag
        level = logging.DEBUG if verbose else logging.INFO

    LOG.setLevel(level)
    return level


LOG = logging.Logger("kato_logger")
if __name__ == "kato.util.log":
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(LogFormatter())
    handler.setLevel(logging.DEBUG)
    LOG.addHandler(handler)
    LOG.setLevel(logging.INFO)
