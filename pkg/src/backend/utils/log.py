"""
Logging setup shared by the CLI and the tests
"""

import coloredlogs

LOG_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s"


def setup_logging(level: str = "INFO") -> None:
    """Install coloured console logging on the root logger"""
    coloredlogs.install(level=level.upper(), fmt=LOG_FORMAT)
