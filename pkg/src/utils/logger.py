"""
Logging utilities for the switch fabric
"""

import logging

LOG_FORMAT = '%(asctime)s: %(levelname)s: %(message)s'


def configure_logging(level='INFO'):
    """
    Configure root logging once for CLI runs

    Args:
        level: Level name ('DEBUG', 'INFO', ...) or logging constant
    """
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.INFO)
    logging.basicConfig(level=level, format=LOG_FORMAT)


class SwitchLogger:
    """
    Component logger with consistent console formatting

    Wraps a standard `logging.Logger`, so handlers, levels and test capture
    (caplog) behave as usual.
    """

    def __init__(self, name, prefix=''):
        self.logger = logging.getLogger(name)
        self.prefix = prefix

    def debug(self, message):
        """Log dataplane-level detail"""
        self.logger.debug(f'{self.prefix}{message}')

    def info(self, message):
        """Log informational message"""
        self.logger.info(f'{self.prefix}{message}')

    def success(self, message):
        """Log success message"""
        self.logger.info(f'{self.prefix}✅ {message}')

    def warning(self, message):
        """Log warning message"""
        self.logger.warning(f'{self.prefix}⚠️ {message}')

    def error(self, message):
        """Log error message"""
        self.logger.error(f'{self.prefix}❌ {message}')

    def progress(self, current, total, message=''):
        """Log progress update"""
        self.logger.info(f'{self.prefix}[{current}/{total}] {message}')

    def separator(self, char='-', length=50):
        """Log separator line"""
        self.logger.info(char * length)
