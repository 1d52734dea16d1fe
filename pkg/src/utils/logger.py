import logging
import sys
from typing import Optional


class Logger:
    """Centralized logging configuration for the ensemble samplers"""

    _logger: Optional[logging.Logger] = None

    @classmethod
    def get_logger(cls, name: str = "ensemble_logreg") -> logging.Logger:
        """Get configured logger instance"""
        if cls._logger is None:
            cls._logger = cls._setup_logger(name)
        return cls._logger

    @classmethod
    def _setup_logger(cls, name: str) -> logging.Logger:
        """Set up logger with appropriate configuration"""
        logger = logging.getLogger(name)
        logger.setLevel(logging.INFO)

        # Avoid duplicate handlers
        if logger.handlers:
            return logger

        # stderr only; stdout carries the summary table
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(logging.INFO)

        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        return logger

    @classmethod
    def set_level(cls, level_name: str) -> None:
        """Set the level from a name such as 'WARNING'"""
        level = logging.getLevelName(level_name.upper())
        if not isinstance(level, int):
            raise ValueError(f"Unknown log level: {level_name}")
        logger = cls.get_logger()
        logger.setLevel(level)
        for handler in logger.handlers:
            handler.setLevel(level)

    @classmethod
    def set_debug_mode(cls, debug: bool = True) -> None:
        """Enable or disable debug mode"""
        cls.set_level('DEBUG' if debug else 'INFO')
