#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Sistema de Logging
Configuração centralizada de logging
"""

import logging
import logging.handlers
from pathlib import Path
from typing import Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(
    level: str = 'INFO',
    log_file: Optional[str] = 'logs/dsgf.log',
    max_size: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 5
) -> logging.Logger:
    """Configura o sistema de logging"""

    formatter = logging.Formatter(LOG_FORMAT)

    # Logger principal
    logger = logging.getLogger('dsgf')
    logger.setLevel(getattr(logging, level.upper()))

    # Remover handlers existentes
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)
        handler.close()

    # Handler para arquivo com rotação
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            log_path,
            maxBytes=max_size,
            backupCount=backup_count,
            encoding='utf-8'
        )
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    # Handler para console
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    return logger


def get_logger(name: str) -> logging.Logger:
    """Obtém um logger específico"""
    return logging.getLogger(f'dsgf.{name}')


def get_data_logger() -> logging.Logger:
    """Logger para esquemas e corpora"""
    return get_logger('data')


def get_ml_logger() -> logging.Logger:
    """Logger para a rede e o treinamento"""
    return get_logger('ml')


def get_eval_logger() -> logging.Logger:
    """Logger para avaliação"""
    return get_logger('evaluation')


def get_cli_logger() -> logging.Logger:
    """Logger para a linha de comando"""
    return get_logger('cli')
