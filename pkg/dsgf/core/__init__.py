#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Núcleo
Configuração, logging, erros e manifestos
"""

from .config import Config, TrainConfig
from .logger import setup_logging, get_logger
from .errors import DSGFError, ConfigError
from .manifest import RunManifest, content_fingerprint

__all__ = [
    'Config',
    'TrainConfig',
    'setup_logging',
    'get_logger',
    'DSGFError',
    'ConfigError',
    'RunManifest',
    'content_fingerprint'
]
