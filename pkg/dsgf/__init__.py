#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Rastreamento de Estado de Diálogo Guiado por Esquema
Grafo de esquema com relações dinâmicas entre slots fundido ao contexto do diálogo
"""

__version__ = "1.0.0"
__description__ = "Rastreador de estado de diálogo com fusão de grafo de esquema dinâmico"

from .core.config import Config, TrainConfig
from .data.schema import SchemaGraph, build_schema_graph, load_schema
from .data.corpus import DialogueState, load_corpus
from .ml.model import DSGFNet
from .ml.training import train, inference_step, load_checkpoint
from .evaluation.metrics import evaluate, joint_goal_accuracy

__all__ = [
    'Config',
    'TrainConfig',
    'SchemaGraph',
    'build_schema_graph',
    'load_schema',
    'DialogueState',
    'load_corpus',
    'DSGFNet',
    'train',
    'inference_step',
    'load_checkpoint',
    'evaluate',
    'joint_goal_accuracy'
]
