#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Machine Learning
Codificadores, rede de grafo, decodificador de estado e treinamento
"""

from .encoders import ToyEncoder, PretrainedEncoder, build_encoder
from .model import DSGFNet
from .training import train, compute_loss, inference_step, predict_corpus

__all__ = [
    'ToyEncoder',
    'PretrainedEncoder',
    'build_encoder',
    'DSGFNet',
    'train',
    'compute_loss',
    'inference_step',
    'predict_corpus'
]
