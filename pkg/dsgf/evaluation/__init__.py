#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Avaliação
Métricas e relatórios
"""

from .metrics import EvalReport, evaluate, joint_goal_accuracy, relation_metrics, per_domain_breakdown
from .reports import render_report

__all__ = [
    'EvalReport',
    'evaluate',
    'joint_goal_accuracy',
    'relation_metrics',
    'per_domain_breakdown',
    'render_report'
]
