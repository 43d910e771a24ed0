#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Métricas de Avaliação
Joint Goal Accuracy, métricas de relação e divisão por domínio (vistos e não vistos)
"""

import re
from dataclasses import dataclass, field
from typing import Any, Dict, Hashable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.metrics import accuracy_score, confusion_matrix, f1_score

from ..core.errors import AlignmentError, ShapeMismatchError
from ..core.logger import get_eval_logger
from ..data.corpus import DialogueState
from ..data.relation_labeler import Relation, RelationMatrix
from ..data.schema import SchemaGraph, domain_fingerprints

logger = get_eval_logger()

SERVICE_SUFFIX = re.compile(r'_\d+$')

RELATION_LABELS = [int(r) for r in Relation]

StateLike = Union[DialogueState, Mapping[str, Mapping[str, Optional[str]]]]


class DomainStatus:
    SEEN = 'seen'
    UNSEEN = 'unseen'
    MIXED = 'mixed'


@dataclass
class DomainScore:
    """Joint GA restrita aos turnos que tocam um domínio"""
    domain: str
    joint_ga: float
    turns: int
    status: str = DomainStatus.SEEN

    def to_dict(self) -> Dict[str, Any]:
        return {'domain': self.domain, 'joint_ga': self.joint_ga, 'turns': self.turns, 'status': self.status}


@dataclass
class EvalReport:
    """Resultado consolidado de uma avaliação"""
    joint_ga: float
    num_turns: int
    per_domain: List[DomainScore] = field(default_factory=list)
    joint_ga_unseen: Optional[float] = None
    num_unseen_turns: int = 0
    relation_f1: Optional[float] = None
    relation_accuracy: Optional[float] = None
    relation_confusion: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        """Converte para dicionário"""
        return {
            'joint_ga': self.joint_ga,
            'num_turns': self.num_turns,
            'joint_ga_unseen': self.joint_ga_unseen,
            'num_unseen_turns': self.num_unseen_turns,
            'per_domain': [d.to_dict() for d in self.per_domain],
            'relation_f1': self.relation_f1,
            'relation_accuracy': self.relation_accuracy,
            'relation_confusion': (
                self.relation_confusion.tolist() if self.relation_confusion is not None else None
            ),
        }


def _as_state(state: StateLike) -> DialogueState:
    if isinstance(state, DialogueState):
        return state
    return DialogueState.from_dict(state)


def _aligned_keys(predicted: Mapping[Hashable, Any], gold: Mapping[Hashable, Any]) -> List[Hashable]:
    missing_pred = [k for k in gold if k not in predicted]
    missing_gold = [k for k in predicted if k not in gold]
    if missing_pred or missing_gold:
        raise AlignmentError(
            f"turnos desalinhados; sem predição: {missing_pred[:10]}; sem referência: {missing_gold[:10]}"
        )
    return list(gold)


def turn_correct(predicted: StateLike, gold: StateLike) -> bool:
    """Todas as atribuições iguais após normalização (caixa e espaços)"""
    return _as_state(predicted).normalized() == _as_state(gold).normalized()


def joint_goal_accuracy(predicted: Mapping[Hashable, StateLike],
                        gold: Mapping[Hashable, StateLike]) -> float:
    """Fração de turnos com o estado inteiro correto"""
    keys = _aligned_keys(predicted, gold)
    if not keys:
        return 0.0
    correct = sum(turn_correct(predicted[k], gold[k]) for k in keys)
    return correct / len(keys)


def _relation_pairs(predicted, gold) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(predicted, Mapping):
        keys = _aligned_keys(predicted, gold)
        pairs = [(predicted[k], gold[k]) for k in keys]
    else:
        predicted, gold = list(predicted), list(gold)
        if len(predicted) != len(gold):
            raise ShapeMismatchError(
                f"fluxos com tamanhos diferentes: {len(predicted)} predições, {len(gold)} referências"
            )
        pairs = list(zip(predicted, gold))

    y_pred, y_true = [], []
    for pred, ref in pairs:
        if len(pred) != len(ref) or tuple(pred.slot_ids) != tuple(ref.slot_ids):
            raise ShapeMismatchError(f"matrizes de formas diferentes: {len(pred)} x {len(ref)} slots")
        y_pred.append(pred.upper_triangle())
        y_true.append(ref.upper_triangle())
    if not y_true:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(y_pred), np.concatenate(y_true)


def relation_metrics(predicted: Union[Mapping[Hashable, RelationMatrix], Sequence[RelationMatrix]],
                     gold: Union[Mapping[Hashable, RelationMatrix], Sequence[RelationMatrix]]
                     ) -> Dict[str, Any]:
    """F1 macro e acurácia sobre os pares i < j de cada turno"""
    y_pred, y_true = _relation_pairs(predicted, gold)
    if y_true.size == 0:
        return {'f1': 0.0, 'accuracy': 0.0, 'pairs': 0,
                'confusion': np.zeros((4, 4), dtype=np.int64)}
    # macro sobre as classes presentes na referência ou na predição
    present = sorted(set(y_true.tolist()) | set(y_pred.tolist()))
    return {
        'f1': float(f1_score(y_true, y_pred, labels=present, average='macro', zero_division=0)),
        'accuracy': float(accuracy_score(y_true, y_pred)),
        'pairs': int(y_true.size),
        'confusion': confusion_matrix(y_true, y_pred, labels=RELATION_LABELS),
    }


def touched_domains(predicted: StateLike, gold: StateLike) -> List[str]:
    """Domínios com algum slot atribuído na referência ou na predição"""
    return sorted(set(_as_state(predicted).domains()) | set(_as_state(gold).domains()))


def domain_family(domain_id: str) -> str:
    """Agrupa serviços numerados (Restaurants_1, Restaurants_2) em um domínio"""
    return SERVICE_SUFFIX.sub('', domain_id)


def domain_status(domain_id: str, schema: Optional[SchemaGraph],
                  train_fingerprints: Optional[Mapping[str, str]]) -> str:
    """Visto se o domínio existia no treino com o mesmo conteúdo"""
    if train_fingerprints is None:
        return DomainStatus.SEEN
    if domain_id not in train_fingerprints:
        return DomainStatus.UNSEEN
    if schema is not None and domain_id in schema.domain_ids:
        current = domain_fingerprints(schema.elements).get(domain_id)
        if current is not None and current != train_fingerprints[domain_id]:
            return DomainStatus.UNSEEN
    return DomainStatus.SEEN


def per_domain_breakdown(predicted: Mapping[Hashable, StateLike], gold: Mapping[Hashable, StateLike],
                         schema: Optional[SchemaGraph] = None,
                         train_fingerprints: Optional[Mapping[str, str]] = None) -> List[DomainScore]:
    """Joint GA por domínio (família de serviços) com marcação visto/não visto/misto"""
    keys = _aligned_keys(predicted, gold)
    correct: Dict[str, int] = {}
    total: Dict[str, int] = {}
    members: Dict[str, set] = {}
    for key in keys:
        ok = turn_correct(predicted[key], gold[key])
        families = set()
        for domain_id in touched_domains(predicted[key], gold[key]):
            family = domain_family(domain_id)
            members.setdefault(family, set()).add(domain_id)
            families.add(family)
        for family in families:
            total[family] = total.get(family, 0) + 1
            correct[family] = correct.get(family, 0) + int(ok)

    scores = []
    for family in sorted(total):
        statuses = {domain_status(d, schema, train_fingerprints) for d in members[family]}
        status = statuses.pop() if len(statuses) == 1 else DomainStatus.MIXED
        scores.append(DomainScore(family, correct[family] / total[family], total[family], status))
    return scores


def unseen_turns(predicted: Mapping[Hashable, StateLike], gold: Mapping[Hashable, StateLike],
                 schema: Optional[SchemaGraph], train_fingerprints: Mapping[str, str],
                 turn_domains: Optional[Mapping[Hashable, Sequence[str]]] = None) -> List[Hashable]:
    """Turnos cujos domínios ativos estão todos ausentes do treino"""
    selected = []
    for key in _aligned_keys(predicted, gold):
        active = turn_domains[key] if turn_domains is not None else touched_domains(predicted[key], gold[key])
        if active and all(
            domain_status(d, schema, train_fingerprints) == DomainStatus.UNSEEN for d in active
        ):
            selected.append(key)
    return selected


def evaluate(predicted: Mapping[Hashable, StateLike], gold: Mapping[Hashable, StateLike],
             schema: Optional[SchemaGraph] = None,
             train_fingerprints: Optional[Mapping[str, str]] = None,
             predicted_relations: Optional[Mapping[Hashable, RelationMatrix]] = None,
             gold_relations: Optional[Mapping[Hashable, RelationMatrix]] = None,
             turn_domains: Optional[Mapping[Hashable, Sequence[str]]] = None) -> EvalReport:
    """Avaliação completa: geral, por domínio, não vistos e relações"""
    try:
        report = EvalReport(
            joint_ga=joint_goal_accuracy(predicted, gold),
            num_turns=len(gold),
            per_domain=per_domain_breakdown(predicted, gold, schema, train_fingerprints)
        )
        if train_fingerprints is not None:
            keys = unseen_turns(predicted, gold, schema, train_fingerprints, turn_domains)
            report.num_unseen_turns = len(keys)
            if keys:
                report.joint_ga_unseen = joint_goal_accuracy(
                    {k: predicted[k] for k in keys}, {k: gold[k] for k in keys}
                )
        if predicted_relations is not None and gold_relations is not None:
            metrics = relation_metrics(predicted_relations, gold_relations)
            report.relation_f1 = metrics['f1']
            report.relation_accuracy = metrics['accuracy']
            report.relation_confusion = metrics['confusion']
    except Exception as e:
        logger.error(f"Erro na avaliação: {e}")
        raise

    logger.info(f"Avaliação: {report.num_turns} turnos, joint GA {report.joint_ga:.4f}")
    return report


def breakdown_frame(scores: Sequence[DomainScore]) -> pd.DataFrame:
    return pd.DataFrame([s.to_dict() for s in scores], columns=['domain', 'joint_ga', 'turns', 'status'])
