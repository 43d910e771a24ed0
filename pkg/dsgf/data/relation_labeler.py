#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Rotulador de Relações Dinâmicas
Rótulos de co-referência, co-atualização e co-ocorrência entre slots
"""

from collections import Counter
from dataclasses import dataclass
from enum import IntEnum
from itertools import combinations
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union, Iterable, Mapping

import joblib
import numpy as np
import pandas as pd

from ..core.errors import DSGFError, ShapeMismatchError
from ..core.logger import get_data_logger

logger = get_data_logger()

DEFAULT_THRESHOLD = 0.05
COOCCURRENCE_NAME = 'cooccurrence.joblib'


class Relation(IntEnum):
    """Tipos de relação dinâmica entre slots"""
    NONE = 0
    CO_REFERENCE = 1
    CO_UPDATE = 2
    CO_OCCURRENCE = 3

    @property
    def label(self) -> str:
        return self.name.lower()


DYNAMIC_RELATIONS = (Relation.CO_REFERENCE, Relation.CO_UPDATE, Relation.CO_OCCURRENCE)


class RelationMatrix:
    """Matriz slot x slot de relações de um turno (simétrica, diagonal none)"""

    def __init__(self, slot_ids: Sequence[str], labels: Optional[np.ndarray] = None):
        self.slot_ids: Tuple[str, ...] = tuple(slot_ids)
        size = len(self.slot_ids)
        if labels is None:
            labels = np.zeros((size, size), dtype=np.int64)
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (size, size):
            raise ShapeMismatchError(
                f"matriz de relações {labels.shape} incompatível com {size} slots"
            )
        if size and (labels.min() < 0 or labels.max() > Relation.CO_OCCURRENCE):
            raise ValueError("rótulos de relação fora de {0,1,2,3}")
        if not np.array_equal(labels, labels.T):
            raise ValueError("matriz de relações deve ser simétrica")
        if size and np.any(np.diag(labels) != Relation.NONE):
            raise ValueError("diagonal da matriz de relações deve ser none")
        labels.setflags(write=False)
        self.labels = labels

    @classmethod
    def none(cls, slot_ids: Sequence[str]) -> 'RelationMatrix':
        return cls(slot_ids)

    @classmethod
    def from_upper(cls, slot_ids: Sequence[str], upper: np.ndarray) -> 'RelationMatrix':
        """Espelha o triângulo superior (i<j) para a parte inferior"""
        upper = np.triu(np.asarray(upper, dtype=np.int64), k=1)
        return cls(slot_ids, upper + upper.T)

    def __len__(self) -> int:
        return len(self.slot_ids)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RelationMatrix):
            return NotImplemented
        return self.slot_ids == other.slot_ids and np.array_equal(self.labels, other.labels)

    def __repr__(self) -> str:
        return f"RelationMatrix(slots={len(self)}, pares={self.pairs()})"

    def get(self, slot_a: str, slot_b: str) -> Relation:
        i, j = self.slot_ids.index(slot_a), self.slot_ids.index(slot_b)
        return Relation(int(self.labels[i, j]))

    def upper_triangle(self) -> np.ndarray:
        """Rótulos dos pares não ordenados i<j"""
        rows, cols = np.triu_indices(len(self), k=1)
        return self.labels[rows, cols]

    def pairs(self, relation: Optional[Relation] = None) -> List[Tuple[str, str, Relation]]:
        """Pares i<j com relação diferente de none (ou igual à pedida)"""
        result = []
        for i, j in combinations(range(len(self)), 2):
            value = Relation(int(self.labels[i, j]))
            if (relation is None and value != Relation.NONE) or value == relation:
                result.append((self.slot_ids[i], self.slot_ids[j], value))
        return result

    def adjacency(self, relation: Relation) -> np.ndarray:
        """Máscara booleana das arestas de um tipo, sem laços"""
        return self.labels == int(relation)

    def to_dict(self) -> Dict[str, object]:
        """Converte para dicionário"""
        return {'slot_ids': list(self.slot_ids), 'labels': self.labels.tolist()}

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> 'RelationMatrix':
        return cls(data['slot_ids'], np.array(data['labels'], dtype=np.int64))


@dataclass
class RelationStats:
    """Proporção de cada tipo de relação (pares e turnos)"""
    pair_proportions: Dict[str, float]
    turn_proportions: Dict[str, float]
    total_pairs: int
    total_turns: int

    def to_dict(self) -> Dict[str, object]:
        """Converte para dicionário"""
        return {
            'pair_proportions': self.pair_proportions,
            'turn_proportions': self.turn_proportions,
            'total_pairs': self.total_pairs,
            'total_turns': self.total_turns
        }

    def to_frame(self) -> pd.DataFrame:
        """Tabela no formato relação x (pares, turnos)"""
        rows = []
        for relation in DYNAMIC_RELATIONS:
            rows.append({
                'relation': relation.label,
                'pairs': self.pair_proportions[relation.label],
                'turns': self.turn_proportions[relation.label]
            })
        return pd.DataFrame(rows)


def _normalize(value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    return ' '.join(str(value).casefold().split())


def _filled(state: Mapping[str, Optional[str]]) -> Dict[str, str]:
    return {slot: _normalize(value) for slot, value in state.items() if value is not None}


class CooccurrenceTable:
    """Frequência, por diálogo, de pares de slots preenchidos juntos no estado final"""

    def __init__(self, frequencies: Dict[Tuple[str, str], float], num_dialogues: int):
        self.frequencies = frequencies
        self.num_dialogues = num_dialogues

    def frequency(self, slot_a: str, slot_b: str) -> float:
        key = (slot_a, slot_b) if slot_a <= slot_b else (slot_b, slot_a)
        return self.frequencies.get(key, 0.0)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{'slot_a': a, 'slot_b': b, 'frequency': f} for (a, b), f in sorted(self.frequencies.items())]
        )

    def save(self, path: Union[str, Path]) -> None:
        joblib.dump({'frequencies': self.frequencies, 'num_dialogues': self.num_dialogues}, path)

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'CooccurrenceTable':
        data = joblib.load(path)
        return cls(data['frequencies'], data['num_dialogues'])


def build_cooccurrence_table(
    final_states: Iterable[Mapping[str, Optional[str]]]
) -> CooccurrenceTable:
    """Constrói a tabela de co-ocorrência a partir dos estados finais do treino"""
    counts: Counter = Counter()
    num_dialogues = 0
    for state in final_states:
        num_dialogues += 1
        filled = sorted(_filled(state))
        for slot_a, slot_b in combinations(filled, 2):
            counts[(slot_a, slot_b)] += 1
    if num_dialogues == 0:
        raise DSGFError("corpus de treino vazio: tabela de co-ocorrência indefinida")
    frequencies = {pair: count / num_dialogues for pair, count in counts.items()}
    logger.info(
        f"Tabela de co-ocorrência: {num_dialogues} diálogos, {len(frequencies)} pares observados"
    )
    return CooccurrenceTable(frequencies, num_dialogues)


def label_turn(
    slot_ids: Sequence[str],
    history: Sequence[Mapping[str, Optional[str]]],
    current: Mapping[str, Optional[str]],
    table: CooccurrenceTable,
    threshold: float = DEFAULT_THRESHOLD
) -> RelationMatrix:
    """Rotula os pares de slots de um turno

    Prioridade quando mais de uma regra vale: co-referência > co-atualização >
    co-ocorrência. `history` são os estados dos turnos de usuário anteriores.
    """
    size = len(slot_ids)
    labels = np.zeros((size, size), dtype=np.int64)
    now = _filled(current)
    previous = _filled(history[-1]) if history else {}
    updated = {slot for slot, value in now.items() if previous.get(slot) != value}

    # valores que cada slot já teve em turnos anteriores
    earlier: Dict[str, set] = {}
    for state in history:
        for slot, value in _filled(state).items():
            earlier.setdefault(slot, set()).add(value)

    for i, j in combinations(range(size), 2):
        a, b = slot_ids[i], slot_ids[j]
        relation = Relation.NONE
        if (a in now and now[a] in earlier.get(b, ())) or (b in now and now[b] in earlier.get(a, ())):
            relation = Relation.CO_REFERENCE
        elif a in updated and b in updated:
            relation = Relation.CO_UPDATE
        elif a in now and b in now and table.frequency(a, b) > threshold:
            relation = Relation.CO_OCCURRENCE
        labels[i, j] = labels[j, i] = relation
    return RelationMatrix(slot_ids, labels)


def label_dialogue(
    slot_ids: Sequence[str],
    states: Sequence[Mapping[str, Optional[str]]],
    table: CooccurrenceTable,
    threshold: float = DEFAULT_THRESHOLD
) -> List[RelationMatrix]:
    """Rotula todos os turnos de usuário de um diálogo"""
    return [
        label_turn(slot_ids, states[:index], state, table, threshold)
        for index, state in enumerate(states)
    ]


def relation_stats(matrices: Iterable[RelationMatrix]) -> RelationStats:
    """Proporções de relações sobre todos os pares e sobre os turnos"""
    pair_counts: Counter = Counter()
    turn_counts: Counter = Counter()
    total_pairs = 0
    total_turns = 0
    for matrix in matrices:
        total_turns += 1
        upper = matrix.upper_triangle()
        total_pairs += upper.size
        present = set()
        for value in upper.tolist():
            pair_counts[value] += 1
            present.add(value)
        for value in present:
            turn_counts[value] += 1

    def proportions(counts: Counter, total: int) -> Dict[str, float]:
        return {
            relation.label: (counts[int(relation)] / total if total else 0.0)
            for relation in DYNAMIC_RELATIONS
        }

    return RelationStats(
        pair_proportions=proportions(pair_counts, total_pairs),
        turn_proportions=proportions(turn_counts, total_turns),
        total_pairs=total_pairs,
        total_turns=total_turns
    )


def save_labels(labels: Mapping[Tuple[str, int], RelationMatrix], path: Union[str, Path]) -> None:
    """Persiste rótulos por (dialogue_id, turno)"""
    payload = {key: matrix.to_dict() for key, matrix in labels.items()}
    joblib.dump(payload, path)
    logger.info(f"{len(payload)} matrizes de relação gravadas em {path}")


def load_labels(path: Union[str, Path]) -> Dict[Tuple[str, int], RelationMatrix]:
    payload = joblib.load(path)
    return {key: RelationMatrix.from_dict(data) for key, data in payload.items()}
