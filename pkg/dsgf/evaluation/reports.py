#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Relatórios
Renderização em texto das avaliações e leitura/gravação de arquivos de predição
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from tabulate import tabulate

from ..core.errors import CorpusParseError
from ..core.logger import get_eval_logger
from ..data.corpus import DialogueState
from ..data.relation_labeler import Relation, RelationMatrix, RelationStats
from .metrics import DomainScore, DomainStatus, EvalReport

logger = get_eval_logger()

TurnKey = Tuple[str, int]

STATUS_MARKS = {DomainStatus.SEEN: '', DomainStatus.UNSEEN: '*', DomainStatus.MIXED: '**'}


def _rate(value: Optional[float]) -> str:
    return '-' if value is None else f"{100 * value:.2f}"


def render_overall(report: EvalReport) -> str:
    rows = [
        ['Joint GA (todos)', _rate(report.joint_ga), report.num_turns],
        ['Joint GA (não vistos)', _rate(report.joint_ga_unseen), report.num_unseen_turns],
    ]
    return tabulate(rows, headers=['Métrica', '%', 'Turnos'], tablefmt='grid')


def render_domains(scores: Sequence[DomainScore]) -> str:
    """Tabela por domínio em duas colunas; * não visto, ** misto"""
    cells = [[f"{s.domain}{STATUS_MARKS.get(s.status, '')}", _rate(s.joint_ga)] for s in scores]
    half = (len(cells) + 1) // 2
    left, right = cells[:half], cells[half:]
    rows = [a + (right[i] if i < len(right) else ['', '']) for i, a in enumerate(left)]
    return tabulate(rows, headers=['Domínio', 'Joint GA', 'Domínio', 'Joint GA'], tablefmt='grid')


def render_relations(report: EvalReport) -> str:
    rows = [['F1 (macro)', _rate(report.relation_f1)], ['Acurácia', _rate(report.relation_accuracy)]]
    text = tabulate(rows, headers=['Predição de relações', '%'], tablefmt='grid')
    if report.relation_confusion is not None:
        labels = [r.label for r in Relation]
        matrix = [[labels[i]] + list(map(int, row)) for i, row in enumerate(report.relation_confusion)]
        text += '\n\n' + tabulate(matrix, headers=['referência \\ predição'] + labels, tablefmt='grid')
    return text


def render_report(report: EvalReport) -> str:
    """Relatório completo: geral, por domínio e relações"""
    blocks = ['== Avaliação ==', render_overall(report)]
    if report.per_domain:
        blocks += ['== Por domínio ==', render_domains(report.per_domain)]
    if report.relation_f1 is not None:
        blocks += ['== Relações dinâmicas ==', render_relations(report)]
    return '\n\n'.join(blocks) + '\n'


def render_relation_stats(stats: RelationStats) -> str:
    """Proporções de relações (por par e por turno)"""
    rows = [
        [label, _rate(stats.pair_proportions[label]), _rate(stats.turn_proportions[label])]
        for label in stats.pair_proportions
    ]
    footer = f"\n{stats.total_pairs} pares em {stats.total_turns} turnos"
    return tabulate(rows, headers=['Relação', '% pares', '% turnos'], tablefmt='grid') + footer


def render_sweep(summary) -> str:
    return tabulate(summary.values.tolist(), headers=list(summary.columns), tablefmt='grid')


def write_report(report: EvalReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_report(report), encoding='utf-8')
    logger.info(f"Relatório gravado em {path}")
    return path


def write_predictions(path: Union[str, Path], states: Mapping[TurnKey, DialogueState],
                      relations: Optional[Mapping[TurnKey, RelationMatrix]] = None) -> Path:
    """Grava estados (e relações) previstos por turno em JSON"""
    records: List[Dict[str, Any]] = []
    for (dialogue_id, turn_index), state in states.items():
        record = {'dialogue_id': dialogue_id, 'turn_index': turn_index, 'state': state.to_dict()}
        if relations is not None and (dialogue_id, turn_index) in relations:
            record['relations'] = relations[(dialogue_id, turn_index)].to_dict()
        records.append(record)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as arquivo:
        json.dump(records, arquivo, indent=2, ensure_ascii=False)
    logger.info(f"{len(records)} turnos previstos gravados em {path}")
    return path


def read_predictions(path: Union[str, Path]
                     ) -> Tuple[Dict[TurnKey, DialogueState], Dict[TurnKey, RelationMatrix]]:
    """Lê um arquivo gravado por write_predictions"""
    try:
        with open(path, 'r', encoding='utf-8') as arquivo:
            records = json.load(arquivo)
    except json.JSONDecodeError as e:
        raise CorpusParseError(e.msg, f"{path}:{e.lineno}:{e.colno}")
    states: Dict[TurnKey, DialogueState] = {}
    relations: Dict[TurnKey, RelationMatrix] = {}
    for position, record in enumerate(records):
        try:
            key = (str(record['dialogue_id']), int(record['turn_index']))
            states[key] = DialogueState.from_dict(record['state'])
        except (KeyError, TypeError, ValueError) as e:
            raise CorpusParseError(f"registro inválido: {e}", f"{path}[{position}]")
        if 'relations' in record:
            relations[key] = RelationMatrix.from_dict(record['relations'])
    return states, relations


def is_prediction_file(path: Union[str, Path]) -> bool:
    """Distingue arquivos de predição de corpora no formato SGD"""
    path = Path(path)
    if path.is_dir():
        return False
    with open(path, 'r', encoding='utf-8') as arquivo:
        records = json.load(arquivo)
    return isinstance(records, list) and (not records or 'state' in records[0])


def render_relation_edges(matrix: RelationMatrix, title: str = 'Arestas dinâmicas') -> str:
    """Arestas dinâmicas de um turno, uma por linha"""
    pairs = matrix.pairs()
    lines = [f"{title} ({len(pairs)}):"]
    lines += [f"  {a} -- {b} [{relation.label}]" for a, b, relation in pairs]
    return '\n'.join(lines)
