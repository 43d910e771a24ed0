#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Testes do Rotulador de Relações
"""

import json
import os
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

from dsgf.core.errors import DSGFError, ShapeMismatchError
from dsgf.data.corpus import iter_samples, load_dialogues
from dsgf.data.relation_labeler import (
    CooccurrenceTable, Relation, RelationMatrix, build_cooccurrence_table, label_dialogue,
    label_turn, load_labels, relation_stats, save_labels
)
from dsgf.data.schema import build_schema_graph, load_schema

# proporção de pares por relação no treino do SGD (%)
SGD_PAIR_PROPORTIONS = {'co_reference': 5.11, 'co_update': 9.31, 'co_occurrence': 31.13}


def _norm(value):
    return ' '.join(str(value).casefold().split())


def _brute_force_table(final_states):
    slots = sorted({s for state in final_states for s, v in state.items() if v is not None})
    table = {}
    for a, b in combinations(slots, 2):
        together = 0
        for state in final_states:
            if state.get(a) is not None and state.get(b) is not None:
                together += 1
        table[(a, b)] = together / len(final_states)
    return table


def _brute_force_label(a, b, states, t, table, threshold):
    """Regras aplicadas ao pé da letra, sem as estruturas do rotulador"""
    current = {k: _norm(v) for k, v in states[t].items() if v is not None}
    previous = {k: _norm(v) for k, v in states[t - 1].items() if v is not None} if t > 0 else {}
    for earlier in states[:t]:
        for x, y in ((a, b), (b, a)):
            if x in current and earlier.get(y) is not None and _norm(earlier[y]) == current[x]:
                return Relation.CO_REFERENCE
    if all(s in current and previous.get(s) != current[s] for s in (a, b)):
        return Relation.CO_UPDATE
    key = (a, b) if a <= b else (b, a)
    if a in current and b in current and table.get(key, 0.0) > threshold:
        return Relation.CO_OCCURRENCE
    return Relation.NONE


def test_oraculo_de_forca_bruta(synth_dialogues, synth_graph, synth_table):
    threshold = 0.05
    table = _brute_force_table([d.final_state() for d in synth_dialogues])
    for (a, b), frequency in table.items():
        assert synth_table.frequency(a, b) == pytest.approx(frequency)
        assert synth_table.frequency(b, a) == pytest.approx(frequency)

    samples = {s.key: s for s in iter_samples(synth_dialogues, synth_graph, synth_table)}
    for dialogue in synth_dialogues:
        states = dialogue.user_states()
        user_turns = [t.turn_index for t in dialogue.turns if t.gold_state is not None]
        for position, turn_index in enumerate(user_turns):
            matrix = samples[(dialogue.dialogue_id, turn_index)].gold_relations
            for a, b in combinations(matrix.slot_ids, 2):
                expected = _brute_force_label(a, b, states, position, table, threshold)
                assert matrix.get(a, b) == expected, (dialogue.dialogue_id, turn_index, a, b)


def test_rotulos_do_arquivo_de_referencia(fixtures_dir, synth_samples):
    golden = json.loads((fixtures_dir / 'synthetic_relations.json').read_text(encoding='utf-8'))
    samples = {s.key: s for s in synth_samples}
    for dialogue_id, turns in golden['dialogues'].items():
        for turn_index, expected in turns.items():
            matrix = samples[(dialogue_id, int(turn_index))].gold_relations
            found = {f"{a}|{b}": relation.label for a, b, relation in matrix.pairs()}
            assert found == expected, (dialogue_id, turn_index)


def test_proporcoes_do_arquivo_de_referencia(fixtures_dir, synth_samples):
    golden = json.loads((fixtures_dir / 'synthetic_relations.json').read_text(encoding='utf-8'))
    expected = golden['stats']['synth_000']
    stats = relation_stats(s.gold_relations for s in synth_samples if s.dialogue_id == 'synth_000')
    assert stats.total_pairs == expected['pairs']
    assert stats.total_turns == expected['turns']
    for label, count in expected['pair_counts'].items():
        assert stats.pair_proportions[label] == pytest.approx(count / expected['pairs'])
    for label, count in expected['turn_counts'].items():
        assert stats.turn_proportions[label] == pytest.approx(count / expected['turns'])


def test_limiar_monotono(synth_dialogues, synth_graph, synth_table):
    previous = None
    for threshold in (0.01, 0.05, 0.1):
        pairs = {
            (s.key, a, b)
            for s in iter_samples(synth_dialogues, synth_graph, synth_table, threshold=threshold)
            for a, b, _ in s.gold_relations.pairs(Relation.CO_OCCURRENCE)
        }
        if previous is not None:
            assert pairs <= previous
        previous = pairs


def test_primeiro_turno_com_um_slot():
    table = build_cooccurrence_table([{'A-x': '1', 'A-y': '2'}])
    matrix = label_turn(['A-x', 'A-y', 'A-z'], [], {'A-x': 'Denver'}, table)
    assert matrix.pairs() == []


def test_co_atualizacao():
    table = CooccurrenceTable({}, 1)
    history = [{'A-city': 'Denver'}]
    current = {'A-city': 'Denver', 'B-seats': '2', 'B-type': 'pool'}
    matrix = label_turn(['A-city', 'B-seats', 'B-type'], history, current, table)
    assert matrix.get('B-seats', 'B-type') is Relation.CO_UPDATE
    assert matrix.get('A-city', 'B-seats') is Relation.NONE


def test_co_referencia_tem_prioridade():
    table = CooccurrenceTable({('A-city', 'B-location'): 0.9}, 10)
    history = [{'A-city': 'Denver'}]
    current = {'A-city': 'Denver', 'B-location': 'denver'}
    matrix = label_turn(['A-city', 'B-location'], history, current, table)
    assert matrix.get('A-city', 'B-location') is Relation.CO_REFERENCE


def test_co_ocorrencia_acima_do_limiar():
    """3 de 20 diálogos com o par preenchido: 15% > 5%"""
    finals = [{'A-x': 'a', 'A-y': 'b'}] * 3 + [{'A-x': 'a'}] * 17
    table = build_cooccurrence_table(finals)
    assert table.frequency('A-y', 'A-x') == pytest.approx(0.15)
    history = [{'A-x': 'a', 'A-y': 'b'}]
    matrix = label_turn(['A-x', 'A-y'], history, {'A-x': 'a', 'A-y': 'b'}, table, threshold=0.05)
    assert matrix.get('A-x', 'A-y') is Relation.CO_OCCURRENCE
    matrix = label_turn(['A-x', 'A-y'], history, {'A-x': 'a', 'A-y': 'b'}, table, threshold=0.2)
    assert matrix.get('A-x', 'A-y') is Relation.NONE


def test_tabela_pares_nunca_vistos():
    table = build_cooccurrence_table([{'A-x': '1'}, {'A-x': '1', 'A-y': None}])
    assert table.frequency('A-x', 'A-y') == 0.0
    assert table.num_dialogues == 2
    with pytest.raises(DSGFError):
        build_cooccurrence_table([])


def test_estatisticas_sem_relacoes():
    stats = relation_stats([RelationMatrix.none(['a', 'b', 'c'])] * 3)
    assert list(stats.pair_proportions.values()) == [0.0, 0.0, 0.0]
    assert list(stats.turn_proportions.values()) == [0.0, 0.0, 0.0]
    assert stats.total_pairs == 9


def test_matriz_valida_invariantes():
    with pytest.raises(ShapeMismatchError):
        RelationMatrix(['a', 'b'], np.zeros((3, 3)))
    with pytest.raises(ValueError):
        RelationMatrix(['a', 'b'], np.array([[0, 1], [2, 0]]))
    with pytest.raises(ValueError):
        RelationMatrix(['a', 'b'], np.array([[1, 0], [0, 0]]))
    matrix = RelationMatrix.from_upper(['a', 'b', 'c'], np.array([[0, 3, 1], [0, 0, 2], [0, 0, 0]]))
    assert matrix.upper_triangle().tolist() == [3, 1, 2]
    assert RelationMatrix.from_dict(matrix.to_dict()) == matrix


def test_rotular_dialogo_inteiro(synth_dialogues, synth_graph, synth_table):
    dialogue = synth_dialogues[0]
    slot_ids = synth_graph.subgraph(dialogue.services).slot_ids
    matrices = label_dialogue(slot_ids, dialogue.user_states(), synth_table)
    assert len(matrices) == 4
    assert matrices[0].get('Weather-city', 'Weather-date') is Relation.CO_UPDATE


def test_persistencia_de_tabela_e_rotulos(tmp_path, synth_table, synth_samples):
    synth_table.save(tmp_path / 'cooccurrence.joblib')
    loaded = CooccurrenceTable.load(tmp_path / 'cooccurrence.joblib')
    assert loaded.frequencies == synth_table.frequencies

    labels = {s.key: s.gold_relations for s in synth_samples}
    save_labels(labels, tmp_path / 'labels.joblib')
    assert load_labels(tmp_path / 'labels.joblib') == labels


@pytest.mark.skipif('DSGF_SGD_TRAIN' not in os.environ, reason='corpus SGD não disponível')
def test_proporcoes_no_sgd():
    """Proporções de pares a meio ponto percentual das de referência"""
    root = Path(os.environ['DSGF_SGD_TRAIN'])
    graph = build_schema_graph(load_schema(root / 'schema.json'))
    dialogues = load_dialogues(root, graph)
    table = build_cooccurrence_table(d.final_state() for d in dialogues)
    stats = relation_stats(s.gold_relations for s in iter_samples(dialogues, graph, table))
    for label, expected in SGD_PAIR_PROPORTIONS.items():
        assert abs(stats.pair_proportions[label] * 100 - expected) <= 0.5, label
    turns = stats.turn_proportions
    assert turns['co_occurrence'] > turns['co_update'] > turns['co_reference'] > 0.0
