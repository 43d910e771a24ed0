#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Testes de Avaliação
"""

import numpy as np
import pytest

from dsgf.core.errors import AlignmentError, ShapeMismatchError
from dsgf.data.corpus import DialogueState
from dsgf.data.relation_labeler import RelationMatrix
from dsgf.data.schema import build_schema_graph, domain, domain_fingerprints, slot
from dsgf.evaluation.metrics import (
    DomainStatus, breakdown_frame, domain_family, evaluate, joint_goal_accuracy,
    per_domain_breakdown, relation_metrics, touched_domains, unseen_turns
)
from dsgf.evaluation.reports import (
    read_predictions, render_relation_edges, render_report, write_predictions, write_report
)


def _st(mapping):
    return DialogueState({(slot_id.split('-')[0], slot_id): value for slot_id, value in mapping.items()})


def _matrix(upper):
    return RelationMatrix.from_upper(['a', 'b', 'c'], np.array(upper))


def test_jga_tudo_certo_e_metade():
    gold = {('d', 0): _st({'A-x': '1'}), ('d', 2): _st({'A-x': '1', 'A-y': '2'})}
    assert joint_goal_accuracy(dict(gold), gold) == 1.0
    predicted = {('d', 0): _st({'A-x': '1'}), ('d', 2): _st({'A-x': '1'})}
    assert joint_goal_accuracy(predicted, gold) == 0.5
    assert joint_goal_accuracy({}, {}) == 0.0


def test_jga_normaliza_caixa_e_espacos():
    """Seis turnos; valores só diferem em caixa e espaços, exceto um"""
    gold = {('d', t): _st({'A-city': 'San Jose', 'A-day': 'Monday'}) for t in range(6)}
    predicted = {
        ('d', 0): _st({'A-city': 'san jose', 'A-day': 'monday'}),
        ('d', 1): _st({'A-city': 'SAN  JOSE', 'A-day': 'Monday'}),
        ('d', 2): _st({'A-city': ' San Jose ', 'A-day': 'MONDAY'}),
        ('d', 3): _st({'A-city': 'San Jose', 'A-day': 'monday '}),
        ('d', 4): _st({'A-city': 'san jose', 'A-day': 'Tuesday'}),
        ('d', 5): _st({'A-city': 'San Jose', 'A-day': 'Monday', 'A-extra': None}),
    }
    assert joint_goal_accuracy(predicted, gold) == pytest.approx(5 / 6)


def test_jga_turnos_desalinhados():
    with pytest.raises(AlignmentError):
        joint_goal_accuracy({('d', 0): _st({})}, {('d', 1): _st({})})


def test_metricas_de_relacao():
    gold = [_matrix([[0, 1, 2], [0, 0, 3], [0, 0, 0]])]
    assert relation_metrics(gold, gold)['f1'] == 1.0
    assert relation_metrics(gold, gold)['accuracy'] == 1.0

    predicted = [_matrix([[0, 1, 0], [0, 0, 3], [0, 0, 0]])]
    metrics = relation_metrics(predicted, gold)
    assert metrics['accuracy'] == pytest.approx(2 / 3)
    assert metrics['pairs'] == 3
    # classes presentes: none, co_reference, co_update, co_occurrence
    # f1: none 0, co_ref 1, co_update 0, co_occ 1
    assert metrics['f1'] == pytest.approx(0.5)


def test_matriz_de_confusao_manual():
    gold = [_matrix([[0, 1, 1], [0, 0, 3], [0, 0, 0]]), _matrix([[0, 0, 2], [0, 0, 2], [0, 0, 0]])]
    predicted = [_matrix([[0, 1, 0], [0, 0, 3], [0, 0, 0]]), _matrix([[0, 0, 2], [0, 0, 3], [0, 0, 0]])]
    confusion = relation_metrics(predicted, gold)['confusion']
    expected = np.array([
        [1, 0, 0, 0],
        [1, 1, 0, 0],
        [0, 0, 1, 1],
        [0, 0, 0, 1],
    ])
    assert np.array_equal(confusion, expected)


def test_metricas_de_relacao_com_formas_diferentes():
    with pytest.raises(ShapeMismatchError):
        relation_metrics([_matrix([[0, 1, 0], [0, 0, 0], [0, 0, 0]])], [RelationMatrix.none(['a', 'b'])])
    with pytest.raises(ShapeMismatchError):
        relation_metrics([RelationMatrix.none(['a', 'b'])], [])


def test_relacoes_por_chave():
    gold = {('d', 0): _matrix([[0, 3, 0], [0, 0, 0], [0, 0, 0]])}
    assert relation_metrics(dict(gold), gold)['accuracy'] == 1.0
    with pytest.raises(AlignmentError):
        relation_metrics({('d', 1): gold[('d', 0)]}, gold)


def test_divisao_por_dominio_unico():
    gold = {('d', 0): _st({'Hotels_1-city': 'Paris'}), ('d', 2): _st({'Hotels_1-city': 'Rome'})}
    predicted = {('d', 0): _st({'Hotels_1-city': 'Paris'}), ('d', 2): _st({'Hotels_1-city': 'Milan'})}
    scores = per_domain_breakdown(predicted, gold)
    assert len(scores) == 1
    assert scores[0].domain == 'Hotels'
    assert scores[0].joint_ga == pytest.approx(0.5)
    assert scores[0].turns == 2
    assert scores[0].status == DomainStatus.SEEN


def _two_domain_schema():
    return [
        domain('Hotels_1', 'find a hotel'), slot('Hotels_1', 'city', 'city of the hotel'),
        domain('Trains_1', 'find a train'), slot('Trains_1', 'day', 'day of travel'),
        domain('Hotels_2', 'reserve a hotel room'), slot('Hotels_2', 'city', 'city of the hotel'),
    ]


def test_marcacao_visto_nao_visto_misto():
    elements = _two_domain_schema()
    graph = build_schema_graph(elements)
    train_fingerprints = {k: v for k, v in domain_fingerprints(elements).items() if k != 'Hotels_2'}
    gold = {
        ('d', 0): _st({'Hotels_1-city': 'Paris'}),
        ('e', 0): _st({'Hotels_2-city': 'Rome'}),
        ('f', 0): _st({'Trains_1-day': 'Monday'}),
    }
    scores = {s.domain: s for s in per_domain_breakdown(dict(gold), gold, graph, train_fingerprints)}
    assert scores['Hotels'].status == DomainStatus.MIXED
    assert scores['Trains'].status == DomainStatus.SEEN

    only_trains = {'Trains_1': train_fingerprints['Trains_1']}
    scores = {s.domain: s for s in per_domain_breakdown(dict(gold), gold, graph, only_trains)}
    assert scores['Hotels'].status == DomainStatus.UNSEEN


def test_dominio_alterado_conta_como_nao_visto():
    elements = _two_domain_schema()
    train_fingerprints = domain_fingerprints(elements)
    changed = [slot('Trains_1', 'day', 'departure day') if e.id == 'Trains_1-day' else e for e in elements]
    gold = {('f', 0): _st({'Trains_1-day': 'Monday'})}
    scores = per_domain_breakdown(dict(gold), gold, build_schema_graph(changed), train_fingerprints)
    assert scores[0].status == DomainStatus.UNSEEN


def test_filtro_de_nao_vistos_contra_forca_bruta():
    elements = _two_domain_schema()
    graph = build_schema_graph(elements)
    train_fingerprints = {'Hotels_1': domain_fingerprints(elements)['Hotels_1']}
    rng = np.random.default_rng(0)
    slots = ['Hotels_1-city', 'Trains_1-day', 'Hotels_2-city']
    gold, predicted = {}, {}
    for turn in range(200):
        chosen = [s for s in slots if rng.random() < 0.5]
        gold[('d', turn)] = _st({s: 'x' for s in chosen})
        predicted[('d', turn)] = _st({s: ('x' if rng.random() < 0.7 else 'y') for s in chosen})

    selected = unseen_turns(predicted, gold, graph, train_fingerprints)
    expected = [
        key for key in gold
        if gold[key].domains() and 'Hotels_1' not in touched_domains(predicted[key], gold[key])
    ]
    assert selected == expected


def test_jga_monotona_ao_corrigir_turnos():
    rng = np.random.default_rng(1)
    gold = {('d', t): _st({'A-x': str(t)}) for t in range(50)}
    predicted = {k: _st({'A-x': 'wrong'}) for k in gold}
    last = joint_goal_accuracy(predicted, gold)
    for key in rng.permutation(list(range(50))):
        predicted[('d', int(key))] = gold[('d', int(key))]
        current = joint_goal_accuracy(predicted, gold)
        assert current >= last
        last = current
    assert last == 1.0


def test_familia_de_dominio():
    assert domain_family('Restaurants_1') == 'Restaurants'
    assert domain_family('hotel') == 'hotel'
    assert domain_family('Ride_Sharing') == 'Ride_Sharing'
    assert domain_family('Ride_Sharing_2') == 'Ride_Sharing'


def test_avaliacao_completa_e_relatorio(tmp_path):
    elements = _two_domain_schema()
    graph = build_schema_graph(elements)
    fingerprints = {'Hotels_1': domain_fingerprints(elements)['Hotels_1']}
    gold = {('d', 0): _st({'Hotels_1-city': 'Paris'}), ('e', 0): _st({'Trains_1-day': 'Monday'})}
    predicted = {('d', 0): _st({'Hotels_1-city': 'Paris'}), ('e', 0): _st({'Trains_1-day': 'Sunday'})}
    relations = {k: RelationMatrix.none(['a', 'b']) for k in gold}

    report = evaluate(predicted, gold, graph, fingerprints, relations, relations)
    assert report.joint_ga == 0.5
    assert report.num_unseen_turns == 1
    assert report.joint_ga_unseen == 0.0
    assert report.relation_accuracy == 1.0

    text = render_report(report)
    assert 'Joint GA (todos)' in text
    assert '50.00' in text
    assert 'Trains*' in text
    write_report(report, tmp_path / 'eval' / 'report.txt')
    assert (tmp_path / 'eval' / 'report.txt').read_text(encoding='utf-8') == text
    assert list(breakdown_frame(report.per_domain)['domain']) == ['Hotels', 'Trains']


def test_arquivo_de_predicoes(tmp_path):
    states = {('d', 0): _st({'A-x': 'Denver'}), ('d', 2): _st({})}
    relations = {('d', 0): _matrix([[0, 2, 0], [0, 0, 0], [0, 0, 0]])}
    path = write_predictions(tmp_path / 'predictions.json', states, relations)
    loaded_states, loaded_relations = read_predictions(path)
    assert loaded_states == states
    assert loaded_relations == relations


def test_arestas_de_um_turno():
    text = render_relation_edges(_matrix([[0, 1, 0], [0, 0, 2], [0, 0, 0]]), 'Arestas')
    assert text.splitlines() == ['Arestas (2):', '  a -- b [co_reference]', '  b -- c [co_update]']
