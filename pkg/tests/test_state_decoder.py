#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Testes do Decodificador de Estado
"""

import numpy as np
import pytest
import torch
from torch.autograd import gradcheck

from dsgf.core.errors import ConfigError, ShapeMismatchError
from dsgf.data.corpus import CLS_TOKEN, SEP_TOKEN, DialogueState, build_candidate_elements
from dsgf.ml.state_decoder import (
    SpanPredictor, SubgraphAggregator, SubgraphEncoder, assemble_state, resolve_value
)

TOKENS = [CLS_TOKEN, 'a', 'pool', 'ride', SEP_TOKEN, 'to', 'denver', SEP_TOKEN]
VOCABULARY = ['pool', 'regular']


def _one_hot(size, index):
    values = torch.full((size,), -10.0)
    values[index] = 10.0
    return torch.softmax(values, dim=0)


def test_beta_soma_um_em_mil_casos():
    rng = np.random.default_rng(0)
    torch.manual_seed(0)
    aggregator = SubgraphAggregator(6)
    for _ in range(1000):
        slots, channels = int(rng.integers(1, 6)), int(rng.integers(1, 5))
        stacked = torch.tensor(rng.normal(size=(slots, channels, 6)), dtype=torch.float32)
        beta = aggregator(stacked, torch.randn(6)).beta
        assert torch.allclose(beta.sum(dim=-1), torch.ones(slots), atol=1e-5)
        assert torch.all(beta >= 0)


def test_canais_iguais_preservam_o_embedding():
    torch.manual_seed(1)
    aggregator = SubgraphAggregator(4)
    row = torch.randn(2, 1, 4)
    stacked = row.expand(2, 4, 4)
    result = aggregator(stacked, torch.randn(4))
    assert torch.allclose(result.fused, row[:, 0], atol=1e-6)


def test_agregacao_contra_oraculo():
    torch.manual_seed(2)
    aggregator = SubgraphAggregator(3).double()
    stacked = torch.randn(2, 4, 3, dtype=torch.float64)
    b_cls = torch.randn(3, dtype=torch.float64)
    result = aggregator(stacked, b_cls)

    w = aggregator.context.weight.detach().numpy()
    b = aggregator.context.bias.detach().numpy()
    query = np.tanh(w @ b_cls.numpy() + b)
    for i in range(2):
        scores = np.array([np.dot(stacked[i, k].numpy(), query) for k in range(4)])
        beta = np.exp(scores - scores.max())
        beta /= beta.sum()
        assert np.allclose(result.beta[i].detach().numpy(), beta, rtol=1e-6)
        expected = sum(beta[k] * stacked[i, k].numpy() for k in range(4))
        assert np.allclose(result.fused[i].detach().numpy(), expected, rtol=1e-6)


def test_agregacao_por_concatenacao():
    aggregator = SubgraphAggregator(4, num_channels=2, use_attention=False)
    result = aggregator(torch.randn(3, 2, 4), torch.randn(4))
    assert result.beta is None
    assert result.fused.shape == (3, 4)


def test_agregacao_rejeita_formas_erradas():
    aggregator = SubgraphAggregator(4)
    with pytest.raises(ShapeMismatchError):
        aggregator(torch.randn(3, 2, 4), torch.randn(5))


def test_um_candidato_tem_probabilidade_um():
    predictor = SpanPredictor(4)
    spans = predictor(torch.randn(3, 4), torch.randn(1, 4))
    assert torch.allclose(spans.p_start, torch.ones(3, 1))
    assert torch.allclose(spans.p_end, torch.ones(3, 1))


def test_bilinear_contra_oraculo():
    torch.manual_seed(3)
    predictor = SpanPredictor(3).double()
    slots = torch.randn(2, 3, dtype=torch.float64)
    candidates = torch.randn(5, 3, dtype=torch.float64)
    spans = predictor(slots, candidates)

    w = predictor.bilinear.weight.detach().numpy()
    b = predictor.bilinear.bias.detach().numpy()
    r = predictor.readout.weight.detach().numpy()
    for i in range(2):
        for c in range(5):
            hidden = np.tanh(w @ (slots[i].numpy() * candidates[c].numpy()) + b)
            assert spans.start_logits[i, c].item() == pytest.approx(float(r[0] @ hidden), rel=1e-9)
            assert spans.end_logits[i, c].item() == pytest.approx(float(r[1] @ hidden), rel=1e-9)


def test_candidatos_vazios():
    with pytest.raises(ShapeMismatchError):
        SpanPredictor(4)(torch.randn(2, 4), torch.zeros(0, 4))


def test_gradiente_do_preditor_e_da_agregacao():
    torch.manual_seed(4)
    predictor = SpanPredictor(4).double()
    aggregator = SubgraphAggregator(4).double()
    stacked = torch.randn(2, 3, 4, dtype=torch.float64, requires_grad=True)
    b_cls = torch.randn(4, dtype=torch.float64, requires_grad=True)
    candidates = torch.randn(6, 4, dtype=torch.float64, requires_grad=True)

    def forward(s, b, c):
        return predictor(aggregator(s, b).fused, c).start_logits

    assert gradcheck(forward, (stacked, b_cls, candidates), eps=1e-3, atol=1e-5, rtol=1e-4)


def test_fim_antes_do_inicio_gera_none():
    candidate = build_candidate_elements(TOKENS, VOCABULARY)
    size = len(candidate)
    assert resolve_value(_one_hot(size, 5), _one_hot(size, 3), candidate) is None


def test_inicio_no_vocabulario_gera_o_valor():
    candidate = build_candidate_elements(TOKENS, VOCABULARY)
    size = len(candidate)
    assert resolve_value(_one_hot(size, 9), _one_hot(size, 0), candidate) == 'regular'


def test_span_no_contexto(synth_samples):
    candidate = build_candidate_elements(TOKENS, VOCABULARY)
    size = len(candidate)
    assert resolve_value(_one_hot(size, 6), _one_hot(size, 6), candidate) == 'denver'
    assert resolve_value(_one_hot(size, 0), _one_hot(size, 0), candidate) is None

    sample = synth_samples[0]
    start, end = sample.gold_spans[sample.slot_ids.index('Weather-city')]
    size = len(sample.candidate)
    value = resolve_value(_one_hot(size, start), _one_hot(size, end), sample.candidate, sample)
    assert value == sample.gold_state.get('Weather-city')


def test_regras_de_decodificacao_aleatorias():
    rng = np.random.default_rng(5)
    candidate = build_candidate_elements(TOKENS, VOCABULARY)
    for _ in range(1000):
        p_start = torch.softmax(torch.tensor(rng.normal(size=len(candidate))), dim=0)
        p_end = torch.softmax(torch.tensor(rng.normal(size=len(candidate))), dim=0)
        start, end = int(p_start.argmax()), int(p_end.argmax())
        value = resolve_value(p_start, p_end, candidate)
        if start >= candidate.boundaries:
            assert value == candidate.element_tokens[start]
        elif end < start:
            assert value is None


def test_montagem_do_estado():
    previous = DialogueState({('Weather', 'Weather-city'): 'Denver'})
    predictions = {('Weather', 'Weather-city'): None, ('Weather', 'Weather-date'): 'Sunday'}
    state = assemble_state(predictions, previous)
    assert state.filled() == {('Weather', 'Weather-city'): 'Denver', ('Weather', 'Weather-date'): 'Sunday'}

    isolated = assemble_state(predictions, previous, carryover=False)
    assert isolated.filled() == {('Weather', 'Weather-date'): 'Sunday'}
    assert assemble_state({}, None).filled() == {}


def test_carryover_em_tres_turnos():
    city, date = ('Weather', 'Weather-city'), ('Weather', 'Weather-date')
    turns = [
        {city: 'Denver', date: None},
        {city: None, date: 'Sunday'},
        {city: 'Austin', date: None},
    ]
    state = None
    trace = []
    for predictions in turns:
        state = assemble_state(predictions, state)
        trace.append(state.filled())
    assert trace == [
        {city: 'Denver'},
        {city: 'Denver', date: 'Sunday'},
        {city: 'Austin', date: 'Sunday'},
    ]


def test_sub_grafos_por_canal():
    torch.manual_seed(6)
    encoder = SubgraphEncoder(4, channels=('membership', 'co_update'))
    nodes = torch.randn(5, 4)
    adjacency = {'membership': np.ones((5, 5), dtype=bool), 'co_update': np.eye(5, dtype=bool)}
    stacked = encoder(adjacency, nodes, num_slots=3)
    assert stacked.shape == (3, 2, 4)
    # só laços: cada slot atende a si mesmo
    assert torch.allclose(stacked[:, 1], torch.relu(nodes[:3]))


def test_camadas_apenas_dos_canais_ativos():
    encoder = SubgraphEncoder(4, channels=('membership', 'co_reference'))
    layers = {name.split('.')[1] for name, _ in encoder.named_parameters()}
    assert layers == {'membership', 'co_reference'}
    with pytest.raises(ConfigError):
        SubgraphEncoder(4, channels=('membership', 'vizinhanca'))
