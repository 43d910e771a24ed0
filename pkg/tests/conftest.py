#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Fixtures de Teste
Corpus sintético, amostras e uma configuração de modelo pequena
"""

import logging
from pathlib import Path

import pytest
import torch

from dsgf.core.config import TrainConfig
from dsgf.data.corpus import iter_samples, parse_dialogue
from dsgf.data.relation_labeler import build_cooccurrence_table
from dsgf.data.schema import build_schema_graph, domain, slot
from dsgf.data.synthetic import generate_dialogues, synthetic_schema
from dsgf.ml.model import DSGFNet

FIXTURES = Path(__file__).parent / 'fixtures'


@pytest.fixture(autouse=True)
def ambiente(monkeypatch, tmp_path):
    """Sem arquivo de log e saídas isoladas por teste"""
    monkeypatch.setenv('DSGF_LOG_FILE', '')
    monkeypatch.setenv('DSGF_OUTPUT_DIR', str(tmp_path / 'runs'))
    monkeypatch.setenv('DSGF_DEVICE', 'cpu')
    yield
    dsgf_logger = logging.getLogger('dsgf')
    for handler in dsgf_logger.handlers[:]:
        dsgf_logger.removeHandler(handler)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def synth_elements():
    return synthetic_schema()


@pytest.fixture
def synth_graph(synth_elements):
    return build_schema_graph(synth_elements)


@pytest.fixture
def tiny_graph():
    """Um domínio com um slot"""
    return build_schema_graph([
        domain('Weather', 'check the weather forecast'),
        slot('Weather', 'city', 'name of the city'),
    ])


@pytest.fixture
def synth_dialogues(synth_graph):
    return [parse_dialogue(record, synth_graph) for record in generate_dialogues(10, seed=7)]


@pytest.fixture
def synth_table(synth_dialogues):
    return build_cooccurrence_table(d.final_state() for d in synth_dialogues)


@pytest.fixture
def synth_samples(synth_dialogues, synth_graph, synth_table):
    return list(iter_samples(synth_dialogues, synth_graph, synth_table, max_len=128))


@pytest.fixture
def tiny_config() -> TrainConfig:
    return TrainConfig(
        encoder_hidden=16, graph_hidden=16, graph_heads=2, graph_layers=2,
        relation_mlp_depth=2, dropout=0.0, hash_buckets=512, max_len=128,
        epochs=1, batch_size=4, seed=3
    )


@pytest.fixture
def tiny_model(tiny_config):
    torch.manual_seed(0)
    return DSGFNet(tiny_config).eval()
