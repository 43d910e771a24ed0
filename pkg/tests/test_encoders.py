#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Testes dos Codificadores
"""

import pytest
import torch

from dsgf.core.errors import SchemaValidationError, SequenceTooLongError
from dsgf.data.corpus import CLS_TOKEN, SEP_TOKEN
from dsgf.data.schema import SchemaElement, ElementKind, domain, slot
from dsgf.ml.encoders import ToyEncoder, build_encoder, description_tokens


@pytest.fixture
def encoder():
    torch.manual_seed(0)
    return ToyEncoder(hidden=16, max_len=512, hash_buckets=256).eval()


def test_sequencia_so_com_cls(encoder):
    embeddings = encoder.encode_tokens([CLS_TOKEN])
    assert embeddings.matrix.shape == (1, 16)
    assert embeddings.cls.shape == (16,)


def test_limite_de_comprimento(encoder):
    assert len(encoder.encode_tokens(['word'] * 512)) == 512
    with pytest.raises(SequenceTooLongError):
        encoder.encode_tokens(['word'] * 513)


def test_descricoes_iguais_geram_linhas_iguais(encoder):
    elements = [
        domain('Hotels', 'reserve a place to stay'),
        slot('Hotels', 'city', 'city of the place'),
        slot('Hotels', 'town', 'city of the place'),
    ]
    init = encoder.init_schema_embeddings(elements)
    assert init.node_ids == ('Hotels-city', 'Hotels-town', 'Hotels')
    assert torch.allclose(init.matrix[0], init.matrix[1])


def test_linha_igual_ao_cls_da_descricao(encoder):
    elements = [domain('Weather', 'check the weather'), slot('Weather', 'city', 'name of the city to check')]
    init = encoder.init_schema_embeddings(elements)
    alone = encoder.encode_tokens(description_tokens('name of the city to check'))
    assert torch.allclose(init.matrix[0], alone.matrix[0], atol=1e-5)


def test_descricao_vazia(encoder):
    element = SchemaElement('X', ElementKind.DOMAIN, 'X', '')
    with pytest.raises(SchemaValidationError):
        encoder.init_schema_embeddings([element])


def test_hash_estavel_e_insensivel_a_caixa(encoder):
    assert encoder.token_ids(['Denver']) == encoder.token_ids(['denver'])
    assert encoder.token_ids([CLS_TOKEN, SEP_TOKEN]) == [0, 1]
    other = ToyEncoder(hidden=16, max_len=8, hash_buckets=256)
    assert other.token_ids(['pool', 'ride']) == encoder.token_ids(['pool', 'ride'])


def test_preenchimento_nao_altera_resultado(encoder):
    short = ['[CLS]', 'a', 'ride', '[SEP]']
    longer = ['[CLS]', 'book', 'a', 'cheap', 'ride', 'now', '[SEP]']
    batch, mask = encoder.encode_batch([short, longer])
    assert mask[0].sum() == 4
    assert torch.all(batch[0, 4:] == 0)
    assert torch.allclose(batch[0, :4], encoder.encode_tokens(short).matrix, atol=1e-5)


def test_amostra_do_dialogo(encoder, synth_samples):
    sample = synth_samples[3]
    embeddings = encoder.encode_dialogue(sample)
    assert embeddings.matrix.shape == (len(sample.tokens), 16)
    assert embeddings.mask.all()


def test_fabrica_toy():
    built = build_encoder('toy', hidden=8, max_len=32, hash_buckets=64)
    assert isinstance(built, ToyEncoder)
    assert built.hidden_size == 8 and built.max_len == 32


def _central_difference(fn, tensor, step=1e-3):
    """Gradiente numérico de uma perda escalar, uma coordenada por vez"""
    grad = torch.zeros_like(tensor)
    flat, out = tensor.view(-1), grad.view(-1)
    for i in range(flat.numel()):
        original = flat[i].item()
        flat[i] = original + step
        plus = fn().item()
        flat[i] = original - step
        minus = fn().item()
        flat[i] = original
        out[i] = (plus - minus) / (2 * step)
    return grad


def test_gradiente_do_codificador_por_diferencas_centrais():
    torch.manual_seed(3)
    toy = ToyEncoder(hidden=4, max_len=16, hash_buckets=8).double().eval()
    tokens = [CLS_TOKEN, 'pool', 'ride', 'to', 'denver', SEP_TOKEN]
    weights = torch.randn(len(tokens), 4, dtype=torch.float64)

    def loss():
        return (toy.encode_tokens(tokens).matrix * weights).sum()

    parameters = {
        'embedding': toy.embedding.weight,
        'attention.in_proj': toy.attention.in_proj_weight,
        'attention.out_proj': toy.attention.out_proj.weight,
    }
    toy.zero_grad()
    loss().backward()
    for name, parameter in parameters.items():
        analytic = parameter.grad.detach().clone()
        with torch.no_grad():
            numeric = _central_difference(loss, parameter.detach())
        error = (analytic - numeric).norm() / (analytic.norm() + numeric.norm()).clamp_min(1e-12)
        assert error.item() <= 1e-4, name
