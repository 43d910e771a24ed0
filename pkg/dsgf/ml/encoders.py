#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Codificadores
Codificador de diálogo e inicializador de embeddings agnóstico ao esquema
"""

import math
import zlib
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import torch
import torch.nn as nn

from ..core.errors import SchemaValidationError, SequenceTooLongError
from ..core.logger import get_ml_logger
from ..data.corpus import CLS_TOKEN, SEP_TOKEN, DialogueSample, tokenize
from ..data.schema import SchemaElement

logger = get_ml_logger()

DESCRIPTION_MAX_LEN = 64


@dataclass
class TokenEmbeddings:
    """Matriz B (K x d) com máscara; a linha 0 é b_[CLS]"""
    matrix: torch.Tensor
    mask: torch.Tensor

    @property
    def cls(self) -> torch.Tensor:
        return self.matrix[0]

    def __len__(self) -> int:
        return self.matrix.shape[0]


@dataclass
class NodeInitEmbeddings:
    """Matriz I ((N+M) x d) na ordem dos nós do grafo"""
    matrix: torch.Tensor
    node_ids: Tuple[str, ...]


def description_tokens(text: str, max_tokens: int = DESCRIPTION_MAX_LEN) -> List[str]:
    """Sequência [CLS] descrição [SEP] usada pelo inicializador"""
    return [CLS_TOKEN] + [t.text for t in tokenize(text)[:max_tokens]] + [SEP_TOKEN]


def sinusoidal_positions(max_len: int, hidden: int) -> torch.Tensor:
    position = torch.arange(max_len, dtype=torch.float32).unsqueeze(1)
    div_term = torch.exp(torch.arange(0, hidden, 2, dtype=torch.float32) * (-math.log(10000.0) / hidden))
    table = torch.zeros(max_len, hidden)
    table[:, 0::2] = torch.sin(position * div_term)
    table[:, 1::2] = torch.cos(position * div_term[: hidden // 2])
    return table


class DialogueEncoder(nn.Module):
    """Contrato comum: tokens -> embeddings contextuais"""

    hidden_size: int
    max_len: int

    def encode_batch(self, batch: Sequence[Sequence[str]]) -> Tuple[torch.Tensor, torch.Tensor]:
        """Retorna (embeddings [B, L, d], máscara [B, L])"""
        raise NotImplementedError

    def encode_tokens(self, tokens: Sequence[str]) -> TokenEmbeddings:
        if len(tokens) > self.max_len:
            raise SequenceTooLongError(
                f"sequência com {len(tokens)} tokens excede max_len={self.max_len}"
            )
        if not tokens:
            raise SequenceTooLongError("sequência vazia")
        matrix, mask = self.encode_batch([tokens])
        return TokenEmbeddings(matrix[0], mask[0])

    def encode_dialogue(self, sample: DialogueSample) -> TokenEmbeddings:
        """Embeddings contextuais de cada token da amostra"""
        return self.encode_tokens(sample.tokens)

    def encode_texts(self, texts: Sequence[str],
                     max_tokens: int = DESCRIPTION_MAX_LEN) -> torch.Tensor:
        """Vetor [CLS] de cada texto (descrições e valores candidatos)"""
        if not texts:
            return torch.zeros(0, self.hidden_size)
        matrix, _ = self.encode_batch([description_tokens(t, max_tokens) for t in texts])
        return matrix[:, 0]

    def init_schema_embeddings(self, schemata: Sequence[SchemaElement],
                               max_tokens: int = DESCRIPTION_MAX_LEN) -> NodeInitEmbeddings:
        """Embeddings iniciais dos nós a partir das descrições, sem parâmetros por domínio"""
        for element in schemata:
            if not element.description or not element.description.strip():
                raise SchemaValidationError(f"descrição vazia para {element.id}")
        ordered = [e for e in schemata if e.is_slot] + [e for e in schemata if not e.is_slot]
        matrix = self.encode_texts([e.description for e in ordered], max_tokens)
        return NodeInitEmbeddings(matrix, tuple(e.id for e in ordered))


class ToyEncoder(DialogueEncoder):
    """Tabela de hash de tokens + posições senoidais + um bloco de auto-atenção"""

    def __init__(self, hidden: int = 64, max_len: int = 512, hash_buckets: int = 4096,
                 num_heads: int = 1, dropout: float = 0.0):
        super().__init__()
        self.hidden_size = hidden
        self.max_len = max_len
        self.hash_buckets = hash_buckets
        self.embedding = nn.Embedding(hash_buckets, hidden)
        self.register_buffer('positions', sinusoidal_positions(max_len, hidden), persistent=False)
        self.attention = nn.MultiheadAttention(hidden, num_heads, dropout=dropout, batch_first=True)
        self.norm_attention = nn.LayerNorm(hidden)
        self.feed_forward = nn.Sequential(
            nn.Linear(hidden, 2 * hidden), nn.ReLU(), nn.Linear(2 * hidden, hidden)
        )
        self.norm_output = nn.LayerNorm(hidden)
        self.dropout = nn.Dropout(dropout)

    def token_ids(self, tokens: Sequence[str]) -> List[int]:
        """Hash estável (crc32) de cada token em minúsculas"""
        return [zlib.crc32(t.lower().encode('utf-8')) % self.hash_buckets
                if t not in (CLS_TOKEN, SEP_TOKEN) else (0 if t == CLS_TOKEN else 1)
                for t in tokens]

    def encode_batch(self, batch: Sequence[Sequence[str]]) -> Tuple[torch.Tensor, torch.Tensor]:
        length = max(len(tokens) for tokens in batch)
        if length > self.max_len:
            raise SequenceTooLongError(f"sequência com {length} tokens excede max_len={self.max_len}")
        device = self.embedding.weight.device
        ids = torch.zeros(len(batch), length, dtype=torch.long, device=device)
        mask = torch.zeros(len(batch), length, dtype=torch.bool, device=device)
        for row, tokens in enumerate(batch):
            ids[row, :len(tokens)] = torch.tensor(self.token_ids(tokens), dtype=torch.long)
            mask[row, :len(tokens)] = True

        x = self.embedding(ids) + self.positions[:length].to(self.embedding.weight.dtype)
        attended, _ = self.attention(x, x, x, key_padding_mask=~mask, need_weights=False)
        x = self.norm_attention(x + self.dropout(attended))
        x = self.norm_output(x + self.dropout(self.feed_forward(x)))
        return x * mask.unsqueeze(-1), mask


class PretrainedEncoder(DialogueEncoder):
    """Adaptador para um codificador pré-treinado (BERT base, uncased)"""

    def __init__(self, name: str = 'bert-base-uncased', max_len: int = 512,
                 cache_dir: Optional[str] = None):
        super().__init__()
        from transformers import AutoModel, AutoTokenizer

        logger.info(f"Carregando codificador pré-treinado {name} (cache: {cache_dir})")
        self.tokenizer = AutoTokenizer.from_pretrained(name, cache_dir=cache_dir)
        self.model = AutoModel.from_pretrained(name, cache_dir=cache_dir)
        self.hidden_size = self.model.config.hidden_size
        self.max_len = max_len

    def encode_batch(self, batch: Sequence[Sequence[str]]) -> Tuple[torch.Tensor, torch.Tensor]:
        encoded = self.tokenizer(
            [list(tokens) for tokens in batch], is_split_into_words=True,
            add_special_tokens=False, padding=True, return_tensors='pt'
        )
        limit = self.model.config.max_position_embeddings
        if encoded['input_ids'].shape[1] > limit:
            raise SequenceTooLongError(
                f"{encoded['input_ids'].shape[1]} sub-palavras excedem o limite do modelo ({limit})"
            )
        device = next(self.model.parameters()).device
        outputs = self.model(**{k: v.to(device) for k, v in encoded.items()}).last_hidden_state

        # primeira sub-palavra de cada palavra
        length = max(len(tokens) for tokens in batch)
        words = torch.zeros(len(batch), length, self.hidden_size, device=device)
        mask = torch.zeros(len(batch), length, dtype=torch.bool, device=device)
        for row in range(len(batch)):
            seen = set()
            for piece, word in enumerate(encoded.word_ids(row)):
                if word is None or word in seen:
                    continue
                seen.add(word)
                words[row, word] = outputs[row, piece]
                mask[row, word] = True
        return words, mask


def build_encoder(kind: str = 'toy', hidden: int = 64, max_len: int = 512,
                  hash_buckets: int = 4096, dropout: float = 0.0,
                  name: str = 'bert-base-uncased', cache_dir: Optional[str] = None) -> DialogueEncoder:
    """Fábrica de codificadores"""
    if kind == 'pretrained':
        return PretrainedEncoder(name, max_len, cache_dir)
    return ToyEncoder(hidden, max_len, hash_buckets, dropout=dropout)
