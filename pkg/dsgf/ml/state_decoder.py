#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Decodificador de Estado
Agregação de sub-grafos por relação e extração de spans sobre os elementos candidatos
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..core.errors import ConfigError, ShapeMismatchError
from ..core.logger import get_ml_logger
from ..data.corpus import SPECIAL_TOKENS, CandidateElements, DialogueSample, DialogueState
from .graph_net import MembershipAttentionLayer

logger = get_ml_logger()

SUBGRAPH_CHANNELS = ('membership', 'co_reference', 'co_update', 'co_occurrence')


@dataclass
class SubgraphEmbeddings:
    """S empilhado (slots x canais x h), pesos beta e a fusão s"""
    stacked: torch.Tensor
    beta: Optional[torch.Tensor]
    fused: torch.Tensor
    channels: Tuple[str, ...] = SUBGRAPH_CHANNELS


@dataclass
class SpanPrediction:
    """Distribuições de início e fim por slot sobre os elementos candidatos"""
    start_logits: torch.Tensor
    end_logits: torch.Tensor

    @property
    def p_start(self) -> torch.Tensor:
        return F.softmax(self.start_logits, dim=-1)

    @property
    def p_end(self) -> torch.Tensor:
        return F.softmax(self.end_logits, dim=-1)


class SubgraphEncoder(nn.Module):
    """Uma camada de atenção por canal, restrita às arestas do canal"""

    def __init__(self, hidden: int, channels: Sequence[str] = SUBGRAPH_CHANNELS, dropout: float = 0.0):
        super().__init__()
        unknown = [name for name in channels if name not in SUBGRAPH_CHANNELS]
        if unknown:
            raise ConfigError(f"canais de sub-grafo desconhecidos: {unknown}")
        self.channels = tuple(channels)
        self.channel_layers = nn.ModuleDict(
            {name: MembershipAttentionLayer(hidden, dropout) for name in self.channels}
        )

    def subgraph_embed(self, channel: str, adjacency, nodes: torch.Tensor,
                       num_slots: int) -> torch.Tensor:
        """Embeddings dos slots em um sub-grafo"""
        return self.channel_layers[channel](nodes, adjacency)[:num_slots]

    def forward(self, adjacencies: Dict[str, object], nodes: torch.Tensor,
                num_slots: int) -> torch.Tensor:
        """S: [slots, canais ativos, h]"""
        return torch.stack(
            [self.subgraph_embed(c, adjacencies[c], nodes, num_slots) for c in self.channels], dim=1
        )


class SubgraphAggregator(nn.Module):
    """beta = softmax(S^T tanh(W_s b_cls + b_s)); s = S beta"""

    def __init__(self, hidden: int, num_channels: int = len(SUBGRAPH_CHANNELS),
                 use_attention: bool = True):
        super().__init__()
        self.context = nn.Linear(hidden, hidden)
        self.use_attention = use_attention
        # sem agregação por atenção: concatena e projeta
        self.concat_projection = None if use_attention else nn.Linear(num_channels * hidden, hidden)

    def beta(self, stacked: torch.Tensor, b_cls: torch.Tensor) -> torch.Tensor:
        if stacked.dim() != 3 or b_cls.shape[-1] != stacked.shape[-1]:
            raise ShapeMismatchError(
                f"S {list(stacked.shape)} incompatível com b_cls {list(b_cls.shape)}"
            )
        query = torch.tanh(self.context(b_cls))
        return F.softmax(stacked @ query, dim=-1)

    def forward(self, stacked: torch.Tensor, b_cls: torch.Tensor) -> SubgraphEmbeddings:
        if not self.use_attention:
            fused = self.concat_projection(stacked.reshape(stacked.shape[0], -1))
            return SubgraphEmbeddings(stacked, None, fused)
        beta = self.beta(stacked, b_cls)
        fused = (stacked * beta.unsqueeze(-1)).sum(dim=1)
        return SubgraphEmbeddings(stacked, beta, fused)


def aggregate_subgraphs(aggregator: SubgraphAggregator, stacked: torch.Tensor,
                        b_cls: torch.Tensor) -> SubgraphEmbeddings:
    return aggregator(stacked, b_cls)


class SpanPredictor(nn.Module):
    """[l_s, l_e] = r_d tanh(W_d (s * c) + b_d) para cada elemento candidato c"""

    def __init__(self, hidden: int):
        super().__init__()
        self.bilinear = nn.Linear(hidden, hidden)  # W_d, b_d
        self.readout = nn.Linear(hidden, 2, bias=False)  # r_d

    def forward(self, slots: torch.Tensor, candidates: torch.Tensor) -> SpanPrediction:
        if candidates.dim() != 2 or candidates.shape[0] == 0:
            raise ShapeMismatchError("elementos candidatos vazios")
        if slots.shape[-1] != candidates.shape[-1]:
            raise ShapeMismatchError(
                f"largura dos slots ({slots.shape[-1]}) difere dos candidatos ({candidates.shape[-1]})"
            )
        interaction = slots.unsqueeze(1) * candidates.unsqueeze(0)
        logits = self.readout(torch.tanh(self.bilinear(interaction)))
        return SpanPrediction(logits[..., 0], logits[..., 1])


def predict_span(predictor: SpanPredictor, slots: torch.Tensor,
                 candidates: torch.Tensor) -> SpanPrediction:
    return predictor(slots, candidates)


def resolve_value(p_start: torch.Tensor, p_end: torch.Tensor, candidate: CandidateElements,
                  sample: Optional[DialogueSample] = None) -> Optional[str]:
    """Regras de decodificação: fim antes do início -> None; início no vocabulário -> valor"""
    start = int(torch.argmax(p_start).item())
    end = int(torch.argmax(p_end).item())
    if start >= candidate.boundaries:
        return candidate.element_tokens[start]
    if end < start:
        return None
    end = min(end, candidate.boundaries - 1)
    if sample is not None:
        text = sample.detokenize(start, end)
        return text or None
    pieces = [t for t in candidate.element_tokens[start:end + 1] if t not in SPECIAL_TOKENS]
    return ' '.join(pieces) or None


def assemble_state(predictions: Dict[Tuple[str, str], Optional[str]],
                   previous: Optional[DialogueState] = None,
                   carryover: bool = True) -> DialogueState:
    """Valores previstos sobrescrevem; None mantém o valor anterior (carryover)"""
    assignments: Dict[Tuple[str, str], Optional[str]] = {}
    if previous is not None and carryover:
        assignments.update(previous.assignments)
    for key, value in predictions.items():
        if value is not None or not carryover:
            assignments[key] = value
        else:
            assignments.setdefault(key, None)
    return DialogueState(assignments)
