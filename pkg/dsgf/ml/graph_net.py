#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Rede de Grafo de Esquema
Raciocínio de pertinência slot-domínio, fusão esquema-diálogo e completamento
de relações dinâmicas
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..core.errors import ConfigError, ShapeMismatchError
from ..core.logger import get_ml_logger
from ..data.relation_labeler import RelationMatrix

logger = get_ml_logger()

NUM_RELATIONS = 4


@dataclass
class NodeEmbeddings:
    """Embeddings dos nós (N+M) x h com o estágio que os produziu"""
    matrix: torch.Tensor
    stage: str = 'membership'


@dataclass
class RelationLogits:
    """Escores N x N x 4 das relações entre pares de slots"""
    logits: torch.Tensor
    slot_ids: Tuple[str, ...] = ()

    @property
    def probabilities(self) -> torch.Tensor:
        return F.softmax(self.logits, dim=-1)

    def predicted(self) -> RelationMatrix:
        """Matriz A por argmax (empate -> menor índice)"""
        if self.logits.shape[0] == 0:
            return RelationMatrix.none(self.slot_ids)
        labels = self.logits.detach().argmax(dim=-1).cpu().numpy()
        np.fill_diagonal(labels, 0)
        return RelationMatrix(self.slot_ids, labels)


def _as_mask(adjacency, device) -> torch.Tensor:
    if isinstance(adjacency, torch.Tensor):
        return adjacency.to(device=device, dtype=torch.bool)
    return torch.as_tensor(np.asarray(adjacency, dtype=bool), device=device)


class MembershipAttentionLayer(nn.Module):
    """Camada de atenção sobre vizinhos: h_ij = ReLU(W^T [x_i, x_j]), out_i = ReLU(sum alpha_ij x_j)"""

    def __init__(self, hidden: int, dropout: float = 0.0):
        super().__init__()
        self.hidden = hidden
        self.score = nn.Linear(2 * hidden, 1, bias=False)
        self.dropout = nn.Dropout(dropout)

    def attention(self, x: torch.Tensor, adjacency) -> torch.Tensor:
        """Coeficientes alpha (linhas somam 1 sobre N_i)"""
        if x.dim() != 2 or x.shape[1] != self.hidden:
            raise ShapeMismatchError(f"esperado [n, {self.hidden}], recebido {list(x.shape)}")
        mask = _as_mask(adjacency, x.device)
        if mask.shape != (x.shape[0], x.shape[0]):
            raise ShapeMismatchError(
                f"adjacência {list(mask.shape)} incompatível com {x.shape[0]} nós"
            )
        weight = self.score.weight[0]
        left = x @ weight[:self.hidden]
        right = x @ weight[self.hidden:]
        scores = F.relu(left.unsqueeze(1) + right.unsqueeze(0))
        scores = scores.masked_fill(~mask, float('-inf'))
        return F.softmax(scores, dim=-1)

    def forward(self, x: torch.Tensor, adjacency) -> torch.Tensor:
        alpha = self.dropout(self.attention(x, adjacency))
        return F.relu(alpha @ x)


def membership_attention_layer(layer: MembershipAttentionLayer, adjacency,
                               embeddings: torch.Tensor) -> torch.Tensor:
    return layer(embeddings, adjacency)


class MembershipStack(nn.Module):
    """l camadas de raciocínio de pertinência, parâmetros por camada"""

    def __init__(self, hidden: int, layers: int = 3, dropout: float = 0.0):
        super().__init__()
        if layers < 1:
            raise ConfigError(f"graph.layers deve ser >= 1: {layers}")
        self.layers = nn.ModuleList(MembershipAttentionLayer(hidden, dropout) for _ in range(layers))

    def forward(self, x: torch.Tensor, adjacency) -> NodeEmbeddings:
        for layer in self.layers:
            x = layer(x, adjacency)
        return NodeEmbeddings(x, 'membership')


class SchemaDialogueFusion(nn.Module):
    """Atenção multi-cabeça nó -> tokens seguida da projeção W_a"""

    def __init__(self, hidden: int, heads: int = 4, dropout: float = 0.0):
        super().__init__()
        if heads < 1 or hidden % heads != 0:
            raise ConfigError(f"graph.heads ({heads}) deve dividir graph.hidden ({hidden})")
        self.attention = nn.MultiheadAttention(hidden, heads, dropout=dropout, batch_first=True)
        self.output = nn.Linear(hidden, hidden, bias=False)

    def attention_weights(self, nodes: torch.Tensor, tokens: torch.Tensor,
                          mask: Optional[torch.Tensor] = None) -> torch.Tensor:
        _, weights = self._attend(nodes, tokens, mask, need_weights=True)
        return weights

    def _attend(self, nodes, tokens, mask, need_weights=False):
        if tokens.dim() != 2 or tokens.shape[0] == 0:
            raise ShapeMismatchError("matriz de tokens vazia")
        if nodes.shape[-1] != tokens.shape[-1]:
            raise ShapeMismatchError(
                f"largura dos nós ({nodes.shape[-1]}) difere da dos tokens ({tokens.shape[-1]})"
            )
        padding = None if mask is None else ~mask.to(torch.bool).unsqueeze(0)
        attended, weights = self.attention(
            nodes.unsqueeze(0), tokens.unsqueeze(0), tokens.unsqueeze(0),
            key_padding_mask=padding, need_weights=need_weights
        )
        return attended[0], (weights[0] if weights is not None else None)

    def forward(self, nodes: torch.Tensor, tokens: torch.Tensor,
                mask: Optional[torch.Tensor] = None) -> NodeEmbeddings:
        attended, _ = self._attend(nodes, tokens, mask)
        return NodeEmbeddings(self.output(attended), 'fused')


def fuse_dialogue(fusion: SchemaDialogueFusion, graph_embeddings: torch.Tensor,
                  token_embeddings: torch.Tensor, mask: Optional[torch.Tensor] = None) -> NodeEmbeddings:
    return fusion(graph_embeddings, token_embeddings, mask)


class RelationCompletion(nn.Module):
    """MLP sobre g_i (+) g_j com softmax de 4 classes, calculado uma vez por par i<j"""

    def __init__(self, hidden: int, depth: int = 8, dropout: float = 0.0):
        super().__init__()
        if depth < 1:
            raise ConfigError(f"graph.relation_mlp_depth deve ser >= 1: {depth}")
        layers = []
        width = 2 * hidden
        for _ in range(depth - 1):
            layers += [nn.Linear(width, hidden), nn.ReLU(), nn.Dropout(dropout)]
            width = hidden
        layers.append(nn.Linear(width, NUM_RELATIONS))
        self.mlp = nn.Sequential(*layers)

    def forward(self, slots: torch.Tensor, slot_ids: Tuple[str, ...] = ()) -> RelationLogits:
        n = slots.shape[0]
        logits = slots.new_zeros(n, n, NUM_RELATIONS)
        if n < 2:
            return RelationLogits(logits, tuple(slot_ids))
        rows, cols = torch.triu_indices(n, n, offset=1, device=slots.device)
        pair_logits = self.mlp(torch.cat([slots[rows], slots[cols]], dim=-1))
        logits = logits.index_put((rows, cols), pair_logits)
        logits = logits.index_put((cols, rows), pair_logits)
        return RelationLogits(logits, tuple(slot_ids))


def complete_dynamic_relations(completion: RelationCompletion, fused_slots: torch.Tensor,
                               slot_ids: Tuple[str, ...] = ()) -> RelationLogits:
    return completion(fused_slots, slot_ids)


def run_membership_stack(stack: MembershipStack, adjacency,
                         init_embeddings: torch.Tensor) -> NodeEmbeddings:
    """Aplica as l camadas em sequência, cada uma sobre a saída da anterior"""
    if init_embeddings.shape[0] != _as_mask(adjacency, init_embeddings.device).shape[0]:
        raise ShapeMismatchError("número de linhas de I difere do número de nós do grafo")
    return stack(init_embeddings, adjacency)
