#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Rede Completa
Codificação, grafo de esquema, evolução dinâmica e decodificação do estado
"""

import copy
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import torch
import torch.nn as nn

from ..core.config import TrainConfig
from ..core.errors import ShapeMismatchError
from ..core.logger import get_ml_logger
from ..data.corpus import CandidateElements, DialogueSample, DialogueState
from ..data.relation_labeler import RelationMatrix
from ..data.schema import Channel, SchemaGraph
from .encoders import DialogueEncoder, TokenEmbeddings, build_encoder
from .graph_net import (
    MembershipStack, NodeEmbeddings, RelationCompletion, RelationLogits, SchemaDialogueFusion,
    complete_dynamic_relations, fuse_dialogue, run_membership_stack
)
from .state_decoder import (
    SpanPrediction, SpanPredictor, SubgraphAggregator, SubgraphEmbeddings, SubgraphEncoder,
    aggregate_subgraphs, assemble_state, predict_span, resolve_value
)

logger = get_ml_logger()

CHANNELS_BY_SUBSET = {
    'all': ('membership', 'co_reference', 'co_update', 'co_occurrence'),
    'fully_connected': ('membership', 'co_reference', 'co_update', 'co_occurrence'),
    'coref_only': ('membership', 'co_reference'),
    'coupdate_only': ('membership', 'co_update'),
    'cooccur_only': ('membership', 'co_occurrence'),
    'none': ('membership',),
}


@dataclass
class ModelOutput:
    """Saídas intermediárias e finais de uma passada"""
    tokens: TokenEmbeddings
    membership: NodeEmbeddings
    fused: NodeEmbeddings
    relation_logits: RelationLogits
    decoder_relations: RelationMatrix
    subgraphs: SubgraphEmbeddings
    spans: SpanPrediction
    candidate: CandidateElements
    graph: SchemaGraph


class DSGFNet(nn.Module):
    """Rede de fusão de grafo de esquema dinâmico para rastreamento de estado"""

    def __init__(self, config: TrainConfig, encoder: Optional[DialogueEncoder] = None,
                 cache_dir: Optional[str] = None):
        super().__init__()
        self.config = config
        hidden = config.graph_hidden
        if encoder is None:
            encoder = build_encoder(
                config.encoder_kind, config.encoder_hidden, config.max_len,
                config.hash_buckets, dropout=config.dropout,
                name=config.encoder_name, cache_dir=cache_dir
            )
        self.encoder = encoder
        self.schema_encoder = encoder if config.share_encoder else copy.deepcopy(encoder)
        # projeção d -> h entre codificadores e rede de grafo
        self.projection = nn.Linear(encoder.hidden_size, hidden)

        self.membership = MembershipStack(hidden, config.graph_layers, config.dropout)
        self.fusion = SchemaDialogueFusion(hidden, config.graph_heads, config.dropout)
        self.completion = RelationCompletion(hidden, config.relation_mlp_depth, config.dropout)

        self.relation_subset = config.effective_relation_subset
        self.channels = CHANNELS_BY_SUBSET[self.relation_subset]
        self.subgraphs = SubgraphEncoder(hidden, self.channels, config.dropout)
        self.aggregator = SubgraphAggregator(hidden, len(self.channels), config.use_aggregation)
        self.span = SpanPredictor(hidden)

    @property
    def device(self) -> torch.device:
        return self.projection.weight.device

    def relation_parameters(self):
        """Parâmetros usados apenas pelo identificador de relações"""
        return list(self.completion.parameters())

    def static_adjacency(self, graph: SchemaGraph) -> torch.Tensor:
        """Adjacência estática, identidade sem pertinência"""
        return torch.as_tensor(graph.static_adjacency(self.config.use_membership), device=self.device)

    def channel_adjacencies(self, graph: SchemaGraph,
                            relations: RelationMatrix) -> Dict[str, torch.Tensor]:
        """Adjacência de cada sub-grafo usado pelo decodificador"""
        adjacencies = {'membership': self.static_adjacency(graph)}
        n = graph.num_slots
        for name in self.channels[1:]:
            if self.relation_subset == 'fully_connected':
                matrix = np.eye(len(graph), dtype=bool)
                matrix[:n, :n] = True
            else:
                matrix = graph.channel_adjacency(Channel(name), relations)
            adjacencies[name] = torch.as_tensor(matrix, device=self.device)
        return adjacencies

    def embed_schema(self, graph: SchemaGraph) -> torch.Tensor:
        init = self.schema_encoder.init_schema_embeddings(
            graph.elements, self.config.description_max_len
        )
        return self.projection(init.matrix)

    def embed_vocabulary(self, vocabulary) -> torch.Tensor:
        values = self.schema_encoder.encode_texts(list(vocabulary), self.config.description_max_len)
        if values.shape[0] == 0:
            return values.new_zeros(0, self.config.graph_hidden)
        return self.projection(values)

    def forward(self, sample: DialogueSample, schema: SchemaGraph,
                relations: Optional[RelationMatrix] = None) -> ModelOutput:
        """Passada completa; `relations` dadas = teacher forcing do decodificador"""
        graph = schema.subgraph(sample.domains)
        if graph.slot_ids != sample.slot_ids:
            raise ShapeMismatchError(
                f"slots da amostra {sample.key} não coincidem com o esquema ativo"
            )
        n = graph.num_slots

        tokens = self.encoder.encode_dialogue(sample)
        context = self.projection(tokens.matrix)
        nodes = self.embed_schema(graph)

        membership = run_membership_stack(self.membership, self.static_adjacency(graph), nodes)
        fused = fuse_dialogue(self.fusion, membership.matrix, context, tokens.mask)
        relation_logits = complete_dynamic_relations(self.completion, fused.matrix[:n], graph.slot_ids)

        decoder_relations = relations if relations is not None else relation_logits.predicted()
        stacked = self.subgraphs(
            self.channel_adjacencies(graph, decoder_relations), fused.matrix, n
        )
        subgraphs = aggregate_subgraphs(self.aggregator, stacked, context[0])

        candidates = torch.cat([context, self.embed_vocabulary(sample.vocabulary)], dim=0)
        spans = predict_span(self.span, subgraphs.fused, candidates)
        return ModelOutput(
            tokens=tokens, membership=membership, fused=fused,
            relation_logits=relation_logits, decoder_relations=decoder_relations,
            subgraphs=subgraphs, spans=spans, candidate=sample.candidate, graph=graph
        )

    @torch.no_grad()
    def predict(self, sample: DialogueSample, schema: SchemaGraph,
                previous: Optional[DialogueState] = None,
                carryover: Optional[bool] = None) -> Tuple[DialogueState, ModelOutput]:
        """Estado previsto do turno usando as relações previstas (argmax)"""
        carryover = self.config.carryover if carryover is None else carryover
        output = self.forward(sample, schema)
        p_start, p_end = output.spans.p_start, output.spans.p_end
        values = {}
        for i, slot_id in enumerate(output.graph.slot_ids):
            key = (output.graph.domain_of(slot_id), slot_id)
            values[key] = resolve_value(p_start[i], p_end[i], output.candidate, sample)
        return assemble_state(values, previous, carryover), output

    def parameter_shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: tuple(p.shape) for name, p in self.named_parameters()}
