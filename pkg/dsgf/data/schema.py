#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Esquemas e Grafo de Esquema
Domínios, slots, descrições e o grafo estático de pertinência
"""

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from pathlib import Path
from typing import Dict, Any, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.errors import CorpusParseError, NodeLookupError, SchemaValidationError
from ..core.logger import get_data_logger
from .relation_labeler import Relation, RelationMatrix

logger = get_data_logger()


class ElementKind(Enum):
    """Tipos de nó do grafo"""
    DOMAIN = "domain"
    SLOT = "slot"


class Channel(Enum):
    """Canais de arestas do grafo de esquema"""
    STATIC = "static"
    CO_REFERENCE = "co_reference"
    CO_UPDATE = "co_update"
    CO_OCCURRENCE = "co_occurrence"

    @property
    def relation(self) -> Optional[Relation]:
        return {
            Channel.CO_REFERENCE: Relation.CO_REFERENCE,
            Channel.CO_UPDATE: Relation.CO_UPDATE,
            Channel.CO_OCCURRENCE: Relation.CO_OCCURRENCE,
        }.get(self)


@dataclass(frozen=True)
class SchemaElement:
    """Domínio ou slot com descrição em linguagem natural"""
    id: str
    kind: ElementKind
    name: str
    description: str
    parent_domain: Optional[str] = None
    is_categorical: bool = False
    possible_values: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def is_slot(self) -> bool:
        return self.kind is ElementKind.SLOT

    def to_dict(self) -> Dict[str, Any]:
        """Converte para dicionário"""
        return {
            'id': self.id,
            'kind': self.kind.value,
            'name': self.name,
            'description': self.description,
            'parent_domain': self.parent_domain,
            'is_categorical': self.is_categorical,
            'possible_values': list(self.possible_values)
        }


def domain(name: str, description: str) -> SchemaElement:
    return SchemaElement(id=name, kind=ElementKind.DOMAIN, name=name, description=description)


def slot(domain_id: str, name: str, description: str,
         possible_values: Sequence[str] = (), is_categorical: Optional[bool] = None) -> SchemaElement:
    categorical = bool(possible_values) if is_categorical is None else is_categorical
    slot_id = name if name.startswith(f"{domain_id}-") else f"{domain_id}-{name}"
    return SchemaElement(
        id=slot_id, kind=ElementKind.SLOT, name=name, description=description,
        parent_domain=domain_id, is_categorical=categorical,
        possible_values=tuple(possible_values) if categorical else ()
    )


def validate_schemata(schemata: Sequence[SchemaElement]) -> None:
    """Verifica as invariantes dos elementos; lança SchemaValidationError"""
    seen = set()
    domains = {e.id for e in schemata if e.kind is ElementKind.DOMAIN}
    for element in schemata:
        if element.id in seen:
            raise SchemaValidationError(f"id duplicado no esquema: {element.id}")
        seen.add(element.id)
        if not element.description or not element.description.strip():
            raise SchemaValidationError(f"descrição vazia para {element.id}")
        if element.is_slot and element.parent_domain not in domains:
            raise SchemaValidationError(
                f"slot órfão {element.id}: domínio {element.parent_domain!r} inexistente"
            )
    if not domains:
        raise SchemaValidationError("o esquema precisa de pelo menos um domínio")


class SchemaGraph:
    """Grafo de esquema: slots primeiro, depois domínios, na ordem de entrada"""

    def __init__(self, elements: Sequence[SchemaElement],
                 dynamic_edges: Optional[RelationMatrix] = None):
        slots = [e for e in elements if e.is_slot]
        domains = [e for e in elements if not e.is_slot]
        self.elements: Tuple[SchemaElement, ...] = tuple(slots + domains)
        self.nodes: Tuple[str, ...] = tuple(e.id for e in self.elements)
        self.slot_ids: Tuple[str, ...] = tuple(e.id for e in slots)
        self.domain_ids: Tuple[str, ...] = tuple(e.id for e in domains)
        self._index = {node: i for i, node in enumerate(self.nodes)}
        self._by_id = {e.id: e for e in self.elements}

        size = len(self.nodes)
        adjacency = np.eye(size, dtype=bool)
        for element in slots:
            i, d = self._index[element.id], self._index[element.parent_domain]
            adjacency[i, d] = adjacency[d, i] = True
        for a, b in combinations(self.domain_ids, 2):
            i, j = self._index[a], self._index[b]
            adjacency[i, j] = adjacency[j, i] = True
        adjacency.setflags(write=False)
        self.static_edges = adjacency

        if dynamic_edges is None:
            dynamic_edges = RelationMatrix.none(self.slot_ids)
        if dynamic_edges.slot_ids != self.slot_ids:
            raise SchemaValidationError("arestas dinâmicas devem cobrir exatamente os slots do grafo")
        self.dynamic_edges = dynamic_edges

    @property
    def num_slots(self) -> int:
        return len(self.slot_ids)

    @property
    def num_domains(self) -> int:
        return len(self.domain_ids)

    def __len__(self) -> int:
        return len(self.nodes)

    def index(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise NodeLookupError(f"nó desconhecido no grafo de esquema: {node_id}")

    def element(self, node_id: str) -> SchemaElement:
        return self.elements[self.index(node_id)]

    def slots_of(self, domain_id: str) -> List[str]:
        return [s for s in self.slot_ids if self._by_id[s].parent_domain == domain_id]

    def domain_of(self, slot_id: str) -> str:
        return self.element(slot_id).parent_domain

    def with_relations(self, relations: RelationMatrix) -> 'SchemaGraph':
        """Novo grafo com as arestas dinâmicas de um turno"""
        return SchemaGraph(self.elements, relations)

    def subgraph(self, domain_ids: Sequence[str]) -> 'SchemaGraph':
        """Restringe o grafo aos domínios listados e seus slots"""
        wanted = set(domain_ids)
        for domain_id in wanted:
            if domain_id not in self._index or self._by_id[domain_id].is_slot:
                raise NodeLookupError(f"domínio desconhecido: {domain_id}")
        kept = [
            e for e in self.elements
            if (e.is_slot and e.parent_domain in wanted) or (not e.is_slot and e.id in wanted)
        ]
        return SchemaGraph(kept)

    def static_adjacency(self, use_membership: bool = True) -> np.ndarray:
        """Adjacência estática; identidade quando a pertinência está desligada"""
        if use_membership:
            return self.static_edges.copy()
        return np.eye(len(self), dtype=bool)

    def channel_adjacency(self, channel: Channel,
                          relations: Optional[RelationMatrix] = None) -> np.ndarray:
        """Adjacência (N+M)x(N+M) de um canal, sempre com laços"""
        if channel is Channel.STATIC:
            return self.static_adjacency()
        relations = relations if relations is not None else self.dynamic_edges
        size = len(self)
        adjacency = np.eye(size, dtype=bool)
        n = self.num_slots
        adjacency[:n, :n] |= relations.adjacency(channel.relation)
        return adjacency

    def neighborhood(self, node_id: str, channel: Channel = Channel.STATIC) -> List[str]:
        """Vizinhança N_i de um nó em um canal (inclui o próprio nó)"""
        i = self.index(node_id)
        if isinstance(channel, str):
            channel = Channel(channel)
        row = self.channel_adjacency(channel)[i]
        return [self.nodes[j] for j in np.flatnonzero(row)]

    def edges(self) -> List[Tuple[str, str]]:
        """Arestas estáticas não ordenadas, incluindo laços"""
        rows, cols = np.nonzero(np.triu(self.static_edges))
        return [(self.nodes[i], self.nodes[j]) for i, j in zip(rows.tolist(), cols.tolist())]

    def candidate_vocabulary(self) -> List[str]:
        """Valores possíveis dos slots categóricos, em ordem, sem repetição"""
        vocabulary: List[str] = []
        seen = set()
        for slot_id in self.slot_ids:
            for value in self._by_id[slot_id].possible_values:
                key = value.casefold()
                if key not in seen:
                    seen.add(key)
                    vocabulary.append(value)
        return vocabulary

    def render(self) -> str:
        """Representação textual dos nós e arestas estáticas"""
        lines = [f"Nós ({len(self)}):"]
        for i, element in enumerate(self.elements):
            lines.append(f"  [{i}] {element.kind.value:<6} {element.id}")
        edges = self.edges()
        lines.append(f"Arestas estáticas ({len(edges)}):")
        for a, b in edges:
            lines.append(f"  {a} -- {b}")
        return '\n'.join(lines)


def build_schema_graph(schemata: Sequence[SchemaElement]) -> SchemaGraph:
    """Constrói o grafo de esquema com as três classes de arestas estáticas"""
    validate_schemata(schemata)
    graph = SchemaGraph(schemata)
    logger.debug(
        f"Grafo de esquema: {graph.num_slots} slots, {graph.num_domains} domínios, "
        f"{len(graph.edges())} arestas"
    )
    return graph


def neighborhood(graph: SchemaGraph, node_id: str,
                 channel: Union[Channel, str] = Channel.STATIC) -> List[str]:
    return graph.neighborhood(node_id, channel)


def parse_schema(services: Sequence[Dict[str, Any]], source: str = '<schema>') -> List[SchemaElement]:
    """Converte serviços no formato SGD em elementos de esquema"""
    elements: List[SchemaElement] = []
    if not isinstance(services, list):
        raise CorpusParseError("esperada uma lista de serviços", source)
    for position, service in enumerate(services):
        location = f"{source}[{position}]"
        try:
            name = service['service_name']
            elements.append(domain(name, service.get('description') or name))
            for item in service['slots']:
                elements.append(slot(
                    name, item['name'], item['description'],
                    possible_values=item.get('possible_values', []),
                    is_categorical=bool(item.get('is_categorical', False))
                ))
        except (KeyError, TypeError) as e:
            raise SchemaValidationError(f"{location}: campo ausente ou inválido {e}")
    validate_schemata(elements)
    return elements


def load_schema(path: Union[str, Path]) -> List[SchemaElement]:
    """Lê um schema.json no formato SGD"""
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as arquivo:
            services = json.load(arquivo)
    except json.JSONDecodeError as e:
        raise CorpusParseError(e.msg, f"{path}:{e.lineno}:{e.colno}")
    elements = parse_schema(services, str(path))
    logger.info(f"Esquema carregado de {path}: {len(elements)} elementos")
    return elements


def dump_schema(schemata: Sequence[SchemaElement], path: Union[str, Path]) -> None:
    """Grava elementos no formato SGD"""
    services = []
    for element in schemata:
        if element.is_slot:
            continue
        services.append({
            'service_name': element.id,
            'description': element.description,
            'slots': [
                {
                    'name': s.name,
                    'description': s.description,
                    'is_categorical': s.is_categorical,
                    'possible_values': list(s.possible_values)
                }
                for s in schemata if s.is_slot and s.parent_domain == element.id
            ]
        })
    with open(path, 'w', encoding='utf-8') as arquivo:
        json.dump(services, arquivo, indent=2, ensure_ascii=False)


def schema_fingerprint(schemata: Sequence[SchemaElement]) -> str:
    """Hash de conteúdo dos elementos do esquema"""
    payload = json.dumps([e.to_dict() for e in schemata], sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


def domain_fingerprints(schemata: Sequence[SchemaElement]) -> Dict[str, str]:
    """Hash de conteúdo de cada domínio junto com seus slots"""
    fingerprints = {}
    for element in schemata:
        if element.is_slot:
            continue
        members = [element] + [s for s in schemata if s.is_slot and s.parent_domain == element.id]
        fingerprints[element.id] = schema_fingerprint(members)
    return fingerprints
