#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Leitura de Corpora
Diálogos no formato SGD/MultiWOZ, amostras por turno e alinhamento de spans
"""

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Any, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from ..core.errors import AnnotationError, ConfigError, CorpusParseError
from ..core.logger import get_data_logger
from .relation_labeler import (
    CooccurrenceTable, RelationMatrix, build_cooccurrence_table, label_turn, DEFAULT_THRESHOLD
)
from .schema import SchemaGraph

logger = get_data_logger()

CLS_TOKEN = '[CLS]'
SEP_TOKEN = '[SEP]'
SPECIAL_TOKENS = (CLS_TOKEN, SEP_TOKEN)
DEFAULT_MAX_LEN = 512

_TOKEN_PATTERN = re.compile(r"\w+|[^\w\s]", re.UNICODE)

# Valores do MultiWOZ 2.1 que significam slot vazio
_MULTIWOZ_EMPTY = {'', 'not mentioned', 'none'}

Span = Tuple[int, int]


class Speaker(Enum):
    """Locutor de um turno"""
    USER = "user"
    SYSTEM = "system"


@dataclass(frozen=True)
class Token:
    """Token minúsculo com posição no texto original"""
    text: str
    start: int
    end: int


def tokenize(text: str) -> List[Token]:
    """Separa palavras e pontuação, em minúsculas, preservando offsets"""
    return [Token(m.group().lower(), m.start(), m.end()) for m in _TOKEN_PATTERN.finditer(text)]


def normalize_value(value: Optional[str]) -> Optional[str]:
    """Minúsculas e espaços colapsados"""
    if value is None:
        return None
    return ' '.join(str(value).casefold().split())


class DialogueState:
    """Estado do diálogo: (domínio, slot) -> valor ou None"""

    def __init__(self, assignments: Optional[Mapping[Tuple[str, str], Optional[str]]] = None):
        self.assignments: Dict[Tuple[str, str], Optional[str]] = dict(assignments or {})

    @classmethod
    def from_slot_values(cls, graph: SchemaGraph,
                         values: Mapping[str, Optional[str]]) -> 'DialogueState':
        return cls({(graph.domain_of(slot_id), slot_id): value for slot_id, value in values.items()})

    def slot_values(self) -> Dict[str, Optional[str]]:
        return {slot_id: value for (_, slot_id), value in self.assignments.items()}

    def filled(self) -> Dict[Tuple[str, str], str]:
        return {key: value for key, value in self.assignments.items() if value is not None}

    def normalized(self) -> Dict[Tuple[str, str], str]:
        return {key: normalize_value(value) for key, value in self.filled().items()}

    def domains(self) -> List[str]:
        return sorted({d for d, _ in self.filled()})

    def get(self, slot_id: str) -> Optional[str]:
        for (_, key), value in self.assignments.items():
            if key == slot_id:
                return value
        return None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DialogueState):
            return NotImplemented
        return self.filled() == other.filled()

    def __repr__(self) -> str:
        return f"DialogueState({self.filled()})"

    def to_dict(self) -> Dict[str, Dict[str, str]]:
        """Converte para dicionário domínio -> slot -> valor"""
        nested: Dict[str, Dict[str, str]] = {}
        for (domain_id, slot_id), value in sorted(self.filled().items()):
            nested.setdefault(domain_id, {})[slot_id] = value
        return nested

    @classmethod
    def from_dict(cls, nested: Mapping[str, Mapping[str, Optional[str]]]) -> 'DialogueState':
        return cls({
            (domain_id, slot_id): value
            for domain_id, slots in nested.items() for slot_id, value in slots.items()
        })


@dataclass
class DialogueTurn:
    """Turno de usuário ou sistema"""
    speaker: Speaker
    utterance: str
    turn_index: int
    gold_state: Optional[Dict[str, Optional[str]]] = None


@dataclass
class Dialogue:
    """Diálogo com serviços ativos e turnos ordenados"""
    dialogue_id: str
    services: List[str]
    turns: List[DialogueTurn]

    def user_states(self) -> List[Dict[str, Optional[str]]]:
        return [t.gold_state or {} for t in self.turns if t.speaker is Speaker.USER]

    def final_state(self) -> Dict[str, Optional[str]]:
        states = self.user_states()
        return states[-1] if states else {}

    def to_dict(self) -> Dict[str, Any]:
        """Serializa no formato SGD"""
        turns = []
        for turn in self.turns:
            record: Dict[str, Any] = {
                'speaker': turn.speaker.value.upper(),
                'utterance': turn.utterance,
                'frames': []
            }
            if turn.speaker is Speaker.USER:
                state = turn.gold_state or {}
                for service in self.services:
                    prefix = f"{service}-"
                    values = {
                        slot_id[len(prefix):]: [value]
                        for slot_id, value in state.items()
                        if value is not None and slot_id.startswith(prefix)
                    }
                    record['frames'].append({'service': service, 'state': {'slot_values': values}})
            turns.append(record)
        return {'dialogue_id': self.dialogue_id, 'services': list(self.services), 'turns': turns}


@dataclass(frozen=True)
class CandidateElements:
    """Elementos candidatos C = [B; V]"""
    element_tokens: Tuple[str, ...]
    boundaries: int

    @property
    def vocabulary(self) -> Tuple[str, ...]:
        return self.element_tokens[self.boundaries:]

    def __len__(self) -> int:
        return len(self.element_tokens)


def build_candidate_elements(tokens: Sequence[str], vocabulary: Sequence[str]) -> CandidateElements:
    return CandidateElements(tuple(tokens) + tuple(vocabulary), len(tokens))


@dataclass
class SpanAlignment:
    """Spans de referência por slot e os valores não alinháveis"""
    spans: Dict[str, Optional[Span]]
    unalignable: frozenset = frozenset()


@dataclass(frozen=True)
class DialogueSample:
    """Amostra de um turno de usuário com histórico"""
    dialogue_id: str
    turn_index: int
    tokens: Tuple[str, ...]
    token_mask: Tuple[bool, ...]
    offsets: Tuple[Optional[Tuple[int, int, int]], ...]
    utterances: Tuple[str, ...]
    domains: Tuple[str, ...]
    slot_ids: Tuple[str, ...]
    vocabulary: Tuple[str, ...]
    gold_state: DialogueState
    gold_spans: Tuple[Optional[Span], ...]
    unalignable: frozenset
    gold_relations: RelationMatrix
    history_length: int = 0

    @property
    def key(self) -> Tuple[str, int]:
        return (self.dialogue_id, self.turn_index)

    @property
    def candidate(self) -> CandidateElements:
        return build_candidate_elements(self.tokens, self.vocabulary)

    def detokenize(self, start: int, end: int) -> str:
        """Texto original coberto pelos tokens start..end (inclusive)"""
        pieces: List[str] = []
        group: Optional[Tuple[int, int, int]] = None
        for position in range(start, end + 1):
            offset = self.offsets[position]
            if offset is None:
                continue
            utterance, char_start, char_end = offset
            if group and group[0] == utterance:
                group = (utterance, group[1], char_end)
            else:
                if group:
                    pieces.append(self.utterances[group[0]][group[1]:group[2]])
                group = offset
        if group:
            pieces.append(self.utterances[group[0]][group[1]:group[2]])
        return ' '.join(pieces)


def align_spans(tokens: Sequence[str], gold_state: Mapping[str, Optional[str]],
                candidate: CandidateElements) -> SpanAlignment:
    """Alinha valores de referência a spans nos elementos candidatos

    Valor presente no contexto -> última ocorrência; senão, posição no vocabulário;
    senão o slot é marcado como não alinhável.
    """
    context = [t.lower() if t not in SPECIAL_TOKENS else t for t in tokens[:candidate.boundaries]]
    vocabulary = {value.casefold(): candidate.boundaries + i for i, value in enumerate(candidate.vocabulary)}
    spans: Dict[str, Optional[Span]] = {}
    unalignable = set()
    for slot_id, value in gold_state.items():
        if value is None:
            spans[slot_id] = None
            continue
        pattern = [t.text for t in tokenize(value)]
        span = None
        if pattern:
            width = len(pattern)
            for start in range(len(context) - width, -1, -1):
                if context[start:start + width] == pattern:
                    span = (start, start + width - 1)
                    break
        if span is None and value.casefold() in vocabulary:
            position = vocabulary[value.casefold()]
            span = (position, position)
        if span is None:
            unalignable.add(slot_id)
        spans[slot_id] = span
    return SpanAlignment(spans, frozenset(unalignable))


def _slot_id(service: str, name: str) -> str:
    return name if name.startswith(f"{service}-") else f"{service}-{name}"


def parse_dialogue(record: Mapping[str, Any], graph: SchemaGraph, location: str = '') -> Dialogue:
    """Converte um diálogo no formato SGD, acumulando o estado por serviço"""
    try:
        dialogue_id = str(record['dialogue_id'])
        services = list(record.get('services') or [])
        raw_turns = record['turns']
    except (KeyError, TypeError) as e:
        raise CorpusParseError(f"campo ausente {e}", location)

    known = set(graph.slot_ids)
    turns: List[DialogueTurn] = []
    state: Dict[str, Optional[str]] = {}
    previous_speaker: Optional[Speaker] = None
    for index, raw in enumerate(raw_turns):
        where = f"{location}turns[{index}]"
        try:
            speaker = Speaker(str(raw['speaker']).lower())
            utterance = str(raw['utterance'])
        except (KeyError, ValueError) as e:
            raise CorpusParseError(f"turno inválido: {e}", where)
        if speaker is previous_speaker:
            raise CorpusParseError("turnos de usuário e sistema devem alternar", where)
        previous_speaker = speaker

        gold_state = None
        if speaker is Speaker.USER:
            state = dict(state)
            for frame in raw.get('frames', []):
                service = frame.get('service')
                if service not in services:
                    services.append(service)
                slot_values = (frame.get('state') or {}).get('slot_values') or {}
                for slot_id in [s for s in state if s.startswith(f"{service}-")]:
                    state[slot_id] = None
                for name, values in slot_values.items():
                    slot_id = _slot_id(service, name)
                    if slot_id not in known:
                        raise AnnotationError(f"slot desconhecido {slot_id}", dialogue_id, index)
                    if isinstance(values, str):
                        values = [values]
                    state[slot_id] = values[0] if values else None
            gold_state = {k: v for k, v in state.items() if v is not None}
        turns.append(DialogueTurn(speaker, utterance, index, gold_state))

    for service in services:
        if service not in graph.domain_ids:
            raise AnnotationError(f"domínio desconhecido {service}", dialogue_id, -1)
    return Dialogue(dialogue_id, services, turns)


def load_dialogues(path: Union[str, Path], graph: SchemaGraph) -> List[Dialogue]:
    """Lê diálogos de um arquivo JSON ou de um diretório com dialogues_*.json"""
    path = Path(path)
    files = sorted(path.glob('dialogues_*.json')) if path.is_dir() else [path]
    dialogues: List[Dialogue] = []
    for file in files:
        try:
            with open(file, 'r', encoding='utf-8') as arquivo:
                records = json.load(arquivo)
        except json.JSONDecodeError as e:
            raise CorpusParseError(e.msg, f"{file}:{e.lineno}:{e.colno}")
        if not isinstance(records, list):
            raise CorpusParseError("esperada uma lista de diálogos", str(file))
        for position, record in enumerate(records):
            dialogues.append(parse_dialogue(record, graph, f"{file}[{position}]."))
    logger.info(f"{len(dialogues)} diálogos lidos de {path}")
    return dialogues


def dump_corpus(dialogues: Sequence[Dialogue], path: Union[str, Path]) -> None:
    """Grava diálogos no formato SGD"""
    with open(path, 'w', encoding='utf-8') as arquivo:
        json.dump([d.to_dict() for d in dialogues], arquivo, indent=2, ensure_ascii=False)


def build_sample(dialogue: Dialogue, position: int, graph: SchemaGraph,
                 relations: RelationMatrix, history_turns: Optional[int] = None,
                 max_len: int = DEFAULT_MAX_LEN) -> DialogueSample:
    """Monta a amostra do turno de usuário na posição dada"""
    turn = dialogue.turns[position]
    history = [t.utterance for t in dialogue.turns[:position]]
    if history_turns is not None:
        history = history[-history_turns:] if history_turns else []

    current = tokenize(turn.utterance)
    budget = max_len - 2
    if len(current) > budget:
        logger.warning(
            f"Turno {dialogue.dialogue_id}/{turn.turn_index} excede max_len; "
            f"mantidos {budget} tokens do turno atual"
        )
        current = current[:budget]
        history = []

    # descarta utterances antigas inteiras até caber
    history_tokens = [tokenize(u) for u in history]
    while history_tokens and 2 + len(current) + sum(len(h) + 1 for h in history_tokens) > max_len:
        history_tokens.pop(0)
        history.pop(0)

    utterances = (turn.utterance,) + tuple(history)
    tokens: List[str] = [CLS_TOKEN]
    offsets: List[Optional[Tuple[int, int, int]]] = [None]
    for utterance_index, pieces in enumerate([current] + history_tokens):
        for token in pieces:
            tokens.append(token.text)
            offsets.append((utterance_index, token.start, token.end))
        tokens.append(SEP_TOKEN)
        offsets.append(None)

    subgraph = graph.subgraph(dialogue.services)
    vocabulary = tuple(subgraph.candidate_vocabulary())
    gold_values = {slot_id: (turn.gold_state or {}).get(slot_id) for slot_id in subgraph.slot_ids}
    alignment = align_spans(tokens, gold_values, build_candidate_elements(tokens, vocabulary))

    return DialogueSample(
        dialogue_id=dialogue.dialogue_id,
        turn_index=turn.turn_index,
        tokens=tuple(tokens),
        token_mask=tuple(True for _ in tokens),
        offsets=tuple(offsets),
        utterances=utterances,
        domains=tuple(subgraph.domain_ids),
        slot_ids=subgraph.slot_ids,
        vocabulary=vocabulary,
        gold_state=DialogueState.from_slot_values(subgraph, gold_values),
        gold_spans=tuple(alignment.spans[s] for s in subgraph.slot_ids),
        unalignable=alignment.unalignable,
        gold_relations=relations,
        history_length=len(history)
    )


def iter_samples(dialogues: Sequence[Dialogue], graph: SchemaGraph,
                 table: CooccurrenceTable, history_turns: Optional[int] = None,
                 max_len: int = DEFAULT_MAX_LEN,
                 threshold: float = DEFAULT_THRESHOLD) -> Iterator[DialogueSample]:
    """Gera uma amostra por turno de usuário, em ordem determinística"""
    for dialogue in dialogues:
        slot_ids = graph.subgraph(dialogue.services).slot_ids
        states: List[Dict[str, Optional[str]]] = []
        for position, turn in enumerate(dialogue.turns):
            if turn.speaker is not Speaker.USER:
                continue
            relations = label_turn(slot_ids, states, turn.gold_state or {}, table, threshold)
            states.append(turn.gold_state or {})
            yield build_sample(dialogue, position, graph, relations, history_turns, max_len)


def load_corpus(path: Union[str, Path], schema: SchemaGraph,
                history_turns: Optional[int] = None,
                max_len: int = DEFAULT_MAX_LEN,
                cooccurrence: Optional[CooccurrenceTable] = None,
                threshold: float = DEFAULT_THRESHOLD,
                as_training: bool = False) -> Iterator[DialogueSample]:
    """Lê um corpus e gera amostras por turno de usuário

    A tabela de co-ocorrência vem do treino. Só com `as_training=True` ela é
    calculada do próprio corpus, que passa a ser a partição de treino.
    """
    dialogues = load_dialogues(path, schema)
    if not dialogues:
        return iter(())
    if cooccurrence is None:
        if not as_training:
            raise ConfigError(
                f"tabela de co-ocorrência do treino ausente para {path}; "
                "use as_training=True apenas para a partição de treino"
            )
        cooccurrence = build_cooccurrence_table(d.final_state() for d in dialogues)
    return iter_samples(dialogues, schema, cooccurrence, history_turns, max_len, threshold)


def convert_multiwoz22(dialogues: Sequence[Mapping[str, Any]]) -> List[Dict[str, Any]]:
    """Normaliza diálogos do MultiWOZ 2.2 para o layout SGD"""
    converted = []
    for dialogue in dialogues:
        turns = []
        for turn in dialogue['turns']:
            frames = []
            for frame in turn.get('frames', []):
                service = frame['service']
                values = (frame.get('state') or {}).get('slot_values') or {}
                frames.append({
                    'service': service,
                    'state': {'slot_values': {
                        name[len(service) + 1:] if name.startswith(f"{service}-") else name: list(v)
                        for name, v in values.items()
                    }}
                })
            turns.append({
                'speaker': turn['speaker'],
                'utterance': turn['utterance'],
                'frames': frames if str(turn['speaker']).upper() == 'USER' else []
            })
        converted.append({
            'dialogue_id': dialogue['dialogue_id'],
            'services': list(dialogue.get('services', [])),
            'turns': turns
        })
    return converted


def convert_multiwoz21(data: Mapping[str, Mapping[str, Any]]) -> List[Dict[str, Any]]:
    """Converte o data.json do MultiWOZ 2.1 para o layout SGD

    O estado de crença fica no metadata do turno de sistema; ele é movido para o
    turno de usuário anterior.
    """
    converted = []
    for dialogue_id, dialogue in data.items():
        log = dialogue['log']
        turns = []
        services: List[str] = []
        for index, entry in enumerate(log):
            if index % 2 == 0:
                belief = log[index + 1]['metadata'] if index + 1 < len(log) else {}
                frames = []
                for service, blocks in belief.items():
                    values = {}
                    for name, value in (blocks.get('semi') or {}).items():
                        if str(value).strip().lower() not in _MULTIWOZ_EMPTY:
                            values[name.lower()] = [str(value)]
                    for name, value in (blocks.get('book') or {}).items():
                        if name == 'booked':
                            continue
                        if str(value).strip().lower() not in _MULTIWOZ_EMPTY:
                            values[f"book{name.lower()}"] = [str(value)]
                    if values:
                        frames.append({'service': service, 'state': {'slot_values': values}})
                        if service not in services:
                            services.append(service)
                turns.append({'speaker': 'USER', 'utterance': entry['text'], 'frames': frames})
            else:
                turns.append({'speaker': 'SYSTEM', 'utterance': entry['text'], 'frames': []})
        converted.append({'dialogue_id': dialogue_id, 'services': services, 'turns': turns})
    return converted
