#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Dados
Esquemas, corpora de diálogo e rótulos de relações dinâmicas
"""

from .schema import SchemaElement, SchemaGraph, build_schema_graph, load_schema
from .corpus import Dialogue, DialogueSample, DialogueState, load_corpus, load_dialogues
from .relation_labeler import Relation, RelationMatrix, build_cooccurrence_table, label_turn

__all__ = [
    'SchemaElement',
    'SchemaGraph',
    'build_schema_graph',
    'load_schema',
    'Dialogue',
    'DialogueSample',
    'DialogueState',
    'load_corpus',
    'load_dialogues',
    'Relation',
    'RelationMatrix',
    'build_cooccurrence_table',
    'label_turn'
]
