#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Exceções
Hierarquia de erros do rastreador de estado de diálogo
"""

from typing import Optional


class DSGFError(Exception):
    """Erro base do pacote"""


class SchemaValidationError(DSGFError, ValueError):
    """Esquema inválido (slot órfão, id duplicado, descrição vazia)"""


class CorpusParseError(DSGFError, ValueError):
    """Arquivo de corpus ou esquema mal formado"""

    def __init__(self, message: str, location: Optional[str] = None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class AnnotationError(DSGFError, KeyError):
    """Anotação referencia um slot que não existe no esquema"""

    def __init__(self, message: str, dialogue_id: str = '', turn_index: int = -1):
        self.dialogue_id = dialogue_id
        self.turn_index = turn_index
        super().__init__(f"diálogo {dialogue_id}, turno {turn_index}: {message}")

    def __str__(self) -> str:
        return str(self.args[0])


class NodeLookupError(DSGFError, KeyError):
    """Nó desconhecido no grafo de esquema"""

    def __str__(self) -> str:
        return str(self.args[0])


class ConfigError(DSGFError, ValueError):
    """Configuração viola alguma invariante"""


class SequenceTooLongError(DSGFError, ValueError):
    """Sequência maior que max_len; quem chama deve truncar"""


class ShapeMismatchError(DSGFError, ValueError):
    """Dimensões incompatíveis entre tensores"""


class DegenerateBatchError(DSGFError):
    """Lote sem slots supervisionados e sem pares de slots"""


class AlignmentError(DSGFError, ValueError):
    """Conjuntos de turnos previstos e de referência não coincidem"""
