#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Manifesto de Execução
Registro reprodutível de cada comando executado
"""

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Dict, Any, Optional, Union

from .logger import get_cli_logger

logger = get_cli_logger()

MANIFEST_NAME = 'manifest.json'


def content_fingerprint(path: Union[str, Path, None]) -> Optional[str]:
    """Hash SHA-256 do conteúdo de um arquivo ou diretório"""
    if path is None:
        return None
    path = Path(path)
    digest = hashlib.sha256()
    if path.is_dir():
        for item in sorted(p for p in path.rglob('*') if p.is_file()):
            digest.update(str(item.relative_to(path)).encode('utf-8'))
            digest.update(item.read_bytes())
    else:
        digest.update(path.read_bytes())
    return digest.hexdigest()


@dataclass
class RunManifest:
    """Manifesto de uma execução da linha de comando"""
    command: str
    config: Dict[str, Any]
    seed: Optional[int] = None
    schema_fingerprint: Optional[str] = None
    corpus_fingerprint: Optional[str] = None
    artifacts: Dict[str, str] = field(default_factory=dict)
    started_at: str = field(default_factory=lambda: datetime.now().isoformat())
    finished_at: Optional[str] = None
    exit_status: Optional[int] = None

    def finish(self, exit_status: int = 0) -> 'RunManifest':
        self.finished_at = datetime.now().isoformat()
        self.exit_status = exit_status
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Converte para dicionário"""
        return {
            'command': self.command,
            'config': self.config,
            'seed': self.seed,
            'schema_fingerprint': self.schema_fingerprint,
            'corpus_fingerprint': self.corpus_fingerprint,
            'artifacts': self.artifacts,
            'started_at': self.started_at,
            'finished_at': self.finished_at,
            'exit_status': self.exit_status
        }

    def write(self, directory: Union[str, Path]) -> Path:
        """Grava o manifesto no diretório da execução"""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        target = directory / MANIFEST_NAME
        with open(target, 'w', encoding='utf-8') as arquivo:
            json.dump(self.to_dict(), arquivo, indent=2, ensure_ascii=False)
        logger.info(f"Manifesto gravado em {target}")
        return target

    @classmethod
    def read(cls, path: Union[str, Path]) -> 'RunManifest':
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        with open(path, 'r', encoding='utf-8') as arquivo:
            data = json.load(arquivo)
        return cls(**data)
