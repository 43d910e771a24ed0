#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Configuração Centralizada
Configurações de ambiente e de treinamento
"""

import os
from dataclasses import dataclass, asdict, fields, replace
from pathlib import Path
from typing import Dict, Any, Optional, Union

from dotenv import load_dotenv

from .errors import ConfigError

RELATION_SUBSETS = ('all', 'coref_only', 'cooccur_only', 'coupdate_only', 'none', 'fully_connected')
ENCODER_KINDS = ('toy', 'pretrained')


class Config:
    """Configuração de ambiente do sistema"""

    def __init__(self, env_file: Optional[str] = None):
        load_dotenv(env_file)

        # Configurações de logging
        self.LOG_LEVEL = os.getenv('DSGF_LOG_LEVEL', 'INFO')
        self.LOG_FILE = os.getenv('DSGF_LOG_FILE', 'logs/dsgf.log')
        self.LOG_MAX_SIZE = int(os.getenv('DSGF_LOG_MAX_SIZE', 10 * 1024 * 1024))  # 10MB
        self.LOG_BACKUP_COUNT = int(os.getenv('DSGF_LOG_BACKUP_COUNT', 5))

        # Configurações do codificador pré-treinado
        self.CACHE_DIR = os.getenv('DSGF_CACHE', str(Path.home() / '.cache' / 'dsgf'))
        self.DEVICE = os.getenv('DSGF_DEVICE', 'cpu')

        # Configurações de saída
        self.OUTPUT_DIR = os.getenv('DSGF_OUTPUT_DIR', 'runs/')
        self.SEED = int(os.getenv('DSGF_SEED', 42))

    def get_logging_config(self) -> Dict[str, Any]:
        """Retorna configuração de logging"""
        return {
            'level': self.LOG_LEVEL,
            'log_file': self.LOG_FILE,
            'max_size': self.LOG_MAX_SIZE,
            'backup_count': self.LOG_BACKUP_COUNT
        }

    def get_encoder_config(self) -> Dict[str, Any]:
        """Retorna configuração do codificador"""
        return {
            'cache_dir': self.CACHE_DIR,
            'device': self.DEVICE
        }

    def get_output_config(self) -> Dict[str, Any]:
        """Retorna configuração de saída"""
        return {
            'output_dir': self.OUTPUT_DIR,
            'seed': self.SEED
        }


# Chaves pontuadas do arquivo de configuração -> campos do TrainConfig
FILE_KEYS = {
    'lambda': 'lambda_balance',
    'encoder.kind': 'encoder_kind',
    'encoder.hidden': 'encoder_hidden',
    'encoder.max_len': 'max_len',
    'encoder.share_encoder': 'share_encoder',
    'encoder.name': 'encoder_name',
    'graph.layers': 'graph_layers',
    'graph.hidden': 'graph_hidden',
    'graph.heads': 'graph_heads',
    'graph.relation_mlp_depth': 'relation_mlp_depth',
    'ablation.use_membership': 'use_membership',
    'ablation.use_dynamic': 'use_dynamic',
    'ablation.use_aggregation': 'use_aggregation',
    'ablation.relation_subset': 'relation_subset',
}


@dataclass
class TrainConfig:
    """Hiperparâmetros de treinamento, arquitetura e ablações"""
    lambda_balance: float = 0.5
    learning_rate: Optional[float] = None
    warmup_fraction: float = 0.10
    epochs: int = 10
    batch_size: int = 16
    seed: int = 42
    dropout: float = 0.3
    max_grad_norm: float = 1.0
    none_weight: float = 1.0

    encoder_kind: str = 'toy'
    encoder_name: str = 'bert-base-uncased'
    encoder_hidden: int = 64
    max_len: int = 512
    description_max_len: int = 64
    hash_buckets: int = 4096
    share_encoder: bool = True

    graph_hidden: int = 256
    graph_layers: int = 3
    graph_heads: int = 4
    relation_mlp_depth: int = 8

    history_turns: Optional[int] = None  # None = todo o histórico
    cooccurrence_threshold: float = 0.05
    carryover: bool = True

    use_membership: bool = True
    use_dynamic: bool = True
    use_aggregation: bool = True
    relation_subset: str = 'all'

    @property
    def effective_learning_rate(self) -> float:
        """LR explícita ou o padrão do tipo de codificador"""
        if self.learning_rate is not None:
            return self.learning_rate
        return 2e-5 if self.encoder_kind == 'pretrained' else 1e-3

    @property
    def effective_relation_subset(self) -> str:
        """Sem rede de evolução o decodificador usa só a pertinência"""
        return self.relation_subset if self.use_dynamic else 'none'

    @property
    def effective_lambda(self) -> float:
        return self.lambda_balance if self.use_dynamic else 0.0

    def validate(self) -> 'TrainConfig':
        """Valida as invariantes; lança ConfigError"""
        if not 0.0 <= self.lambda_balance <= 1.0:
            raise ConfigError(f"lambda_balance deve estar em [0,1]: {self.lambda_balance}")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ConfigError(f"warmup_fraction deve estar em [0,1): {self.warmup_fraction}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout deve estar em [0,1): {self.dropout}")
        if not 0.0 <= self.cooccurrence_threshold <= 1.0:
            raise ConfigError(f"threshold deve estar em [0,1]: {self.cooccurrence_threshold}")
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise ConfigError(f"learning_rate deve ser positiva: {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigError(f"epochs não pode ser negativo: {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size deve ser >= 1: {self.batch_size}")
        if self.graph_layers < 1:
            raise ConfigError(f"graph.layers deve ser >= 1: {self.graph_layers}")
        if self.relation_mlp_depth < 1:
            raise ConfigError(f"graph.relation_mlp_depth deve ser >= 1: {self.relation_mlp_depth}")
        if self.graph_hidden < 1 or self.encoder_hidden < 1:
            raise ConfigError("dimensões ocultas devem ser positivas")
        if self.graph_heads < 1 or self.graph_hidden % self.graph_heads != 0:
            raise ConfigError(
                f"graph.heads ({self.graph_heads}) deve dividir graph.hidden ({self.graph_hidden})"
            )
        if self.max_len < 2:
            raise ConfigError(f"max_len deve ser >= 2: {self.max_len}")
        if self.history_turns is not None and self.history_turns < 0:
            raise ConfigError(f"history_turns deve ser >= 0 ou 'all': {self.history_turns}")
        if self.none_weight < 0:
            raise ConfigError(f"none_weight não pode ser negativo: {self.none_weight}")
        if self.relation_subset not in RELATION_SUBSETS:
            raise ConfigError(
                f"ablation.relation_subset desconhecido: {self.relation_subset} "
                f"(opções: {', '.join(RELATION_SUBSETS)})"
            )
        if self.encoder_kind not in ENCODER_KINDS:
            raise ConfigError(f"encoder.kind desconhecido: {self.encoder_kind}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Converte para dicionário"""
        return asdict(self)

    def update(self, **overrides: Any) -> 'TrainConfig':
        """Cópia com valores sobrescritos (None é ignorado)"""
        clean = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(clean) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"chaves desconhecidas: {', '.join(sorted(unknown))}")
        return replace(self, **clean)

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> 'TrainConfig':
        """Cria a partir de um dicionário de campos ou chaves pontuadas"""
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            name = FILE_KEYS.get(key, key.replace('.', '_'))
            if name not in types:
                raise ConfigError(f"chave de configuração desconhecida: {key}")
            kwargs[name] = _coerce(name, types[name], raw)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> 'TrainConfig':
        """Lê documento chave = valor (comentários com #)"""
        values: Dict[str, str] = {}
        with open(path, 'r', encoding='utf-8') as arquivo:
            for numero, linha in enumerate(arquivo, start=1):
                linha = linha.split('#', 1)[0].strip()
                if not linha:
                    continue
                if '=' not in linha:
                    raise ConfigError(f"{path}:{numero}: esperado 'chave = valor'")
                chave, valor = linha.split('=', 1)
                values[chave.strip()] = valor.strip()
        return cls.from_dict(values)

    def to_file(self, path: Union[str, Path]) -> None:
        """Grava no formato chave = valor"""
        reverse = {v: k for k, v in FILE_KEYS.items()}
        with open(path, 'w', encoding='utf-8') as arquivo:
            for f in fields(self):
                value = getattr(self, f.name)
                if value is None:
                    value = 'all' if f.name == 'history_turns' else 'default'
                elif isinstance(value, bool):
                    value = str(value).lower()
                arquivo.write(f"{reverse.get(f.name, f.name)} = {value}\n")


def _coerce(name: str, annotation: Any, raw: Any) -> Any:
    """Converte valores textuais para o tipo do campo"""
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    annotation = str(annotation)
    try:
        if name == 'history_turns':
            return None if text.lower() == 'all' else int(text)
        if 'Optional' in annotation and text.lower() in ('default', 'none', ''):
            return None
        if 'bool' in annotation:
            if text.lower() in ('true', '1', 'yes', 'sim'):
                return True
            if text.lower() in ('false', '0', 'no', 'nao', 'não'):
                return False
            raise ValueError(text)
        if 'int' in annotation:
            return int(text)
        if 'float' in annotation:
            return float(text)
    except ValueError:
        raise ConfigError(f"valor inválido para {name}: {raw!r}")
    return text
