#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Treinamento
Otimização conjunta das perdas de span e de relação, checkpoints e varreduras
"""

import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import torch
import torch.nn.functional as F
from torch.optim.lr_scheduler import LambdaLR

from ..core.config import TrainConfig
from ..core.errors import ConfigError, DegenerateBatchError, DSGFError
from ..core.logger import get_ml_logger
from ..core.manifest import RunManifest
from ..data.corpus import DialogueSample, DialogueState, Span
from ..data.relation_labeler import RelationMatrix
from ..data.schema import SchemaElement, SchemaGraph, build_schema_graph, domain_fingerprints, schema_fingerprint
from ..evaluation.metrics import joint_goal_accuracy, relation_metrics
from .graph_net import RelationLogits
from .model import DSGFNet
from .state_decoder import SpanPrediction

logger = get_ml_logger()

CHECKPOINT_FORMAT = 1
CHECKPOINT_NAME = 'checkpoint.pt'
METRICS_NAME = 'metrics.csv'

# início depois do fim: alvo que decodifica para None
NULL_SPAN = (1, 0)

SWEEP_AXES = {
    'layers': 'graph_layers',
    'history_turns': 'history_turns',
    'mlp_depth': 'relation_mlp_depth',
    'lambda': 'lambda_balance',
}
LAMBDA_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass
class LossReport:
    """L = lambda * L_r + (1 - lambda) * L_s"""
    loss: torch.Tensor
    span_loss: torch.Tensor
    relation_loss: torch.Tensor
    lambda_balance: float

    @classmethod
    def mean(cls, reports: Sequence['LossReport']) -> 'LossReport':
        if not reports:
            raise DegenerateBatchError("lote sem amostras supervisionadas")
        count = len(reports)
        return cls(
            loss=sum(r.loss for r in reports) / count,
            span_loss=sum(r.span_loss for r in reports) / count,
            relation_loss=sum(r.relation_loss for r in reports) / count,
            lambda_balance=reports[0].lambda_balance
        )

    def to_dict(self) -> Dict[str, float]:
        """Converte para dicionário"""
        return {
            'loss': float(self.loss.detach()),
            'span_loss': float(self.span_loss.detach()),
            'relation_loss': float(self.relation_loss.detach()),
        }


def combine_losses(span_loss: torch.Tensor, relation_loss: torch.Tensor,
                   lambda_balance: float) -> LossReport:
    """Combinação ponderada; com lambda = 0 a perda de relação sai do grafo"""
    if not 0.0 <= lambda_balance <= 1.0:
        raise ConfigError(f"lambda_balance deve estar em [0,1]: {lambda_balance}")
    relation_term = relation_loss if lambda_balance > 0 else relation_loss.detach()
    loss = lambda_balance * relation_term + (1.0 - lambda_balance) * span_loss
    return LossReport(loss, span_loss, relation_loss, lambda_balance)


def span_loss(spans: SpanPrediction, gold_spans: Sequence[Optional[Span]],
              supervised: Optional[Sequence[bool]] = None) -> Optional[torch.Tensor]:
    """Média das entropias cruzadas de início e fim sobre os slots supervisionados"""
    if supervised is None:
        supervised = [True] * len(gold_spans)
    rows = [i for i, keep in enumerate(supervised) if keep]
    if not rows:
        return None
    targets = [gold_spans[i] if gold_spans[i] is not None else NULL_SPAN for i in rows]
    index = torch.tensor(rows, device=spans.start_logits.device)
    starts = torch.tensor([t[0] for t in targets], device=index.device)
    ends = torch.tensor([t[1] for t in targets], device=index.device)
    start_loss = F.cross_entropy(spans.start_logits[index], starts)
    end_loss = F.cross_entropy(spans.end_logits[index], ends)
    return (start_loss + end_loss) / 2


def relation_loss(logits: Union[RelationLogits, torch.Tensor], gold: Union[RelationMatrix, np.ndarray],
                  none_weight: float = 1.0) -> Optional[torch.Tensor]:
    """Entropia cruzada de 4 classes sobre os pares i < j"""
    scores = logits.logits if isinstance(logits, RelationLogits) else logits
    labels = gold.labels if isinstance(gold, RelationMatrix) else np.asarray(gold)
    n = scores.shape[0]
    if n < 2:
        return None
    rows, cols = torch.triu_indices(n, n, offset=1, device=scores.device)
    target = torch.as_tensor(labels, device=scores.device)[rows, cols].long()
    per_pair = F.cross_entropy(scores[rows, cols], target, reduction='none')
    weights = torch.ones(4, dtype=per_pair.dtype, device=per_pair.device)
    weights[0] = none_weight
    return (per_pair * weights[target]).mean()


def compute_loss(spans: SpanPrediction, gold_spans: Sequence[Optional[Span]],
                 relation_logits: Union[RelationLogits, torch.Tensor],
                 gold_relations: Union[RelationMatrix, np.ndarray],
                 lambda_balance: float = 0.5, none_weight: float = 1.0,
                 supervised: Optional[Sequence[bool]] = None) -> LossReport:
    """Perda conjunta de um turno"""
    l_s = span_loss(spans, gold_spans, supervised)
    l_r = relation_loss(relation_logits, gold_relations, none_weight)
    if l_s is None and l_r is None:
        raise DegenerateBatchError("nenhum slot supervisionado e nenhum par de slots")
    zero = spans.start_logits.new_zeros(())
    return combine_losses(
        l_s if l_s is not None else zero,
        l_r if l_r is not None else zero,
        lambda_balance
    )


def sample_loss(model: DSGFNet, sample: DialogueSample, schema: SchemaGraph,
                config: TrainConfig) -> LossReport:
    """Passada com teacher forcing (matriz de relações de referência no decodificador)"""
    output = model(sample, schema, relations=sample.gold_relations)
    supervised = [slot_id not in sample.unalignable for slot_id in sample.slot_ids]
    return compute_loss(
        output.spans, sample.gold_spans, output.relation_logits, sample.gold_relations,
        config.effective_lambda, config.none_weight, supervised
    )


def linear_schedule(step: int, total_steps: int, warmup_fraction: float = 0.10) -> float:
    """Fator da LR: sobe linearmente até o fim do aquecimento e decai até 0"""
    if total_steps <= 0:
        return 0.0
    warmup_steps = int(round(warmup_fraction * total_steps))
    if warmup_steps > 0 and step < warmup_steps:
        return step / warmup_steps
    return max(0.0, (total_steps - step) / max(1, total_steps - warmup_steps))


def build_scheduler(optimizer: torch.optim.Optimizer, total_steps: int,
                    warmup_fraction: float = 0.10) -> LambdaLR:
    return LambdaLR(optimizer, lambda step: linear_schedule(step, total_steps, warmup_fraction))


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


@dataclass
class TrainResult:
    """Modelo treinado e o histórico por época"""
    model: DSGFNet
    history: pd.DataFrame
    best_epoch: Optional[int] = None
    checkpoint: Optional[Path] = None
    step_losses: List[Dict[str, float]] = field(default_factory=list)


def _batches(samples: Sequence[DialogueSample], batch_size: int,
             rng: random.Random) -> List[List[DialogueSample]]:
    order = list(range(len(samples)))
    rng.shuffle(order)
    return [[samples[i] for i in order[k:k + batch_size]] for k in range(0, len(order), batch_size)]


def train(config: TrainConfig, samples: Sequence[DialogueSample],
          schema: Union[SchemaGraph, Sequence[SchemaElement]],
          dev_samples: Optional[Sequence[DialogueSample]] = None,
          output_dir: Optional[Union[str, Path]] = None,
          device: str = 'cpu', cache_dir: Optional[str] = None) -> TrainResult:
    """Treina o DSGFNet com relações de referência no decodificador"""
    config.validate()
    graph = schema if isinstance(schema, SchemaGraph) else build_schema_graph(schema)
    samples = list(samples)
    seed_everything(config.seed)

    model = DSGFNet(config, cache_dir=cache_dir).to(device)
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.effective_learning_rate, weight_decay=0.0)
    steps_per_epoch = (len(samples) + config.batch_size - 1) // config.batch_size
    total_steps = steps_per_epoch * config.epochs
    scheduler = build_scheduler(optimizer, total_steps, config.warmup_fraction)
    rng = random.Random(config.seed)

    logger.info(
        f"Treinamento: {len(samples)} amostras, {config.epochs} épocas, "
        f"{total_steps} passos, lr={config.effective_learning_rate}, lambda={config.effective_lambda}"
    )

    history: List[Dict[str, Any]] = []
    step_losses: List[Dict[str, float]] = []
    best_score: Optional[float] = None
    best_state: Optional[Dict[str, torch.Tensor]] = None
    best_epoch: Optional[int] = None

    for epoch in range(1, config.epochs + 1):
        model.train()
        epoch_reports: List[Dict[str, float]] = []
        for batch in _batches(samples, config.batch_size, rng):
            reports = []
            for sample in batch:
                try:
                    reports.append(sample_loss(model, sample, graph, config))
                except DegenerateBatchError:
                    logger.debug(f"Amostra {sample.key} sem supervisão, ignorada")
            if not reports:
                continue
            report = LossReport.mean(reports)
            optimizer.zero_grad(set_to_none=True)
            report.loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), config.max_grad_norm)
            optimizer.step()
            scheduler.step()
            values = report.to_dict()
            step_losses.append(values)
            epoch_reports.append(values)

        row: Dict[str, Any] = {'epoch': epoch, 'lr': scheduler.get_last_lr()[0]}
        if epoch_reports:
            row.update(pd.DataFrame(epoch_reports).mean().to_dict())
        if dev_samples:
            states, relations = predict_corpus(model, dev_samples, graph, config.carryover)
            gold = {s.key: s.gold_state for s in dev_samples}
            row['dev_joint_ga'] = joint_goal_accuracy(states, gold)
            row['dev_relation_accuracy'] = relation_metrics(
                relations, {s.key: s.gold_relations for s in dev_samples}
            )['accuracy']
            if best_score is None or row['dev_joint_ga'] > best_score:
                best_score, best_epoch = row['dev_joint_ga'], epoch
                best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
        history.append(row)
        logger.info(f"Época {epoch}/{config.epochs}: " + ', '.join(
            f"{k}={v:.4f}" for k, v in row.items() if isinstance(v, float)
        ))

    if best_state is not None:
        model.load_state_dict(best_state)
        logger.info(f"Melhor época no dev: {best_epoch} (joint GA {best_score:.4f})")

    result = TrainResult(model, pd.DataFrame(history), best_epoch, step_losses=step_losses)
    if output_dir is not None:
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        result.history.to_csv(output_dir / METRICS_NAME, index=False)
        train_domains = sorted({d for s in samples for d in s.domains})
        result.checkpoint = save_checkpoint(model, output_dir / CHECKPOINT_NAME, graph, train_domains)
    return result


def save_checkpoint(model: DSGFNet, path: Union[str, Path], schema: SchemaGraph,
                    train_domains: Sequence[str]) -> Path:
    """Grava parâmetros, configuração e a impressão digital do esquema de treino"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save({
        'format': CHECKPOINT_FORMAT,
        'state_dict': model.state_dict(),
        'config': model.config.to_dict(),
        'schema_fingerprint': schema_fingerprint(schema.elements),
        'train_domains': list(train_domains),
        'domain_fingerprints': {
            d: h for d, h in domain_fingerprints(schema.elements).items() if d in set(train_domains)
        },
        'vocabulary': schema.candidate_vocabulary(),
    }, path)
    logger.info(f"Checkpoint gravado em {path}")
    return path


@dataclass
class CheckpointInfo:
    """Metadados gravados junto com os parâmetros"""
    config: TrainConfig
    schema_fingerprint: str
    train_domains: Tuple[str, ...]
    vocabulary: Tuple[str, ...] = ()
    domain_fingerprints: Dict[str, str] = field(default_factory=dict)


def read_checkpoint(path: Union[str, Path], device: str = 'cpu') -> Dict[str, Any]:
    """Conteúdo bruto de um checkpoint, com checagem de versão"""
    path = Path(path)
    if path.is_dir():
        path = path / CHECKPOINT_NAME
    try:
        payload = torch.load(path, map_location=device, weights_only=False)
    except FileNotFoundError:
        raise
    except Exception as e:
        logger.error(f"Erro ao ler checkpoint {path}: {e}")
        raise DSGFError(f"checkpoint ilegível: {path}") from e
    if payload.get('format') != CHECKPOINT_FORMAT:
        raise DSGFError(f"formato de checkpoint não suportado: {payload.get('format')}")
    return payload


def load_checkpoint(path: Union[str, Path], device: str = 'cpu',
                    cache_dir: Optional[str] = None) -> Tuple[DSGFNet, CheckpointInfo]:
    """Reconstrói o modelo de um checkpoint; o esquema de inferência pode ser outro"""
    payload = read_checkpoint(path, device)
    config = TrainConfig(**payload['config'])
    model = DSGFNet(config, cache_dir=cache_dir).to(device)
    model.load_state_dict(payload['state_dict'])
    model.eval()
    info = CheckpointInfo(
        config, payload['schema_fingerprint'], tuple(payload['train_domains']),
        tuple(payload.get('vocabulary', ())), dict(payload.get('domain_fingerprints', {}))
    )
    return model, info


def inference_step(sample: DialogueSample, model: DSGFNet, schema: SchemaGraph,
                   previous: Optional[DialogueState] = None,
                   carryover: Optional[bool] = None) -> DialogueState:
    """Estado do turno com as relações previstas pelo próprio modelo"""
    model.eval()
    state, _ = model.predict(sample, schema, previous, carryover)
    return state


def predict_corpus(model: DSGFNet, samples: Sequence[DialogueSample], schema: SchemaGraph,
                   carryover: Optional[bool] = None
                   ) -> Tuple[Dict[Tuple[str, int], DialogueState], Dict[Tuple[str, int], RelationMatrix]]:
    """Prediz turno a turno, levando o estado anterior de cada diálogo"""
    was_training = model.training
    model.eval()
    states: Dict[Tuple[str, int], DialogueState] = {}
    relations: Dict[Tuple[str, int], RelationMatrix] = {}
    previous: Dict[str, DialogueState] = {}
    try:
        for sample in samples:
            state, output = model.predict(sample, schema, previous.get(sample.dialogue_id), carryover)
            previous[sample.dialogue_id] = state
            states[sample.key] = state
            relations[sample.key] = output.decoder_relations
    finally:
        model.train(was_training)
    return states, relations


def run_sweep(config: TrainConfig, axis: str, grid: Sequence[Any], schema: SchemaGraph,
              build_samples: Callable[[TrainConfig], Tuple[List[DialogueSample], List[DialogueSample]]],
              output_dir: Union[str, Path], device: str = 'cpu',
              cache_dir: Optional[str] = None) -> pd.DataFrame:
    """Uma execução filha por valor do eixo, cada uma com seu diretório e manifesto"""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"eixo de varredura desconhecido: {axis} (opções: {', '.join(SWEEP_AXES)})")
    if not grid:
        raise ConfigError("grade de varredura vazia")
    output_dir = Path(output_dir)
    rows = []
    for value in grid:
        child = replace(config, **{SWEEP_AXES[axis]: value}).validate()
        child_dir = output_dir / f"{axis}={'all' if value is None else value}"
        manifest = RunManifest(
            command=f"sweep {axis}={value}", config=child.to_dict(), seed=child.seed,
            schema_fingerprint=schema_fingerprint(schema.elements)
        )
        train_samples, dev_samples = build_samples(child)
        result = train(child, train_samples, schema, dev_samples, child_dir, device, cache_dir)
        evaluation = dev_samples or train_samples
        states, _ = predict_corpus(result.model, evaluation, schema, child.carryover)
        score = joint_goal_accuracy(states, {s.key: s.gold_state for s in evaluation})
        manifest.artifacts = {'checkpoint': str(result.checkpoint), 'metrics': str(child_dir / METRICS_NAME)}
        manifest.finish(0).write(child_dir)
        rows.append({'axis': axis, 'value': value, 'joint_ga': score})
        logger.info(f"Varredura {axis}={value}: joint GA {score:.4f}")

    summary = pd.DataFrame(rows)
    output_dir.mkdir(parents=True, exist_ok=True)
    # dados x,y para gráficos
    summary[['value', 'joint_ga']].to_csv(output_dir / f"sweep_{axis}.csv", index=False)
    return summary
