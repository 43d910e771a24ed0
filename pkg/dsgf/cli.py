#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
DSGF - Linha de Comando
Ponto de entrada único: label, train, predict, eval, inspect-graph, sweep, synth e stats
"""

from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import click

from .core.config import RELATION_SUBSETS, Config, TrainConfig
from .core.errors import (
    AlignmentError, ConfigError, CorpusParseError, DSGFError, SchemaValidationError
)
from .core.logger import get_cli_logger, setup_logging
from .core.manifest import RunManifest, content_fingerprint
from .data.corpus import DialogueSample, iter_samples, load_dialogues
from .data.relation_labeler import (
    COOCCURRENCE_NAME, CooccurrenceTable, build_cooccurrence_table, relation_stats, save_labels
)
from .data.schema import SchemaGraph, build_schema_graph, load_schema
from .data.synthetic import write_synthetic
from .evaluation.metrics import evaluate
from .evaluation.reports import (
    is_prediction_file, read_predictions, render_relation_edges, render_relation_stats,
    render_report, render_sweep, write_predictions, write_report
)
from .ml.training import (
    CHECKPOINT_NAME, LAMBDA_GRID, SWEEP_AXES, load_checkpoint, predict_corpus, read_checkpoint,
    run_sweep, train
)

logger = get_cli_logger()

# erros de uso/configuração saem com 2; demais erros de execução com 1
USAGE_ERRORS = (ConfigError, SchemaValidationError, CorpusParseError, AlignmentError)


class UsageFailure(click.ClickException):
    exit_code = 2


class DSGFGroup(click.Group):
    """Grupo que converte exceções do domínio em códigos de saída"""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except USAGE_ERRORS as e:
            logger.error(str(e))
            raise UsageFailure(str(e))
        except (DSGFError, OSError) as e:
            logger.error(str(e))
            raise click.ClickException(str(e))


def _history_turns(value: Optional[str]) -> Optional[int]:
    if value is None or value.lower() == 'all':
        return None
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"history-turns deve ser um inteiro ou 'all': {value}")


def _grid_value(axis: str, raw: str) -> Any:
    raw = raw.strip()
    if axis == 'history_turns':
        return _history_turns(raw)
    try:
        return float(raw) if axis == 'lambda' else int(raw)
    except ValueError:
        raise ConfigError(f"valor inválido para o eixo {axis}: {raw}")


@contextmanager
def run_manifest(command: str, out_dir: Path, config: Optional[Dict[str, Any]] = None,
                 seed: Optional[int] = None, schema: Optional[str] = None,
                 corpus: Optional[str] = None) -> Iterator[RunManifest]:
    """Um manifesto por execução, gravado também em caso de falha"""
    manifest = RunManifest(
        command=command, config=config or {}, seed=seed,
        schema_fingerprint=content_fingerprint(schema),
        corpus_fingerprint=content_fingerprint(corpus)
    )
    status = 1
    try:
        yield manifest
        status = 0
    except USAGE_ERRORS:
        status = 2
        raise
    finally:
        manifest.finish(status).write(out_dir)


def _schema(path: str) -> SchemaGraph:
    return build_schema_graph(load_schema(path))


def _samples(dialogues, graph: SchemaGraph, table: CooccurrenceTable,
             config: TrainConfig) -> List[DialogueSample]:
    return list(iter_samples(
        dialogues, graph, table, config.history_turns, config.max_len, config.cooccurrence_threshold
    ))


def _train_config(ctx: click.Context, config_file: Optional[str], **overrides: Any) -> TrainConfig:
    settings: Config = ctx.obj
    config = TrainConfig(seed=settings.SEED)
    if config_file:
        config = TrainConfig.from_file(config_file)
    values = {k: v for k, v in overrides.items() if v is not None}
    if 'history_turns' in values:
        values['history_turns'] = _history_turns(values['history_turns'])
    return replace(config, **values).validate()


@click.group(cls=DSGFGroup)
@click.option('--env-file', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Arquivo .env com variáveis DSGF_*')
@click.option('--log-level', default=None, help='Nível de log (DEBUG, INFO, ...)')
@click.pass_context
def cli(ctx: click.Context, env_file: Optional[str], log_level: Optional[str]) -> None:
    """DSGF - rastreamento de estado de diálogo guiado por esquema"""
    settings = Config(env_file)
    logging_config = settings.get_logging_config()
    if log_level:
        logging_config['level'] = log_level
    setup_logging(**logging_config)
    ctx.obj = settings


@cli.command()
@click.option('--schema', 'schema_path', required=True, type=click.Path(exists=True))
@click.option('--corpus', required=True, type=click.Path(exists=True))
@click.option('--out', 'out_dir', required=True, type=click.Path(file_okay=False),
              help=f"Diretório de saída: labels.joblib, {COOCCURRENCE_NAME} e manifest.json")
@click.option('--threshold', default=0.05, show_default=True, type=click.FloatRange(0.0, 1.0),
              help='Limiar de frequência de co-ocorrência')
@click.option('--cooccurrence', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Tabela de co-ocorrência do treino (padrão: calculada do próprio corpus)')
def label(schema_path: str, corpus: str, out_dir: str, threshold: float,
          cooccurrence: Optional[str]) -> None:
    """Rotula as relações dinâmicas de cada turno de usuário

    Grava em OUT os rótulos (labels.joblib), a tabela de co-ocorrência usada
    e o manifesto da execução.
    """
    out = Path(out_dir)
    with run_manifest('label', out, {'threshold': threshold}, None, schema_path, corpus) as manifest:
        graph = _schema(schema_path)
        dialogues = load_dialogues(corpus, graph)
        if cooccurrence:
            table = CooccurrenceTable.load(cooccurrence)
        else:
            table = build_cooccurrence_table(d.final_state() for d in dialogues)
        samples = list(iter_samples(dialogues, graph, table, threshold=threshold))
        labels = {s.key: s.gold_relations for s in samples}

        out.mkdir(parents=True, exist_ok=True)
        save_labels(labels, out / 'labels.joblib')
        table.save(out / COOCCURRENCE_NAME)
        click.echo(render_relation_stats(relation_stats(labels.values())))
        manifest.artifacts = {
            'labels': str(out / 'labels.joblib'), 'cooccurrence': str(out / COOCCURRENCE_NAME)
        }


@cli.command('train')
@click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False), default=None)
@click.option('--schema', 'schema_path', required=True, type=click.Path(exists=True))
@click.option('--corpus', required=True, type=click.Path(exists=True))
@click.option('--dev', 'dev_corpus', type=click.Path(exists=True), default=None)
@click.option('--out', 'out_dir', required=True, type=click.Path(file_okay=False))
@click.option('--epochs', type=int, default=None)
@click.option('--batch-size', type=int, default=None)
@click.option('--lr', 'learning_rate', type=float, default=None)
@click.option('--lambda', 'lambda_balance', type=float, default=None)
@click.option('--seed', type=int, default=None)
@click.option('--history-turns', default=None, help="Número de utterances de histórico ou 'all'")
@click.option('--relation-subset', type=click.Choice(RELATION_SUBSETS), default=None)
@click.pass_context
def train_command(ctx: click.Context, config_file: Optional[str], schema_path: str, corpus: str,
                  dev_corpus: Optional[str], out_dir: str, **overrides: Any) -> None:
    """Treina o modelo e grava checkpoint, métricas e configuração"""
    settings: Config = ctx.obj
    out = Path(out_dir)
    config = _train_config(ctx, config_file, **overrides)
    with run_manifest('train', out, config.to_dict(), config.seed, schema_path, corpus) as manifest:
        graph = _schema(schema_path)
        dialogues = load_dialogues(corpus, graph)
        table = build_cooccurrence_table(d.final_state() for d in dialogues)
        samples = _samples(dialogues, graph, table, config)
        dev_samples = _samples(load_dialogues(dev_corpus, graph), graph, table, config) if dev_corpus else None

        result = train(config, samples, graph, dev_samples, out, settings.DEVICE, settings.CACHE_DIR)
        config.to_file(out / 'train.cfg')
        table.save(out / COOCCURRENCE_NAME)
        manifest.artifacts = {
            'checkpoint': str(result.checkpoint),
            'metrics': str(out / 'metrics.csv'),
            'config': str(out / 'train.cfg'),
            'cooccurrence': str(out / COOCCURRENCE_NAME),
        }
        click.echo(f"Checkpoint gravado em {result.checkpoint}")


def _training_table(cooccurrence: Optional[str], checkpoint: Optional[str]) -> CooccurrenceTable:
    """Tabela de co-ocorrência do treino: explícita ou a gravada junto ao checkpoint"""
    if cooccurrence:
        return CooccurrenceTable.load(cooccurrence)
    if checkpoint:
        run_dir = Path(checkpoint)
        if not run_dir.is_dir():
            run_dir = run_dir.parent
        if (run_dir / COOCCURRENCE_NAME).exists():
            return CooccurrenceTable.load(run_dir / COOCCURRENCE_NAME)
        raise ConfigError(f"{COOCCURRENCE_NAME} ausente em {run_dir}; informe --cooccurrence")
    raise ConfigError(
        "tabela de co-ocorrência do treino ausente; informe --cooccurrence ou --checkpoint"
    )


def _corpus_samples(graph: SchemaGraph, corpus: str, config: TrainConfig,
                    table: CooccurrenceTable) -> List[DialogueSample]:
    return _samples(load_dialogues(corpus, graph), graph, table, config)


@cli.command()
@click.option('--checkpoint', required=True, type=click.Path(exists=True))
@click.option('--schema', 'schema_path', required=True, type=click.Path(exists=True))
@click.option('--corpus', required=True, type=click.Path(exists=True))
@click.option('--out', 'out_dir', required=True, type=click.Path(file_okay=False))
@click.option('--cooccurrence', type=click.Path(exists=True, dir_okay=False), default=None,
              help=f"Tabela de co-ocorrência do treino (padrão: {COOCCURRENCE_NAME} do checkpoint)")
@click.option('--no-carryover', is_flag=True, default=False,
              help='Decodifica cada turno isoladamente, sem herdar valores')
@click.pass_context
def predict(ctx: click.Context, checkpoint: str, schema_path: str, corpus: str, out_dir: str,
            cooccurrence: Optional[str], no_carryover: bool) -> None:
    """Prediz o estado de cada turno (o esquema pode conter domínios não vistos)"""
    settings: Config = ctx.obj
    out = Path(out_dir)
    model, info = load_checkpoint(checkpoint, settings.DEVICE, settings.CACHE_DIR)
    with run_manifest('predict', out, info.config.to_dict(), info.config.seed,
                      schema_path, corpus) as manifest:
        graph = _schema(schema_path)
        table = _training_table(cooccurrence, checkpoint)
        samples = _corpus_samples(graph, corpus, info.config, table)
        states, relations = predict_corpus(model, samples, graph, carryover=not no_carryover)
        target = write_predictions(out / 'predictions.json', states, relations)
        manifest.artifacts = {'predictions': str(target), 'checkpoint': str(checkpoint)}
        click.echo(f"{len(states)} turnos previstos em {target}")


@cli.command('eval')
@click.option('--pred', 'pred_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--gold', 'gold_path', required=True, type=click.Path(exists=True))
@click.option('--schema', 'schema_path', required=True, type=click.Path(exists=True))
@click.option('--report', 'report_path', required=True, type=click.Path(dir_okay=False))
@click.option('--checkpoint', type=click.Path(exists=True), default=None,
              help='Checkpoint cujo esquema de treino define domínios vistos')
@click.option('--cooccurrence', type=click.Path(exists=True, dir_okay=False), default=None,
              help=f"Tabela de co-ocorrência do treino (padrão: {COOCCURRENCE_NAME} do checkpoint)")
@click.option('--threshold', type=click.FloatRange(0.0, 1.0), default=None,
              help='Limiar de co-ocorrência (padrão: o do treino)')
def eval_command(pred_path: str, gold_path: str, schema_path: str, report_path: str,
                 checkpoint: Optional[str], cooccurrence: Optional[str],
                 threshold: Optional[float]) -> None:
    """Avalia predições contra a referência e grava o relatório

    Com um corpus como referência, as relações de ouro são rotuladas com a
    tabela de co-ocorrência do treino, nunca com a do próprio corpus.
    """
    report_file = Path(report_path)
    with run_manifest('eval', report_file.parent, {}, None, schema_path, gold_path) as manifest:
        graph = _schema(schema_path)
        payload = read_checkpoint(checkpoint) if checkpoint else {}
        predicted, predicted_relations = read_predictions(pred_path)
        turn_domains = None
        if is_prediction_file(gold_path):
            gold, gold_relations = read_predictions(gold_path)
        else:
            table = _training_table(cooccurrence, checkpoint)
            config = TrainConfig(**payload['config']) if payload else TrainConfig()
            if threshold is not None:
                config = replace(config, cooccurrence_threshold=threshold)
            samples = _corpus_samples(graph, gold_path, config, table)
            gold = {s.key: s.gold_state for s in samples}
            gold_relations = {s.key: s.gold_relations for s in samples}
            turn_domains = {s.key: s.domains for s in samples}

        fingerprints = payload.get('domain_fingerprints', {}) if checkpoint else None

        use_relations = bool(predicted_relations) and bool(gold_relations)
        report = evaluate(
            predicted, gold, graph, fingerprints,
            predicted_relations if use_relations else None,
            gold_relations if use_relations else None,
            turn_domains
        )
        write_report(report, report_file)
        manifest.artifacts = {'report': str(report_file)}
        click.echo(render_report(report))


@cli.command('inspect-graph')
@click.option('--schema', 'schema_path', required=True, type=click.Path(exists=True))
@click.option('--checkpoint', type=click.Path(exists=True), default=None)
@click.option('--corpus', type=click.Path(exists=True), default=None)
@click.option('--cooccurrence', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Tabela de co-ocorrência do treino (padrão: a do checkpoint)')
@click.option('--dialogue', 'dialogue_id', default=None, help='Identificador do diálogo')
@click.option('--turn', 'turn_index', type=int, default=None, help='Índice do turno de usuário')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), default=None)
@click.pass_context
def inspect_graph(ctx: click.Context, schema_path: str, checkpoint: Optional[str],
                  corpus: Optional[str], cooccurrence: Optional[str], dialogue_id: Optional[str],
                  turn_index: Optional[int], out_dir: Optional[str]) -> None:
    """Mostra nós, arestas estáticas e, com um turno, as arestas dinâmicas"""
    settings: Config = ctx.obj
    out = Path(out_dir) if out_dir else Path(settings.OUTPUT_DIR) / 'inspect-graph'
    with run_manifest('inspect-graph', out, {}, None, schema_path, corpus):
        graph = _schema(schema_path)
        if not corpus:
            click.echo(graph.render())
            return
        model, config = None, TrainConfig()
        if checkpoint:
            model, info = load_checkpoint(checkpoint, settings.DEVICE, settings.CACHE_DIR)
            config = info.config
        if cooccurrence or checkpoint:
            table = _training_table(cooccurrence, checkpoint)
        else:
            logger.info(f"Sem tabela do treino: {corpus} rotulado como partição de treino")
            table = build_cooccurrence_table(d.final_state() for d in load_dialogues(corpus, graph))
        sample = _select_sample(_corpus_samples(graph, corpus, config, table), dialogue_id, turn_index)
        click.echo(graph.subgraph(sample.domains).render())
        click.echo(f"Turno {sample.dialogue_id}/{sample.turn_index}")
        if model is not None:
            _, output = model.predict(sample, graph)
            click.echo(render_relation_edges(output.decoder_relations, 'Arestas dinâmicas previstas'))
        else:
            click.echo(render_relation_edges(sample.gold_relations, 'Arestas dinâmicas rotuladas'))


def _select_sample(samples: Sequence[DialogueSample], dialogue_id: Optional[str],
                   turn_index: Optional[int]) -> DialogueSample:
    for sample in samples:
        if dialogue_id is not None and sample.dialogue_id != dialogue_id:
            continue
        if turn_index is not None and sample.turn_index != turn_index:
            continue
        return sample
    raise ConfigError(f"turno não encontrado: {dialogue_id}/{turn_index}")


@cli.command()
@click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False), default=None)
@click.option('--schema', 'schema_path', required=True, type=click.Path(exists=True))
@click.option('--corpus', required=True, type=click.Path(exists=True))
@click.option('--dev', 'dev_corpus', type=click.Path(exists=True), default=None)
@click.option('--axis', required=True, type=click.Choice(sorted(SWEEP_AXES)))
@click.option('--grid', default=None,
              help='Valores separados por vírgula, ex.: 0,0.25,0.5 (lambda: padrão 0,0.25,0.5,0.75,1)')
@click.option('--out', 'out_dir', required=True, type=click.Path(file_okay=False))
@click.pass_context
def sweep(ctx: click.Context, config_file: Optional[str], schema_path: str, corpus: str,
          dev_corpus: Optional[str], axis: str, grid: Optional[str], out_dir: str) -> None:
    """Uma execução de treino por valor do eixo e uma tabela-resumo"""
    settings: Config = ctx.obj
    out = Path(out_dir)
    config = _train_config(ctx, config_file)
    if grid is None:
        if axis != 'lambda':
            raise ConfigError(f"--grid é obrigatório para o eixo {axis}")
        values = list(LAMBDA_GRID)
    else:
        values = [_grid_value(axis, raw) for raw in grid.split(',') if raw.strip()]
    with run_manifest(f"sweep {axis}", out, config.to_dict(), config.seed,
                      schema_path, corpus) as manifest:
        graph = _schema(schema_path)
        dialogues = load_dialogues(corpus, graph)
        dev_dialogues = load_dialogues(dev_corpus, graph) if dev_corpus else None
        table = build_cooccurrence_table(d.final_state() for d in dialogues)

        def build_samples(child: TrainConfig) -> Tuple[List[DialogueSample], List[DialogueSample]]:
            dev = _samples(dev_dialogues, graph, table, child) if dev_dialogues else []
            return _samples(dialogues, graph, table, child), dev

        summary = run_sweep(config, axis, values, graph, build_samples, out,
                            settings.DEVICE, settings.CACHE_DIR)
        for child_checkpoint in out.glob(f"*/{CHECKPOINT_NAME}"):
            table.save(child_checkpoint.parent / COOCCURRENCE_NAME)
        manifest.artifacts = {'summary': str(out / f"sweep_{axis}.csv")}
        click.echo(render_sweep(summary))


@cli.command()
@click.option('--out', 'out_dir', required=True, type=click.Path(file_okay=False))
@click.option('--dialogues', 'num_dialogues', default=30, show_default=True, type=click.IntRange(1))
@click.option('--seed', default=7, show_default=True, type=int)
@click.option('--unseen', is_flag=True, default=False, help='Inclui o domínio não visto no esquema')
def synth(out_dir: str, num_dialogues: int, seed: int, unseen: bool) -> None:
    """Grava o esquema e o corpus sintéticos"""
    out = Path(out_dir)
    with run_manifest('synth', out, {'dialogues': num_dialogues, 'unseen': unseen}, seed) as manifest:
        paths = write_synthetic(out, num_dialogues, seed, unseen)
        manifest.artifacts = {k: str(v) for k, v in paths.items()}
        click.echo(f"Esquema: {paths['schema']}\nCorpus: {paths['corpus']}")


@cli.command()
@click.option('--schema', 'schema_path', required=True, type=click.Path(exists=True))
@click.option('--corpus', required=True, type=click.Path(exists=True))
@click.option('--threshold', default=0.05, show_default=True, type=click.FloatRange(0.0, 1.0))
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), default=None)
@click.pass_context
def stats(ctx: click.Context, schema_path: str, corpus: str, threshold: float,
          out_dir: Optional[str]) -> None:
    """Proporção de cada relação dinâmica no corpus"""
    settings: Config = ctx.obj
    out = Path(out_dir) if out_dir else Path(settings.OUTPUT_DIR) / 'stats'
    with run_manifest('stats', out, {'threshold': threshold}, None, schema_path, corpus):
        graph = _schema(schema_path)
        dialogues = load_dialogues(corpus, graph)
        table = build_cooccurrence_table(d.final_state() for d in dialogues)
        samples = iter_samples(dialogues, graph, table, threshold=threshold)
        click.echo(render_relation_stats(relation_stats(s.gold_relations for s in samples)))


def main() -> None:
    cli(prog_name='dsgf')


if __name__ == '__main__':
    main()
