"""
Монте-Карло эксперименты: для каждого запуска генерируется задача (seed = base_seed + index),
решается выбранными методами, результат - словарь из JSON-типов, чтобы его можно было
вернуть из celery-задачи. Агрегаты считаются чистой свёрткой по записям в порядке index.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import repeat
from typing import Optional

import numpy as np

from qcqp.generators import MulticastConfig, generate, parse_generator_spec
from solvers.fpp import FppParams, multi_start, random_start, run_fpp_sca
from solvers.sdr import SdrParams, least_violating_draw, loss_db, sdr_lower_bound, solve_sdr

logger = logging.getLogger(__name__)

SCENARIOS = ('sdr_only', 'fpp_only', 'both', 'multicast')
# Во сколько раз можно превысить число запусков при отборе задач с допустимой SDR
CANDIDATE_FACTOR = 20


class BenchAborted(RuntimeError):

    def __init__(self, message: str, diagnostics: list):
        super(BenchAborted, self).__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class BenchConfig:
    generator: str
    runs: int
    scenario: str = 'both'
    base_seed: int = 0
    draws: int = 10000
    starts: int = 1
    fpp: FppParams = field(default_factory=FppParams)
    name: str = 'bench'

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError('runs должно быть не меньше 1')
        if self.scenario not in SCENARIOS:
            raise ValueError(f'Неизвестный сценарий {self.scenario}')
        if self.starts < 1:
            raise ValueError('starts должно быть не меньше 1')
        # Проверка строки генератора
        parse_generator_spec(self.generator)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'BenchConfig':
        data = dict(data)
        fpp = data.pop('fpp', None) or {}
        return cls(fpp=FppParams(**fpp), **data)


def _sdr_fields(result, with_randomization: bool) -> dict:
    record = {
        'sdr_status': result.status.value,
        'sdr_feasible': result.sdr_feasible,
        'lower_bound': result.lower_bound,
        'rank1': result.rank1,
    }
    if with_randomization:
        record.update({
            'sdr_source': result.source,
            'sdr_found': result.best_point is not None,
            'sdr_objective': result.best_objective,
            'sdr_loss_db': loss_db(result.best_objective, result.lower_bound),
        })
    return record


def _fpp_fields(result, lower_bound: Optional[float], retried: bool) -> dict:
    return {
        'fpp_status': result.status.value,
        'fpp_feasible': result.feasible,
        'fpp_objective': result.objective,
        'fpp_iters_feasibility': result.iterations_to_feasibility,
        'fpp_iters_convergence': result.iterations_to_convergence,
        'fpp_kkt_residual': result.kkt_residual,
        'fpp_slack_l1': result.slack_l1,
        'fpp_slack_relapses': result.slack_relapses,
        'fpp_monotone': result.trace.is_monotone(),
        'fpp_retried': retried,
        'fpp_loss_db': loss_db(result.objective, lower_bound) if result.feasible else None,
    }


def _run_fpp(inst, cfg: BenchConfig, seed: int, z0=None):
    z0 = random_start(inst.n, seed) if z0 is None else z0
    result = run_fpp_sca(inst, z0, cfg.fpp)
    if result.feasible or cfg.starts == 1:
        return result, False
    starts = [z0] + [random_start(inst.n, seed, index) for index in range(1, cfg.starts)]
    return multi_start(inst, starts, cfg.fpp), True


def run_case(config: dict, index: int) -> dict:
    """Один запуск. Никогда не бросает исключений: ошибка попадает в запись со статусом failed."""
    cfg = BenchConfig.from_dict(config)
    seed = cfg.base_seed + index
    record = {'index': index, 'seed': seed, 'status': 'ok', 'skipped': False}
    try:
        inst = generate(cfg.generator, seed)
        sdr_params = SdrParams(draws=cfg.draws)
        if cfg.scenario == 'fpp_only':
            sdr = sdr_lower_bound(inst, sdr_params)
            record.update(_sdr_fields(sdr, with_randomization=False))
        else:
            sdr = solve_sdr(inst, sdr_params, seed=seed)
            record.update(_sdr_fields(sdr, with_randomization=True))

        if cfg.scenario == 'multicast':
            if not sdr.sdr_feasible:
                record['skipped'] = True
                return record
            best = least_violating_draw(inst, sdr.X, cfg.draws, seed, sdr_params.batch)
            record['init_violation'] = None if best is None else best.violation
            result, retried = _run_fpp(inst, cfg, seed, None if best is None else best.x)
            record.update(_fpp_fields(result, sdr.lower_bound, retried))
        elif cfg.scenario in ('fpp_only', 'both'):
            result, retried = _run_fpp(inst, cfg, seed)
            record.update(_fpp_fields(result, sdr.lower_bound, retried))
    except Exception as exc:
        logger.error('Запуск %d (seed %d) завершился ошибкой: %s', index, seed, exc, exc_info=True)
        record.update({'status': 'failed', 'error': f'{type(exc).__name__}: {exc}'})
    return record


def _mean(values: list) -> Optional[float]:
    return float(np.mean(values)) if values else None


def _percent(count: int, total: int) -> Optional[float]:
    return 100.0 * count / total if total else None


def aggregate(records: list, scenario: str, min_loss_runs: int = 5) -> dict:
    """Агрегаты по записям; средние считаются только там, где величина определена."""
    used = [record for record in records if not record.get('skipped')]
    ok = [record for record in used if record['status'] == 'ok']
    result = {
        'runs': len(used),
        'failed_runs': len(used) - len(ok),
        'skipped_instances': len(records) - len(used),
    }

    if scenario != 'fpp_only':
        sdr = [record for record in ok if record['sdr_feasible']]
        rank1 = [record for record in sdr if record['sdr_source'] == 'rank1']
        randomized = [record for record in sdr if record['sdr_source'] != 'rank1']
        found = [record for record in randomized if record['sdr_found']]
        losses = [record['sdr_loss_db'] for record in found if record['sdr_loss_db'] is not None]
        result.update({
            'sdr_infeasible_runs': len(ok) - len(sdr),
            'rank1_pct': _percent(len(rank1), len(sdr)),
            'feasible_after_randomization_pct': _percent(len(found), len(sdr)),
            'no_feasible_after_randomization_pct': _percent(len(randomized) - len(found), len(sdr)),
            'sdr_avg_loss_db': _mean(losses) if len(losses) >= min_loss_runs else None,
        })

    if scenario != 'sdr_only':
        fpp = [record for record in ok if 'fpp_status' in record]
        feasible = [record for record in fpp if record['fpp_feasible']]
        converged = [record for record in fpp if record['fpp_status'] != 'max_iter']
        result.update({
            'fpp_feasible_pct': _percent(len(feasible), len(fpp)),
            'fpp_avg_iters_feasibility': _mean([r['fpp_iters_feasibility'] for r in feasible]),
            'fpp_avg_iters_convergence': _mean([r['fpp_iters_convergence'] for r in converged]),
            'fpp_capped_pct': _percent(len(fpp) - len(converged), len(fpp)),
            'fpp_avg_loss_db': _mean([r['fpp_loss_db'] for r in feasible if r['fpp_loss_db'] is not None]),
            'fpp_retried_runs': sum(1 for record in fpp if record['fpp_retried']),
            'fpp_slack_relapse_runs': sum(1 for record in fpp if record['fpp_slack_relapses']),
        })
    return result


def _bench_settings() -> dict:
    from django.conf import settings

    return settings.BENCH


def _execute(cfg: BenchConfig, indices: list, jobs: int, backend: str) -> list:
    config = cfg.to_dict()
    if backend == 'celery':
        from celery import group

        from bench.tasks import run_case_task

        records = group([run_case_task.s(config, index) for index in indices]).apply_async().get()
    elif jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            records = list(executor.map(run_case, repeat(config), indices))
    else:
        records = [run_case(config, index) for index in indices]
    return sorted(records, key=lambda record: record['index'])


def _check_failures(records: list, max_failure_rate: float):
    failed = [record for record in records if record['status'] == 'failed']
    if records and len(failed) / len(records) > max_failure_rate:
        raise BenchAborted(f'Ошибкой завершились {len(failed)} из {len(records)} запусков', failed)


@dataclass(eq=False)
class BenchReport:
    config: BenchConfig
    records: list
    aggregates: dict

    def to_dict(self) -> dict:
        return {'config': self.config.to_dict(), 'aggregates': self.aggregates}


def run_bench(cfg: BenchConfig, jobs: Optional[int] = None, backend: Optional[str] = None) -> BenchReport:
    if cfg.scenario == 'multicast':
        return run_multicast_study(cfg, jobs, backend)
    options = _bench_settings()
    jobs = jobs or options['JOBS']
    backend = backend or options['BACKEND']
    logger.info('Запуск %s: %d прогонов, сценарий %s', cfg.name, cfg.runs, cfg.scenario)
    records = _execute(cfg, list(range(cfg.runs)), jobs, backend)
    _check_failures(records, options['MAX_FAILURE_RATE'])
    return BenchReport(cfg, records, aggregate(records, cfg.scenario, options['MIN_LOSS_RUNS']))


def run_multicast_study(cfg: BenchConfig, jobs: Optional[int] = None, backend: Optional[str] = None) -> BenchReport:
    """
    Отбирает первые cfg.runs задач с допустимой SDR (не более runs * CANDIDATE_FACTOR кандидатов),
    на них SDR с рандомизацией и FPP-SCA из точки рандомизации с наименьшей невязкой.
    """
    if not isinstance(parse_generator_spec(cfg.generator), MulticastConfig):
        raise ValueError('Для мультикаст-сценария нужен генератор multicast')
    if cfg.scenario != 'multicast':
        cfg = BenchConfig.from_dict({**cfg.to_dict(), 'scenario': 'multicast'})
    options = _bench_settings()
    jobs = jobs or options['JOBS']
    backend = backend or options['BACKEND']
    limit = cfg.runs * CANDIDATE_FACTOR

    records, kept, start = [], 0, 0
    while kept < cfg.runs and start < limit:
        batch = list(range(start, min(start + max(cfg.runs - kept, jobs), limit)))
        for record in _execute(cfg, batch, jobs, backend):
            if kept == cfg.runs:
                break
            records.append(record)
            kept += not record['skipped']
        start = batch[-1] + 1
        logger.info('Мультикаст: отобрано %d из %d, просмотрено %d кандидатов', kept, cfg.runs, start)
    if kept < cfg.runs:
        logger.warning('Найдено только %d задач с допустимой SDR из %d кандидатов', kept, limit)

    _check_failures([record for record in records if not record['skipped']], options['MAX_FAILURE_RATE'])
    return BenchReport(cfg, records, aggregate(records, cfg.scenario, options['MIN_LOSS_RUNS']))
