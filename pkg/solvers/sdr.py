"""
Базовый метод: полуопределённая релаксация (нижняя граница), извлечение решения ранга 1
и гауссова рандомизация с масштабированием, если решение не ранга 1.
"""
import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg

from qcqp.linalg import DEFAULT_FEAS_TOL, QcqpInstance, check_feasibility, quad_form
from solvers.barrier import EngineParams, Status
from solvers.sdp import RANK1_RATIO, SdpProblem, eigen_ratio, rank_one_extract, solve_sdp

logger = logging.getLogger(__name__)

# Номер потока случайных чисел для рандомизации (0 - генератор задач, 1 - начальные точки FPP-SCA)
SDR_STREAM = 2


@dataclass(frozen=True)
class SdrParams:
    draws: int = 10000
    rank1_ratio: float = RANK1_RATIO
    batch: int = 1000
    feas_tol: float = DEFAULT_FEAS_TOL

    def __post_init__(self):
        if self.draws < 0 or self.batch < 1:
            raise ValueError('draws >= 0 и batch >= 1')

    @classmethod
    def from_settings(cls, **overrides) -> 'SdrParams':
        from django.conf import settings

        values = {
            'draws': settings.SDR['DRAWS'],
            'rank1_ratio': settings.SDR['RANK1_RATIO'],
            'batch': settings.SDR['BATCH'],
            'feas_tol': settings.FPP['FEAS_TOL'],
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


@dataclass(eq=False)
class SdrResult:
    X: np.ndarray
    lower_bound: Optional[float]
    rank1: bool
    best_point: Optional[np.ndarray]
    best_objective: Optional[float]
    randomizations_tried: int
    status: Status
    eigen_ratio: float = np.inf
    # 'rank1', 'randomization' или None
    source: Optional[str] = None

    @property
    def sdr_feasible(self) -> bool:
        return self.lower_bound is not None

    @property
    def found_point(self) -> bool:
        return self.best_point is not None


class LeastViolating(NamedTuple):
    x: np.ndarray
    objective: float
    violation: float
    draw: int


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(None if seed is None else [int(seed), SDR_STREAM])


def _factor(X: np.ndarray) -> np.ndarray:
    """L с L L^H = X, отрицательные собственные значения обнуляются."""
    values, vectors = scipy.linalg.eigh((np.asarray(X) + np.asarray(X).conj().T) / 2)
    return vectors * np.sqrt(np.maximum(values, 0.0))


def _draws(X: np.ndarray, num_draws: int, batch: int, seed):
    """Пакеты гауссовых векторов xi = L g с ковариацией X и номер первого вектора пакета."""
    factor = _factor(X)
    rng = _rng(seed)
    n = factor.shape[0]
    for start in range(0, num_draws, batch):
        size = min(batch, num_draws - start)
        pairs = rng.standard_normal((size, n, 2))
        g = (pairs[..., 0] + 1j * pairs[..., 1]) / np.sqrt(2)
        yield start, g @ factor.T


def _quadratics(inst: QcqpInstance, xi: np.ndarray) -> tuple:
    q0 = np.einsum('bi,ij,bj->b', xi.conj(), inst.a0.entries, xi).real
    q = np.einsum('bi,mij,bj->bm', xi.conj(), inst.stacked, xi).real
    return q0, q


def scale_intervals(q: np.ndarray, bounds: np.ndarray) -> tuple:
    """
    Для каждой строки q (значения xi^H Am xi) пересечение множеств {tau >= 0: tau * q_m <= c_m},
    где tau = t^2. Возвращает (lo, hi), пустые пересечения помечены lo > hi.
    """
    q = np.atleast_2d(q)
    c = np.broadcast_to(bounds, q.shape)
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = c / q
    upper = np.where(q > 0, np.where(c >= 0, ratio, -np.inf), np.inf)
    lower = np.where(q < 0, np.where(c < 0, ratio, 0.0), 0.0)
    # q_m = 0 при c_m < 0: ограничение не выполняется ни при каком масштабе
    upper = np.where((q == 0) & (c < 0), -np.inf, upper)
    return np.max(lower, axis=1), np.min(upper, axis=1)


def randomize_and_scale(inst: QcqpInstance, X: np.ndarray, num_draws: int, rng_seed=None,
                        batch: int = 1000, feas_tol: float = DEFAULT_FEAS_TOL) -> Optional[tuple]:
    """
    Гауссова рандомизация с ковариацией X. Каждый вектор масштабируется на наименьший
    допустимый t (целевая функция не убывает по t^2). Возвращает (x, objective)
    лучшего допустимого кандидата или None.
    """
    best = None
    for start, xi in _draws(X, num_draws, batch, rng_seed):
        q0, q = _quadratics(inst, xi)
        lo, hi = scale_intervals(q, inst.bounds)
        candidates = np.flatnonzero(lo <= hi)
        if not candidates.size:
            continue
        objectives = lo[candidates] * q0[candidates]
        # Порядок по (цель, номер), ошибки округления отсекает повторная проверка
        for index in candidates[np.lexsort((candidates, objectives))]:
            x = np.sqrt(lo[index]) * xi[index]
            if not check_feasibility(inst, x, feas_tol).feasible:
                continue
            objective = quad_form(inst.a0, x)
            if best is None or objective < best[1]:
                best = (x, objective, start + index)
            break
    if best is None:
        logger.info('Рандомизация: ни один из %d векторов не масштабируется до допустимой точки', num_draws)
        return None
    logger.debug('Рандомизация: лучший вектор %d, цель %.6g', best[2], best[1])
    return best[0], best[1]


def _total_violation(q: np.ndarray, bounds: np.ndarray, tau: np.ndarray) -> np.ndarray:
    # q: B x M, tau: B x K -> B x K
    return np.maximum(tau[:, :, None] * q[:, None, :] - bounds, 0.0).sum(axis=2)


def least_violating_draw(inst: QcqpInstance, X: np.ndarray, num_draws: int, seed=None,
                         batch: int = 1000) -> Optional[LeastViolating]:
    """
    Для каждого вектора выбирается масштаб с минимальной суммарной невязкой
    sum max(0, tau q_m - c_m); функция кусочно-линейна по tau, минимум в одной из точек излома.
    Лучший вектор по (невязка, цель, номер).
    """
    best = None
    for start, xi in _draws(X, num_draws, batch, seed):
        q0, q = _quadratics(inst, xi)
        with np.errstate(divide='ignore', invalid='ignore'):
            breaks = np.where(q != 0, inst.bounds / q, 0.0)
        tau = np.concatenate([np.zeros((q.shape[0], 1)), np.maximum(breaks, 0.0)], axis=1)
        violations = _total_violation(q, inst.bounds, tau)
        objectives = tau * q0[:, None]
        for row in range(q.shape[0]):
            column = np.lexsort((objectives[row], violations[row]))[0]
            key = (violations[row, column], objectives[row, column], start + row)
            if best is None or key < best[0]:
                best = (key, np.sqrt(tau[row, column]) * xi[row])
    if best is None:
        return None
    (violation, objective, draw), x = best
    return LeastViolating(x, float(objective), float(violation), draw)


def sdr_lower_bound(inst: QcqpInstance, params: Optional[SdrParams] = None,
                    engine: Optional[EngineParams] = None) -> SdrResult:
    params = params or SdrParams()
    solution = solve_sdp(SdpProblem.from_instance(inst), engine)
    if not solution.usable:
        logger.warning('SDP-релаксация решена со статусом %s', solution.status.value)
        return SdrResult(solution.X, None, False, None, None, 0, solution.status)

    ratio = eigen_ratio(solution.X)
    rank1 = bool(ratio <= params.rank1_ratio)
    result = SdrResult(solution.X, solution.lower_bound, rank1, None, None, 0, solution.status, ratio)
    if rank1:
        x = rank_one_extract(solution.X, params.rank1_ratio)
        if x is not None and check_feasibility(inst, x, params.feas_tol).feasible:
            result.best_point = x
            result.best_objective = quad_form(inst.a0, x)
            result.source = 'rank1'
        else:
            logger.info('Решение ранга 1 не прошло проверку допустимости')
    return result


def solve_sdr(inst: QcqpInstance, params: Optional[SdrParams] = None, seed=None,
              engine: Optional[EngineParams] = None) -> SdrResult:
    """Нижняя граница SDR, затем рандомизация, если точное решение не извлечено."""
    params = params or SdrParams()
    result = sdr_lower_bound(inst, params, engine)
    if not result.sdr_feasible or result.best_point is not None:
        return result
    found = randomize_and_scale(inst, result.X, params.draws, seed, params.batch, params.feas_tol)
    result.randomizations_tried = params.draws
    if found is not None:
        result.best_point, result.best_objective = found
        result.source = 'randomization'
    return result


def loss_db(objective: Optional[float], lower_bound: Optional[float]) -> Optional[float]:
    """10 log10(objective / lower_bound); None, если граница неположительна или значения нет."""
    if objective is None or lower_bound is None or lower_bound <= 0 or objective <= 0:
        return None
    return float(10 * np.log10(objective / lower_bound))


def sdr_result_to_dict(result: SdrResult) -> dict:
    from qcqp.serializers import vector_to_json

    return {
        'status': result.status.value,
        'sdr_feasible': result.sdr_feasible,
        'lower_bound': result.lower_bound,
        'rank1': result.rank1,
        'eigen_ratio': None if not np.isfinite(result.eigen_ratio) else result.eigen_ratio,
        'x': None if result.best_point is None else vector_to_json(result.best_point),
        'objective': result.best_objective,
        'source': result.source,
        'randomizations_tried': result.randomizations_tried,
        'loss_db': loss_db(result.best_objective, result.lower_bound),
    }
