"""
Общее ядро барьерного метода: метод Ньютона с бэктрекингом для задачи
min t * f0(y) + B(y), где B - логарифмический барьер допустимой области, t растёт в mu раз.
Используется и выпуклыми подзадачами FPP-SCA, и плотной SDP-релаксацией.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
import scipy.linalg

logger = logging.getLogger(__name__)

# Относительное убывание, неотличимое от ошибок округления
ROUNDOFF = 10 * np.finfo(float).eps


class Status(str, Enum):
    OPTIMAL = 'optimal'
    MAX_ITER = 'max_iter'
    NUMERICAL_FAILURE = 'numerical_failure'
    INFEASIBLE = 'infeasible'


class InfeasibleStart(ValueError):
    pass


@dataclass(frozen=True)
class EngineParams:
    max_newton: int = 200
    max_outer: int = 60
    gap_tol: float = 1e-9
    t0: float = 1.0
    mu: float = 10.0
    alpha: float = 0.25
    beta: float = 0.5
    newton_tol: float = 1e-10
    regularization: float = 1e-12
    regularization_retries: int = 3
    sdp_epsilon: float = 1e-8
    sdp_phase1_tol: float = 1e-7

    def __post_init__(self):
        if not 0 < self.alpha < 0.5:
            raise ValueError('alpha должно лежать в (0, 0.5)')
        if not 0 < self.beta < 1:
            raise ValueError('beta должно лежать в (0, 1)')
        if self.mu <= 1 or self.t0 <= 0:
            raise ValueError('Нужно mu > 1 и t0 > 0')

    @classmethod
    def from_settings(cls, **overrides) -> 'EngineParams':
        from django.conf import settings

        engine = settings.ENGINE
        values = {
            'max_newton': engine['MAX_NEWTON'],
            'max_outer': engine['MAX_OUTER'],
            'gap_tol': engine['GAP_TOL'],
            't0': engine['T0'],
            'mu': engine['MU'],
            'alpha': engine['ALPHA'],
            'beta': engine['BETA'],
            'newton_tol': engine['NEWTON_TOL'],
            'regularization': engine['REGULARIZATION'],
            'regularization_retries': engine['REGULARIZATION_RETRIES'],
            'sdp_epsilon': engine['SDP_EPSILON'],
            'sdp_phase1_tol': engine['SDP_PHASE1_TOL'],
        }
        values.update(overrides)
        return cls(**values)


class BarrierProblem:
    """
    Интерфейс задачи для ядра. barrier(y) возвращает inf вне области определения,
    barrier_parameter - параметр барьера (число неравенств плюс порядок матричного неравенства),
    так что оценка зазора двойственности равна barrier_parameter / t.
    """
    barrier_parameter: float = 0.0

    def objective(self, y: np.ndarray) -> float:
        raise NotImplementedError

    def objective_derivatives(self, y: np.ndarray) -> tuple:
        raise NotImplementedError

    def barrier(self, y: np.ndarray) -> float:
        raise NotImplementedError

    def barrier_derivatives(self, y: np.ndarray) -> tuple:
        raise NotImplementedError


@dataclass
class BarrierOutcome:
    y: np.ndarray
    t: float
    status: Status
    newton_iterations: int
    outer_iterations: int
    gap: float
    # Значение f0 после каждого центрирования
    history: list = field(default_factory=list)
    stopped_early: bool = False


def newton_direction(hessian: np.ndarray, gradient: np.ndarray, params: EngineParams) -> Optional[np.ndarray]:
    """Решает H d = -g через Холецкого; при неудаче добавляет регуляризацию и пробует ещё раз."""
    scale = max(1.0, float(np.max(np.abs(np.diag(hessian))))) if hessian.size else 1.0
    shift = 0.0
    for attempt in range(params.regularization_retries + 1):
        try:
            factor = scipy.linalg.cho_factor(hessian + shift * np.eye(hessian.shape[0]), check_finite=True)
            return scipy.linalg.cho_solve(factor, -gradient)
        except (np.linalg.LinAlgError, ValueError):
            shift = params.regularization * scale * 100 ** attempt
            logger.debug('Система Ньютона не факторизуется, регуляризация %.1e', shift)
    return None


def gap_threshold(value: float, params: EngineParams) -> float:
    """Допуск на оценку зазора barrier_parameter / t, относительный при |f0| > 1."""
    return params.gap_tol * max(1.0, abs(value))


def _center(problem: BarrierProblem, y: np.ndarray, t: float, params: EngineParams,
            stop_when: Optional[Callable]) -> tuple:
    """
    Центрирование при фиксированном t. Возвращает (y, шаги, статус или None, остановлено ли досрочно).
    Порог на декремент масштабируется с t * |f0|: при больших t ошибки округления в градиенте
    не дают декременту опуститься ниже абсолютного newton_tol.
    """
    for step in range(params.max_newton):
        objective_gradient, objective_hessian = problem.objective_derivatives(y)
        barrier_gradient, barrier_hessian = problem.barrier_derivatives(y)
        gradient = t * objective_gradient + barrier_gradient
        hessian = t * objective_hessian + barrier_hessian
        direction = newton_direction(hessian, gradient, params)
        if direction is None or not np.all(np.isfinite(direction)):
            return y, step, Status.NUMERICAL_FAILURE, False
        objective = problem.objective(y)
        decrement = -float(gradient @ direction)
        if decrement / 2 <= params.newton_tol * max(1.0, t * abs(objective)):
            return y, step, None, False

        current = t * objective + problem.barrier(y)
        size = 1.0
        while True:
            candidate = y + size * direction
            barrier = problem.barrier(candidate)
            value = t * problem.objective(candidate) + barrier
            if np.isfinite(barrier) and value <= current - params.alpha * size * decrement:
                break
            size *= params.beta
            if size < 1e-14:
                # Ошибки округления не дают продвинуться дальше - точка центрирована с машинной точностью
                return y, step, None, False
        y = candidate
        if stop_when is not None and stop_when(y):
            return y, step + 1, None, True
        if current - value <= ROUNDOFF * max(1.0, abs(current)):
            # Убывание на уровне ошибок округления
            return y, step + 1, None, False
    return y, params.max_newton, Status.MAX_ITER, False


def barrier_solve(problem: BarrierProblem, y0: np.ndarray, params: EngineParams,
                  stop_when: Optional[Callable] = None) -> BarrierOutcome:
    y = np.array(y0, dtype=float)
    if not np.isfinite(problem.barrier(y)):
        raise InfeasibleStart('Начальная точка не лежит строго внутри допустимой области')

    t = params.t0
    newton_total = 0
    history = []
    for outer in range(1, params.max_outer + 1):
        y, steps, status, stopped = _center(problem, y, t, params, stop_when)
        newton_total += steps
        objective = problem.objective(y)
        history.append(objective)
        gap = problem.barrier_parameter / t
        converged = gap <= gap_threshold(objective, params)
        if status == Status.MAX_ITER and converged:
            logger.debug('Центрирование не завершено при t=%.1e, но зазор %.1e уже в допуске', t, gap)
            status = None
        if stopped or status is not None:
            if status is not None:
                logger.warning('Барьерный метод остановлен со статусом %s (t=%.1e)', status.value, t)
            return BarrierOutcome(y, t, status or Status.OPTIMAL, newton_total, outer, gap, history, stopped)
        if converged:
            return BarrierOutcome(y, t, Status.OPTIMAL, newton_total, outer, gap, history)
        t *= params.mu
    logger.warning('Барьерный метод исчерпал %d внешних итераций', params.max_outer)
    return BarrierOutcome(y, t / params.mu, Status.MAX_ITER, newton_total, params.max_outer,
                          problem.barrier_parameter * params.mu / t, history)
