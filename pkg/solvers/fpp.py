"""
FPP-SCA: на каждой итерации вогнутые части ограничений линеаризуются в точке z_k,
к каждому ограничению добавляется неотрицательная невязка s_m со штрафом lambda * sum(s),
решается выпуклая подзадача и z_{k+1} = x_k. Подзадача всегда допустима.
"""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from qcqp.generators import complex_gaussian
from qcqp.linalg import (DimensionMismatch, QcqpInstance, as_vector, check_feasibility,
                         constraint_values, lift, lower, quad_form, real_embedding,
                         split_instance)
from solvers.barrier import EngineParams, Status
from solvers.subproblem import (ConvexQcqpSubproblem, QuadraticConstraint,
                                solve_subproblem)

logger = logging.getLogger(__name__)

# Номер потока случайных чисел для начальных точек (поток 0 занят генератором задач)
START_STREAM = 1


class FppStatus(str, Enum):
    FEASIBLE_KKT = 'feasible_kkt'
    FEASIBLE_CONVERGED = 'feasible_converged'
    INFEASIBLE_CONVERGED = 'infeasible_converged'
    MAX_ITER = 'max_iter'


FEASIBLE_STATUSES = (FppStatus.FEASIBLE_KKT, FppStatus.FEASIBLE_CONVERGED)


@dataclass(frozen=True)
class FppParams:
    lam: float = 10.0
    max_iter: int = 30
    conv_tol: float = 1e-4
    feas_tol: float = 1e-6
    slack_zero_tol: float = 1e-7
    kkt_tol: float = 1e-5
    # Уточняющие итерации после сходимости, пока не выполнены условия ККТ
    kkt_refine: int = 20

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError('lambda должна быть положительной')
        if self.conv_tol <= 0:
            raise ValueError('conv_tol должен быть положительным')
        if self.max_iter < 1:
            raise ValueError('max_iter должно быть не меньше 1')
        if self.kkt_refine < 0:
            raise ValueError('kkt_refine не может быть отрицательным')

    @classmethod
    def from_settings(cls, **overrides) -> 'FppParams':
        from django.conf import settings

        fpp = settings.FPP
        values = {
            'lam': fpp['LAMBDA'],
            'max_iter': fpp['MAX_ITER'],
            'conv_tol': fpp['CONV_TOL'],
            'feas_tol': fpp['FEAS_TOL'],
            'slack_zero_tol': fpp['SLACK_ZERO_TOL'],
            'kkt_tol': fpp['KKT_TOL'],
            'kkt_refine': fpp['KKT_REFINE'],
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


@dataclass(frozen=True, eq=False)
class IterateRecord:
    iteration: int
    z: np.ndarray
    x: np.ndarray
    s: np.ndarray
    # x^H A0 x + lambda * sum(s)
    penalized_objective: float
    objective: float
    violations: np.ndarray
    feasible: bool
    duals: np.ndarray
    subproblem_status: Status
    newton_iterations: int


@dataclass(eq=False)
class IterateTrace:
    records: list = field(default_factory=list)

    def append(self, record: IterateRecord):
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, index):
        return self.records[index]

    @property
    def penalized_objectives(self) -> np.ndarray:
        return np.array([record.penalized_objective for record in self.records])

    def is_monotone(self, tol: float = 1e-7) -> bool:
        values = self.penalized_objectives
        return bool(np.all(np.diff(values) <= tol))


@dataclass(frozen=True)
class KktCertificate:
    multipliers: np.ndarray
    stationarity_residual: float
    complementarity_residual: float
    primal_violation: float
    passed: bool

    @property
    def residual(self) -> float:
        return max(self.stationarity_residual, self.complementarity_residual)


@dataclass(eq=False)
class FppResult:
    status: FppStatus
    x_final: np.ndarray
    s_final: np.ndarray
    objective: float
    iterations_to_feasibility: Optional[int]
    iterations_to_convergence: int
    kkt: KktCertificate
    trace: IterateTrace
    slack_relapses: int = 0
    start_index: int = 0

    @property
    def feasible(self) -> bool:
        return self.status in FEASIBLE_STATUSES

    @property
    def kkt_residual(self) -> float:
        return self.kkt.residual

    @property
    def slack_l1(self) -> float:
        return float(np.sum(self.s_final))

    @property
    def converged(self) -> bool:
        return self.status != FppStatus.MAX_ITER

    @property
    def convergence_step(self) -> int:
        """Номер итерации сходимости при нумерации с нуля (x_0 - решение первой подзадачи)."""
        return self.iterations_to_convergence - 1


class SubproblemFailure(RuntimeError):

    def __init__(self, message: str, trace: IterateTrace):
        super(SubproblemFailure, self).__init__(message)
        self.trace = trace


def random_start(n: int, seed=None, index: int = 0) -> np.ndarray:
    """i.i.d. циркулярная комплексная гауссова точка с дисперсией 2 на компоненту."""
    entropy = None if seed is None else [int(seed), START_STREAM, int(index)]
    return complex_gaussian(np.random.default_rng(entropy), (n,), 2.0)


def build_subproblem(inst: QcqpInstance, splits: Sequence, z, lam: float) -> ConvexQcqpSubproblem:
    """
    Переменные y = (Re x, Im x, s_1..s_M). Для каждого m:
    x^H A(+) x + 2 Re{z^H A(-) x} <= cm + z^H A(-) z + s_m и s_m >= 0;
    цель x^H A0 x + lambda * sum(s).
    """
    if len(splits) != inst.m or any(split.n != inst.n for split in splits):
        raise DimensionMismatch('Разложения ограничений не соответствуют задаче')
    z = as_vector(z, inst.n)
    n2, m = 2 * inst.n, inst.m
    size = n2 + m
    z_real = lift(z)

    objective_quadratic = np.zeros((size, size))
    objective_quadratic[:n2, :n2] = real_embedding(inst.a0)
    objective_linear = np.concatenate([np.zeros(n2), np.full(m, float(lam))])

    surrogates, nonnegativity = [], []
    start = np.zeros(size)
    for index, split in enumerate(splits):
        linear = np.zeros(size)
        linear[:n2] = 2 * real_embedding(split.aminus) @ z_real
        linear[n2 + index] = -1.0
        offset = split.bound + quad_form(split.aminus, z)
        quadratic = None
        if not split.aplus.is_zero:
            quadratic = np.zeros((size, size))
            quadratic[:n2, :n2] = real_embedding(split.aplus)
        surrogates.append(QuadraticConstraint(quadratic, linear, -offset))

        slack = np.zeros(size)
        slack[n2 + index] = -1.0
        nonnegativity.append(QuadraticConstraint(None, slack, 0.0))
        # При x = 0 ограничение сводится к -offset - s_m < 0
        start[n2 + index] = max(0.0, -offset) + 1.0

    return ConvexQcqpSubproblem(objective_quadratic, objective_linear, tuple(surrogates + nonnegativity), start)


def kkt_check(inst: QcqpInstance, x, duals, tol: float = 1e-5, feas_tol: float = 1e-6) -> KktCertificate:
    """
    Проверка условий ККТ исходной задачи в точке x с множителями mu_m
    (двойственные переменные линеаризованных ограничений, невязки s_m >= 0 отбрасываются).
    """
    x = as_vector(x, inst.n)
    multipliers = np.maximum(np.asarray(duals, dtype=float)[:inst.m], 0.0)
    a0x = inst.a0.entries @ x
    gradient = a0x + np.einsum('m,mij,j->i', multipliers, inst.stacked, x)
    stationarity = float(np.linalg.norm(gradient) / (1 + np.linalg.norm(a0x)))
    gaps = constraint_values(inst, x) - inst.bounds
    complementarity = float(np.max(np.abs(multipliers * gaps)))
    primal = float(np.max(np.maximum(gaps, 0.0)))
    passed = bool(stationarity <= tol and complementarity <= tol and primal <= feas_tol)
    return KktCertificate(multipliers, stationarity, complementarity, primal, passed)


def run_fpp_sca(inst: QcqpInstance, z0=None, params: Optional[FppParams] = None,
                engine: Optional[EngineParams] = None, seed=None,
                callback: Optional[Callable] = None) -> FppResult:
    """
    Итерации FPP-SCA до |f_k - f_(k-1)| <= conv_tol или max_iter. После сходимости в допустимой
    точке, если проверка ККТ не пройдена, делается не более kkt_refine уточняющих итераций:
    критерий по цели не различает x_k и x_(k-1), а множители подзадачи относятся к z_k = x_(k-1).
    """
    params = params or FppParams()
    engine = engine or EngineParams()
    z = random_start(inst.n, seed) if z0 is None else as_vector(z0, inst.n)
    splits = split_instance(inst)
    n2 = 2 * inst.n

    trace = IterateTrace()
    first_feasible = None
    relapses = 0
    previous = None
    converged_at = None
    final, certificate = None, None
    k = 0
    while converged_at is not None or k < params.max_iter:
        k += 1
        subproblem = build_subproblem(inst, splits, z, params.lam)
        solution = solve_subproblem(subproblem, engine)
        if solution.status == Status.NUMERICAL_FAILURE:
            raise SubproblemFailure(f'Подзадача на итерации {k} не решена', trace)

        x = lower(solution.y[:n2])
        s = np.maximum(solution.y[n2:], 0.0)
        objective = quad_form(inst.a0, x)
        feasibility = check_feasibility(inst, x, params.feas_tol)
        slack_free = bool(np.max(s) <= params.slack_zero_tol)
        record = IterateRecord(
            iteration=k,
            z=z,
            x=x,
            s=s,
            penalized_objective=objective + params.lam * float(np.sum(s)),
            objective=objective,
            violations=feasibility.violations,
            feasible=feasibility.feasible and slack_free,
            duals=solution.duals,
            subproblem_status=solution.status,
            newton_iterations=solution.newton_iterations,
        )
        trace.append(record)
        if callback is not None:
            callback(record)
        logger.debug('FPP-SCA k=%d: f=%.6g, sum(s)=%.3e, допустима=%s', k, objective, np.sum(s), record.feasible)

        if record.feasible and first_feasible is None:
            first_feasible = k
            logger.info('Допустимая точка найдена на итерации %d', k)
        elif first_feasible is not None and not slack_free:
            relapses += 1
            logger.warning('Невязки снова ненулевые на итерации %d (max s = %.3e)', k, np.max(s))

        if converged_at is None and previous is not None and abs(objective - previous) <= params.conv_tol:
            converged_at = k
        if converged_at is not None:
            if not record.feasible:
                # Результат - последняя допустимая точка после сходимости
                if final is None:
                    final = record
                break
            final, certificate = record, kkt_check(inst, x, solution.duals, params.kkt_tol, params.feas_tol)
            if certificate.passed or k - converged_at >= params.kkt_refine:
                break
            logger.debug('ККТ не выполнены (%.2e), уточняющая итерация', certificate.residual)
        previous = objective
        z = x

    final = final or trace[-1]
    if certificate is None:
        certificate = kkt_check(inst, final.x, final.duals, params.kkt_tol, params.feas_tol)
    if converged_at is None:
        status = FppStatus.MAX_ITER
    elif not final.feasible:
        status = FppStatus.INFEASIBLE_CONVERGED
    elif certificate.passed:
        status = FppStatus.FEASIBLE_KKT
    else:
        status = FppStatus.FEASIBLE_CONVERGED
    return FppResult(
        status=status,
        x_final=final.x,
        s_final=final.s,
        objective=final.objective,
        iterations_to_feasibility=first_feasible,
        iterations_to_convergence=converged_at or len(trace),
        kkt=certificate,
        trace=trace,
        slack_relapses=relapses,
    )


def _rank(result: FppResult) -> tuple:
    if result.feasible:
        return 0, result.objective, 0.0, result.start_index
    return 1, result.slack_l1, result.objective, result.start_index


def multi_start(inst: QcqpInstance, starts: Sequence, params: Optional[FppParams] = None,
                engine: Optional[EngineParams] = None) -> FppResult:
    """
    Запуск из нескольких точек: лучший допустимый результат по значению цели,
    если допустимых нет - с наименьшей суммой невязок, затем по цели и номеру старта.
    """
    if not len(starts):
        raise ValueError('Нужна хотя бы одна начальная точка')
    results = [replace(run_fpp_sca(inst, z0, params, engine), start_index=index) for index, z0 in enumerate(starts)]
    return min(results, key=_rank)


def fpp_result_to_dict(result: FppResult, include_trace: bool = False) -> dict:
    from qcqp.serializers import vector_to_json

    data = {
        'status': result.status.value,
        'objective': result.objective,
        'x': vector_to_json(result.x_final),
        's': result.s_final.tolist(),
        'iterations_to_feasibility': result.iterations_to_feasibility,
        'iterations_to_convergence': result.iterations_to_convergence,
        'kkt': {
            'stationarity_residual': result.kkt.stationarity_residual,
            'complementarity_residual': result.kkt.complementarity_residual,
            'primal_violation': result.kkt.primal_violation,
            'multipliers': result.kkt.multipliers.tolist(),
            'passed': result.kkt.passed,
        },
        'slack_relapses': result.slack_relapses,
        'start_index': result.start_index,
    }
    if include_trace:
        data['trace'] = [
            {
                'iteration': record.iteration,
                'z': vector_to_json(record.z),
                'x': vector_to_json(record.x),
                's': record.s.tolist(),
                'penalized_objective': record.penalized_objective,
                'objective': record.objective,
                'violations': record.violations.tolist(),
                'feasible': record.feasible,
            }
            for record in result.trace
        ]
    return data
