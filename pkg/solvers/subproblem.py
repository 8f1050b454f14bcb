"""
Выпуклая подзадача FPP-SCA в вещественных координатах:
min y^T P0 y + l0^T y  при  y^T Pj y + lj^T y + rj <= 0,
где все Pj положительно полуопределены. Решается барьерным методом из solvers.barrier.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from solvers.barrier import BarrierProblem, EngineParams, Status, barrier_solve

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class QuadraticConstraint:
    quadratic: Optional[np.ndarray]
    linear: np.ndarray
    offset: float

    def value(self, y: np.ndarray) -> float:
        quadratic = 0.0 if self.quadratic is None else float(y @ self.quadratic @ y)
        return quadratic + float(self.linear @ y) + self.offset


@dataclass(frozen=True, eq=False)
class ConvexQcqpSubproblem:
    objective_quadratic: np.ndarray
    objective_linear: np.ndarray
    constraints: tuple
    # Строго допустимая начальная точка, если известна
    start: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.objective_linear.shape[0]

    def objective(self, y: np.ndarray) -> float:
        return float(y @ self.objective_quadratic @ y + self.objective_linear @ y)

    def is_convex(self, tol: float = 1e-9) -> bool:
        matrices = [self.objective_quadratic] + [c.quadratic for c in self.constraints if c.quadratic is not None]
        for matrix in matrices:
            values = np.linalg.eigvalsh((matrix + matrix.T) / 2)
            if values.size and values[0] < -tol * max(1.0, np.linalg.norm(matrix)):
                return False
        return True


@dataclass(eq=False)
class SubproblemSolution:
    y: np.ndarray
    objective_value: float
    # Множители для всех неравенств в порядке subproblem.constraints
    duals: np.ndarray
    status: Status
    newton_iterations: int
    gap: float
    history: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL


class _SubproblemBarrier(BarrierProblem):

    def __init__(self, problem: ConvexQcqpSubproblem):
        self.problem = problem
        self.p0 = (problem.objective_quadratic + problem.objective_quadratic.T) / 2
        self.l0 = problem.objective_linear
        self.linear = np.array([c.linear for c in problem.constraints], dtype=float).reshape(len(problem.constraints), problem.n)
        self.offsets = np.array([c.offset for c in problem.constraints], dtype=float)
        # Квадратичные члены храним только у тех ограничений, где они есть
        self.quadratic_index = np.array([j for j, c in enumerate(problem.constraints) if c.quadratic is not None], dtype=int)
        if self.quadratic_index.size:
            self.quadratic = np.stack([(problem.constraints[j].quadratic + problem.constraints[j].quadratic.T) / 2
                                       for j in self.quadratic_index])
        else:
            self.quadratic = np.zeros((0, problem.n, problem.n))
        self.barrier_parameter = float(len(problem.constraints))

    def values(self, y: np.ndarray) -> np.ndarray:
        values = self.linear @ y + self.offsets
        if self.quadratic_index.size:
            values[self.quadratic_index] += np.einsum('i,jik,k->j', y, self.quadratic, y)
        return values

    def gradients(self, y: np.ndarray) -> np.ndarray:
        gradients = self.linear.copy()
        if self.quadratic_index.size:
            gradients[self.quadratic_index] += 2 * self.quadratic @ y
        return gradients

    def objective(self, y):
        return float(y @ self.p0 @ y + self.l0 @ y)

    def objective_derivatives(self, y):
        return 2 * self.p0 @ y + self.l0, 2 * self.p0

    def barrier(self, y):
        values = self.values(y)
        if not np.all(values < 0):
            return np.inf
        return -float(np.sum(np.log(-values)))

    def barrier_derivatives(self, y):
        inverse = 1.0 / -self.values(y)
        gradients = self.gradients(y)
        gradient = gradients.T @ inverse
        hessian = (gradients.T * inverse ** 2) @ gradients
        if self.quadratic_index.size:
            hessian += 2 * np.einsum('j,jik->ik', inverse[self.quadratic_index], self.quadratic)
        return gradient, hessian


def solve_subproblem(p: ConvexQcqpSubproblem, params: Optional[EngineParams] = None) -> SubproblemSolution:
    """
    Решает выпуклую подзадачу. Начальная точка берётся из p.start (для подзадач FPP-SCA
    она строго допустима по построению), иначе из нуля.
    Двойственные переменные: lambda_j = 1 / (t * (-q_j(y))).
    """
    params = params or EngineParams()
    barrier = _SubproblemBarrier(p)
    start = np.zeros(p.n) if p.start is None else np.asarray(p.start, dtype=float)
    outcome = barrier_solve(barrier, start, params)
    duals = 1.0 / (outcome.t * -barrier.values(outcome.y))
    if outcome.status != Status.OPTIMAL:
        logger.warning('Подзадача решена со статусом %s, зазор %.2e', outcome.status.value, outcome.gap)
    return SubproblemSolution(
        y=outcome.y,
        objective_value=barrier.objective(outcome.y),
        duals=duals,
        status=outcome.status,
        newton_iterations=outcome.newton_iterations,
        gap=outcome.gap,
        history=outcome.history,
    )
