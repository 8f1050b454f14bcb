"""
Плотная SDP-релаксация: min Tr(A0 X) при Tr(Am X) <= cm, X эрмитова и X >= 0.
X параметризуется n^2 вещественными координатами (диагональ, Re и Im верхнего треугольника),
барьер -log det X считается через разложение Холецкого.
Фаза I: min u при Tr(Am X) <= cm + u, X >= eps*I, Tr X <= R; останавливается, как только u < 0.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.linalg

from qcqp.linalg import HermitianMatrix, QcqpInstance
from solvers.barrier import BarrierProblem, EngineParams, Status, barrier_solve

logger = logging.getLogger(__name__)

# Порог отношения второго собственного значения к первому для ранга 1
RANK1_RATIO = 1e-6
# Относительный зазор, при котором незавершённое решение ещё годится как нижняя граница
USABLE_GAP = 1e-6


@dataclass(frozen=True, eq=False)
class SdpProblem:
    a0: HermitianMatrix
    matrices: tuple
    bounds: np.ndarray

    @classmethod
    def from_instance(cls, inst: QcqpInstance) -> 'SdpProblem':
        return cls(inst.a0, tuple(inst.matrices), np.array(inst.bounds, dtype=float))

    @property
    def n(self) -> int:
        return self.a0.n

    @cached_property
    def basis(self) -> np.ndarray:
        """Столбцы - векторизованные (построчно) эрмитовы базисные матрицы E_k."""
        n = self.n
        columns = []
        for i in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[i, i] = 1
            columns.append(e.reshape(-1))
        for i in range(n):
            for j in range(i + 1, n):
                e = np.zeros((n, n), dtype=complex)
                e[i, j] = e[j, i] = 1
                columns.append(e.reshape(-1))
                e = np.zeros((n, n), dtype=complex)
                e[i, j], e[j, i] = 1j, -1j
                columns.append(e.reshape(-1))
        return np.array(columns).T

    def coordinates(self, matrix: np.ndarray) -> np.ndarray:
        """Координаты эрмитовой матрицы в базисе E_k (диагональные E_k имеют норму 1, остальные sqrt 2)."""
        projections = (self.basis.conj().T @ np.asarray(matrix, dtype=complex).reshape(-1)).real
        norms = np.einsum('ij,ij->j', self.basis.conj(), self.basis).real
        return projections / norms

    def trace_vector(self, matrix: HermitianMatrix) -> np.ndarray:
        # Tr(A E_k) для всех k
        return (self.basis.conj().T @ matrix.entries.reshape(-1)).real

    def matrix(self, v: np.ndarray) -> np.ndarray:
        return (self.basis @ v).reshape(self.n, self.n)


@dataclass(eq=False)
class SdpSolution:
    X: np.ndarray
    lower_bound: float
    duals: np.ndarray
    status: Status
    newton_iterations: int = 0
    phase1_value: Optional[float] = None
    dual_matrix: Optional[np.ndarray] = None
    history: list = field(default_factory=list)
    gap: float = np.nan

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL

    @property
    def usable(self) -> bool:
        """Граница пригодна: решение оптимально или остановлено по лимиту с малым зазором."""
        if self.optimal:
            return True
        return (self.status == Status.MAX_ITER and bool(np.isfinite(self.gap))
                and self.gap <= USABLE_GAP * max(1.0, abs(self.lower_bound)))


class _SdpBarrier(BarrierProblem):
    """
    Барьер для переменных w = (v, [u]): линейные неравенства G w < h и X(v) - eps*I > 0.
    """

    def __init__(self, sdp: SdpProblem, objective: np.ndarray, g: np.ndarray, h: np.ndarray, epsilon: float = 0.0):
        self.sdp = sdp
        self.c = objective
        self.g = g
        self.h = h
        self.epsilon = epsilon
        self.k = sdp.n ** 2
        self.barrier_parameter = float(g.shape[0] + sdp.n)

    def shifted(self, w: np.ndarray) -> np.ndarray:
        return self.sdp.matrix(w[:self.k]) - self.epsilon * np.eye(self.sdp.n)

    def objective(self, w):
        return float(self.c @ w)

    def objective_derivatives(self, w):
        return self.c, np.zeros((w.size, w.size))

    def barrier(self, w):
        slack = self.h - self.g @ w
        if not np.all(slack > 0):
            return np.inf
        try:
            factor = scipy.linalg.cholesky(self.shifted(w), lower=True)
        except np.linalg.LinAlgError:
            return np.inf
        log_det = 2 * np.sum(np.log(np.diag(factor).real))
        return -float(np.sum(np.log(slack))) - float(log_det)

    def barrier_derivatives(self, w):
        slack = self.h - self.g @ w
        gradient = self.g.T @ (1.0 / slack)
        hessian = (self.g.T * slack ** -2) @ self.g
        inverse = scipy.linalg.inv(self.shifted(w))
        inverse = (inverse + inverse.conj().T) / 2
        basis = self.sdp.basis
        # grad_k = -Tr(W E_k), H_kl = Tr(W E_k W E_l) = [B^H (W kron W^T) B]_kl
        gradient[:self.k] -= (basis.conj().T @ inverse.reshape(-1)).real
        hessian[:self.k, :self.k] += (basis.conj().T @ np.kron(inverse, inverse.T) @ basis).real
        return gradient, hessian

    def duals(self, w, t):
        return 1.0 / (t * (self.h - self.g @ w))


def _phase_one(sdp: SdpProblem, params: EngineParams) -> tuple:
    """Возвращает (v, u, число шагов Ньютона, статус); при u < 0 точка v строго допустима."""
    n, k = sdp.n, sdp.n ** 2
    a = np.array([sdp.trace_vector(matrix) for matrix in sdp.matrices]).reshape(len(sdp.matrices), k)
    trace_row = sdp.trace_vector(HermitianMatrix.identity(n))
    v0 = sdp.coordinates(np.eye(n))
    u0 = float(np.max(a @ v0 - sdp.bounds)) + 1.0
    trace_cap = 1e6 * max(1, n)

    g = np.vstack([np.hstack([a, -np.ones((a.shape[0], 1))]), np.append(trace_row, 0.0)])
    h = np.append(sdp.bounds, trace_cap)
    objective = np.zeros(k + 1)
    objective[-1] = 1.0
    barrier = _SdpBarrier(sdp, objective, g, h, epsilon=params.sdp_epsilon)
    outcome = barrier_solve(barrier, np.append(v0, u0), params, stop_when=lambda w: w[-1] < 0)
    u = float(outcome.y[-1])
    logger.debug('Фаза I: u = %.3e после %d шагов Ньютона', u, outcome.newton_iterations)
    return outcome.y[:k], u, outcome.newton_iterations, outcome.status


def solve_sdp(p: SdpProblem, params: Optional[EngineParams] = None) -> SdpSolution:
    params = params or EngineParams()
    n, k = p.n, p.n ** 2
    a = np.array([p.trace_vector(matrix) for matrix in p.matrices]).reshape(len(p.matrices), k)
    bounds = np.array(p.bounds, dtype=float)
    v = p.coordinates(np.eye(n))
    newton = 0
    phase1_value = None

    # Если X = I уже строго допустима, фаза I не нужна
    if not np.all(a @ v < bounds):
        v, phase1_value, newton, status = _phase_one(p, params)
        if phase1_value >= 0:
            if status != Status.OPTIMAL:
                return SdpSolution(p.matrix(v), np.nan, np.zeros(len(bounds)), status, newton, phase1_value)
            if phase1_value > params.sdp_phase1_tol:
                logger.info('SDP недопустима: оптимальное u = %.3e', phase1_value)
                return SdpSolution(p.matrix(v), np.nan, np.zeros(len(bounds)), Status.INFEASIBLE, newton, phase1_value)
            # Допустимая область почти без внутренности: ослабляем границы на величину u
            bounds = bounds + phase1_value + params.sdp_phase1_tol

    barrier = _SdpBarrier(p, p.trace_vector(p.a0), a, bounds)
    outcome = barrier_solve(barrier, v, params)
    x = p.matrix(outcome.y)
    x = (x + x.conj().T) / 2
    duals = barrier.duals(outcome.y, outcome.t)
    dual_matrix = scipy.linalg.inv(x) / outcome.t
    value = float(np.trace(p.a0.entries @ x).real)
    if outcome.status != Status.OPTIMAL:
        # Без завершённого центрирования граница берётся с запасом на зазор
        value -= outcome.gap
    return SdpSolution(
        X=x,
        lower_bound=value,
        duals=duals,
        status=outcome.status,
        newton_iterations=newton + outcome.newton_iterations,
        phase1_value=phase1_value,
        dual_matrix=(dual_matrix + dual_matrix.conj().T) / 2,
        history=outcome.history,
        gap=outcome.gap,
    )


def rank_one_extract(X: np.ndarray, tol_ratio: float = RANK1_RATIO) -> Optional[np.ndarray]:
    """
    Если X численно ранга 1 (lambda2 / lambda1 <= tol_ratio), возвращает sqrt(lambda1) * v1,
    иначе None. Вектор определён с точностью до глобальной фазы.
    """
    values, vectors = scipy.linalg.eigh((np.asarray(X) + np.asarray(X).conj().T) / 2)
    top = values[-1]
    if top <= 0:
        return None
    second = max(values[-2], 0.0) if values.size > 1 else 0.0
    if second / top > tol_ratio:
        return None
    return np.sqrt(top) * vectors[:, -1]


def eigen_ratio(X: np.ndarray) -> float:
    values = scipy.linalg.eigvalsh((np.asarray(X) + np.asarray(X).conj().T) / 2)
    if values[-1] <= 0:
        return np.inf
    return max(values[-2], 0.0) / values[-1] if values.size > 1 else 0.0
