"""
Типы комплексных QCQP и эрмитова линейная алгебра.

Задача: min x^H A0 x при x^H Am x <= cm, m = 1..M, где A0 положительно полуопределена,
а Am произвольные эрмитовы (в общем случае знаконеопределённые) матрицы.
Все объекты неизменяемы после создания, функции чистые.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
import scipy.linalg

logger = logging.getLogger(__name__)

# Допуск эрмитовости для входных данных (парсер отвергает всё, что хуже)
HERMITIAN_TOL = 1e-9
# Допуск полуопределённости относительно нормы Фробениуса
SEMIDEFINITE_TOL = 1e-9
# Абсолютный допуск на значения ограничений
DEFAULT_FEAS_TOL = 1e-6


class DimensionMismatch(ValueError):
    pass


class NotHermitian(ValueError):
    pass


class NotSemidefinite(ValueError):
    pass


class NonFiniteInput(ValueError):
    pass


def _read_only(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def as_vector(x, n: Optional[int] = None) -> np.ndarray:
    """Приводит x к неизменяемому комплексному вектору, проверяя размерность и конечность."""
    vector = np.array(x, dtype=complex).reshape(-1) if np.ndim(x) else np.array([x], dtype=complex)
    if n is not None and vector.shape[0] != n:
        raise DimensionMismatch(f'Ожидался вектор размерности {n}, получено {vector.shape[0]}')
    if not np.all(np.isfinite(vector)):
        raise NonFiniteInput('Вектор содержит NaN или inf')
    return _read_only(vector)


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """
    Эрмитова матрица n x n. При создании выполняется симметризация (A + A^H) / 2,
    поэтому диагональ строго вещественная, а ошибки округления из файлов поглощаются.
    Для строгой проверки входных данных используйте from_array(..., strict=True).
    """
    entries: np.ndarray

    def __post_init__(self):
        array = np.array(self.entries, dtype=complex)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise DimensionMismatch(f'Матрица должна быть квадратной, получено {array.shape}')
        if not np.all(np.isfinite(array)):
            raise NonFiniteInput('Матрица содержит NaN или inf')
        array = (array + array.conj().T) / 2
        object.__setattr__(self, 'entries', _read_only(array))

    @classmethod
    def from_array(cls, array, strict: bool = False, tol: float = HERMITIAN_TOL) -> 'HermitianMatrix':
        raw = np.array(array, dtype=complex)
        if strict and raw.ndim == 2 and raw.shape[0] == raw.shape[1] and np.all(np.isfinite(raw)):
            deviation = np.max(np.abs(raw - raw.conj().T)) if raw.size else 0.0
            if deviation > tol * max(1.0, np.linalg.norm(raw)):
                raise NotHermitian(f'Матрица не эрмитова: отклонение {deviation:.3e}')
        return cls(raw)

    @classmethod
    def zeros(cls, n: int) -> 'HermitianMatrix':
        return cls(np.zeros((n, n), dtype=complex))

    @classmethod
    def identity(cls, n: int) -> 'HermitianMatrix':
        return cls(np.eye(n, dtype=complex))

    @classmethod
    def outer(cls, v) -> 'HermitianMatrix':
        v = np.asarray(v, dtype=complex)
        return cls(np.outer(v, v.conj()))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    @cached_property
    def eigh(self):
        # Собственные значения по возрастанию, как возвращает scipy
        return scipy.linalg.eigh(self.entries)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigh[0]

    @property
    def is_zero(self) -> bool:
        return not np.any(self.entries)

    def is_psd(self, tol: float = SEMIDEFINITE_TOL) -> bool:
        return self.n == 0 or self.eigenvalues[0] >= -tol * self.norm

    def is_nsd(self, tol: float = SEMIDEFINITE_TOL) -> bool:
        return self.n == 0 or self.eigenvalues[-1] <= tol * self.norm

    def __neg__(self) -> 'HermitianMatrix':
        return HermitianMatrix(-self.entries)

    def __add__(self, other: 'HermitianMatrix') -> 'HermitianMatrix':
        if self.n != other.n:
            raise DimensionMismatch(f'Размерности {self.n} и {other.n} не совпадают')
        return HermitianMatrix(self.entries + other.entries)

    def __repr__(self):
        return f'HermitianMatrix(n={self.n}, norm={self.norm:.4g})'


class Constraint(NamedTuple):
    matrix: HermitianMatrix
    bound: float


@dataclass(frozen=True, eq=False)
class QcqpInstance:
    """Данные задачи: A0 (целевая функция) и пары (Am, cm) ограничений x^H Am x <= cm."""
    a0: HermitianMatrix
    constraints: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        constraints = tuple(Constraint(matrix, float(bound)) for matrix, bound in self.constraints)
        object.__setattr__(self, 'constraints', constraints)
        object.__setattr__(self, 'metadata', dict(self.metadata or {}))
        if not constraints:
            raise DimensionMismatch('Нужно хотя бы одно ограничение')
        for index, (matrix, bound) in enumerate(constraints, start=1):
            if matrix.n != self.a0.n:
                raise DimensionMismatch(f'A{index} имеет размерность {matrix.n}, а A0 - {self.a0.n}')
            if not np.isfinite(bound):
                raise NonFiniteInput(f'c{index} не конечно')
        if not self.a0.is_psd():
            raise NotSemidefinite(f'A0 не полуопределена: min eig = {self.a0.eigenvalues[0]:.3e}')

    @property
    def n(self) -> int:
        return self.a0.n

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def matrices(self) -> list:
        return [constraint.matrix for constraint in self.constraints]

    @cached_property
    def bounds(self) -> np.ndarray:
        return _read_only(np.array([constraint.bound for constraint in self.constraints]))

    @cached_property
    def stacked(self) -> np.ndarray:
        # Массив M x n x n для векторизованных вычислений
        return _read_only(np.stack([constraint.matrix.entries for constraint in self.constraints]))

    @cached_property
    def scale(self) -> float:
        """Характерный масштаб для относительных допусков."""
        return max([self.a0.norm] + [matrix.norm for matrix in self.matrices] + [1.0])

    @property
    def x_init(self) -> Optional[np.ndarray]:
        x = self.metadata.get('x_init')
        return None if x is None else as_vector(x, self.n)

    @property
    def is_convex(self) -> bool:
        return all(matrix.is_psd() for matrix in self.matrices)


class Feasibility(NamedTuple):
    violations: np.ndarray
    feasible: bool

    @property
    def max_violation(self) -> float:
        return float(np.max(self.violations)) if self.violations.size else 0.0

    @property
    def total_violation(self) -> float:
        return float(np.sum(self.violations))


@dataclass(frozen=True, eq=False)
class SplitConstraint:
    """Разложение Am = A(+) + A(-) на полуопределённые части вместе с границей cm."""
    aplus: HermitianMatrix
    aminus: HermitianMatrix
    bound: float

    @classmethod
    def from_constraint(cls, matrix: HermitianMatrix, bound: float) -> 'SplitConstraint':
        aplus, aminus = split_hermitian(matrix)
        return cls(aplus, aminus, float(bound))

    @property
    def n(self) -> int:
        return self.aplus.n

    @property
    def matrix(self) -> HermitianMatrix:
        return self.aplus + self.aminus

    @property
    def is_convex(self) -> bool:
        return self.aminus.is_zero


MatrixLike = Union[HermitianMatrix, np.ndarray]


def _entries(a: MatrixLike) -> np.ndarray:
    return a.entries if isinstance(a, HermitianMatrix) else np.asarray(a, dtype=complex)


def quad_form(a: MatrixLike, x) -> float:
    """Re(x^H A x) с проверкой, что мнимая часть - лишь ошибка округления."""
    entries = _entries(a)
    x = as_vector(x, entries.shape[0])
    ax = entries @ x
    raw = np.vdot(x, ax)
    scale = np.linalg.norm(entries) * np.vdot(x, x).real
    if abs(raw.imag) > 1e-10 * (abs(raw.real) + scale) + 1e-12:
        raise NotHermitian(f'Мнимая часть квадратичной формы {raw.imag:.3e} слишком велика')
    return float(raw.real)


def constraint_values(inst: QcqpInstance, x) -> np.ndarray:
    """Значения x^H Am x для всех ограничений сразу."""
    x = as_vector(x, inst.n)
    return np.einsum('i,mij,j->m', x.conj(), inst.stacked, x).real


def split_hermitian(a: HermitianMatrix) -> tuple:
    """
    A = A(+) + A(-): A(+) собирается из собственных пар с положительными собственными значениями,
    A(-) из остальных (нулевые собственные значения уходят в A(-)).
    """
    values, vectors = a.eigh
    positive = values > 0
    plus = (vectors[:, positive] * values[positive]) @ vectors[:, positive].conj().T
    minus = (vectors[:, ~positive] * values[~positive]) @ vectors[:, ~positive].conj().T
    return HermitianMatrix(plus), HermitianMatrix(minus)


def surrogate_value(sc: SplitConstraint, z, x) -> float:
    """
    Выпуклая мажоранта x^H Am x в точке разложения z:
    g(x; z) = x^H A(+) x + 2 Re{z^H A(-) x} - z^H A(-) z.
    """
    z = as_vector(z, sc.n)
    x = as_vector(x, sc.n)
    minus = sc.aminus.entries
    linear = 2 * np.vdot(z, minus @ x).real
    return quad_form(sc.aplus, x) + linear - quad_form(sc.aminus, z)


def check_feasibility(inst: QcqpInstance, x, tol: float = DEFAULT_FEAS_TOL) -> Feasibility:
    if tol < 0:
        raise ValueError('Допуск не может быть отрицательным')
    violations = np.maximum(0.0, constraint_values(inst, x) - inst.bounds)
    return Feasibility(violations, bool(np.all(violations <= tol)))


def real_embedding(a: MatrixLike) -> np.ndarray:
    """T(A) = [[Re A, -Im A], [Im A, Re A]], так что lift(x)^T T(A) lift(x) = x^H A x."""
    entries = _entries(a)
    return np.block([[entries.real, -entries.imag], [entries.imag, entries.real]])


def lift(x) -> np.ndarray:
    x = np.asarray(x, dtype=complex).reshape(-1)
    return np.concatenate([x.real, x.imag])


def lower(y) -> np.ndarray:
    y = np.asarray(y, dtype=float).reshape(-1)
    n = y.shape[0] // 2
    return y[:n] + 1j * y[n:2 * n]


def split_instance(inst: QcqpInstance) -> list:
    return [SplitConstraint.from_constraint(matrix, bound) for matrix, bound in inst.constraints]
