"""
Двумерный пример с тремя ограничениями: A1, A2 отрицательно полуопределены (допустимая область
снаружи эллипсов), A3 положительно определена (внутри эллипса), A0 = I, lambda = 10.

Начальные точки найдены перебором и зафиксированы как регрессионные:
обе достаточно далеко, чтобы первые два ограничения выполнялись, а третье нет.
Из Z0_SUCCESS алгоритм приходит к допустимому локальному оптимуму около (-0.31, 0.94),
из Z0_STUCK застревает в угле между границами первых двух ограничений около (0.96, 0.31)
с ненулевым s3.
"""
import numpy as np

from qcqp.linalg import Constraint, HermitianMatrix, QcqpInstance

A1 = np.array([[-1.48, 0.68], [0.68, -0.52]])
A2 = np.array([[-0.93, -0.07], [-0.07, -1.07]])
A3 = np.array([[1.59, -0.17], [-0.17, 0.41]])
BOUNDS = (-1.0, -1.0, 1.0)

FIG1_LAMBDA = 10.0

Z0_SUCCESS = np.array([-1.0, 3.0], dtype=complex)
Z0_STUCK = np.array([3.0, 1.0], dtype=complex)


def fig1_instance() -> QcqpInstance:
    constraints = tuple(Constraint(HermitianMatrix(matrix), bound) for matrix, bound in zip((A1, A2, A3), BOUNDS))
    return QcqpInstance(HermitianMatrix.identity(2), constraints, {'generator': 'fig1'})
