"""
Выгрузка траекторий для двумерного примера: по файлу на итерацию с z_k, x_k, s_k
и геометрией ограничений, достаточной для внешней отрисовки.
Для невыпуклого ограничения - линеаризация x^H A(+) x + Re{a^H x} <= b, где a = 2 A(-) z_k,
b = c_m + z_k^H A(-) z_k + s_m; для выпуклого - множество уровня x^H A_m x <= c_m + s_m.
"""
import logging
from pathlib import Path

from qcqp.illustrative import FIG1_LAMBDA, Z0_STUCK, Z0_SUCCESS, fig1_instance
from qcqp.linalg import quad_form, split_instance
from qcqp.serializers import matrix_to_json, vector_to_json, write_json
from solvers.fpp import FppParams, run_fpp_sca

logger = logging.getLogger(__name__)

DEFAULT_ITERATIONS = 3


def constraint_geometry(splits, z, s) -> list:
    shapes = []
    for index, split in enumerate(splits):
        slack = float(s[index])
        if split.is_convex:
            shapes.append({
                'kind': 'level_set',
                'matrix': matrix_to_json(split.matrix),
                'bound': split.bound + slack,
            })
            continue
        shapes.append({
            'kind': 'linearized',
            'quadratic': None if split.aplus.is_zero else matrix_to_json(split.aplus),
            'normal': vector_to_json(2 * split.aminus.entries @ z),
            'bound': split.bound + quad_form(split.aminus, z) + slack,
        })
    return shapes


def export_case(label: str, z0, directory: Path, iterations: int) -> list:
    inst = fig1_instance()
    splits = split_instance(inst)
    paths = []

    def dump(record):
        path = directory / f'{label}_iter{record.iteration}.json'
        write_json({
            'case': label,
            'iteration': record.iteration,
            'z': vector_to_json(record.z),
            'x': vector_to_json(record.x),
            's': record.s.tolist(),
            'penalized_objective': record.penalized_objective,
            'objective': record.objective,
            'feasible': record.feasible,
            'constraints': constraint_geometry(splits, record.z, record.s),
        }, path)
        paths.append(path)

    # max_iter ограничивает число выгружаемых итераций
    result = run_fpp_sca(inst, z0, FppParams(lam=FIG1_LAMBDA, max_iter=iterations, kkt_refine=0), callback=dump)
    logger.info('Пример %s: %d итераций, статус %s', label, len(result.trace), result.status.value)
    return paths


def export_fig1_traces(directory, z0_a=Z0_SUCCESS, z0_b=Z0_STUCK, iterations: int = DEFAULT_ITERATIONS) -> dict:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return {
        'success': export_case('success', z0_a, directory, iterations),
        'stuck': export_case('stuck', z0_b, directory, iterations),
    }
