"""Общие куски management-команд: разбор входной задачи, начальной точки и коды возврата."""
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.management.base import CommandError

from qcqp.generators import GeneratorSpecError, generate
from qcqp.serializers import SchemaError, load_instance
from solvers.fpp import FppStatus

# Код возврата - функция статуса результата; 2 - некорректный ввод
EXIT_BAD_INPUT = 2
EXIT_CODES = {
    FppStatus.FEASIBLE_KKT: 0,
    FppStatus.FEASIBLE_CONVERGED: 0,
    FppStatus.INFEASIBLE_CONVERGED: 3,
    FppStatus.MAX_ITER: 4,
}


def add_problem_arguments(parser):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--problem', help='JSON-файл задачи')
    source.add_argument('--generate', metavar='SPEC', help='строка генератора, например random:n=8,M=16,seed=1')
    parser.add_argument('--seed', type=int, help='seed генератора и случайных начальных точек')
    parser.add_argument('--out', help='куда записать результат (JSON)')


def load_problem(options: dict):
    try:
        if options.get('problem'):
            path = Path(options['problem'])
            if not path.is_file():
                raise CommandError(f'Файл {path} не найден', returncode=EXIT_BAD_INPUT)
            return load_instance(path)
        return generate(options['generate'], options.get('seed'))
    except (SchemaError, GeneratorSpecError, ValueError) as exc:
        raise CommandError(str(exc), returncode=EXIT_BAD_INPUT)


def parse_z0(value: str, n: int) -> np.ndarray:
    """
    "re,im;re,im;..." - комплексные компоненты, "x1,x2,..." - вещественные.
    Для n = 1 комплексная точка записывается с завершающей точкой с запятой: "1,2;".
    """
    try:
        if ';' in value:
            pairs = [item.split(',') for item in value.split(';') if item.strip()]
            if any(len(pair) != 2 for pair in pairs):
                raise ValueError('каждая компонента задаётся парой re,im')
            z0 = np.array([complex(float(re), float(im)) for re, im in pairs])
        else:
            z0 = np.array([float(item) for item in value.split(',')], dtype=complex)
    except ValueError as exc:
        raise CommandError(f'Некорректная начальная точка "{value}": {exc}', returncode=EXIT_BAD_INPUT)
    if z0.shape[0] != n or not np.all(np.isfinite(z0)):
        raise CommandError(f'Начальная точка должна иметь {n} конечных компонент', returncode=EXIT_BAD_INPUT)
    return z0


def output_path(options: dict, default_name: str) -> Path:
    if options.get('out'):
        return Path(options['out'])
    return Path(settings.BENCH['OUTPUT_DIR']) / default_name
