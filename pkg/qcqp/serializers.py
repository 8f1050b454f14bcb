"""Перевод задач и векторов в JSON-схему и обратно (комплексные числа - пары re/im)."""
import json
from pathlib import Path
from typing import Union

import numpy as np

from qcqp.forms import ProblemForm
from qcqp.linalg import HermitianMatrix, QcqpInstance


class SchemaError(ValueError):
    pass


def vector_to_json(x) -> dict:
    x = np.asarray(x, dtype=complex).reshape(-1)
    return {'re': x.real.tolist(), 'im': x.imag.tolist()}


def vector_from_json(value) -> np.ndarray:
    return np.asarray(value['re'], dtype=float) + 1j * np.asarray(value.get('im', [0.0] * len(value['re'])), dtype=float)


def matrix_to_json(a: HermitianMatrix) -> list:
    return [[{'re': float(value.real), 'im': float(value.imag)} for value in row] for row in a.entries]


def jsonable(value):
    """Рекурсивно приводит метаданные и результаты к типам, которые понимает json."""
    if isinstance(value, dict):
        return {str(key): jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return vector_to_json(value)
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, complex):
        return {'re': value.real, 'im': value.imag}
    return value


def instance_to_dict(inst: QcqpInstance) -> dict:
    return {
        'n': inst.n,
        'A0': matrix_to_json(inst.a0),
        'constraints': [{'A': matrix_to_json(matrix), 'c': bound} for matrix, bound in inst.constraints],
        'metadata': jsonable(inst.metadata),
    }


def instance_from_dict(data: dict) -> QcqpInstance:
    if not isinstance(data, dict):
        raise SchemaError('Описание задачи должно быть JSON-объектом')
    form = ProblemForm(data)
    if not form.is_valid():
        errors = '; '.join(f'{key}: {" ".join(messages)}' for key, messages in form.errors.items())
        raise SchemaError(errors)
    return form.problem


def load_instance(path: Union[str, Path]) -> QcqpInstance:
    with open(path, encoding='utf-8') as file:
        try:
            data = json.load(file)
        except json.JSONDecodeError as exc:
            raise SchemaError(f'{path}: некорректный JSON ({exc})')
    return instance_from_dict(data)


def dump_instance(inst: QcqpInstance, path: Union[str, Path]) -> dict:
    data = instance_to_dict(inst)
    # Перед записью прогоняем через ту же проверку, что и при чтении
    instance_from_dict(data)
    write_json(data, path)
    return data


def write_json(data, path: Union[str, Path]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as file:
        json.dump(jsonable(data), file, indent=2, allow_nan=False)
