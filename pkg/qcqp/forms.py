from django import forms

from qcqp.linalg import (Constraint, HermitianMatrix,
                         QcqpInstance, as_vector)


def parse_complex(value) -> complex:
    # Комплексные числа в файлах всегда хранятся парой {"re": ..., "im": ...}
    if not isinstance(value, dict) or set(value) - {'re', 'im'} or 're' not in value:
        raise forms.ValidationError(f'Ожидалась пара {{"re", "im"}}, получено {value!r}')
    try:
        return complex(float(value['re']), float(value.get('im', 0.0)))
    except (TypeError, ValueError):
        raise forms.ValidationError(f'Некорректное комплексное число {value!r}')


def parse_matrix(rows, n: int, name: str) -> HermitianMatrix:
    if not isinstance(rows, list) or len(rows) != n or any(not isinstance(row, list) or len(row) != n for row in rows):
        raise forms.ValidationError(f'{name}: ожидалась матрица {n}x{n}')
    try:
        return HermitianMatrix.from_array([[parse_complex(value) for value in row] for row in rows], strict=True)
    except ValueError as exc:
        raise forms.ValidationError(f'{name}: {exc}')


def parse_vector(value, n: int, name: str):
    # Вектор хранится как {"re": [...], "im": [...]}
    if not isinstance(value, dict) or not isinstance(value.get('re'), list):
        raise forms.ValidationError(f'{name}: ожидался вектор {{"re": [...], "im": [...]}}')
    real = value['re']
    imag = value.get('im', [0.0] * len(real))
    if len(real) != n or len(imag) != n:
        raise forms.ValidationError(f'{name}: ожидалась размерность {n}')
    try:
        return as_vector([complex(float(a), float(b)) for a, b in zip(real, imag)], n)
    except (TypeError, ValueError) as exc:
        raise forms.ValidationError(f'{name}: {exc}')


class ProblemForm(forms.Form):
    """
    Проверка JSON-описания задачи:
    {"n": int, "A0": [[{"re","im"}, ...], ...], "constraints": [{"A": ..., "c": f}, ...], "metadata": {...}}
    После is_valid() собранная задача лежит в self.problem.
    """
    n = forms.IntegerField(min_value=1)
    A0 = forms.JSONField()
    constraints = forms.JSONField()
    metadata = forms.JSONField(required=False)

    problem = None

    def clean_constraints(self):
        constraints = self.cleaned_data['constraints']
        if not isinstance(constraints, list) or not constraints:
            raise forms.ValidationError('Нужен непустой список ограничений')
        for index, item in enumerate(constraints, start=1):
            if not isinstance(item, dict) or 'A' not in item or 'c' not in item:
                raise forms.ValidationError(f'Ограничение {index}: нужны поля "A" и "c"')
        return constraints

    def clean_metadata(self):
        metadata = self.cleaned_data.get('metadata')
        if metadata in (None, ''):
            return {}
        if not isinstance(metadata, dict):
            raise forms.ValidationError('metadata должна быть объектом')
        return metadata

    def clean(self):
        cleaned_data = super(ProblemForm, self).clean()
        # Если поля уже с ошибками, собирать задачу нет смысла
        if self.errors:
            return cleaned_data
        n = cleaned_data['n']
        a0 = parse_matrix(cleaned_data['A0'], n, 'A0')
        constraints = []
        for index, item in enumerate(cleaned_data['constraints'], start=1):
            try:
                bound = float(item['c'])
            except (TypeError, ValueError):
                raise forms.ValidationError(f'c{index} должно быть числом')
            constraints.append(Constraint(parse_matrix(item['A'], n, f'A{index}'), bound))
        metadata = dict(cleaned_data['metadata'])
        if 'x_init' in metadata:
            metadata['x_init'] = parse_vector(metadata['x_init'], n, 'metadata.x_init')
        try:
            self.problem = QcqpInstance(a0, tuple(constraints), metadata)
        except ValueError as exc:
            raise forms.ValidationError(str(exc))
        return cleaned_data


class RandomQcqpForm(forms.Form):
    n = forms.IntegerField(min_value=1)
    M = forms.IntegerField(min_value=1)
    seed = forms.IntegerField(min_value=0, required=False)
    entry_variance = forms.FloatField(min_value=0.0, required=False)
    c_noise_variance = forms.FloatField(min_value=0.0, required=False)


class MulticastForm(forms.Form):
    n = forms.IntegerField(min_value=1)
    M = forms.IntegerField(min_value=1)
    K = forms.IntegerField(min_value=0)
    tau = forms.FloatField()
    eta = forms.FloatField()
    seed = forms.IntegerField(min_value=0, required=False)

    def clean_tau(self):
        tau = self.cleaned_data['tau']
        if tau <= 0:
            raise forms.ValidationError('tau должно быть положительным')
        return tau

    def clean_eta(self):
        eta = self.cleaned_data['eta']
        if eta <= 0:
            raise forms.ValidationError('eta должно быть положительным')
        return eta
