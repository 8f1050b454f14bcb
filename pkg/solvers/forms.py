from django import forms

from solvers.barrier import Status
from solvers.fpp import FppStatus


def _check_vector(value, name: str):
    if value is None:
        return None
    if not isinstance(value, dict) or not isinstance(value.get('re'), list) or not isinstance(value.get('im'), list):
        raise forms.ValidationError(f'{name}: ожидался вектор {{"re": [...], "im": [...]}}')
    if len(value['re']) != len(value['im']):
        raise forms.ValidationError(f'{name}: длины re и im различаются')
    return value


class FppResultForm(forms.Form):
    """Проверка результата FPP-SCA перед записью в файл."""
    status = forms.ChoiceField(choices=[(status.value, status.value) for status in FppStatus])
    objective = forms.FloatField()
    x = forms.JSONField()
    s = forms.JSONField()
    iterations_to_feasibility = forms.IntegerField(min_value=1, required=False)
    iterations_to_convergence = forms.IntegerField(min_value=1)
    kkt = forms.JSONField()
    slack_relapses = forms.IntegerField(min_value=0)

    def clean_x(self):
        return _check_vector(self.cleaned_data['x'], 'x')

    def clean_s(self):
        s = self.cleaned_data['s']
        if not isinstance(s, list) or any(not isinstance(value, (int, float)) or value < 0 for value in s):
            raise forms.ValidationError('s: ожидался список неотрицательных чисел')
        return s

    def clean_kkt(self):
        kkt = self.cleaned_data['kkt']
        required = {'stationarity_residual', 'complementarity_residual', 'primal_violation', 'passed'}
        if not isinstance(kkt, dict) or required - set(kkt):
            raise forms.ValidationError(f'kkt: нужны поля {", ".join(sorted(required))}')
        return kkt


class SdrResultForm(forms.Form):
    status = forms.ChoiceField(choices=[(status.value, status.value) for status in Status])
    lower_bound = forms.FloatField(required=False)
    rank1 = forms.BooleanField(required=False)
    x = forms.JSONField(required=False)
    objective = forms.FloatField(required=False)
    randomizations_tried = forms.IntegerField(min_value=0)

    def clean_x(self):
        return _check_vector(self.cleaned_data.get('x'), 'x')

    def clean(self):
        cleaned_data = super(SdrResultForm, self).clean()
        if cleaned_data.get('x') is not None and cleaned_data.get('objective') is None:
            raise forms.ValidationError('Для найденной точки нужно значение цели')
        return cleaned_data


def validate_payload(form_class, data: dict) -> dict:
    """Прогоняет словарь через форму; ошибки склеиваются в одно ValidationError."""
    form = form_class(data)
    if not form.is_valid():
        raise forms.ValidationError('; '.join(f'{key}: {" ".join(messages)}' for key, messages in form.errors.items()))
    return data
