from dataclasses import replace
from pathlib import Path

from django import forms

from bench.harness import SCENARIOS, BenchConfig
from qcqp.generators import GeneratorSpecError, MulticastConfig, parse_generator_spec
from solvers.fpp import FppParams

# Ключи файла конфигурации, которые называются иначе, чем поля формы
CONFIG_ALIASES = {'lambda': 'lam', 'seed': 'base_seed'}


def parse_config_text(text: str) -> dict:
    """
    Простой формат "ключ = значение" по строке; пустые строки и строки с # пропускаются.
    """
    data = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        if not sep or not key.strip():
            raise forms.ValidationError(f'Строка {number}: ожидалось "ключ = значение"')
        key = key.strip()
        data[CONFIG_ALIASES.get(key, key)] = value.strip()
    return data


class BenchConfigForm(forms.Form):
    name = forms.CharField(required=False)
    generator = forms.CharField()
    runs = forms.IntegerField(min_value=1)
    scenario = forms.ChoiceField(choices=[(scenario, scenario) for scenario in SCENARIOS], required=False)
    base_seed = forms.IntegerField(min_value=0, required=False)
    draws = forms.IntegerField(min_value=0, required=False)
    starts = forms.IntegerField(min_value=1, required=False)
    lam = forms.FloatField(required=False)
    max_iter = forms.IntegerField(min_value=1, required=False)
    conv_tol = forms.FloatField(required=False)

    def clean_generator(self):
        generator = self.cleaned_data['generator']
        try:
            parse_generator_spec(generator)
        except GeneratorSpecError as exc:
            raise forms.ValidationError(str(exc))
        return generator

    def clean_lam(self):
        lam = self.cleaned_data.get('lam')
        if lam is not None and lam <= 0:
            raise forms.ValidationError('lambda должна быть положительной')
        return lam

    def clean_conv_tol(self):
        conv_tol = self.cleaned_data.get('conv_tol')
        if conv_tol is not None and conv_tol <= 0:
            raise forms.ValidationError('conv_tol должен быть положительным')
        return conv_tol

    def clean(self):
        cleaned_data = super(BenchConfigForm, self).clean()
        generator = cleaned_data.get('generator')
        if generator and cleaned_data.get('scenario') == 'multicast':
            if not isinstance(parse_generator_spec(generator), MulticastConfig):
                raise forms.ValidationError('Сценарий multicast требует генератор multicast')
        return cleaned_data

    def to_config(self, defaults: FppParams) -> BenchConfig:
        data = self.cleaned_data
        overrides = {key: data.get(key) for key in ('lam', 'max_iter', 'conv_tol')}
        fpp = replace(defaults, **{key: value for key, value in overrides.items() if value is not None})
        return BenchConfig(
            generator=data['generator'],
            runs=data['runs'],
            scenario=data.get('scenario') or 'both',
            base_seed=data['base_seed'] if data.get('base_seed') is not None else 0,
            draws=data['draws'] if data.get('draws') is not None else 10000,
            starts=data.get('starts') or 1,
            fpp=fpp,
            name=data.get('name') or 'bench',
        )


def load_bench_config(path, defaults: FppParams, **overrides) -> BenchConfig:
    """Читает файл конфигурации; непустые overrides (например runs из командной строки) побеждают."""
    data = parse_config_text(Path(path).read_text(encoding='utf-8'))
    data.update({key: str(value) for key, value in overrides.items() if value is not None})
    form = BenchConfigForm(data)
    if not form.is_valid():
        raise forms.ValidationError('; '.join(f'{key}: {" ".join(messages)}' for key, messages in form.errors.items()))
    return form.to_config(defaults)


class BenchReportForm(forms.Form):
    """Проверка агрегатов перед записью отчёта."""
    runs = forms.IntegerField(min_value=0)
    failed_runs = forms.IntegerField(min_value=0)
    skipped_instances = forms.IntegerField(min_value=0)
    sdr_infeasible_runs = forms.IntegerField(min_value=0, required=False)
    rank1_pct = forms.FloatField(min_value=0, max_value=100, required=False)
    feasible_after_randomization_pct = forms.FloatField(min_value=0, max_value=100, required=False)
    no_feasible_after_randomization_pct = forms.FloatField(min_value=0, max_value=100, required=False)
    sdr_avg_loss_db = forms.FloatField(required=False)
    fpp_feasible_pct = forms.FloatField(min_value=0, max_value=100, required=False)
    fpp_avg_iters_feasibility = forms.FloatField(min_value=1, required=False)
    fpp_avg_iters_convergence = forms.FloatField(min_value=1, required=False)
    fpp_capped_pct = forms.FloatField(min_value=0, max_value=100, required=False)
    fpp_avg_loss_db = forms.FloatField(required=False)

    def clean(self):
        cleaned_data = super(BenchReportForm, self).clean()
        triple = [cleaned_data.get(key) for key in (
            'rank1_pct', 'feasible_after_randomization_pct', 'no_feasible_after_randomization_pct')]
        if all(value is not None for value in triple) and abs(sum(triple) - 100) > 1e-6:
            raise forms.ValidationError('Доли SDR должны давать в сумме 100%')
        return cleaned_data
