"""
Генераторы задач для двух серий экспериментов: случайные знаконеопределённые QCQP
и вторичный мультикаст-бимформинг.

Протокол потока случайных чисел (numpy.random.Generator на PCG64, создаётся из seed):
комплексная величина дисперсии v берётся из пары стандартных нормальных (Re, Im)
с множителем sqrt(v / 2); массивы заполняются построчно, внутри элемента сначала Re, затем Im.
Порядок для random: x_init, затем для каждого m матрица G_m и один шум для c_m.
Порядок для multicast: все h_i (M x n), затем все g_k (K x n).
"""
import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from qcqp.forms import MulticastForm, RandomQcqpForm
from qcqp.linalg import Constraint, HermitianMatrix, QcqpInstance, quad_form

logger = logging.getLogger(__name__)

RNG_STREAM = 'numpy-pcg64/v1'


class GeneratorSpecError(ValueError):
    pass


@dataclass(frozen=True)
class RandomQcqpConfig:
    n: int
    m: int
    seed: int = 0
    # Полная дисперсия комплексного элемента G до симметризации (Re и Im по 1)
    entry_variance: float = 2.0
    c_noise_variance: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise GeneratorSpecError('n и M должны быть не меньше 1')

    def with_seed(self, seed: int) -> 'RandomQcqpConfig':
        return RandomQcqpConfig(self.n, self.m, seed, self.entry_variance, self.c_noise_variance)

    @property
    def spec(self) -> str:
        return f'random:n={self.n},M={self.m},seed={self.seed}'


@dataclass(frozen=True)
class MulticastConfig:
    n: int
    m: int
    k: int
    tau: float
    eta: float
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.k < 0:
            raise GeneratorSpecError('n, M должны быть не меньше 1, K неотрицательно')
        if self.tau <= 0 or self.eta <= 0:
            raise GeneratorSpecError('tau и eta должны быть положительными')

    def with_seed(self, seed: int) -> 'MulticastConfig':
        return MulticastConfig(self.n, self.m, self.k, self.tau, self.eta, seed)

    @property
    def spec(self) -> str:
        return f'multicast:n={self.n},M={self.m},K={self.k},tau={self.tau:g},eta={self.eta:g},seed={self.seed}'


GeneratorConfig = Union[RandomQcqpConfig, MulticastConfig]


def complex_gaussian(rng: np.random.Generator, shape: tuple, variance: float) -> np.ndarray:
    """Циркулярно-симметричные комплексные гауссовы величины с полной дисперсией variance."""
    pairs = rng.standard_normal(tuple(shape) + (2,))
    return (pairs[..., 0] + 1j * pairs[..., 1]) * np.sqrt(variance / 2)


def gen_random_qcqp(cfg: RandomQcqpConfig) -> QcqpInstance:
    """
    A0 = I, Am - симметризованные комплексные гауссовы матрицы, cm ~ N(x_init^H Am x_init, 1).
    Если x_init^H Am x_init > cm, пара (Am, cm) умножается на -1, поэтому x_init всегда допустима.
    """
    rng = np.random.default_rng(cfg.seed)
    x_init = complex_gaussian(rng, (cfg.n,), 2.0)
    constraints = []
    for _ in range(cfg.m):
        g = complex_gaussian(rng, (cfg.n, cfg.n), cfg.entry_variance)
        matrix = HermitianMatrix((g + g.conj().T) / 2)
        value = quad_form(matrix, x_init)
        bound = value + np.sqrt(cfg.c_noise_variance) * rng.standard_normal()
        if value > bound:
            matrix, bound = -matrix, -bound
        constraints.append(Constraint(matrix, float(bound)))
    metadata = {
        'generator': 'random',
        'spec': cfg.spec,
        'seed': cfg.seed,
        'rng': RNG_STREAM,
        'x_init': x_init,
    }
    return QcqpInstance(HermitianMatrix.identity(cfg.n), tuple(constraints), metadata)


def gen_multicast(cfg: MulticastConfig) -> QcqpInstance:
    """
    min ||w||^2 при |w^H h_i|^2 >= tau (записано как -w^H h_i h_i^H w <= -tau)
    и |w^H g_k|^2 <= eta. Каналы i.i.d. комплексные гауссовы с единичной дисперсией.
    """
    rng = np.random.default_rng(cfg.seed)
    secondary = complex_gaussian(rng, (cfg.m, cfg.n), 1.0)
    primary = complex_gaussian(rng, (cfg.k, cfg.n), 1.0)
    constraints = [Constraint(-HermitianMatrix.outer(h), -cfg.tau) for h in secondary]
    constraints += [Constraint(HermitianMatrix.outer(g), cfg.eta) for g in primary]
    metadata = {
        'generator': 'multicast',
        'spec': cfg.spec,
        'seed': cfg.seed,
        'rng': RNG_STREAM,
        'secondary_users': cfg.m,
        'primary_users': cfg.k,
    }
    return QcqpInstance(HermitianMatrix.identity(cfg.n), tuple(constraints), metadata)


def parse_generator_spec(spec: str, seed: Optional[int] = None) -> GeneratorConfig:
    """
    Разбор строк вида "random:n=8,M=16,seed=42" и "multicast:n=8,M=12,K=4,tau=10,eta=1,seed=7".
    Явно переданный seed имеет приоритет над seed из строки.
    """
    kind, _, body = spec.strip().partition(':')
    data = {}
    for item in filter(None, (part.strip() for part in body.split(','))):
        key, sep, value = item.partition('=')
        if not sep or not key.strip():
            raise GeneratorSpecError(f'Некорректный параметр "{item}" в "{spec}"')
        data[key.strip()] = value.strip()
    if seed is not None:
        data['seed'] = str(seed)

    if kind == 'random':
        form = RandomQcqpForm(data)
    elif kind == 'multicast':
        form = MulticastForm(data)
    else:
        raise GeneratorSpecError(f'Неизвестный генератор "{kind}", ожидался random или multicast')
    unknown = set(data) - set(form.fields)
    if unknown:
        raise GeneratorSpecError(f'Неизвестные параметры {sorted(unknown)} в "{spec}"')
    if not form.is_valid():
        errors = '; '.join(f'{key}: {" ".join(messages)}' for key, messages in form.errors.items())
        raise GeneratorSpecError(f'Некорректная строка генератора "{spec}": {errors}')

    values = form.cleaned_data
    seed_value = values.get('seed') or 0
    if kind == 'random':
        return RandomQcqpConfig(
            n=values['n'],
            m=values['M'],
            seed=seed_value,
            entry_variance=2.0 if values.get('entry_variance') is None else values['entry_variance'],
            c_noise_variance=1.0 if values.get('c_noise_variance') is None else values['c_noise_variance'],
        )
    return MulticastConfig(values['n'], values['M'], values['K'], values['tau'], values['eta'], seed_value)


def generate(source: Union[str, GeneratorConfig], seed: Optional[int] = None) -> QcqpInstance:
    cfg = parse_generator_spec(source, seed) if isinstance(source, str) else source
    if seed is not None and not isinstance(source, str):
        cfg = cfg.with_seed(seed)
    logger.debug('Генерация задачи %s', cfg.spec)
    if isinstance(cfg, RandomQcqpConfig):
        return gen_random_qcqp(cfg)
    return gen_multicast(cfg)
