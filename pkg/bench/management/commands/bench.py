from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from django.forms import ValidationError

from bench.cli import EXIT_BAD_INPUT
from bench.forms import load_bench_config
from bench.harness import BenchAborted, run_bench
from bench.reports import render_table, write_report
from solvers.fpp import FppParams


class Command(BaseCommand):
    help = 'Монте-Карло эксперимент по файлу конфигурации'
    scenario = None

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='файл "ключ = значение"')
        parser.add_argument('--runs', type=int, help='переопределить число прогонов')
        parser.add_argument('--seed', type=int, help='переопределить базовый seed')
        parser.add_argument('--draws', type=int, help='переопределить число рандомизаций')
        parser.add_argument('--jobs', type=int, help='число процессов (по умолчанию BENCH_JOBS)')
        parser.add_argument('--backend', choices=('local', 'celery'))
        parser.add_argument('--out-dir', help='каталог отчётов (по умолчанию BENCH_OUTPUT_DIR)')
        parser.add_argument('--table', action='store_true', help='вывести отчёт таблицей')

    def run(self, cfg, jobs, backend):
        return run_bench(cfg, jobs, backend)

    def handle(self, *args, **options):
        path = Path(options['config'])
        if not path.is_file():
            raise CommandError(f'Файл {path} не найден', returncode=EXIT_BAD_INPUT)
        overrides = {'runs': options['runs'], 'base_seed': options['seed'], 'draws': options['draws'],
                     'scenario': self.scenario}
        try:
            cfg = load_bench_config(path, FppParams.from_settings(), **overrides)
        except ValidationError as exc:
            raise CommandError(f'{path}: {"; ".join(exc.messages)}', returncode=EXIT_BAD_INPUT)

        try:
            report = self.run(cfg, options['jobs'], options['backend'])
        except BenchAborted as exc:
            for record in exc.diagnostics[:10]:
                self.stderr.write(f'run {record["index"]} (seed {record["seed"]}): {record.get("error")}')
            raise CommandError(str(exc))

        paths = write_report(report, options['out_dir'] or settings.BENCH['OUTPUT_DIR'])
        if options['table']:
            self.stdout.write(render_table(report))
        else:
            for key, value in report.aggregates.items():
                self.stdout.write(f'{key}: {value}')
        self.stdout.write(f'-> {paths["json"]}, {paths["csv"]}, {paths["jsonl"]}')
