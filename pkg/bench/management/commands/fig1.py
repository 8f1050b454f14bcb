from django.conf import settings
from django.core.management.base import BaseCommand

from bench.traces import DEFAULT_ITERATIONS, export_fig1_traces


class Command(BaseCommand):
    help = 'Выгружает траектории FPP-SCA для двумерного примера (успешный и неуспешный старт)'

    def add_arguments(self, parser):
        parser.add_argument('--out-dir', help='по умолчанию BENCH_OUTPUT_DIR/fig1')
        parser.add_argument('--iterations', type=int, default=DEFAULT_ITERATIONS)

    def handle(self, *args, **options):
        directory = options['out_dir'] or f'{settings.BENCH["OUTPUT_DIR"]}/fig1'
        paths = export_fig1_traces(directory, iterations=options['iterations'])
        for label, files in paths.items():
            self.stdout.write(f'{label}: {len(files)} файлов')
        self.stdout.write(f'-> {directory}')
