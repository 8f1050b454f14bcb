from django.core.management.base import BaseCommand, CommandError

from bench.cli import EXIT_BAD_INPUT
from qcqp.generators import GeneratorSpecError, generate
from qcqp.serializers import dump_instance


class Command(BaseCommand):
    help = 'Генерирует задачу по строке генератора и записывает её в JSON'

    def add_arguments(self, parser):
        parser.add_argument('spec', help='например random:n=8,M=16,seed=1')
        parser.add_argument('--out', required=True)
        parser.add_argument('--seed', type=int)

    def handle(self, *args, **options):
        try:
            inst = generate(options['spec'], options['seed'])
        except GeneratorSpecError as exc:
            raise CommandError(str(exc), returncode=EXIT_BAD_INPUT)
        dump_instance(inst, options['out'])
        self.stdout.write(f'{inst.metadata["spec"]}: n={inst.n}, {inst.m} ограничений -> {options["out"]}')
