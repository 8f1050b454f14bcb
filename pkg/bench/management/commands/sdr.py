from django.core.management.base import BaseCommand

from bench.cli import add_problem_arguments, load_problem, output_path
from qcqp.serializers import write_json
from solvers.barrier import EngineParams
from solvers.forms import SdrResultForm, validate_payload
from solvers.sdr import SdrParams, sdr_result_to_dict, solve_sdr


class Command(BaseCommand):
    help = 'SDR-релаксация: нижняя граница, решение ранга 1 и рандомизация'

    def add_arguments(self, parser):
        add_problem_arguments(parser)
        parser.add_argument('--draws', type=int)

    def handle(self, *args, **options):
        inst = load_problem(options)
        params = SdrParams.from_settings(draws=options['draws'])
        result = solve_sdr(inst, params, seed=options['seed'], engine=EngineParams.from_settings())
        data = validate_payload(SdrResultForm, sdr_result_to_dict(result))
        path = output_path(options, 'sdr_result.json')
        write_json(data, path)

        self.stdout.write(f'status: {result.status.value}')
        if result.sdr_feasible:
            self.stdout.write(f'lower bound: {result.lower_bound:.6g}, rank1: {result.rank1}')
            if result.best_point is None:
                self.stdout.write(f'no feasible point after {result.randomizations_tried} randomizations')
            else:
                self.stdout.write(f'feasible point ({result.source}): objective {result.best_objective:.6g}')
        self.stdout.write(f'-> {path}')
