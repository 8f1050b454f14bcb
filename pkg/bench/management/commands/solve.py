from django.core.management.base import BaseCommand, CommandError
from django.forms import ValidationError

from bench.cli import EXIT_BAD_INPUT, EXIT_CODES, add_problem_arguments, load_problem, output_path, parse_z0
from qcqp.serializers import write_json
from solvers.barrier import EngineParams
from solvers.forms import FppResultForm, validate_payload
from solvers.fpp import FppParams, SubproblemFailure, fpp_result_to_dict, multi_start, random_start, run_fpp_sca


class Command(BaseCommand):
    help = 'Решает задачу методом FPP-SCA'

    def add_arguments(self, parser):
        add_problem_arguments(parser)
        parser.add_argument('--z0', help='начальная точка: "re,im;re,im;..." или "x1,x2,..."')
        parser.add_argument('--starts', type=int, default=0, help='число дополнительных случайных стартов')
        parser.add_argument('--trace', action='store_true', help='записать траекторию целиком')
        parser.add_argument('--lambda', dest='lam', type=float)
        parser.add_argument('--max-iter', type=int)
        parser.add_argument('--conv-tol', type=float)

    def handle(self, *args, **options):
        inst = load_problem(options)
        try:
            params = FppParams.from_settings(lam=options['lam'], max_iter=options['max_iter'], conv_tol=options['conv_tol'])
        except ValueError as exc:
            raise CommandError(str(exc), returncode=EXIT_BAD_INPUT)
        seed = options['seed']
        z0 = parse_z0(options['z0'], inst.n) if options['z0'] else random_start(inst.n, seed)

        try:
            if options['starts'] > 0:
                starts = [z0] + [random_start(inst.n, seed, index) for index in range(1, options['starts'] + 1)]
                result = multi_start(inst, starts, params, EngineParams.from_settings())
            else:
                result = run_fpp_sca(inst, z0, params, EngineParams.from_settings())
        except SubproblemFailure as exc:
            raise CommandError(f'{exc} (выполнено итераций: {len(exc.trace)})')

        data = fpp_result_to_dict(result, include_trace=options['trace'])
        try:
            validate_payload(FppResultForm, data)
        except ValidationError as exc:
            raise CommandError(f'Результат не прошёл проверку: {exc}')
        path = output_path(options, 'fpp_result.json')
        write_json(data, path)

        self.stdout.write(f'status: {result.status.value}')
        self.stdout.write(f'objective: {result.objective:.6g}')
        self.stdout.write(f'iterations: feasibility {result.iterations_to_feasibility}, '
                          f'convergence {result.iterations_to_convergence}')
        self.stdout.write(f'kkt: stationarity {result.kkt.stationarity_residual:.2e}, '
                          f'complementarity {result.kkt.complementarity_residual:.2e}, '
                          f'primal {result.kkt.primal_violation:.2e}')
        self.stdout.write(f'-> {path}')
        code = EXIT_CODES[result.status]
        if code:
            raise SystemExit(code)
