import json
import os
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock, skipUnless

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.forms import ValidationError
from django.test import SimpleTestCase

from bench.forms import load_bench_config, parse_config_text
from bench.harness import BenchAborted, BenchConfig, aggregate, run_bench, run_case, run_multicast_study
from bench.reports import render_table, write_report
from bench.traces import export_fig1_traces
from qcqp.illustrative import fig1_instance
from qcqp.serializers import dump_instance, load_instance
from solvers.fpp import FppParams

CONFIG_DIR = Path(__file__).resolve().parent / 'configs'
ACCEPTANCE = os.environ.get('FPPSCA_ACCEPTANCE') == '1'


def synthetic_record(index, **fields):
    record = {'index': index, 'seed': index, 'status': 'ok', 'skipped': False}
    record.update(fields)
    return record


def both_record(index, source, found, sdr_loss, fpp_status, feasible, iters_feasibility, iters_convergence, fpp_loss):
    return synthetic_record(
        index,
        sdr_status='optimal', sdr_feasible=True, lower_bound=1.0, rank1=source == 'rank1',
        sdr_source=source, sdr_found=found, sdr_objective=None, sdr_loss_db=sdr_loss,
        fpp_status=fpp_status, fpp_feasible=feasible, fpp_objective=1.0,
        fpp_iters_feasibility=iters_feasibility, fpp_iters_convergence=iters_convergence,
        fpp_kkt_residual=0.0, fpp_slack_l1=0.0, fpp_slack_relapses=0, fpp_monotone=True,
        fpp_retried=False, fpp_loss_db=fpp_loss,
    )


class AggregateTest(SimpleTestCase):
    records = [
        both_record(0, 'rank1', True, 0.0, 'feasible_kkt', True, 2, 5, 0.5),
        both_record(1, 'randomization', True, 1.0, 'feasible_converged', True, 4, 30, 1.5),
        both_record(2, None, False, None, 'max_iter', False, None, 30, None),
        synthetic_record(3, status='failed', error='RuntimeError: boom'),
    ]

    def test_fold(self):
        result = aggregate(self.records, 'both', min_loss_runs=1)
        self.assertEqual((result['runs'], result['failed_runs'], result['skipped_instances']), (4, 1, 0))
        self.assertEqual(result['sdr_infeasible_runs'], 0)
        for key in ('rank1_pct', 'feasible_after_randomization_pct', 'no_feasible_after_randomization_pct'):
            self.assertAlmostEqual(result[key], 100 / 3)
        self.assertEqual(result['sdr_avg_loss_db'], 1.0)
        self.assertAlmostEqual(result['fpp_feasible_pct'], 200 / 3)
        self.assertEqual(result['fpp_avg_iters_feasibility'], 3.0)
        self.assertEqual(result['fpp_avg_iters_convergence'], 17.5)
        self.assertAlmostEqual(result['fpp_capped_pct'], 100 / 3)
        self.assertEqual(result['fpp_avg_loss_db'], 1.0)

    def test_sdr_loss_needs_enough_runs(self):
        self.assertIsNone(aggregate(self.records, 'both', min_loss_runs=5)['sdr_avg_loss_db'])

    def test_scenario_sections(self):
        self.assertNotIn('fpp_feasible_pct', aggregate(self.records, 'sdr_only'))
        self.assertNotIn('rank1_pct', aggregate(self.records, 'fpp_only'))

    def test_empty(self):
        result = aggregate([], 'both')
        self.assertEqual(result['runs'], 0)
        self.assertIsNone(result['fpp_feasible_pct'])
        self.assertIsNone(result['rank1_pct'])


class BenchConfigTest(SimpleTestCase):

    def test_round_trip(self):
        cfg = BenchConfig('random:n=3,M=4', runs=2, fpp=FppParams(lam=5))
        self.assertEqual(BenchConfig.from_dict(cfg.to_dict()), cfg)

    def test_validation(self):
        with self.assertRaises(ValueError):
            BenchConfig('random:n=3,M=4', runs=0)
        with self.assertRaises(ValueError):
            BenchConfig('random:n=3,M=4', runs=1, scenario='table9')
        with self.assertRaises(ValueError):
            BenchConfig('random:n=3', runs=1)

    def test_shipped_configs_parse(self):
        paths = sorted(CONFIG_DIR.glob('*.conf'))
        self.assertGreaterEqual(len(paths), 8)
        for path in paths:
            cfg = load_bench_config(path, FppParams())
            self.assertEqual(cfg.name, path.stem)

    def test_n20_series_include_relaxation(self):
        for m in (32, 40, 48):
            cfg = load_bench_config(CONFIG_DIR / f'both_n20_m{m}.conf', FppParams())
            self.assertEqual(cfg.scenario, 'both')
            self.assertEqual(cfg.generator, f'random:n=20,M={m}')
            self.assertEqual((cfg.runs, cfg.draws), (50, 2000))

    def test_n20_both_record_has_relaxation_fields(self):
        cfg = load_bench_config(CONFIG_DIR / 'both_n20_m32.conf', FppParams(), runs=1, draws=50)
        record = run_case(cfg.to_dict(), 0)
        self.assertEqual(record['status'], 'ok')
        for key in ('rank1', 'sdr_found', 'sdr_loss_db', 'fpp_loss_db'):
            self.assertIn(key, record)
        self.assertTrue(record['sdr_feasible'])
        self.assertIsNotNone(record['lower_bound'])

    def test_config_text(self):
        data = parse_config_text('# comment\nruns = 5\n\nlambda = 2 # inline\nseed=3\n')
        self.assertEqual(data, {'runs': '5', 'lam': '2', 'base_seed': '3'})
        with self.assertRaises(ValidationError):
            parse_config_text('runs 5')

    def test_rejected_configs(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'bad.conf'
            for text in ('generator = random:n=3,M=4\nruns = 0\n',
                         'generator = random:n=3\nruns = 2\n',
                         'generator = random:n=3,M=4\nruns = 2\nscenario = multicast\n',
                         'generator = random:n=3,M=4\nruns = 2\nlambda = -1\n'):
                path.write_text(text, encoding='utf-8')
                with self.subTest(text=text), self.assertRaises(ValidationError):
                    load_bench_config(path, FppParams())

    def test_overrides(self):
        cfg = load_bench_config(CONFIG_DIR / 'both_n8_m16.conf', FppParams(), runs=7, base_seed=11)
        self.assertEqual((cfg.runs, cfg.base_seed, cfg.scenario), (7, 11, 'both'))
        self.assertEqual(cfg.fpp, FppParams(lam=10, max_iter=30, conv_tol=1e-4))


class HarnessTest(SimpleTestCase):
    cfg = BenchConfig('random:n=3,M=4', runs=3, draws=100, name='smoke')

    def test_run_case(self):
        record = run_case(self.cfg.to_dict(), 1)
        self.assertEqual(record['status'], 'ok')
        self.assertEqual(record['seed'], 1)
        self.assertTrue(record['sdr_feasible'])
        self.assertTrue(record['fpp_monotone'])
        json.dumps(record, allow_nan=False)

    def test_run_case_n8_m16_reports_losses(self):
        cfg = load_bench_config(CONFIG_DIR / 'both_n8_m16.conf', FppParams(), runs=1, draws=200)
        record = run_case(cfg.to_dict(), 0)
        self.assertEqual(record['status'], 'ok')
        self.assertTrue(record['sdr_feasible'])
        self.assertIsNotNone(record['lower_bound'])
        if record['fpp_feasible']:
            self.assertGreaterEqual(record['fpp_loss_db'], -1e-6)

    def test_run_case_never_raises(self):
        with mock.patch('bench.harness.solve_sdr', side_effect=RuntimeError('boom')):
            record = run_case(self.cfg.to_dict(), 0)
        self.assertEqual(record['status'], 'failed')
        self.assertIn('boom', record['error'])

    def test_run_bench(self):
        report = run_bench(self.cfg, jobs=1, backend='local')
        self.assertEqual([record['index'] for record in report.records], [0, 1, 2])
        self.assertEqual(report.aggregates['failed_runs'], 0)
        triple = sum(report.aggregates[key] for key in (
            'rank1_pct', 'feasible_after_randomization_pct', 'no_feasible_after_randomization_pct'))
        self.assertAlmostEqual(triple, 100.0)
        for record in report.records:
            if record['fpp_loss_db'] is not None:
                self.assertGreaterEqual(record['fpp_loss_db'], -1e-6)
        again = run_bench(self.cfg, jobs=1, backend='local')
        self.assertEqual(report.aggregates, again.aggregates)

    def test_celery_backend_matches_local(self):
        local = run_bench(self.cfg, jobs=1, backend='local')
        eager = run_bench(self.cfg, jobs=1, backend='celery')
        self.assertEqual(local.aggregates, eager.aggregates)

    def test_aborts_on_failures(self):
        with mock.patch('bench.harness.solve_sdr', side_effect=RuntimeError('boom')):
            with self.assertRaises(BenchAborted) as context:
                run_bench(self.cfg, jobs=1, backend='local')
        self.assertEqual(len(context.exception.diagnostics), 3)

    def test_multicast_study(self):
        cfg = BenchConfig('multicast:n=4,M=3,K=1,tau=1,eta=1', runs=2, scenario='multicast', draws=50)
        report = run_multicast_study(cfg, jobs=1, backend='local')
        self.assertLessEqual(report.aggregates['runs'], 2)
        self.assertEqual(report.aggregates['runs'] + report.aggregates['skipped_instances'], len(report.records))
        for record in report.records:
            if not record['skipped'] and record['status'] == 'ok':
                self.assertIn('fpp_status', record)
                self.assertIsNotNone(record['init_violation'])

    def test_multicast_candidate_filtering(self):
        def fake_execute(cfg, indices, jobs, backend):
            return [both_record(index, 'randomization', False, None, 'feasible_kkt', True, 2, 4, 1.0)
                    if index % 2 else synthetic_record(index, skipped=True) for index in indices]

        cfg = BenchConfig('multicast:n=4,M=3,K=1,tau=1,eta=1', runs=3, scenario='multicast')
        with mock.patch('bench.harness._execute', side_effect=fake_execute):
            report = run_multicast_study(cfg, jobs=1, backend='local')
        self.assertEqual([record['index'] for record in report.records], [0, 1, 2, 3, 4, 5])
        self.assertEqual((report.aggregates['runs'], report.aggregates['skipped_instances']), (3, 3))

    def test_multicast_candidate_cap(self):
        def fake_execute(cfg, indices, jobs, backend):
            return [synthetic_record(index, skipped=True) for index in indices]

        cfg = BenchConfig('multicast:n=4,M=3,K=1,tau=1,eta=1', runs=2, scenario='multicast')
        with mock.patch('bench.harness._execute', side_effect=fake_execute):
            report = run_multicast_study(cfg, jobs=1, backend='local')
        self.assertEqual(len(report.records), 40)
        self.assertEqual(report.aggregates['runs'], 0)

    def test_multicast_needs_multicast_generator(self):
        with self.assertRaises(ValueError):
            run_multicast_study(self.cfg)


class ReportTest(SimpleTestCase):

    def test_write_and_render(self):
        report = run_bench(BenchConfig('random:n=2,M=3', runs=2, draws=50, name='tiny'), jobs=1, backend='local')
        with tempfile.TemporaryDirectory() as directory:
            paths = write_report(report, directory)
            data = json.loads(paths['json'].read_text(encoding='utf-8'))
            self.assertEqual(data['config']['name'], 'tiny')
            self.assertEqual(data['aggregates']['runs'], 2)
            lines = paths['csv'].read_text(encoding='utf-8').splitlines()
            self.assertEqual(lines[0], 'metric,value')
            self.assertEqual(len(lines), len(report.aggregates) + 1)
            records = [json.loads(line) for line in paths['jsonl'].read_text(encoding='utf-8').splitlines()]
            self.assertEqual([record['index'] for record in records], [0, 1])
        table = render_table(report)
        self.assertIn('Feasible solution', table)
        self.assertIn('Rank-1 solution', table)


class TraceExportTest(SimpleTestCase):

    def test_illustrative_traces(self):
        with tempfile.TemporaryDirectory() as directory:
            paths = export_fig1_traces(directory)
            self.assertEqual(len(paths['success']), 3)
            self.assertEqual(len(paths['stuck']), 3)
            success = [json.loads(path.read_text(encoding='utf-8')) for path in paths['success']]
            stuck = [json.loads(path.read_text(encoding='utf-8')) for path in paths['stuck']]
        self.assertTrue(any(item['feasible'] for item in success))
        self.assertTrue(all(item['s'][2] > 0 for item in stuck))
        for trace in (success, stuck):
            objectives = [item['penalized_objective'] for item in trace]
            self.assertTrue(all(b <= a + 1e-7 for a, b in zip(objectives, objectives[1:])))
            self.assertEqual([shape['kind'] for shape in trace[0]['constraints']], ['linearized', 'linearized', 'level_set'])
        first = stuck[0]
        # Линеаризация первого ограничения в z0 = (3, 1): a = 2 A1 z0
        np.testing.assert_allclose(first['constraints'][0]['normal']['re'], [2 * (-1.48 * 3 + 0.68), 2 * (0.68 * 3 - 0.52)], atol=1e-9)


class CommandTest(SimpleTestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.root = Path(self.directory.name)
        self.problem = self.root / 'fig1.json'
        dump_instance(fig1_instance(), self.problem)

    def tearDown(self):
        self.directory.cleanup()

    def test_gen(self):
        out = self.root / 'random.json'
        call_command('gen', 'random:n=8,M=16,seed=1', out=str(out), stdout=StringIO())
        self.assertEqual(load_instance(out).m, 16)
        out = self.root / 'multicast.json'
        call_command('gen', 'multicast:n=8,M=12,K=4,tau=10,eta=1,seed=1', out=str(out), stdout=StringIO())
        self.assertEqual(load_instance(out).m, 16)

    def test_gen_malformed_spec(self):
        with self.assertRaises(CommandError) as context:
            call_command('gen', 'random:n=8', out=str(self.root / 'x.json'), stdout=StringIO())
        self.assertEqual(context.exception.returncode, 2)

    def test_solve_success(self):
        stdout = StringIO()
        out = self.root / 'result.json'
        call_command('solve', problem=str(self.problem), z0='-1,3', lam=10.0, out=str(out), stdout=stdout)
        self.assertIn('status: feasible', stdout.getvalue())
        data = json.loads(out.read_text(encoding='utf-8'))
        self.assertIn(data['status'], ('feasible_kkt', 'feasible_converged'))
        self.assertNotIn('trace', data)

    def test_solve_stuck(self):
        out = self.root / 'result.json'
        with self.assertRaises(SystemExit) as context:
            call_command('solve', problem=str(self.problem), z0='3,0;1,0', trace=True, out=str(out), stdout=StringIO())
        self.assertEqual(context.exception.code, 3)
        data = json.loads(out.read_text(encoding='utf-8'))
        self.assertEqual(data['status'], 'infeasible_converged')
        self.assertEqual(len(data['trace']), data['iterations_to_convergence'])

    def test_solve_iteration_cap(self):
        with self.assertRaises(SystemExit) as context:
            call_command('solve', problem=str(self.problem), z0='-1,3', max_iter=1,
                         out=str(self.root / 'result.json'), stdout=StringIO())
        self.assertEqual(context.exception.code, 4)

    def test_solve_bad_input(self):
        for options in ({'problem': str(self.root / 'missing.json')},
                        {'problem': str(self.problem), 'z0': '1,2,3'},
                        {'problem': str(self.problem), 'z0': 'a,b'},
                        {'generate': 'random:n=2'}):
            with self.subTest(options=options), self.assertRaises(CommandError) as context:
                call_command('solve', out=str(self.root / 'result.json'), stdout=StringIO(), **options)
            self.assertEqual(context.exception.returncode, 2)

    def test_solve_generated_with_starts(self):
        out = self.root / 'result.json'
        try:
            call_command('solve', generate='random:n=3,M=4', seed=2, starts=2, out=str(out), stdout=StringIO())
        except SystemExit as exc:
            self.assertIn(exc.code, (3, 4))
        self.assertTrue(out.exists())

    def test_sdr(self):
        out = self.root / 'sdr.json'
        call_command('sdr', problem=str(self.problem), draws=200, seed=0, out=str(out), stdout=StringIO())
        data = json.loads(out.read_text(encoding='utf-8'))
        self.assertEqual(data['status'], 'optimal')
        self.assertIsNotNone(data['lower_bound'])

    def test_bench_is_deterministic(self):
        first, second = self.root / 'first', self.root / 'second'
        for directory in (first, second):
            call_command('bench', config=str(CONFIG_DIR / 'smoke.conf'), runs=2, jobs=1, backend='local',
                         out_dir=str(directory), table=True, stdout=StringIO())
        self.assertEqual((first / 'smoke.csv').read_text(encoding='utf-8'),
                         (second / 'smoke.csv').read_text(encoding='utf-8'))

    def test_bench_rejects_empty_runs(self):
        config = self.root / 'empty.conf'
        config.write_text('generator = random:n=3,M=4\nruns = 0\n', encoding='utf-8')
        with self.assertRaises(CommandError) as context:
            call_command('bench', config=str(config), out_dir=str(self.root), stdout=StringIO())
        self.assertEqual(context.exception.returncode, 2)

    def test_bench_missing_config(self):
        with self.assertRaises(CommandError) as context:
            call_command('bench', config=str(self.root / 'none.conf'), stdout=StringIO())
        self.assertEqual(context.exception.returncode, 2)

    def test_fig1(self):
        call_command('fig1', out_dir=str(self.root / 'fig1'), stdout=StringIO())
        self.assertEqual(len(list((self.root / 'fig1').glob('*.json'))), 6)


@skipUnless(ACCEPTANCE, 'Монте-Карло прогоны включаются через FPPSCA_ACCEPTANCE=1')
class AcceptanceTest(SimpleTestCase):
    jobs = int(os.environ.get('FPPSCA_JOBS', '1'))

    def run_config(self, name, **overrides):
        cfg = load_bench_config(CONFIG_DIR / f'{name}.conf', FppParams(), **overrides)
        report = run_bench(cfg, jobs=self.jobs, backend='local')
        for record in report.records:
            if record['status'] != 'ok' or record['skipped']:
                continue
            if 'fpp_status' in record:
                self.assertTrue(record['fpp_monotone'])
                if record['fpp_loss_db'] is not None:
                    self.assertGreaterEqual(record['fpp_loss_db'], -1e-6)
            if record.get('sdr_loss_db') is not None:
                self.assertGreaterEqual(record['sdr_loss_db'], -1e-6)
        return report.aggregates

    def test_random_qcqp_n8_m16(self):
        result = self.run_config('both_n8_m16')
        self.assertGreaterEqual(result['fpp_feasible_pct'], 95)
        self.assertTrue(2 <= result['fpp_avg_iters_feasibility'] <= 5)
        self.assertTrue(0.4 <= result['fpp_avg_loss_db'] <= 1.6)

    def test_feasibility_trend_in_m(self):
        rates = [self.run_config(f'both_n8_m{m}')['fpp_feasible_pct'] for m in (16, 24, 32)]
        self.assertTrue(rates[0] >= rates[1] >= rates[2])
        self.assertGreaterEqual(rates[2], 85)

    def test_sdr_randomization_n8_m16(self):
        result = self.run_config('sdr_n8_m16')
        self.assertTrue(30 <= result['rank1_pct'] <= 60)
        self.assertGreaterEqual(result['no_feasible_after_randomization_pct'], 25)

    def test_random_qcqp_n20_m32(self):
        result = self.run_config('fpp_n20_m32')
        self.assertGreaterEqual(result['fpp_feasible_pct'], 98)
        self.assertLessEqual(result['fpp_avg_loss_db'], 1.0)

    def test_random_qcqp_n20_both(self):
        for m in (32, 40, 48):
            result = self.run_config(f'both_n20_m{m}')
            self.assertIsNotNone(result['rank1_pct'])
            self.assertGreaterEqual(result['fpp_feasible_pct'], 95)
            self.assertLessEqual(result['fpp_avg_loss_db'], 1.0)

    def test_multicast(self):
        for m in (12, 24):
            result = self.run_config(f'multicast_m{m}')
            self.assertEqual(result['runs'], 50)
            self.assertLessEqual(result['feasible_after_randomization_pct'], 5)
            self.assertGreaterEqual(result['fpp_feasible_pct'], 95)
            self.assertTrue(0.5 <= result['fpp_avg_loss_db'] <= 3.5)
