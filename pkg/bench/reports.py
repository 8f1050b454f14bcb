"""Запись отчётов: JSON (конфигурация и агрегаты), CSV (metric,value), JSONL (по записи на прогон)."""
import csv
import json
from pathlib import Path

from bench.forms import BenchReportForm
from bench.harness import BenchReport
from qcqp.serializers import jsonable, write_json
from solvers.forms import validate_payload

# Строки таблиц в порядке столбцов: (подпись, ключ агрегата, формат)
SDR_ROWS = (
    ('Rank-1 solution', 'rank1_pct', '{:.1f}%'),
    ('Feasible after randomization', 'feasible_after_randomization_pct', '{:.1f}%'),
    ('No feasible sol. after randomization', 'no_feasible_after_randomization_pct', '{:.1f}%'),
    ('SDR avg. loss (dB)', 'sdr_avg_loss_db', '{:.3f}'),
)
FPP_ROWS = (
    ('Feasible solution', 'fpp_feasible_pct', '{:.1f}%'),
    ('Avg. itrs. for feasibility', 'fpp_avg_iters_feasibility', '{:.3f}'),
    ('Avg. itrs. for convergence', 'fpp_avg_iters_convergence', '{:.3f}'),
    ('Runs at iteration cap', 'fpp_capped_pct', '{:.1f}%'),
    ('FPP-SCA avg. loss (dB)', 'fpp_avg_loss_db', '{:.3f}'),
)


def write_report(report: BenchReport, directory, name: str = None) -> dict:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    name = name or report.config.name
    validate_payload(BenchReportForm, report.aggregates)

    paths = {
        'json': directory / f'{name}.json',
        'csv': directory / f'{name}.csv',
        'jsonl': directory / f'{name}.jsonl',
    }
    write_json(report.to_dict(), paths['json'])
    with open(paths['csv'], 'w', encoding='utf-8', newline='') as file:
        writer = csv.writer(file, lineterminator='\n')
        writer.writerow(['metric', 'value'])
        for key, value in report.aggregates.items():
            writer.writerow([key, '' if value is None else repr(value)])
    with open(paths['jsonl'], 'w', encoding='utf-8') as file:
        for record in report.records:
            file.write(json.dumps(jsonable(record), allow_nan=False) + '\n')
    return paths


def render_table(report: BenchReport) -> str:
    rows = []
    if 'rank1_pct' in report.aggregates:
        rows += SDR_ROWS
    if 'fpp_feasible_pct' in report.aggregates:
        rows += FPP_ROWS
    width = max(len(label) for label, _, _ in rows)
    lines = [f'{report.config.name}: {report.config.generator}, {report.aggregates["runs"]} runs']
    for label, key, pattern in rows:
        value = report.aggregates.get(key)
        lines.append(f'  {label.ljust(width)}  {"-" if value is None else pattern.format(value)}')
    if report.aggregates['failed_runs']:
        lines.append(f'  failed runs: {report.aggregates["failed_runs"]}')
    if report.aggregates['skipped_instances']:
        lines.append(f'  SDR-infeasible candidates skipped: {report.aggregates["skipped_instances"]}')
    return '\n'.join(lines)
