from bench.harness import run_multicast_study
from bench.management.commands.bench import Command as BenchCommand


class Command(BenchCommand):
    help = 'Мультикаст: SDR с рандомизацией и FPP-SCA из лучшей точки рандомизации'
    scenario = 'multicast'

    def run(self, cfg, jobs, backend):
        return run_multicast_study(cfg, jobs, backend)
