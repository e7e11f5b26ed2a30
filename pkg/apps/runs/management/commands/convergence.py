"""
Convergence Command

Solves the same instances with and without extrapolation from identical
starting points and writes:
- convergence.csv: iteration, extrapolated, plain (objective averaged over trials)
- report.json: per-trial traces and the iteration at which each run first
  reaches 1% of the extrapolated run's final objective
- manifest.json

Defaults: (M, K, L) = (50, 5, 1000), N_o = 20, SNR 18 dB, SOR -5 dB.

Usage: python manage.py convergence --trials 10 --max-iter 3000
"""

from apps.runs.commands import RVolMinCommand
from apps.runs.io import write_json, write_table
from apps.runs.manifest import RunManifest
from apps.synth.serializers import ConvergenceTraceSerializer, SynthSpecSerializer
from apps.synth.sweeps import CONVERGENCE_SPEC, average_trace, convergence_traces


class Command(RVolMinCommand):
    help = 'Objective traces with and without extrapolated coefficient updates'

    def add_arguments(self, parser):
        parser.add_argument('--trials', type=int, default=1, help='Number of instances (default 1)')
        self.add_spec_arguments(parser)
        self.add_solver_arguments(parser)
        self.add_seed_argument(parser)
        self.add_output_argument(parser, 'convergence_out')

    def run(self, options) -> RunManifest:
        spec = self.spec_from_options(options, dict(CONVERGENCE_SPEC))
        config = self.solver_config_from_options(options)
        trials = options['trials']

        self.stdout.write(f"Tracing {trials} instance(s), up to {config.max_iter} iterations each...")
        traces = convergence_traces(spec, config, trials=trials, init=options['init'])

        length = max(max(len(t.extrapolated), len(t.plain)) for t in traces)
        extrapolated = average_trace([trace.extrapolated for trace in traces], length)
        plain = average_trace([trace.plain for trace in traces], length)

        out = self.output_dir(options)
        write_table(
            out / 'convergence.csv',
            ['iteration', 'extrapolated', 'plain'],
            [[i, float(extrapolated[i]), float(plain[i])] for i in range(length)],
        )
        write_json(out / 'report.json', {
            'traces': ConvergenceTraceSerializer(traces, many=True).data,
        })

        for trace in traces:
            self.stdout.write(
                f"  seed {trace.seed}: target reached at {trace.extrapolated_iterations} (extrapolated) "
                f"vs {trace.plain_iterations} (plain)"
            )
        return RunManifest(
            command='convergence',
            config={
                'trials': trials,
                'init': options['init'],
                'spec': dict(SynthSpecSerializer(spec).data),
                'solver': config.to_dict(),
            },
            output_dir=str(out),
            outputs=['convergence.csv', 'report.json'],
            seed=spec.rng_seed,
        )
