"""
Bench Command

Monte-Carlo sweep along one axis. Either pick a --preset (fig5, fig6, fig_k,
fig_sor, fig7, fig8, table1, table2, table3) or give --axis and --values;
instance and solver flags override the preset's settings.

Outputs in --out:
- sweep.csv: axis_value, mean_mse_db, median_mse_db, trials, failures
- report.json: aggregates plus every per-trial record (seed, MSE, wall time)
- manifest.json

Usage:
    python manage.py bench --preset fig5 --trials 10 --jobs 4
    python manage.py bench --axis sor --values -10,-5,0,5 --snr 20 --outliers 20
"""

from apps.core.conf import rvolmin_setting
from apps.core.exceptions import InvalidArgumentError
from apps.runs.commands import RVolMinCommand
from apps.runs.io import write_json, write_table
from apps.runs.manifest import RunManifest
from apps.synth.serializers import SweepResultSerializer, SynthSpecSerializer
from apps.synth.sweeps import AXES, PRESETS, run_sweep

DEFAULT_SPEC = {'M': 50, 'K': 5, 'L': 1000}


class Command(RVolMinCommand):
    help = 'Run a seeded Monte-Carlo MSE sweep over one experiment axis'

    def add_arguments(self, parser):
        parser.add_argument('--preset', choices=sorted(PRESETS), help='Experiment preset')
        parser.add_argument('--axis', choices=AXES, help='Sweep axis (without --preset)')
        parser.add_argument('--values', help='Comma-separated axis values (overrides the preset values)')
        parser.add_argument('--trials', type=int, help='Trials per axis value (default RVOLMIN_TRIALS)')
        parser.add_argument('--jobs', type=int, help='Parallel workers (default RVOLMIN_JOBS)')
        self.add_spec_arguments(parser)
        self.add_solver_arguments(parser)
        self.add_seed_argument(parser)
        self.add_output_argument(parser, 'bench_out')

    def run(self, options) -> RunManifest:
        preset = PRESETS[options['preset']] if options.get('preset') else None
        axis = options.get('axis') or (preset.axis if preset else None)
        if axis is None:
            raise InvalidArgumentError("Give --preset or --axis")
        if preset is not None and axis != preset.axis:
            raise InvalidArgumentError(f"Preset {options['preset']!r} sweeps {preset.axis!r}, not {axis!r}")

        if options.get('values'):
            values = [item.strip() for item in options['values'].split(',') if item.strip()]
        elif preset is not None:
            values = list(preset.values)
        else:
            raise InvalidArgumentError("--axis needs --values")

        spec = self.spec_from_options(options, dict(preset.spec) if preset else dict(DEFAULT_SPEC))
        config = self.solver_config_from_options(options, preset.config if preset else None)
        trials = options.get('trials') or rvolmin_setting('TRIALS')
        jobs = self.jobs_from_options(options)

        self.stdout.write(f"Sweeping {axis} over {values} ({trials} trials each, {jobs} jobs)...")
        result = run_sweep(spec, axis, values, trials, solver_config=config, init=options['init'], jobs=jobs)

        out = self.output_dir(options)
        points = result.points()
        write_table(
            out / 'sweep.csv',
            ['axis_value', 'mean_mse_db', 'median_mse_db', 'trials', 'failures'],
            [[p.axis_value, p.mean_mse_db, p.median_mse_db, p.trials, p.failures] for p in points],
        )
        write_json(out / 'report.json', SweepResultSerializer(result).data)

        for point in points:
            self.stdout.write(f"  {axis}={point.axis_value}: mean MSE {point.mean_mse_db:.4f} dB")
        if result.failures:
            self.stdout.write(self.style.WARNING(f"  {result.failures} trial(s) failed"))

        return RunManifest(
            command='bench',
            config={
                'preset': options.get('preset'),
                'axis': axis,
                'values': list(result.values),
                'trials': trials,
                'jobs': jobs,
                'init': options['init'],
                'spec': dict(SynthSpecSerializer(spec).data),
                'solver': config.to_dict(),
            },
            output_dir=str(out),
            outputs=['sweep.csv', 'report.json'],
            seed=spec.rng_seed,
        )
