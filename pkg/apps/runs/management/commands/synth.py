"""
Synth Command

Draws one synthetic instance and writes X.csv, A_true.csv, S_true.csv,
outliers.txt (0-based outlier column indices, one per line) and
manifest.json. Instance flags default to the benchmark setting
(M, K, L) = (50, 5, 1000) without noise or outliers; --preset starts from the
instance of a bench preset instead.

Usage: python manage.py synth --snr 25 --sor -5 --outliers 20 --seed 7
"""

from apps.runs.commands import RVolMinCommand
from apps.runs.io import write_indices, write_matrix
from apps.runs.manifest import RunManifest
from apps.synth.generators import gen_instance
from apps.synth.serializers import SynthSpecSerializer
from apps.synth.sweeps import PRESETS

DEFAULT_SPEC = {'M': 50, 'K': 5, 'L': 1000}


class Command(RVolMinCommand):
    help = 'Generate a synthetic mixture instance with optional noise and outliers'

    def add_arguments(self, parser):
        parser.add_argument('--preset', choices=sorted(PRESETS), help='Start from a bench preset instance')
        self.add_spec_arguments(parser)
        self.add_seed_argument(parser)
        self.add_output_argument(parser, 'synth_out')

    def run(self, options) -> RunManifest:
        defaults = dict(PRESETS[options['preset']].spec) if options.get('preset') else dict(DEFAULT_SPEC)
        spec = self.spec_from_options(options, defaults)
        instance = gen_instance(spec)

        out = self.output_dir(options)
        write_matrix(out / 'X.csv', instance.X.values)
        write_matrix(out / 'A_true.csv', instance.A_true)
        write_matrix(out / 'S_true.csv', instance.S_true)
        write_indices(out / 'outliers.txt', instance.outlier_indices)

        self.stdout.write(
            f"Instance {spec.M} x {spec.L}, K={spec.K}: SNR {instance.realized_snr_db:.4g} dB, "
            f"SOR {instance.realized_sor_db:.4g} dB, {len(instance.outlier_indices)} outliers"
        )
        return RunManifest(
            command='synth',
            config=dict(SynthSpecSerializer(spec).data),
            output_dir=str(out),
            outputs=['X.csv', 'A_true.csv', 'S_true.csv', 'outliers.txt'],
            seed=spec.rng_seed,
        )
