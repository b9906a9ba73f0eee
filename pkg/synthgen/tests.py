import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.test import SimpleTestCase, TestCase

from cli.models import RunRecord
from spikecore.exceptions import DimensionError
from spikecore.io import load_spike_matrix
from spikecore.matrix import SpikeMatrix, bernoulli_matrix

from .embed import embed_sequences, generate_background
from .placecells import field_centers, generate_place_cell_dataset, grid_element
from .presets import N_BINS, N_NEURONS, build_variant, preset_variants
from .specs import FORWARD, REVERSE, GroundTruth, Occurrence, PlaceCellSpec, SequenceSpec, SpecError
from .truth import load_ground_truth, save_ground_truth


def empty(n_neurons, n_bins):
    return SpikeMatrix(n_neurons, n_bins, [], [])


class SequenceSpecTests(SimpleTestCase):

    def test_occurrence_counts_follow_isi(self):
        for isi, expected in ((400, 45), (600, 30), (800, 22)):
            spec = SequenceSpec(tuple(range(80)), 150, isi, 0.2, 10)
            self.assertEqual(len(spec.centers(N_BINS)), expected)

    def test_offset_and_cap(self):
        spec = SequenceSpec((0, 1), 10, 100, offset=30, n_occurrences=3)
        self.assertEqual(spec.centers(1000), [30, 130, 230])

    def test_invalid_specs(self):
        with self.assertRaises(SpecError):
            SequenceSpec((0, 0), 10, 100)
        with self.assertRaises(SpecError):
            SequenceSpec((0, 1), 10, 100, dropout_p=1.5)
        with self.assertRaises(SpecError):
            SequenceSpec((0, 1), 10, 0)
        with self.assertRaises(SpecError):
            SequenceSpec((0, 1), 10, 100, warp_factors=(0.0,))


class EmbedTests(SimpleTestCase):

    def test_full_size_single_sequence_has_45_occurrences(self):
        background = bernoulli_matrix(N_NEURONS, N_BINS, 0.003, seed=0)
        spec = SequenceSpec(tuple(range(0, 160, 2)), 150, 400, 0.2, 10)
        X, truth = embed_sequences(background, [spec], seed=1)
        self.assertEqual(len(truth.occurrences), 45)
        self.assertTrue(background.spikes <= X.spikes)
        truth.validate(X.n_bins)

    def test_full_dropout_leaves_background(self):
        background = bernoulli_matrix(30, 2000, 0.01, seed=5)
        spec = SequenceSpec(tuple(range(10)), 50, 200, dropout_p=1.0, jitter_sd=5)
        X, truth = embed_sequences(background, [spec], seed=2)
        self.assertEqual(X, background)
        self.assertEqual(len(truth.occurrences), 10)

    def test_placement_matches_direct_loop(self):
        members = (7, 2, 9, 0, 4, 1, 8, 3, 6, 5)
        spec = SequenceSpec(members, 90, 1000, offset=500, n_occurrences=1)
        X, truth = embed_sequences(empty(10, 1000), [spec], seed=0)
        expected = set()
        for p, neuron in enumerate(members):
            expected.add((neuron, round(500 - 90 / 2 + 90 * p / (len(members) - 1))))
        self.assertEqual(X.spikes, expected)
        self.assertEqual(X.n_spikes, len(members))
        self.assertEqual(truth.occurrences, (Occurrence(0, 500, FORWARD, 1.0),))

    def test_firing_times_are_affine_in_position(self):
        members = tuple(range(12))
        spec = SequenceSpec(members, 110, 300, n_occurrences=5)
        X, truth = embed_sequences(empty(12, 1500), [spec], seed=9)
        times = {n: [] for n in members}
        for n, t in zip(X.neurons.tolist(), X.bins.tolist()):
            times[n].append(t)
        for i, occurrence in enumerate(truth.occurrences):
            fired = np.array([times[n][i] for n in members])
            np.testing.assert_array_equal(np.diff(fired), np.full(11, 10))
            self.assertEqual(fired[0] + 55, occurrence.center)

    def test_reverse_occurrences_flip_the_order(self):
        members = (0, 1, 2, 3, 4)
        spec = SequenceSpec(members, 40, 1000, direction_schedule=(REVERSE,), offset=100,
                            n_occurrences=1)
        X, truth = embed_sequences(empty(5, 1000), [spec], seed=0)
        order = X.neurons[np.argsort(X.bins)].tolist()
        self.assertEqual(order, [4, 3, 2, 1, 0])
        self.assertEqual(truth.occurrences[0].direction, REVERSE)

    def test_same_seed_same_dataset(self):
        background = bernoulli_matrix(40, 3000, 0.005, seed=1)
        spec = SequenceSpec(tuple(range(20)), 60, 300, 0.3, 8, warp_factors=(0.5, 1.0, 2.0))
        first = embed_sequences(background, [spec], seed=11)
        second = embed_sequences(background, [spec], seed=11)
        self.assertEqual(first[0], second[0])
        self.assertEqual(first[1], second[1])
        self.assertNotEqual(first[0], embed_sequences(background, [spec], seed=12)[0])

    def test_mean_spikes_per_occurrence(self):
        n_members, dropout = 20, 0.3
        spec = SequenceSpec(tuple(range(n_members)), 20, 50, dropout, n_occurrences=1000)
        X, truth = embed_sequences(empty(n_members, 50_000), [spec], seed=4)
        self.assertEqual(len(truth.occurrences), 1000)
        mean = X.n_spikes / 1000
        expected = n_members * (1 - dropout)
        standard_error = np.sqrt(n_members * dropout * (1 - dropout) / 1000)
        self.assertLess(abs(mean - expected), 3 * standard_error)

    def test_member_out_of_range(self):
        spec = SequenceSpec((0, 12), 10, 100)
        with self.assertRaises(DimensionError):
            embed_sequences(empty(10, 500), [spec], seed=0)

    def test_overlapping_occurrences_warn(self):
        spec = SequenceSpec((0, 1, 2), 120, 100)
        with self.assertLogs('synthgen.embed', level='WARNING'):
            embed_sequences(empty(3, 500), [spec], seed=0)


class BackgroundTests(SimpleTestCase):

    def test_density_preserved_and_seed_sensitive(self):
        template = bernoulli_matrix(60, 4000, 0.0031, seed=2)
        first = generate_background(template, seed=1)
        self.assertEqual(first.n_spikes, template.n_spikes)
        self.assertEqual(first.density, template.density)
        self.assertNotEqual(first, generate_background(template, seed=2))


class PlaceCellTests(SimpleTestCase):

    def test_grid_and_one_spike_per_bin(self):
        spec = PlaceCellSpec(background_density=0.0, jitter_sd=0.0)
        X, truth = generate_place_cell_dataset(spec, seed=3)
        self.assertEqual(X.n_neurons, 169)
        self.assertEqual(X.n_spikes, 6000)
        self.assertEqual(len(truth.occurrences), 20)
        self.assertEqual(truth.n_types, 2)

    def test_grid_element_of_field_center(self):
        spec = PlaceCellSpec()
        self.assertEqual(grid_element(spec, 15, 95), (3, 1))
        np.testing.assert_allclose(field_centers(spec)[3 * 13 + 1], [15, 95])

    def test_arm_schedule_labels_truth(self):
        spec = PlaceCellSpec(n_bins=1200, arm_schedule=('left', 'right'))
        _, truth = generate_place_cell_dataset(spec, seed=0)
        self.assertEqual([o.type_index for o in truth.occurrences], [0, 1, 0, 1])
        self.assertEqual(truth.centers(), [149, 449, 749, 1049])


class GroundTruthFileTests(SimpleTestCase):

    def test_sidecar_round_trip(self):
        truth = GroundTruth(
            (Occurrence(1, 618, REVERSE, 1.8), Occurrence(0, 206, FORWARD, 1.0)),
            ((3, 1, 2), (2, 3, 1)),
        )
        with tempfile.TemporaryDirectory() as tmp:
            path = save_ground_truth(truth, Path(tmp) / 'x.truth')
            self.assertEqual(load_ground_truth(path), truth)


class PresetTests(SimpleTestCase):

    def test_grid_sizes(self):
        self.assertEqual(len(preset_variants('single-seq')), 9)
        self.assertEqual(len(preset_variants('detection-grid')), 81)
        self.assertEqual(len(preset_variants('k-grid')), 6)
        with self.assertRaises(SpecError):
            preset_variants('no-such-preset')

    def test_bidirectional_preset(self):
        variant, = preset_variants('bidirectional')
        dataset = build_variant('bidirectional', variant, seed=5)
        self.assertEqual(dataset.X.shape, (N_NEURONS, N_BINS))
        directions = {o.type_index: o.direction for o in dataset.truth.occurrences}
        self.assertEqual(directions, {0: FORWARD, 1: REVERSE})
        self.assertEqual(set(dataset.truth.members_per_type[0]),
                         set(dataset.truth.members_per_type[1]))


class GenerateCommandTests(TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_generate_writes_data_truth_and_report(self):
        call_command('generate', preset='single-seq', only=['single-seq_isi400_jitter10'],
                     seed=7, out_dir=str(self.out), stdout=StringIO())
        X = load_spike_matrix(self.out / 'single-seq_isi400_jitter10.coo')
        truth = load_ground_truth(self.out / 'single-seq_isi400_jitter10.truth')
        self.assertEqual(X.shape, (N_NEURONS, N_BINS))
        self.assertEqual(len(truth.occurrences), 45)
        report = json.loads((self.out / 'generate_report.json').read_text())
        for path in report['manifest']:
            self.assertTrue(Path(path).exists())
        record = RunRecord.objects.get()
        self.assertEqual((record.subcommand, record.seed, record.status), ('generate', 7, 'ok'))

    def test_generate_is_deterministic(self):
        for name in ('a', 'b'):
            call_command('generate', preset='single-seq', only=['single-seq_isi800_jitter30'],
                         seed=3, out_dir=str(self.out / name), stdout=StringIO())
        label = 'single-seq_isi800_jitter30'
        self.assertEqual((self.out / 'a' / f'{label}.coo').read_bytes(),
                         (self.out / 'b' / f'{label}.coo').read_bytes())
        self.assertEqual((self.out / 'a' / f'{label}.truth').read_bytes(),
                         (self.out / 'b' / f'{label}.truth').read_bytes())
