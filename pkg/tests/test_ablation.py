import pytest

from rvoskit import GridSpec, NoiseConfig, SamplingScheme, render_grid, render_grid_csv, run_grid
from rvoskit.ablation import DEFAULT_LENGTHS, AblationCellError, SCHEME_LABELS
from rvoskit.errors import InvalidArgumentError

ALL_SCHEMES = tuple(SamplingScheme)


def small_grid(dataset, lengths=(1, 3), noise=NoiseConfig(), num_queries=3):
    return GridSpec(
        schemes=ALL_SCHEMES,
        lengths=lengths,
        dataset=dataset,
        noise=noise,
        num_queries=num_queries,
    )


class TestRunGrid:
    def test_zero_noise_oracle_scores_one_everywhere(self, synth_dataset):
        matrix = run_grid(small_grid(synth_dataset))
        for row in matrix:
            for report in row:
                assert report.mean_jf == pytest.approx(1.0, abs=1e-12)

    def test_sampled_schemes_identical_at_length_one(self, synth_dataset):
        noise = NoiseConfig(score_sigma=0.2, morph_radius=1, flip_prob=0.02, seed=5)
        spec = small_grid(synth_dataset, lengths=(1, 4), noise=noise)
        matrix = run_grid(spec)
        nc_row = matrix[spec.schemes.index(SamplingScheme.NON_CONTINUOUS)]
        co_row = matrix[spec.schemes.index(SamplingScheme.CONTINUOUS)]
        col = spec.lengths.index(1)
        assert nc_row[col].records == co_row[col].records
        # sanity: at length 4 the schemes request different frame groupings
        assert nc_row[1].records != co_row[1].records or noise.is_zero

    def test_noisy_grid_reruns_identically(self, synth_dataset):
        noise = NoiseConfig(score_sigma=0.3, morph_radius=1, flip_prob=0.05, seed=17)
        spec = small_grid(synth_dataset, noise=noise)
        first = run_grid(spec)
        second = run_grid(spec)
        for row_a, row_b in zip(first, second):
            for rep_a, rep_b in zip(row_a, row_b):
                assert rep_a.records == rep_b.records

    def test_worker_count_does_not_change_results(self, synth_dataset):
        noise = NoiseConfig(score_sigma=0.3, seed=23)
        spec = small_grid(synth_dataset, noise=noise)
        serial = run_grid(spec, workers=1)
        parallel = run_grid(spec, workers=4)
        for row_a, row_b in zip(serial, parallel):
            for rep_a, rep_b in zip(row_a, row_b):
                assert rep_a.records == rep_b.records

    def test_cell_errors_carry_coordinates(self, synth_dataset):
        spec = small_grid(synth_dataset, num_queries=0)  # every request is invalid
        with pytest.raises(AblationCellError, match=r"scheme=non-continuous, length=1"):
            run_grid(spec)

    def test_spec_validation(self, synth_dataset):
        with pytest.raises(InvalidArgumentError):
            GridSpec(schemes=(), lengths=(1,), dataset=synth_dataset)
        with pytest.raises(InvalidArgumentError):
            GridSpec(schemes=ALL_SCHEMES, lengths=(0,), dataset=synth_dataset)
        with pytest.raises(InvalidArgumentError):
            GridSpec(schemes=ALL_SCHEMES, lengths=(1,), dataset=synth_dataset,
                     segmenter="mystery")


class TestRenderGrid:
    def test_shape_and_formatting(self, synth_dataset):
        spec = GridSpec(
            schemes=ALL_SCHEMES,
            lengths=DEFAULT_LENGTHS,
            dataset=synth_dataset,
            num_queries=2,
        )
        matrix = run_grid(spec, workers=4)
        text = render_grid(spec, matrix)
        lines = text.splitlines()
        assert len(lines) == 1 + len(ALL_SCHEMES)
        assert lines[0].split() == ["method"] + [str(v) for v in DEFAULT_LENGTHS]
        for scheme, line in zip(ALL_SCHEMES, lines[1:]):
            assert line.startswith(SCHEME_LABELS[scheme])
            assert line.count("1.0000") == len(DEFAULT_LENGTHS)

    def test_byte_deterministic(self, synth_dataset):
        spec = small_grid(synth_dataset)
        matrix = run_grid(spec)
        assert render_grid(spec, matrix) == render_grid(spec, matrix)
        assert render_grid_csv(spec, matrix) == render_grid_csv(spec, matrix)

    def test_csv_twin(self, synth_dataset):
        spec = small_grid(synth_dataset)
        matrix = run_grid(spec)
        lines = render_grid_csv(spec, matrix).splitlines()
        assert lines[0] == "method," + ",".join(str(v) for v in spec.lengths)
        assert lines[1].startswith("N-continuous,")
        assert set(lines[1].split(",")[1:]) == {"1.0"}
