"""Tests for the grayscale denoising visualization."""

import numpy as np
import pytest

from irs_chest.cdrn import CdrnConfig, init_model
from irs_chest.linalg import SeededRng, sample_cscg
from irs_chest.visualize import (
    block_error_trajectory,
    denoising_stages,
    normalize_unit,
    visualize_denoising,
    write_pgm,
)


def small_model(seed=0):
    model = init_model(CdrnConfig(num_blocks=3, layers_per_block=2, filters=3),
                       SeededRng(seed))
    gen = SeededRng(seed).substream(5).generator
    for block in model.blocks:
        block.kernels[-1][:] = 0.1 * gen.standard_normal(block.kernels[-1].shape)
    return model


class TestNormalize:
    def test_range(self):
        gen = SeededRng(1).generator
        image = normalize_unit(gen.standard_normal((5, 7)))
        assert image.min() == 0.0
        assert image.max() == 1.0

    def test_constant_image(self):
        assert np.array_equal(normalize_unit(np.full((3, 3), 4.2)), np.zeros((3, 3)))


class TestPgm:
    def test_header_and_payload(self, tmp_path):
        image = np.linspace(0, 1, 12).reshape(3, 4)
        path = tmp_path / "img.pgm"
        write_pgm(image, path)
        data = path.read_bytes()
        assert data.startswith(b"P5\n4 3\n255\n")
        assert len(data) == len(b"P5\n4 3\n255\n") + 12

    def test_out_of_range_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="0, 1"):
            write_pgm(np.full((2, 2), 1.5), tmp_path / "img.pgm")


class TestStages:
    def test_stage_count_and_shapes(self):
        model = small_model()
        x = sample_cscg(4, 9, 1.0, SeededRng(2))
        stages = denoising_stages(model, x)
        assert len(stages) == 4  # input plus three blocks
        assert all(s.shape == (4, 9) for s in stages)
        assert np.array_equal(stages[0], x)

    def test_error_trajectory_length(self):
        model = small_model()
        x = sample_cscg(4, 9, 1.0, SeededRng(3))
        truth = sample_cscg(4, 9, 1.0, SeededRng(4))
        traj = block_error_trajectory(model, x, truth)
        assert len(traj) == 4
        assert traj[0] == pytest.approx(np.linalg.norm(x - truth))


class TestVisualize:
    def test_emits_input_plus_block_images(self, tmp_path):
        model = small_model()
        x = sample_cscg(4, 9, 1.0, SeededRng(5))
        paths = visualize_denoising(model, x, tmp_path / "viz")
        assert len(paths) == 4
        assert paths[0].name == "input.pgm"
        assert paths[-1].name == "block_03.pgm"
        for path in paths:
            assert path.exists()
            assert path.read_bytes().startswith(b"P5\n")

    def test_images_are_normalized(self, tmp_path):
        model = small_model()
        x = sample_cscg(4, 9, 1.0, SeededRng(6))
        for stage in denoising_stages(model, x):
            image = normalize_unit(np.abs(stage))
            assert image.min() >= 0.0
            assert image.max() <= 1.0
