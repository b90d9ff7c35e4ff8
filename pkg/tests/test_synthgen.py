import numpy as np
import pytest

from landcover.errors import InvalidSpec
from landcover.synthgen import SceneSpec, generate


def small_spec(**overrides):
    base = dict(
        width=64, height=64, num_classes=3, seeds_per_class=2,
        band_means=((30, 30, 30), (120, 120, 120), (220, 220, 220)),
        texture_freq=(0.1, 0.2, 0.05),
        texture_amp=(5.0, 5.0, 5.0),
        noise_sigma=2.0, rng_seed=99)
    base.update(overrides)
    return SceneSpec(**base)


class TestSceneSpec:
    def test_duplicate_means_rejected(self):
        with pytest.raises(InvalidSpec):
            small_spec(band_means=((9, 9, 9), (9, 9, 9), (1, 1, 1)))

    def test_single_class_rejected(self):
        with pytest.raises(InvalidSpec):
            small_spec(num_classes=1, band_means=((1, 2, 3),),
                       texture_freq=(0.1,), texture_amp=(1.0,))

    def test_negative_noise_rejected(self):
        with pytest.raises(InvalidSpec):
            small_spec(noise_sigma=-1.0)

    def test_reference_spec_loads(self):
        spec = SceneSpec.from_json("scenes/reference.json")
        assert spec.width == 512 and spec.num_classes == 5

    def test_missing_spec_file(self, tmp_path):
        with pytest.raises(InvalidSpec):
            SceneSpec.from_json(tmp_path / "nope.json")


class TestGenerate:
    def test_deterministic(self):
        r1, m1 = generate(small_spec())
        r2, m2 = generate(small_spec())
        np.testing.assert_array_equal(r1.samples, r2.samples)
        np.testing.assert_array_equal(m1.labels, m2.labels)

    def test_noiseless_flat_regions(self):
        spec = small_spec(noise_sigma=0.0, texture_amp=(0.0, 0.0, 0.0))
        r, mask = generate(spec)
        for cls in range(1, 4):
            region = r.samples[mask.labels == cls]
            assert (region == spec.band_means[cls - 1]).all()

    def test_contract_dimensions_and_labels(self):
        spec = SceneSpec.from_json("scenes/reference.json")
        r, mask = generate(spec)
        assert (r.width, r.height, r.bands) == (512, 512, 3)
        assert set(np.unique(mask.labels)) == {1, 2, 3, 4, 5}

    def test_every_class_present(self):
        _, mask = generate(small_spec())
        present = np.unique(mask.labels)
        assert set(present) == {1, 2, 3}

    def test_per_class_means_near_spec(self):
        spec = SceneSpec.from_json("scenes/reference.json")
        r, mask = generate(spec)
        for cls in range(1, 6):
            sel = mask.labels == cls
            n = sel.sum()
            for b in range(3):
                vals = r.samples[:, :, b][sel].astype(float)
                tol = 3.0 * vals.std() / np.sqrt(n)
                assert abs(vals.mean() - spec.band_means[cls - 1][b]) <= tol
