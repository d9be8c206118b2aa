import numpy as np
import pytest

from symode import linalg
from symode.completion import GrayImage, corrupt, recover, truncate_rank
from symode.io import read_pgm, write_pgm
from symode.sparseopt import DenoiseConfig


def seeded_image(seed=0, size=16, rank=None):
    rng = np.random.default_rng(seed)
    px = rng.uniform(0.25, 0.75, (size, size))
    img = GrayImage.from_matrix(px)
    if rank is not None:
        img = truncate_rank(img, rank)
    return img


def test_truncate_full_rank_is_identity():
    img = seeded_image(1)
    out = truncate_rank(img, 16)
    assert np.linalg.norm(out.pixels - img.pixels) <= 1e-10


def test_truncate_constant_image():
    img = GrayImage.from_matrix(np.full((8, 8), 0.5))
    out = truncate_rank(img, 1)
    assert np.allclose(out.pixels, 0.5, atol=1e-12)


def test_truncate_rank_three_spectrum():
    img = seeded_image(2)
    out = truncate_rank(img, 3)
    sigma = linalg.svd(out.pixels).sigma
    assert sigma[3] <= 1e-10 * sigma[0]


def test_truncate_rank_range_checked():
    img = seeded_image(3)
    with pytest.raises(ValueError):
        truncate_rank(img, 0)
    with pytest.raises(ValueError):
        truncate_rank(img, 17)


def test_corrupt_fraction_zero():
    img = seeded_image(4)
    out, mask = corrupt(img, 0.0, seed=1)
    assert np.array_equal(out.pixels, img.pixels)
    assert not mask.any()


def test_corrupt_fraction_one():
    img = seeded_image(5)
    out, mask = corrupt(img, 1.0, seed=1)
    assert mask.all()
    assert np.all(np.isin(out.pixels, [0.0, 1.0]))


def test_corrupt_exact_count_and_values():
    img = seeded_image(6)
    out, mask = corrupt(img, 0.5, seed=2)
    assert int(mask.sum()) == 128
    assert np.all(np.isin(out.pixels[mask], [0.0, 1.0]))
    assert np.array_equal(out.pixels[~mask], img.pixels[~mask])


def test_corrupt_deterministic():
    img = seeded_image(7)
    o1, m1 = corrupt(img, 0.3, seed=9)
    o2, m2 = corrupt(img, 0.3, seed=9)
    assert np.array_equal(o1.pixels, o2.pixels)
    assert np.array_equal(m1, m2)


def test_recover_nothing_corrupted():
    img = seeded_image(8, rank=2)
    report = recover(img, np.zeros((16, 16), bool), DenoiseConfig())
    assert report.converged
    assert np.allclose(report.image.pixels, img.pixels, atol=1e-8)


def test_recover_rank_one():
    img = seeded_image(9, rank=1)
    corrupted, mask = corrupt(img, 0.3, seed=3)
    report = recover(corrupted, mask, DenoiseConfig(seed=3, tau_rel=1e-3))
    assert report.converged
    rel = np.linalg.norm(report.image.pixels - img.pixels) / np.linalg.norm(img.pixels)
    assert rel <= 1e-3


def test_recover_rank_three_half_corrupted():
    img = seeded_image(10, size=32, rank=3)
    corrupted, mask = corrupt(img, 0.5, seed=4)
    report = recover(corrupted, mask, DenoiseConfig(seed=4, tau_rel=1e-3))
    rel = np.linalg.norm(report.image.pixels - img.pixels) / np.linalg.norm(img.pixels)
    assert rel <= 0.05


def test_recover_preserves_clean_pixels():
    img = seeded_image(11, size=32, rank=3)
    corrupted, mask = corrupt(img, 0.4, seed=5)
    report = recover(corrupted, mask, DenoiseConfig(seed=5, tau_rel=1e-3))
    assert report.converged
    clean = ~mask
    diff = np.abs(report.image.pixels[clean] - corrupted.pixels[clean])
    assert diff.max() <= 1e-6


def test_recover_shrinks_nuclear_norm():
    img = seeded_image(12, rank=2)
    corrupted, mask = corrupt(img, 0.4, seed=6)
    report = recover(corrupted, mask, DenoiseConfig(seed=6, tau_rel=1e-3))
    before = linalg.svd(corrupted.pixels).sigma.sum()
    after = linalg.svd(report.image.pixels).sigma.sum()
    assert after <= before + 1e-6


# ------------------------------------------------------------------- PGM io

def test_pgm_binary_round_trip(tmp_path):
    rng = np.random.default_rng(13)
    px = rng.integers(0, 256, (12, 17)).astype(float) / 255.0
    img = GrayImage(width=17, height=12, pixels=px)
    path = tmp_path / "img.pgm"
    write_pgm(path, img)
    back = read_pgm(path)
    assert back.width == 17 and back.height == 12
    assert np.array_equal(back.pixels, img.pixels)
    write_pgm(tmp_path / "img2.pgm", back)
    assert (tmp_path / "img.pgm").read_bytes() == (tmp_path / "img2.pgm").read_bytes()


def test_pgm_ascii_read(tmp_path):
    path = tmp_path / "ascii.pgm"
    path.write_text("P2\n# comment line\n3 2\n255\n0 128 255\n64 32 16\n")
    img = read_pgm(path)
    assert img.width == 3 and img.height == 2
    assert img.pixels[0, 1] == pytest.approx(128 / 255)
    assert img.pixels[1, 2] == pytest.approx(16 / 255)


def test_pgm_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P7\n3 2\n255\n")
    with pytest.raises(ValueError):
        read_pgm(bad)
    bad.write_bytes(b"P5\n3 2\n255\nab")  # truncated raster
    with pytest.raises(ValueError):
        read_pgm(bad)
    bad.write_text("P2\n2 2\n255\n1 2 3\n")  # missing pixel
    with pytest.raises(ValueError):
        read_pgm(bad)
