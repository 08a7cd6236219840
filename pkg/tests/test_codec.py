import math

import numpy as np
import pytest
from skimage.metrics import structural_similarity

from dctapprox.codec import (
    APE_CSV_HEADER,
    BENCH_CSV_HEADER,
    CompressionConfig,
    GrayImage,
    ape,
    benchmark_corpus,
    compress_image,
    compression_rate,
    forward_block,
    inverse_block,
    load_image,
    mse_image,
    mssim,
    named_transform,
    psnr,
    read_pgm,
    reconstruct,
    svg_chart,
    write_pgm,
    zigzag_order,
    zigzag_retain,
)
from dctapprox.dct_core import exact_dct
from dctapprox.fastalg import CATALOG_NAMES, catalog, compose


def small(camera, size=128):
    return GrayImage(camera.pixels[:size, :size])


def test_pgm_round_trip(tmp_path, rng):
    img = GrayImage(rng.integers(0, 256, (24, 40)))
    p = tmp_path / "x.pgm"
    write_pgm(p, img)
    back = read_pgm(p)
    assert back.width == 40 and back.height == 24
    assert np.array_equal(back.pixels, img.pixels)


def test_pgm_comments_ascii_and_16bit(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P2\n# made by hand\n3 2\n255\n0 1 2\n3 4 255\n")
    assert read_pgm(p).pixels.tolist() == [[0, 1, 2], [3, 4, 255]]
    q = tmp_path / "b.pgm"
    q.write_bytes(b"P5 2 1 65535\n" + np.array([0, 65535], dtype=">u2").tobytes())
    assert read_pgm(q).pixels.tolist() == [[0, 255]]


def test_pgm_errors(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
    with pytest.raises(ValueError):
        read_pgm(p)
    p.write_bytes(b"P5\n4 4\n255\n\x00")
    with pytest.raises(ValueError):
        read_pgm(p)


def test_load_image_via_pillow(tmp_path, rng):
    from PIL import Image

    px = rng.integers(0, 256, (16, 16)).astype(np.uint8)
    Image.fromarray(px).save(tmp_path / "x.png")
    assert np.array_equal(load_image(tmp_path / "x.png").pixels, px)


def test_gray_image_validation():
    with pytest.raises(ValueError):
        GrayImage(np.array([[256]]))
    with pytest.raises(ValueError):
        GrayImage(np.zeros(4))


def test_zigzag_order():
    z = zigzag_order(8)
    assert z[:10].tolist() == [[0, 0], [0, 1], [1, 0], [2, 0], [1, 1], [0, 2], [0, 3], [1, 2], [2, 1], [3, 0]]
    assert z[-1].tolist() == [7, 7]
    assert len({tuple(p) for p in z.tolist()}) == 64


def test_zigzag_retain():
    b = np.arange(16.0).reshape(4, 4) + 1
    assert np.array_equal(zigzag_retain(b, 16), b)
    assert not zigzag_retain(b, 0).any()
    kept = zigzag_retain(b, 3)
    assert set(zip(*np.nonzero(kept))) == {(0, 0), (0, 1), (1, 0)}
    with pytest.raises(ValueError):
        zigzag_retain(b, 17)


def transforms16():
    return [named_transform(t, 16)[1] for t in ("dct", "sdct", "T16.5")]


@pytest.mark.parametrize("idx", range(3))
def test_block_round_trip(idx, rng):
    c = transforms16()[idx]
    a = rng.uniform(0, 255, (16, 16))
    assert np.max(np.abs(inverse_block(c, forward_block(c, a)) - a)) < 1e-9


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_block_round_trip_catalog(name, rng):
    n = compose(catalog(name)).rows
    c = named_transform(name, n)[1]
    a = rng.uniform(0, 255, (n, n))
    assert np.max(np.abs(inverse_block(c, forward_block(c, a)) - a)) < 1e-9


def test_constant_block_is_dc_only():
    b = forward_block(exact_dct(8).matrix, np.full((8, 8), 7.0))
    b[0, 0] = 0
    assert np.max(np.abs(b)) < 1e-12


def test_orthogonal_inverse_is_transpose():
    from dctapprox.codec import _inverse_of
    from dctapprox.linalg import inverse

    c = exact_dct(16).matrix
    assert np.max(np.abs(inverse(c) - _inverse_of(c))) < 1e-10


def test_lossless_at_full_retention(camera):
    img = small(camera)
    for name in ("dct", "T16.5"):
        out = compress_image(img, CompressionConfig(16, 256, named_transform(name, 16)[1]))
        assert np.array_equal(out.pixels, img.pixels)


def test_compress_dimension_mismatch():
    with pytest.raises(ValueError):
        compress_image(GrayImage(np.zeros((20, 16))), CompressionConfig(16, 50, exact_dct(16).matrix))
    with pytest.raises(ValueError):
        CompressionConfig(8, 65, exact_dct(8).matrix)


def test_psnr_and_mse():
    a = GrayImage(np.full((16, 16), 100))
    b = GrayImage(np.full((16, 16), 101))
    assert mse_image(a, a) == 0 and psnr(a, a) == math.inf
    assert mse_image(a, b) == 1.0
    assert psnr(a, b) == pytest.approx(10 * math.log10(65025), abs=1e-12)
    assert psnr(a, b) == pytest.approx(48.13, abs=5e-3)
    with pytest.raises(ValueError):
        mse_image(a, GrayImage(np.zeros((8, 8))))


def test_mssim_matches_reference_implementation(camera):
    img = small(camera, 256)
    out = compress_image(img, CompressionConfig(16, 30, exact_dct(16).matrix))
    ref = structural_similarity(img.pixels, out.pixels, gaussian_weights=True, sigma=1.5,
                                use_sample_covariance=False, data_range=255)
    assert mssim(img, out) == pytest.approx(ref, abs=1e-9)
    assert mssim(img, img) == pytest.approx(1.0)


def test_mssim_inverted_image(camera):
    inv = GrayImage(255 - camera.pixels)
    val = mssim(camera, inv)
    assert val < 0.2
    assert val == pytest.approx(-0.094259, abs=1e-5)  # regression pin


def test_mssim_too_small():
    with pytest.raises(ValueError):
        mssim(GrayImage(np.zeros((8, 8))), GrayImage(np.zeros((8, 8))))


def test_compression_rate_and_ape():
    assert compression_rate(50, 16) == pytest.approx(0.8047, abs=1e-4)
    assert compression_rate(256, 16) == 0 and compression_rate(0, 16) == 1
    with pytest.raises(ValueError):
        compression_rate(300, 16)
    assert ape(5.0, 5.0) == 0
    assert ape(100, 90) == pytest.approx(0.1)
    assert ape(9.4555, 9.1268) == pytest.approx(0.034763, abs=1e-6)
    with pytest.raises(ValueError):
        ape(0.0, 1.0)


def test_unrounded_mse_monotone_in_r(camera):
    # exact for an orthogonal transform: each extra coefficient removes its own energy
    img = small(camera, 128)
    c = exact_dct(16).matrix
    px = img.pixels.astype(float)
    m = [np.mean((reconstruct(img, CompressionConfig(16, r, c)) - px) ** 2) for r in range(257)]
    assert all(b <= a + 1e-9 for a, b in zip(m, m[1:]))


def test_rounded_mse_monotone_in_r_full_image(camera):
    c = named_transform("T16.5", 16)[1]
    m = [mse_image(camera, compress_image(camera, CompressionConfig(16, r, c))) for r in range(257)]
    assert all(b <= a for a, b in zip(m, m[1:]))


def test_benchmark_corpus(tmp_path, camera):
    img = small(camera)
    write_pgm(tmp_path / "a.pgm", img)
    (tmp_path / "broken.pgm").write_bytes(b"garbage")
    ts = [named_transform("T16.5", 16)]
    res = benchmark_corpus(sorted(tmp_path.iterdir()), ts, 16, [256, 50])
    assert res.csv().splitlines()[0] == ",".join(BENCH_CSV_HEADER)
    assert res.ape_csv().splitlines()[0] == ",".join(APE_CSV_HEADER)
    apes = {(r[0], r[2]): r[3:] for r in res.ape_rows}
    assert apes[("C16", 256)] == (0.0, 0.0, 0.0)
    assert apes[("C16", 50)] == (0.0, 0.0, 0.0)
    assert all(v >= 0 for v in apes[("C16.5", 50)])
    assert "<polyline" in svg_chart(res, "mse")
    with pytest.raises(ValueError):
        benchmark_corpus([tmp_path / "broken.pgm"], ts, 16, [50])


def test_named_transform_errors(tmp_path):
    with pytest.raises(ValueError):
        named_transform("T16.5", 32)
