import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from implymult import imgproc
from implymult.core import ImplyError
from implymult.imgproc import (
    EDGE, FAITHFUL, FUNCTIONAL, GAUSSIAN, GrayImage, ImageError, FaithfulStats, application_report,
    convolve, load_pgm, operation_counts, random_image, save_pgm, save_pgm_ascii,
)


def test_minimal_p5():
    img = load_pgm(b"P5\n1 1\n255\n\x00")
    assert (img.width, img.height) == (1, 1) and img.pixels.tolist() == [[0]]


def test_p2_and_p5_agree():
    img = random_image(7, 5, seed=3)
    assert load_pgm(save_pgm_ascii(img)) == load_pgm(save_pgm(img)) == img


def test_round_trip_256():
    img = random_image(256, 256, seed=1)
    assert load_pgm(save_pgm(img)) == img


def test_header_comments():
    assert load_pgm(b"P2 # c\n# another\n2 1 255\n3 4\n").pixels.tolist() == [[3, 4]]


@pytest.mark.parametrize("data,pos,needle", [
    (b"P6\n1 1\n255\n\x00", 0, "magic"),
    (b"P5\n1 1\n65535\n\x00\x00", 7, "maxval"),
    (b"P5\n2 2\n255\n\x00", 12, "truncated"),
    (b"P5\n2 x\n255\n", 5, "height"),
    (b"P2\n2 1\n255\n1", 12, "truncated"),
    (b"P2\n1 1\n255\n300", 11, "pixel"),
])
def test_malformed(data, pos, needle):
    with pytest.raises(ImageError, match=needle) as info:
        load_pgm(data)
    assert info.value.position == pos


def test_image_validation():
    with pytest.raises(ImageError):
        GrayImage(2, 2, np.zeros((3, 3)))
    with pytest.raises(ImageError):
        GrayImage.from_array([[0, 256]])


def const(value, w=3, h=3):
    return GrayImage(w, h, np.full((h, w), value))


def test_kernel_examples():
    assert convolve(const(128), GAUSSIAN).pixels[1, 1] == 128
    assert convolve(const(77), EDGE).pixels[1, 1] == 0
    spike = np.zeros((3, 3), dtype=np.uint8)
    spike[1, 1] = 255
    assert convolve(GrayImage.from_array(spike), EDGE).pixels[1, 1] == 255


def test_edge_clamps_negative():
    img = np.full((3, 3), 200, dtype=np.uint8)
    img[1, 1] = 0
    assert convolve(GrayImage.from_array(img), EDGE).pixels[1, 1] == 0
    assert convolve(GrayImage.from_array(img), EDGE, normalize="abs").pixels[1, 1] == 255


def test_borders():
    img = random_image(6, 5, seed=4)
    g = convolve(img, GAUSSIAN)
    e = convolve(img, EDGE)
    for border in (lambda a: a[0], lambda a: a[-1], lambda a: a[:, 0], lambda a: a[:, -1]):
        assert np.array_equal(border(g.pixels), border(img.pixels))
        assert not border(e.pixels).any()


def naive(img, kernel):
    """Direct loop over interior pixels."""
    out = img.pixels.astype(int).copy() if kernel.border == "copy" else np.zeros_like(img.pixels, dtype=int)
    for r in range(1, img.height - 1):
        for c in range(1, img.width - 1):
            acc = 0
            for i in range(3):
                for j in range(3):
                    acc += kernel.weights[i][j] * int(img.pixels[r + i - 1, c + j - 1])
            acc = acc // kernel.divisor if acc >= 0 else -((-acc) // kernel.divisor)
            out[r, c] = min(max(acc, 0), 255)
    return out


@settings(max_examples=25, deadline=None)
@given(w=st.integers(3, 9), h=st.integers(3, 9), seed=st.integers(0, 10**6))
def test_functional_matches_naive(w, h, seed):
    img = random_image(w, h, seed)
    for kernel in (GAUSSIAN, EDGE):
        assert np.array_equal(convolve(img, kernel).pixels, naive(img, kernel))


@settings(max_examples=20, deadline=None)
@given(value=st.integers(0, 255), w=st.integers(3, 8), h=st.integers(3, 8))
def test_constant_images(value, w, h):
    assert (convolve(const(value, w, h), GAUSSIAN).pixels[1:-1, 1:-1] == value).all()
    assert not convolve(const(value, w, h), EDGE).pixels[1:-1, 1:-1].any()


@pytest.mark.parametrize("kernel", [GAUSSIAN, EDGE])
def test_faithful_matches_functional(kernel):
    img = random_image(12, 10, seed=9)
    stats = FaithfulStats()
    assert convolve(img, kernel, FAITHFUL, stats=stats) == convolve(img, kernel, FUNCTIONAL)
    taps = 9 if kernel is GAUSSIAN else 5
    assert stats.multiplications == taps * 10 * 8
    assert stats.instructions == stats.multiplications * (1346 if kernel is GAUSSIAN else 1738)


def test_faithful_sampling_and_classic_variant():
    img = random_image(11, 11, seed=2)
    stats = FaithfulStats()
    out = convolve(img, EDGE, FAITHFUL, sample=4, variant="classic", stats=stats)
    assert out == convolve(img, EDGE)
    assert stats.sampled_pixels == len(range(0, 81, 4))


def test_convolve_rejections():
    with pytest.raises(ImplyError, match="too small"):
        convolve(random_image(2, 2), GAUSSIAN)
    with pytest.raises(ImplyError):
        convolve(random_image(4, 4), GAUSSIAN, mode="approximate")
    with pytest.raises(ImplyError):
        convolve(random_image(4, 4), EDGE, normalize="minmax")


def counts(kernel, n):
    return {op.name: op.count for op in operation_counts(kernel, n, n)}


@pytest.mark.parametrize("n", [4, 16, 256])
def test_operation_counts(n):
    g = counts(GAUSSIAN, n)
    assert g["multiplier_8bit_unsigned"] == 9 * n * n - 36 * n + 36
    assert g["adder_8bit_unsigned"] == 2 * n * n - 8 * n + 8
    assert g["adder_9bit_unsigned"] == 3 * n * n - 12 * n + 12
    assert g["adder_10bit_unsigned"] == 2 * n * n - 8 * n + 8
    assert g["adder_11bit_unsigned"] == n * n - 4 * n + 4
    assert g["divider"] == 1
    e = counts(EDGE, n)
    assert e["multiplier_9bit_signed"] == 5 * n * n - 20 * n + 20
    assert e["adder_9bit_signed"] == 2 * n * n - 8 * n + 8
    assert e["adder_10bit_signed"] == e["adder_11bit_unsigned"] == n * n - 4 * n + 4


def test_operation_counts_rectangular():
    assert counts(GAUSSIAN, 256)["multiplier_8bit_unsigned"] == 580644
    ops = {op.name: op.count for op in operation_counts(EDGE, 10, 6)}
    assert ops["multiplier_9bit_signed"] == 5 * 8 * 4


def test_reports():
    g = application_report(GAUSSIAN, 256, 256, "proposed")
    assert (g.steps, g.memristors) == (781546824, 9290324)
    assert abs(g.energy_J * 1e3 - 67.694) < 1e-3 and not g.flags
    e = application_report(EDGE, 256, 256, "proposed")
    assert (e.steps, e.memristors) == (560644040, 5806463)
    assert abs(e.energy_J * 1e3 - 48.465) < 1e-3
    a = application_report(GAUSSIAN, 256, 256, "add_shift")
    assert a.steps == 1158965424 and abs(a.energy_J * 1e3 - 97.517) < 1e-3
    assert any("work memristors 12" in f for f in a.flags)


def test_report_totals_are_count_weighted():
    rep = application_report(EDGE, 40, 30, "booth")
    mult = rep.ops[0]
    assert rep.steps == mult["count"] * mult["steps_per_op"]
    assert all(op["steps_per_op"] is None for op in rep.ops[1:])
    doc = rep.as_dict(pulse_width=30e-6)
    assert doc["totals"]["latency_s"] == pytest.approx(rep.steps * 30e-6)
    assert doc["image"] == {"w": 40, "h": 30}


def test_family_resolution():
    assert imgproc.resolve_family(EDGE, "classic") == "array_signed_classic"
    assert imgproc.resolve_family(GAUSSIAN, "dadda") == "dadda"
    with pytest.raises(ImplyError, match="signed"):
        imgproc.resolve_family(EDGE, "dadda")
    with pytest.raises(ImplyError, match="unknown"):
        application_report(GAUSSIAN, 8, 8, "wallace")
