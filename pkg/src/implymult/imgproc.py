"""3x3 convolution on 8-bit grayscale images, natively or through the microcode
multipliers, plus the operation counts and multiplier cost reports of the two
image kernels (Gaussian blur and edge detection)."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import cost
from .core import ImplyError
from .multiplier import PROPOSED, SIGNED, UNSIGNED, build_array, multiply_array


class ImageError(ValueError):
    """Malformed or unsupported image data.

    :param position: byte offset in the input where the problem was found
    """

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at byte {position})"
        super().__init__(message)
        self.position = position


# -- images -----------------------------------------------------------------------

@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale image, ``pixels[row, col]``."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        pix = np.asarray(self.pixels)
        if pix.shape != (self.height, self.width):
            raise ImageError(f"pixel array shape {pix.shape} does not match {self.height}x{self.width}")
        if pix.size and (pix.min() < 0 or pix.max() > 255):
            raise ImageError("pixel values must lie in [0, 255]")
        object.__setattr__(self, "pixels", pix.astype(np.uint8))

    @classmethod
    def from_array(cls, array) -> "GrayImage":
        arr = np.asarray(array)
        if arr.ndim != 2:
            raise ImageError(f"expected a 2-D array, got {arr.ndim} dimensions")
        return cls(arr.shape[1], arr.shape[0], arr)

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return (self.width, self.height) == (other.width, other.height) and np.array_equal(self.pixels, other.pixels)


def _header_token(data: bytes, pos: int) -> tuple[bytes, int, int]:
    """Return (token, start, end) skipping whitespace and comments."""
    while True:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        break
    start = pos
    while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    return data[start:pos], start, pos


def _header_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    tok, start, end = _header_token(data, pos)
    if not tok:
        raise ImageError(f"truncated header: missing {what}", start)
    if not tok.isdigit():
        raise ImageError(f"bad {what} {tok[:16]!r}", start)
    return int(tok), end


def load_pgm(data: bytes) -> GrayImage:
    """Decode a P2 (ASCII) or P5 (binary) PGM with maxval 255."""
    magic, start, pos = _header_token(data, 0)
    if magic not in (b"P2", b"P5"):
        raise ImageError(f"not a P2/P5 PGM (magic {magic[:8]!r})", start)
    width, pos = _header_int(data, pos, "width")
    height, pos = _header_int(data, pos, "height")
    maxval_pos = _header_token(data, pos)[1]
    maxval, pos = _header_int(data, pos, "maxval")
    if width == 0 or height == 0:
        raise ImageError(f"empty image {width}x{height}", start)
    if maxval != 255:
        raise ImageError(f"unsupported maxval {maxval}, only 255 is accepted", maxval_pos)
    count = width * height
    if magic == b"P5":
        if pos >= len(data) or not data[pos:pos + 1].isspace():
            raise ImageError("missing whitespace after maxval", pos)
        pos += 1
        payload = data[pos:pos + count]
        if len(payload) < count:
            raise ImageError(f"truncated payload: expected {count} bytes, got {len(payload)}", pos + len(payload))
        pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
        return GrayImage(width, height, pixels.copy())
    values = []
    for _ in range(count):
        tok, tstart, pos = _header_token(data, pos)
        if not tok:
            raise ImageError(f"truncated payload: expected {count} values, got {len(values)}", tstart)
        if not tok.isdigit() or int(tok) > 255:
            raise ImageError(f"bad pixel value {tok[:16]!r}", tstart)
        values.append(int(tok))
    return GrayImage(width, height, np.array(values, dtype=np.uint8).reshape(height, width))


def save_pgm(image: GrayImage) -> bytes:
    """Encode as binary P5."""
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels.astype(np.uint8).tobytes()


def save_pgm_ascii(image: GrayImage, per_line: int = 16) -> bytes:
    lines = [f"P2\n{image.width} {image.height}\n255"]
    flat = image.pixels.ravel().tolist()
    for i in range(0, len(flat), per_line):
        lines.append(" ".join(map(str, flat[i:i + per_line])))
    return ("\n".join(lines) + "\n").encode("ascii")


def random_image(width: int, height: int, seed: int = 0) -> GrayImage:
    rng = np.random.default_rng(seed)
    return GrayImage(width, height, rng.integers(0, 256, size=(height, width), dtype=np.uint8))


# -- kernels -----------------------------------------------------------------------

@dataclass(frozen=True)
class Kernel:
    """3x3 integer kernel followed by a power-of-two divisor.

    :param shift: the divisor is ``2**shift``, applied as a truncating right shift
    :param signed: whether the weights need a signed multiplier
    :param border: ``copy`` keeps the source border, ``zero`` blanks it
    """

    name: str
    weights: tuple[tuple[int, int, int], ...]
    shift: int
    signed: bool
    mult_width: int
    border: str

    @property
    def divisor(self) -> int:
        return 1 << self.shift

    @property
    def taps(self) -> list[tuple[int, int, int]]:
        """(row offset, column offset, weight) of every nonzero weight."""
        return [(dy - 1, dx - 1, w) for dy, row in enumerate(self.weights)
                for dx, w in enumerate(row) if w != 0]


GAUSSIAN = Kernel("gaussian", ((1, 2, 1), (2, 4, 2), (1, 2, 1)), 4, False, 8, "copy")
# pixels (0..255) and weights (-1, 4) share a 9-bit two's-complement multiplier
EDGE = Kernel("edge", ((0, -1, 0), (-1, 4, -1), (0, -1, 0)), 0, True, 9, "zero")
KERNELS = {k.name: k for k in (GAUSSIAN, EDGE)}


def kernel_by_name(name: str) -> Kernel:
    try:
        return KERNELS[name]
    except KeyError:
        raise ImplyError(f"unknown kernel {name!r}; known: {', '.join(KERNELS)}") from None


# -- convolution ---------------------------------------------------------------------

FUNCTIONAL = "functional"
FAITHFUL = "faithful"
NORMALIZATIONS = ("clamp", "abs")


def _check_size(image: GrayImage):
    if image.width < 3 or image.height < 3:
        raise ImplyError(f"image {image.width}x{image.height} is too small; both sides must be at least 3")


def _windows(pixels: np.ndarray, kernel: Kernel) -> list[tuple[np.ndarray, int]]:
    """Interior-aligned shifted views, one per nonzero tap."""
    h, w = pixels.shape
    return [(pixels[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx].astype(np.int64), wt) for dy, dx, wt in kernel.taps]


def _finish(image: GrayImage, kernel: Kernel, sums: np.ndarray, normalize: str) -> GrayImage:
    if normalize not in NORMALIZATIONS:
        raise ImplyError(f"unknown normalization {normalize!r}; choose from {', '.join(NORMALIZATIONS)}")
    values = sums >> kernel.shift
    if normalize == "abs":
        values = np.abs(values)
    values = np.clip(values, 0, 255)
    if kernel.border == "copy":
        out = image.pixels.astype(np.int64).copy()
    else:
        out = np.zeros_like(image.pixels, dtype=np.int64)
    out[1:-1, 1:-1] = values
    return GrayImage(image.width, image.height, out)


@dataclass
class FaithfulStats:
    multiplications: int = 0
    instructions: int = 0
    sampled_pixels: int = 0


def convolve(image: GrayImage, kernel: Kernel, mode: str = FUNCTIONAL, *, variant: str = PROPOSED,
             sample: int = 1, normalize: str = "clamp", stats: FaithfulStats | None = None) -> GrayImage:
    """Convolve the interior of ``image`` with ``kernel``.

    In faithful mode every product of a sampled pixel is computed by the
    microcode array multiplier (8-bit unsigned for unsigned kernels, 9-bit
    signed otherwise); products are then summed, shifted and clamped natively.

    :param sample: faithful mode only; run every ``sample``-th interior pixel
        through microcode and fill the rest natively
    :param stats: optional accumulator for multiplication and instruction counts
    """
    _check_size(image)
    if mode not in (FUNCTIONAL, FAITHFUL):
        raise ImplyError(f"unknown mode {mode!r}")
    if sample < 1:
        raise ImplyError("sample stride must be >= 1")
    windows = _windows(image.pixels, kernel)
    sums = sum(px * wt for px, wt in windows)
    if mode == FAITHFUL:
        design = build_array(kernel.mult_width, SIGNED if kernel.signed else UNSIGNED, variant)
        flat_index = np.arange(sums.size)[::sample]
        xs = np.concatenate([px.ravel()[flat_index] for px, _ in windows])
        ys = np.concatenate([np.full(flat_index.size, wt, dtype=np.int64) for _, wt in windows])
        products, steps = multiply_array(design, xs, ys)
        micro = products.reshape(len(windows), flat_index.size).sum(axis=0)
        sums = sums.copy().ravel()
        sums[flat_index] = micro
        sums = sums.reshape(image.height - 2, image.width - 2)
        if stats is not None:
            stats.multiplications += int(xs.size)
            stats.instructions += int(xs.size) * steps
            stats.sampled_pixels += int(flat_index.size)
    return _finish(image, kernel, sums, normalize)


# -- operation counts and cost reports ---------------------------------------------------

@dataclass(frozen=True)
class OpCount:
    name: str
    kind: str  # multiplier, adder, divider
    width: int | None
    signed: bool
    count: int


def operation_counts(kernel: Kernel, width: int, height: int) -> list[OpCount]:
    """Arithmetic operations needed for the interior ``(width-2) x (height-2)``."""
    if width < 3 or height < 3:
        raise ImplyError(f"image {width}x{height} is too small; both sides must be at least 3")
    m = (width - 2) * (height - 2)
    if kernel.name == "gaussian":
        return [
            OpCount("multiplier_8bit_unsigned", "multiplier", 8, False, 9 * m),
            OpCount("adder_8bit_unsigned", "adder", 8, False, 2 * m),
            OpCount("adder_9bit_unsigned", "adder", 9, False, 3 * m),
            OpCount("adder_10bit_unsigned", "adder", 10, False, 2 * m),
            OpCount("adder_11bit_unsigned", "adder", 11, False, m),
            OpCount("divider", "divider", None, False, 1),
        ]
    if kernel.name == "edge":
        return [
            OpCount("multiplier_9bit_signed", "multiplier", 9, True, 5 * m),
            OpCount("adder_9bit_signed", "adder", 9, True, 2 * m),
            OpCount("adder_10bit_signed", "adder", 10, True, m),
            OpCount("adder_11bit_unsigned", "adder", 11, False, m),
        ]
    raise ImplyError(f"no operation counts for kernel {kernel.name!r}")


_SHORT_FAMILIES = {
    False: {"proposed": "array_unsigned_proposed", "classic": "array_unsigned_classic",
            "add_shift": "add_shift_unsigned", "ref28": "compressor_ref28"},
    True: {"proposed": "array_signed_proposed", "classic": "array_signed_classic",
           "add_shift": "add_shift_signed", "booth": "booth_radix2", "baugh_wooley": "baugh_wooley_dadda"},
}


def resolve_family(kernel: Kernel, name: str) -> str:
    """Map a short family name to the cost-model family matching the kernel's signedness."""
    full = _SHORT_FAMILIES[kernel.signed].get(name, name)
    fam = cost.family(full)
    if fam.signed != kernel.signed:
        need = "signed" if kernel.signed else "unsigned"
        raise ImplyError(f"family {full!r} cannot serve the {kernel.name} kernel, which needs a {need} multiplier")
    return full


# published multiplication rows of the application table:
# (kernel, family) -> (steps per op, work memristors, energy nJ per op, total energy mJ)
PUBLISHED_APPLICATION = {
    ("gaussian", "dadda"): (1472, 50, "118.08", "68.562"),
    ("gaussian", "compressor_ref28"): (1472, 50, "119", "69.096"),
    ("gaussian", "add_shift_unsigned"): (1996, 12, "167.948", "97.517"),
    ("gaussian", "array_unsigned_classic"): (1472, 20, "118.08", "68.562"),
    ("gaussian", "array_unsigned_proposed"): (1346, 20, "116.586", "67.694"),
    ("edge", "add_shift_signed"): (2574, 14, "216.389", "69.802"),
    ("edge", "booth_radix2"): (4100, 26, "344.725", "111.201"),
    ("edge", "baugh_wooley_dadda"): (1995, 65, "161.65", "52.145"),
    ("edge", "array_signed_classic"): (1866, 23, "151.76", "48.954"),
    ("edge", "array_signed_proposed"): (1738, 23, "150.242", "48.465"),
}


@dataclass
class ApplicationReport:
    kernel: str
    width: int
    height: int
    family: str
    ops: list[dict]
    steps: int
    memristors: int
    energy_nJ_exact: Fraction
    flags: list[str] = field(default_factory=list)

    @property
    def energy_J(self) -> float:
        return float(self.energy_nJ_exact / 10**9)

    def as_dict(self, pulse_width: float | None = None) -> dict:
        totals = {"steps": self.steps, "memristors": self.memristors, "energy_J": self.energy_J}
        if pulse_width is not None:
            totals["latency_s"] = self.steps * pulse_width
        out = {"kernel": self.kernel, "image": {"w": self.width, "h": self.height}, "family": self.family,
               "ops": self.ops, "totals": totals}
        if self.flags:
            out["flags"] = list(self.flags)
        return out


def _decimals(text: str) -> int:
    return len(text.split(".")[1]) if "." in text else 0


def application_report(kernel: Kernel, width: int, height: int, family_name: str = "proposed") -> ApplicationReport:
    """Cost of the kernel's multiplications under one multiplier family.

    Only multiplications enter the totals: adder costs are the same for every
    family and the divider is a shift, so both are listed with no cost.
    Memristors are ``count x (2 x width)`` operand cells plus one set of the
    family's work memristors.
    """
    full = resolve_family(kernel, family_name)
    counts = operation_counts(kernel, width, height)
    mult = next(op for op in counts if op.kind == "multiplier")
    rep = cost.formula_cost(full, mult.width)
    ops = []
    for op in counts:
        if op.kind == "multiplier":
            ops.append({"name": op.name, "width": op.width, "signed": op.signed, "count": op.count,
                        "steps_per_op": rep.steps, "energy_nJ_per_op": rep.energy_nJ})
        else:
            ops.append({"name": op.name, "width": op.width, "signed": op.signed, "count": op.count,
                        "steps_per_op": None, "energy_nJ_per_op": None})
    steps = mult.count * rep.steps
    memristors = mult.count * rep.input_memristors + rep.work_memristors
    energy = mult.count * rep.energy_exact
    report = ApplicationReport(kernel.name, width, height, full, ops, steps, memristors, energy)

    published = PUBLISHED_APPLICATION.get((kernel.name, full))
    if published and (width, height) == (256, 256):
        p_steps, p_work, p_energy, p_total = published
        if p_steps != rep.steps:
            report.flags.append(f"published steps per op {p_steps}, formula {rep.steps}")
        if p_work != rep.work_memristors:
            report.flags.append(f"published work memristors {p_work}, formula {rep.work_memristors}")
        if f"{rep.energy_nJ:.{_decimals(p_energy)}f}" != p_energy:
            report.flags.append(f"published energy per op {p_energy} nJ, formula {rep.energy_nJ:.3f} nJ "
                                f"(delta {rep.energy_nJ - float(p_energy):+.3f})")
        total_mJ = report.energy_J * 1e3
        if abs(total_mJ - float(p_total)) > 1e-3:
            report.flags.append(f"published energy {p_total} mJ, formula {total_mJ:.3f} mJ")
    return report
