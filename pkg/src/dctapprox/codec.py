"""JPEG-like block compression with zig-zag coefficient retention, and image quality measures."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.ndimage import correlate1d

from .dct_core import exact_dct, orthogonalize, sdct
from .linalg import DyadicMatrix, inverse, read_matrix

__all__ = [
    "GrayImage",
    "CompressionConfig",
    "QualityReport",
    "read_pgm",
    "write_pgm",
    "load_image",
    "forward_block",
    "inverse_block",
    "zigzag_order",
    "zigzag_retain",
    "compress_image",
    "reconstruct",
    "mse_image",
    "psnr",
    "mssim",
    "quality",
    "compression_rate",
    "ape",
    "named_transform",
    "BenchmarkResult",
    "benchmark_corpus",
    "BENCH_CSV_HEADER",
    "APE_CSV_HEADER",
    "svg_chart",
]

log = logging.getLogger(__name__)

BENCH_CSV_HEADER = ("image", "transform", "N", "r", "CR", "mse", "psnr_db", "mssim")
APE_CSV_HEADER = ("transform", "N", "r", "ape_mse", "ape_psnr", "ape_mssim")
_ORTH_TOL = 1e-10


class PgmError(ValueError):
    pass


@dataclass(frozen=True)
class GrayImage:
    pixels: np.ndarray  # uint8, shape (height, width)

    def __post_init__(self) -> None:
        p = np.asarray(self.pixels)
        if p.ndim != 2 or p.size == 0:
            raise ValueError("a grayscale image needs a nonempty 2-D pixel grid")
        if p.dtype != np.uint8:
            if np.any(p < 0) or np.any(p > 255) or np.any(p != np.round(p)):
                raise ValueError("pixel values must be integers in [0, 255]")
            p = p.astype(np.uint8)
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @classmethod
    def from_array(cls, raster) -> "GrayImage":
        """Loader hook for an already decoded 8-bit grayscale raster."""
        return cls(np.asarray(raster))


@dataclass(frozen=True)
class CompressionConfig:
    N: int
    r: int
    transform: np.ndarray | object

    def __post_init__(self) -> None:
        if not 0 <= self.r <= self.N * self.N:
            raise ValueError(f"r must lie in [0, {self.N * self.N}], got {self.r}")

    @property
    def matrix(self) -> np.ndarray:
        t = self.transform
        m = np.asarray(t if isinstance(t, np.ndarray) else t.C_hat, dtype=np.float64)
        if m.shape != (self.N, self.N):
            raise ValueError(f"transform is {m.shape[0]}x{m.shape[1]} but the block size is {self.N}")
        return m


@dataclass(frozen=True)
class QualityReport:
    mse_img: float
    psnr_db: float
    mssim: float


# -- PGM ------------------------------------------------------------------------------


def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    toks, i = [], 0
    while len(toks) < count:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
            j += 1
        if j == i:
            raise PgmError("truncated PGM header")
        toks.append(data[i:j])
        i = j
    return toks, i


def read_pgm(path: str | Path) -> GrayImage:
    """Binary (P5) or ASCII (P2) PGM.  16-bit files are reduced to 8 bits."""
    data = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _pgm_tokens(data, 4)
    if magic not in (b"P5", b"P2"):
        raise PgmError(f"{path}: not a PGM file (magic {magic!r})")
    w, h, maxval = int(w), int(h), int(maxval)
    if w <= 0 or h <= 0 or not 0 < maxval < 65536:
        raise PgmError(f"{path}: bad PGM header")
    if magic == b"P5":
        dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
        body = data[pos + 1 :]
        need = w * h * np.dtype(dtype).itemsize
        if len(body) < need:
            raise PgmError(f"{path}: truncated pixel data")
        px = np.frombuffer(body[:need], dtype=dtype).reshape(h, w).astype(np.float64)
    else:
        px = np.array(data[pos:].split()[: w * h], dtype=np.float64)
        if px.size != w * h:
            raise PgmError(f"{path}: truncated pixel data")
        px = px.reshape(h, w)
    if maxval != 255:
        px = np.round(px * 255.0 / maxval)
    return GrayImage(px.astype(np.uint8))


def write_pgm(path: str | Path, img: GrayImage) -> None:
    header = f"P5\n{img.width} {img.height}\n255\n".encode()
    Path(path).write_bytes(header + img.pixels.tobytes())


def load_image(path: str | Path) -> GrayImage:
    """PGM natively; other formats through Pillow when it is installed (converted to luma)."""
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".pnm"):
        return read_pgm(path)
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise PgmError(f"{path}: only PGM is supported without Pillow") from exc
    with Image.open(path) as im:
        return GrayImage.from_array(np.asarray(im.convert("L")))


# -- block transform ------------------------------------------------------------------


def _inverse_of(c: np.ndarray) -> np.ndarray:
    n = c.shape[0]
    if np.max(np.abs(c @ c.T - np.eye(n))) < _ORTH_TOL:
        return c.T
    return inverse(c)


def forward_block(c_hat: np.ndarray, a: np.ndarray, c_inv: np.ndarray | None = None) -> np.ndarray:
    """``B = C A C^-1``; works on a single block or a stack of blocks."""
    c = np.asarray(c_hat, dtype=np.float64)
    ci = _inverse_of(c) if c_inv is None else c_inv
    return c @ np.asarray(a, dtype=np.float64) @ ci


def inverse_block(c_hat: np.ndarray, b: np.ndarray, c_inv: np.ndarray | None = None) -> np.ndarray:
    """``A = C^-1 B C``."""
    c = np.asarray(c_hat, dtype=np.float64)
    ci = _inverse_of(c) if c_inv is None else c_inv
    return ci @ np.asarray(b, dtype=np.float64) @ c


@lru_cache(maxsize=None)
def zigzag_order(n: int) -> np.ndarray:
    """JPEG scan positions ``(row, col)`` for an n x n block, shape ``(n*n, 2)``."""
    order = []
    for s in range(2 * n - 1):
        lo, hi = max(0, s - n + 1), min(s, n - 1)
        rows = range(lo, hi + 1) if s % 2 else range(hi, lo - 1, -1)
        order.extend((i, s - i) for i in rows)
    out = np.array(order, dtype=np.int64)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _zigzag_mask(n: int, r: int) -> np.ndarray:
    mask = np.zeros((n, n), dtype=bool)
    z = zigzag_order(n)[:r]
    mask[z[:, 0], z[:, 1]] = True
    mask.setflags(write=False)
    return mask


def zigzag_retain(b: np.ndarray, r: int) -> np.ndarray:
    """Keep the first ``r`` coefficients in zig-zag order (last two axes), zero the rest."""
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[-1]
    if b.shape[-2] != n:
        raise ValueError("zigzag_retain needs square blocks")
    if not 0 <= r <= n * n:
        raise ValueError(f"r must lie in [0, {n * n}], got {r}")
    return np.where(_zigzag_mask(n, r), b, 0.0)


def _to_blocks(px: np.ndarray, n: int) -> np.ndarray:
    h, w = px.shape
    return px.reshape(h // n, n, w // n, n).swapaxes(1, 2)


def _from_blocks(blocks: np.ndarray) -> np.ndarray:
    bh, bw, n, _ = blocks.shape
    return blocks.swapaxes(1, 2).reshape(bh * n, bw * n)


def reconstruct(img: GrayImage, cfg: CompressionConfig) -> np.ndarray:
    """Per-block forward transform, zig-zag retention and inverse, before clamping and rounding."""
    n = cfg.N
    if img.height % n or img.width % n:
        raise ValueError(f"image {img.width}x{img.height} is not divisible into {n}x{n} blocks")
    c = cfg.matrix
    ci = _inverse_of(c)
    blocks = _to_blocks(img.pixels.astype(np.float64), n)
    coeffs = zigzag_retain(forward_block(c, blocks, ci), cfg.r)
    return _from_blocks(inverse_block(c, coeffs, ci))


def compress_image(img: GrayImage, cfg: CompressionConfig) -> GrayImage:
    rec = reconstruct(img, cfg)
    return GrayImage(np.round(np.clip(rec, 0.0, 255.0)).astype(np.uint8))


# -- quality ----------------------------------------------------------------------------


def _pair(a: GrayImage, b: GrayImage) -> tuple[np.ndarray, np.ndarray]:
    x, y = a.pixels.astype(np.float64), b.pixels.astype(np.float64)
    if x.shape != y.shape:
        raise ValueError(f"image size mismatch: {x.shape} vs {y.shape}")
    return x, y


def mse_image(a: GrayImage, b: GrayImage) -> float:
    x, y = _pair(a, b)
    return float(np.mean((x - y) ** 2))


def psnr(a: GrayImage, b: GrayImage) -> float:
    """In dB; ``math.inf`` for identical images."""
    m = mse_image(a, b)
    return math.inf if m == 0 else float(10.0 * np.log10(255.0**2 / m))


_SSIM_WIN = 11
_SSIM_SIGMA = 1.5
_K1, _K2, _L = 0.01, 0.03, 255.0


@lru_cache(maxsize=None)
def _gauss(win: int, sigma: float) -> np.ndarray:
    t = np.arange(win) - (win - 1) / 2
    g = np.exp(-(t**2) / (2 * sigma**2))
    return g / g.sum()


def _filt(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    # separable window, only the fully overlapping ("valid") region is kept
    y = correlate1d(correlate1d(x, g, axis=0, mode="constant"), g, axis=1, mode="constant")
    r = (len(g) - 1) // 2
    return y[r:-r, r:-r]


def mssim(a: GrayImage, b: GrayImage) -> float:
    """Mean SSIM: 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03, L=255, valid region."""
    x, y = _pair(a, b)
    if min(x.shape) < _SSIM_WIN:
        raise ValueError(f"MSSIM needs images of at least {_SSIM_WIN}x{_SSIM_WIN}")
    g = _gauss(_SSIM_WIN, _SSIM_SIGMA)
    c1, c2 = (_K1 * _L) ** 2, (_K2 * _L) ** 2
    mx, my = _filt(x, g), _filt(y, g)
    sxx = _filt(x * x, g) - mx * mx
    syy = _filt(y * y, g) - my * my
    sxy = _filt(x * y, g) - mx * my
    s = ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2))
    return float(np.mean(s))


def quality(a: GrayImage, b: GrayImage) -> QualityReport:
    return QualityReport(mse_image(a, b), psnr(a, b), mssim(a, b))


def compression_rate(r: int, n: int) -> float:
    if not 0 <= r <= n * n:
        raise ValueError(f"r must lie in [0, {n * n}], got {r}")
    return 1.0 - r / (n * n)


def ape(mu_exact: float, mu_approx: float) -> float:
    if mu_exact == 0:
        raise ValueError("APE is undefined for a zero reference value")
    if math.isinf(mu_exact) and math.isinf(mu_approx):
        return 0.0
    return abs(mu_exact - mu_approx) / abs(mu_exact)


# -- transforms by name -----------------------------------------------------------------


def named_transform(name: str, n: int) -> tuple[str, np.ndarray]:
    """``dct``, ``sdct``, a catalog name (``T16.5``, ``T16.5^1``, ...) or a matrix file."""
    from .fastalg import CATALOG_NAMES, catalog, compose

    key = name.lower()
    if key == "dct":
        return f"C{n}", exact_dct(n).matrix
    if key == "sdct":
        return f"SDCT{n}", sdct(n).C_hat
    if name in CATALOG_NAMES:
        m = compose(catalog(name))
        label = "C" + name[1:]
    else:
        m = read_matrix(name)
        label = Path(name).stem
    c = orthogonalize(m).C_hat if isinstance(m, DyadicMatrix) else np.asarray(m, dtype=np.float64)
    if c.shape != (n, n):
        raise ValueError(f"{name} is {c.shape[0]}x{c.shape[1]}, expected {n}x{n}")
    return label, c


# -- corpus benchmark -------------------------------------------------------------------


@dataclass
class BenchmarkResult:
    rows: list[tuple]  # BENCH_CSV_HEADER order; image "mean" rows hold corpus averages
    ape_rows: list[tuple]

    def csv(self) -> str:
        return _csv(BENCH_CSV_HEADER, self.rows)

    def ape_csv(self) -> str:
        return _csv(APE_CSV_HEADER, self.ape_rows)

    def means(self) -> dict[tuple[str, int], tuple[float, float, float]]:
        return {(r[1], r[3]): (r[5], r[6], r[7]) for r in self.rows if r[0] == "mean"}


def _fmt(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.6f}"
    return str(v)


def _csv(header: Sequence[str], rows: Iterable[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _load_corpus(images) -> list[tuple[str, GrayImage]]:
    out = []
    for item in images:
        if isinstance(item, tuple):
            out.append(item)
            continue
        if isinstance(item, GrayImage):
            out.append((f"image{len(out)}", item))
            continue
        try:
            out.append((Path(item).stem, load_image(item)))
        except (OSError, ValueError) as exc:
            log.warning("skipping unreadable image %s: %s", item, exc)
    return out


def benchmark_corpus(images, transforms: Sequence[tuple[str, np.ndarray]], n: int, r_values: Sequence[int]) -> BenchmarkResult:
    """Per-image and corpus-mean quality for every (transform, r), plus APE against the exact DCT.

    ``images`` holds paths, :class:`GrayImage` objects or ``(name, GrayImage)``
    pairs.  The exact DCT is added as the APE reference when absent.
    """
    corpus = _load_corpus(images)
    if not corpus:
        raise ValueError("benchmark corpus is empty (no readable images)")
    ref_label, ref = named_transform("dct", n)
    ts = list(transforms)
    if not any(np.allclose(m, ref, atol=1e-12) for _, m in ts):
        ts.insert(0, (ref_label, ref))
    ref_label = next(lbl for lbl, m in ts if np.allclose(m, ref, atol=1e-12))
    rows: list[tuple] = []
    means: dict[tuple[str, int], tuple[float, float, float]] = {}
    for label, m in ts:
        for r in r_values:
            cfg = CompressionConfig(n, r, m)
            cr = compression_rate(r, n)
            acc = []
            for name, img in corpus:  # fixed order keeps the means reproducible
                q = quality(img, compress_image(img, cfg))
                acc.append((q.mse_img, q.psnr_db, q.mssim))
                rows.append((name, label, n, r, cr, *acc[-1]))
            mean = tuple(float(np.mean([a[i] for a in acc])) for i in range(3))
            means[(label, r)] = mean
            rows.append(("mean", label, n, r, cr, *mean))
    ape_rows = []
    for label, _ in ts:
        for r in r_values:
            e, a = means[(ref_label, r)], means[(label, r)]
            ape_rows.append((label, n, r, *(_safe_ape(x, y) for x, y in zip(e, a))))
    if not rows:
        raise ValueError("benchmark produced no results")
    return BenchmarkResult(rows, ape_rows)


def _safe_ape(x: float, y: float) -> float:
    if x == y:
        return 0.0
    return math.nan if x == 0 else ape(x, y)


def svg_chart(result: BenchmarkResult, metric: str = "psnr_db", width: int = 640, height: int = 400) -> str:
    """Line chart of a corpus-mean metric against r, one polyline per transform."""
    idx = {"mse": 0, "psnr_db": 1, "mssim": 2}[metric]
    series: dict[str, list[tuple[int, float]]] = {}
    for (label, r), vals in result.means().items():
        if math.isfinite(vals[idx]):
            series.setdefault(label, []).append((r, vals[idx]))
    pts = [p for s in series.values() for p in s]
    if not pts:
        raise ValueError("nothing to plot")
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    x1, y1 = (x1 if x1 > x0 else x0 + 1), (y1 if y1 > y0 else y0 + 1)
    m = 50
    sx = lambda x: m + (x - x0) / (x1 - x0) * (width - 2 * m)  # noqa: E731
    sy = lambda y: height - m - (y - y0) / (y1 - y0) * (height - 2 * m)  # noqa: E731
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{m}" y1="{height - m}" x2="{width - m}" y2="{height - m}" stroke="black"/>',
        f'<line x1="{m}" y1="{m}" x2="{m}" y2="{height - m}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="12">r</text>',
        f'<text x="14" y="{height / 2}" font-size="12" transform="rotate(-90 14 {height / 2})" '
        f'text-anchor="middle">{metric}</text>',
        f'<text x="{m}" y="{height - m + 16}" font-size="10">{x0}</text>',
        f'<text x="{width - m}" y="{height - m + 16}" font-size="10" text-anchor="end">{x1}</text>',
        f'<text x="{m - 4}" y="{height - m}" font-size="10" text-anchor="end">{y0:.4g}</text>',
        f'<text x="{m - 4}" y="{m + 4}" font-size="10" text-anchor="end">{y1:.4g}</text>',
    ]
    for i, (label, s) in enumerate(sorted(series.items())):
        s.sort()
        col = colors[i % len(colors)]
        poly = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in s)
        out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{poly}"/>')
        out.append(f'<text x="{width - m + 4}" y="{m + 14 * i}" font-size="10" fill="{col}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
