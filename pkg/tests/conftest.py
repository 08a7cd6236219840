import os
from pathlib import Path

import numpy as np
import pytest

from dctapprox.codec import GrayImage, load_image

HERE = Path(__file__).parent
ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, ok: bool | None, detail: str = "") -> None:
    status = {True: "PASS", False: "FAIL", None: "SKIP"}[ok]
    ACCEPTANCE_LINES.append(f"criterion {criterion}: {status} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def peppers_path() -> Path | None:
    env = os.environ.get("DCTAPPROX_PEPPERS")
    for p in ([Path(env)] if env else []) + [HERE / "data" / "peppers.pgm", HERE / "data" / "peppers.png",
                                              HERE / "data" / "peppers.tiff"]:
        if p.is_file():
            return p
    return None


@pytest.fixture(scope="session")
def camera() -> GrayImage:
    from skimage import data

    return GrayImage(data.camera())


@pytest.fixture(scope="session")
def peppers() -> GrayImage:
    p = peppers_path()
    if p is None:
        pytest.skip("Peppers image not available (set DCTAPPROX_PEPPERS or add tests/data/peppers.pgm)")
    img = load_image(p)
    if img.pixels.shape != (512, 512):
        pytest.skip(f"Peppers image at {p} is {img.width}x{img.height}, expected 512x512")
    return img


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
