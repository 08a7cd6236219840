"""``dctapprox`` command line: each subcommand wraps one part of the toolkit.

Every run echoes its :class:`RunConfig` to stderr as JSON and writes it next to
the outputs.  Failures exit nonzero and print a JSON summary on stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import codec, fastalg, metrics, scaling, search
from .dct_core import exact_dct, orthogonalize
from .linalg import DyadicMatrix, format_matrix, read_matrix, write_matrix

DEFAULT_R = {16: 50, 32: 205, 64: 820}
# acceptance tolerances for (epsilon, mse, cg, eta, delta)
MERIT_TOL = (1e-3, 5e-4, 1e-3, 1e-2, 1e-3)


class CliError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    N: int | None = None
    set: str | None = None
    reduced: bool = False
    rho: float = metrics.DEFAULT_RHO
    r: int | None = None
    r_sweep: list[int] | None = None
    inputs: list[str] = field(default_factory=list)
    out: str | None = None
    workers: int = 1
    seed: int = 0
    j: int = 1
    transforms: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if self.N is not None and self.N < 2:
            raise CliError(f"--n must be at least 2, got {self.N}")
        if not -1.0 < self.rho < 1.0:
            raise CliError(f"--rho must satisfy |rho| < 1, got {self.rho}")
        if self.set is not None:
            try:
                search.get_set(self.set)
            except ValueError as exc:
                raise CliError(str(exc)) from None
        if self.workers < 0:
            raise CliError("--workers must be nonnegative (0 means all cores)")
        if self.N is not None:
            for r in ([self.r] if self.r is not None else []) + (self.r_sweep or []):
                if not 0 <= r <= self.N * self.N:
                    raise CliError(f"r={r} outside [0, {self.N * self.N}]")
        if self.j < 0:
            raise CliError("--j must be nonnegative")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _parse_sweep(text: str) -> list[int]:
    try:
        parts = [int(p) for p in text.split(":")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sweep {text!r}; expected a:b:step") from None
    if len(parts) == 2:
        parts.append(1)
    if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
        raise argparse.ArgumentTypeError(f"bad sweep {text!r}; expected a:b:step with a <= b and step > 0")
    a, b, s = parts
    return list(range(a, b + 1, s))


def _default_r(n: int) -> int:
    return DEFAULT_R.get(n, round(0.2 * n * n))


def _resolve(ref: str, n: int | None = None) -> tuple[str, np.ndarray]:
    """Named transform or matrix file -> (label, C_hat)."""
    if ref.lower() in ("dct", "sdct"):
        if n is None:
            raise CliError(f"transform {ref} needs --n")
        return codec.named_transform(ref, n)
    if ref in fastalg.CATALOG_NAMES:
        m = fastalg.compose(fastalg.catalog(ref))
        return codec.named_transform(ref, m.rows)
    path = Path(ref)
    if not path.exists():
        raise CliError(f"{ref}: no such matrix file or transform name")
    m = read_matrix(path)
    c = orthogonalize(m).C_hat if isinstance(m, DyadicMatrix) else np.asarray(m, dtype=np.float64)
    if n is not None and c.shape != (n, n):
        raise CliError(f"{ref} is {c.shape[0]}x{c.shape[1]}, expected {n}x{n}")
    return path.stem, c


def _save_config(cfg: RunConfig, target: Path | None) -> None:
    if target is not None:
        target.write_text(json.dumps(asdict(cfg), indent=2, sort_keys=True) + "\n")


def _sidecar(out: str | None) -> Path | None:
    return None if out is None else Path(out + ".run.json")


# -- subcommands ----------------------------------------------------------------------


def cmd_gen_dct(cfg: RunConfig) -> int:
    text = format_matrix(exact_dct(cfg.N).matrix)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    _save_config(cfg, _sidecar(cfg.out))
    return 0


def cmd_search(cfg: RunConfig) -> int:
    D = search.get_set(cfg.set or "D1")
    C = exact_dct(cfg.N)
    try:
        if cfg.reduced:
            res = search.reduced_search(C, D, workers=cfg.workers)
        else:
            res = search.greedy_row_search(C, D, workers=cfg.workers)
    except search.SearchBudgetError as exc:
        raise CliError(str(exc)) from None
    if cfg.out:
        res.save(cfg.out)
    else:
        sys.stdout.write(format_matrix(res.T))
    rep = metrics.assess(orthogonalize(res.T), metrics.markov_model(cfg.N, cfg.rho), label=f"N{cfg.N}-{D.name}")
    sys.stderr.write(metrics.reports_to_csv([rep]))
    _save_config(cfg, _sidecar(cfg.out))
    return 0


def cmd_assess(cfg: RunConfig) -> int:
    reports = []
    for ref in cfg.inputs:
        label, c = _resolve(ref, cfg.N)
        reports.append(metrics.assess(c, metrics.markov_model(c.shape[0], cfg.rho), label=label))
    text = metrics.reports_to_csv(reports)
    if cfg.out:
        Path(cfg.out).write_text(text)
    sys.stdout.write(text)
    _save_config(cfg, _sidecar(cfg.out))
    return 0


def cmd_jam(cfg: RunConfig) -> int:
    ref = cfg.inputs[0]
    m = fastalg.resolve_matrix(ref) if ref in fastalg.CATALOG_NAMES else read_matrix(ref)
    if not isinstance(m, DyadicMatrix):
        raise CliError(f"{ref}: JAM scaling needs a dyadic (low-complexity) matrix")
    stem = ref if ref in fastalg.CATALOG_NAMES else Path(ref).stem
    st = scaling.iterate_scale(m, cfg.j, label=f"{stem}^{cfg.j}")
    text = format_matrix(st.T_big)
    if cfg.out:
        Path(cfg.out).write_text(text)
        Path(cfg.out + ".meta.json").write_text(json.dumps(st.to_dict(ref), indent=2) + "\n")
    else:
        sys.stdout.write(text)
    rep = metrics.assess(st.C_hat, metrics.markov_model(st.N, cfg.rho), label=st.label)
    sys.stderr.write(metrics.reports_to_csv([rep]))
    _save_config(cfg, _sidecar(cfg.out))
    return 0


def _published_merit(name: str) -> list[float] | None:
    rows = fastalg.reference_data()["merit"]["rows"]
    key = "C" + name[1:]
    for table in rows.values():
        if key in table:
            return table[key]
    return None


def verify_catalog(name: str, seed: int = 0, vectors: int = 1000) -> dict:
    """All checks on one catalog entry; returns a JSON-ready summary."""
    F = fastalg.catalog(name)
    T = fastalg.compose(F)
    before, after = fastalg.published_cost(name)
    got_b, got_a = fastalg.cost(T), fastalg.cost_factorized(F)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((vectors, F.N))
    apply_err = float(np.max(np.abs(fastalg.apply(F, x) - x @ T.to_float().T)))
    rep = metrics.assess(orthogonalize(T), label=name)
    pub = _published_merit(name)
    got = [rep.epsilon, rep.mse, rep.coding_gain_db, rep.efficiency_pct, rep.delta_orth]
    checks = {
        "cost_before": got_b == before,
        "cost_after": got_a == after == F.declared_cost,
        "multiplier_set": search.get_set(F.multiplier_set).contains_matrix(T),
        "apply": apply_err < 1e-12,
        "merit": pub is not None and all(abs(g - p) <= t for g, p, t in zip(got, pub, MERIT_TOL)),
    }
    return {
        "name": name,
        "status": "PASS" if all(checks.values()) else "FAIL",
        "checks": checks,
        "cost_before": got_b.as_tuple(),
        "cost_after": got_a.as_tuple(),
        "apply_max_error": apply_err,
        "merit": dict(zip(metrics.MERIT_CSV_HEADER[1:], got)),
        "published_merit": pub,
    }


def cmd_verify_fastalg(cfg: RunConfig) -> int:
    names = cfg.inputs or list(fastalg.CATALOG_NAMES)
    results = []
    for name in names:
        if name not in fastalg.CATALOG_NAMES:
            raise CliError(f"unknown catalog transform {name!r}; known: {', '.join(fastalg.CATALOG_NAMES)}")
        res = verify_catalog(name, cfg.seed)
        results.append(res)
        print(f"{res['status']} {name} before={res['cost_before']} after={res['cost_after']} "
              f"apply_err={res['apply_max_error']:.2e} merit_match={res['checks']['merit']}")
    if cfg.out:
        Path(cfg.out).write_text(fastalg.cost_report(names))
    _save_config(cfg, _sidecar(cfg.out))
    failed = [r for r in results if r["status"] != "PASS"]
    if failed:
        print(json.dumps({"status": "FAIL", "failures": failed}))
        return 1
    return 0


def cmd_compress(cfg: RunConfig) -> int:
    img = codec.load_image(cfg.inputs[0])
    tname = cfg.inputs[1] if len(cfg.inputs) > 1 else "dct"
    label, c = _resolve(tname, cfg.N)
    n = c.shape[0]
    r = cfg.r if cfg.r is not None else _default_r(n)
    out = codec.compress_image(img, codec.CompressionConfig(n, r, c))
    q = codec.quality(img, out)
    if cfg.out:
        codec.write_pgm(cfg.out, out)
    print(json.dumps({"transform": label, "N": n, "r": r, "CR": codec.compression_rate(r, n),
                      "mse": q.mse_img, "psnr_db": q.psnr_db, "mssim": q.mssim}))
    _save_config(cfg, _sidecar(cfg.out))
    return 0


def cmd_benchmark(cfg: RunConfig) -> int:
    corpus = Path(cfg.inputs[0])
    if not corpus.is_dir():
        raise CliError(f"{corpus}: not a directory")
    n = cfg.N or 16
    paths = sorted(p for p in corpus.iterdir() if p.suffix.lower() in (".pgm", ".pnm", ".png", ".tif", ".tiff", ".bmp"))
    names = cfg.transforms or ["dct"]
    ts = [_resolve(t, n) for t in names]
    r_values = cfg.r_sweep or [cfg.r if cfg.r is not None else _default_r(n)]
    try:
        res = codec.benchmark_corpus(paths, ts, n, r_values)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    out = Path(cfg.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "benchmark.csv").write_text(res.csv())
    (out / "ape.csv").write_text(res.ape_csv())
    for metric in ("mse", "psnr_db", "mssim"):
        (out / f"{metric}.svg").write_text(codec.svg_chart(res, metric))
    _save_config(cfg, out / "run.json")
    sys.stdout.write(res.csv())
    return 0


COMMANDS = {
    "gen-dct": cmd_gen_dct,
    "search": cmd_search,
    "assess": cmd_assess,
    "jam": cmd_jam,
    "verify-fastalg": cmd_verify_fastalg,
    "compress": cmd_compress,
    "benchmark": cmd_benchmark,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dctapprox", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, dest="N", help="blocklength N")
    common.add_argument("--rho", type=float, default=metrics.DEFAULT_RHO, help="Markov-1 correlation (default 0.95)")
    common.add_argument("--out", help="output path (file, or directory for benchmark)")
    common.add_argument("--workers", type=int, default=1, help="worker processes; 0 = all cores")
    common.add_argument("--seed", type=int, default=0, help="seed for random-vector checks")
    sub = p.add_subparsers(dest="subcommand", required=True)

    sub.add_parser("gen-dct", parents=[common], help="write the exact DCT matrix")
    s = sub.add_parser("search", parents=[common], help="minimal-angle row search")
    s.add_argument("--set", default="d1", help="multiplier set d1..d6")
    s.add_argument("--reduced", action="store_true", help="search half-row magnitudes only")
    a = sub.add_parser("assess", parents=[common], help="figures of merit as CSV")
    a.add_argument("inputs", nargs="+", metavar="MATRIX", help="matrix file, catalog name, dct or sdct")
    j = sub.add_parser("jam", parents=[common], help="blocklength doubling")
    j.add_argument("inputs", nargs=1, metavar="MATRIX")
    j.add_argument("--j", type=int, default=1, help="number of doublings")
    v = sub.add_parser("verify-fastalg", parents=[common], help="check catalog factorizations")
    v.add_argument("inputs", nargs="*", metavar="NAME")
    c = sub.add_parser("compress", parents=[common], help="compress one image")
    c.add_argument("inputs", nargs="+", metavar="IMAGE [TRANSFORM]")
    c.add_argument("--r", type=int, help="retained coefficients per block")
    b = sub.add_parser("benchmark", parents=[common], help="corpus benchmark with CSV and SVG output")
    b.add_argument("inputs", nargs=1, metavar="CORPUS_DIR")
    b.add_argument("--transforms", nargs="+", default=[], help="transforms to compare (default: dct)")
    b.add_argument("--r", type=int)
    b.add_argument("--r-sweep", type=_parse_sweep, dest="r_sweep", help="a:b:step")
    return p


def _config(ns: argparse.Namespace) -> RunConfig:
    fields = RunConfig.__dataclass_fields__
    cfg = RunConfig(**{k: v for k, v in vars(ns).items() if k in fields and v is not None})
    if cfg.subcommand == "compress" and len(cfg.inputs) > 2:
        raise CliError("compress takes an image and at most one transform")
    if cfg.subcommand in ("gen-dct", "search") and cfg.N is None:
        raise CliError(f"{cfg.subcommand} needs --n")
    cfg.validate()
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = _config(ns)
        sys.stderr.write(cfg.to_json() + "\n")
        return COMMANDS[cfg.subcommand](cfg)
    except (CliError, OSError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        print(json.dumps({"status": "FAIL", "subcommand": ns.subcommand, "error": msg}))
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
