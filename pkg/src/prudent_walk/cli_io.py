"""Command line entry point, dataset writers and the strip-table cache."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import struct
import sys
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from prudent_walk import __version__
from prudent_walk.errors import CapacityError, DomainError, PrudentWalkError

CACHE_ENV = "PRUDENT_WALK_CACHE"
CACHE_FORMAT_VERSION = 1
_MAGIC = b"PWSTRIP\0"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3


# -- bit-stable output ----------------------------------------------------------

def format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    return format(x, ".17g")


def _json_value(v: Any) -> str:
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        items = sorted((str(k), val) for k, val in v.items())
        return "{" + ", ".join(f"{json.dumps(k)}: {_json_value(val)}" for k, val in items) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialise {type(v).__name__}")


def dumps_stable(obj: Any) -> str:
    """JSON with sorted keys and floats at 17 significant digits."""
    return _json_value(obj) + "\n"


def _csv_cell(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    return str(v)


def write_dataset(records: Sequence[dict] | dict, path: str | os.PathLike | None,
                  fmt: str = "json", fieldnames: Sequence[str] | None = None) -> str:
    """Write records as CSV (one row per dict) or JSON; returns the text.

    ``path`` of None or "-" writes nothing and only returns the text.
    """
    if fmt == "json":
        text = dumps_stable(records)
    elif fmt == "csv":
        rows = list(records)
        names = list(fieldnames) if fieldnames else (sorted(rows[0]) if rows else [])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names)
        for r in rows:
            w.writerow([_csv_cell(r[k]) for k in names])
        text = buf.getvalue()
    else:
        raise DomainError(f"unknown format {fmt!r}; expected csv or json")
    if path not in (None, "-"):
        try:
            Path(path).write_text(text)
        except OSError as e:
            raise OSError(f"cannot write {path}: {e}") from e
    return text


# -- strip table cache ----------------------------------------------------------

def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "prudent_walk"


class TableCache:
    """File cache of strip tables keyed by (R, t_max).

    Files carry a JSON header {format_version, R, t_max, lambda_star}
    followed by the L, L_hat and L_star arrays as little-endian doubles.
    Writes go through a temporary file and an atomic rename, so readers
    never observe partial files.
    """

    def __init__(self, directory: str | os.PathLike | None = None,
                 lambda_star: float | None = None):
        from prudent_walk.effective_walk import LAMBDA_STAR_REF

        self.directory = Path(directory) if directory else default_cache_dir()
        self.lambda_star = LAMBDA_STAR_REF if lambda_star is None else lambda_star
        self.builds = 0

    def path_for(self, R: int, t_max: int) -> Path:
        return self.directory / f"strip_R{R}_t{t_max}.bin"

    def _header(self, R: int, t_max: int) -> dict:
        return {"format_version": CACHE_FORMAT_VERSION, "R": R, "t_max": t_max,
                "lambda_star": self.lambda_star}

    def _read(self, path: Path, R: int, t_max: int):
        from prudent_walk.effective_walk import StripTables

        raw = path.read_bytes()
        if raw[:8] != _MAGIC:
            raise ValueError("bad magic")
        (hlen,) = struct.unpack("<I", raw[8:12])
        header = json.loads(raw[12:12 + hlen].decode())
        if header != self._header(R, t_max):
            return None
        n = t_max + 1
        data = np.frombuffer(raw, dtype="<f8", offset=12 + hlen)
        sizes = (n * n * 2, n * n, n * n * 2)
        if data.size != sum(sizes):
            raise ValueError("truncated payload")
        a, b = sizes[0], sizes[0] + sizes[1]
        return StripTables(R, t_max, data[:a].reshape(n, n, 2).copy(),
                           data[a:b].reshape(n, n).copy(), data[b:].reshape(n, n, 2).copy())

    def _write(self, path: Path, tables) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        header = dumps_stable(self._header(tables.R, tables.t_max)).strip().encode()
        payload = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes()
                           for a in (tables.L, tables.L_hat, tables.L_star))
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        with os.fdopen(fd, "wb") as fh:
            fh.write(_MAGIC + struct.pack("<I", len(header)) + header + payload)
        os.replace(tmp, path)

    def get_or_build(self, R: int, t_max: int):
        from prudent_walk.effective_walk import strip_tables_star

        path = self.path_for(R, t_max)
        if path.exists():
            try:
                cached = self._read(path, R, t_max)
                if cached is not None:
                    return cached
            except (ValueError, struct.error, UnicodeDecodeError) as e:
                warnings.warn(f"corrupt strip-table cache {path} ({e}); rebuilding")
        tables = strip_tables_star(R, t_max)
        self.builds += 1
        self._write(path, tables)
        return tables


def table_cache(R: int, t_max: int, directory: str | os.PathLike | None = None):
    return TableCache(directory).get_or_build(R, t_max)


# -- run configuration ----------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    command: str
    L: int | None = None
    n_draws: int | None = None
    seed: int = 0
    workers: int = 1
    tolerance: float = 1e-10
    t_max: int | None = None
    L_max: int = 14
    out: str | None = None

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        return cls(
            command=ns.command,
            L=getattr(ns, "L", None) or getattr(ns, "length", None),
            n_draws=getattr(ns, "n", None),
            seed=getattr(ns, "seed", 0),
            workers=getattr(ns, "workers", 1),
            tolerance=getattr(ns, "tolerance", 1e-10),
            t_max=getattr(ns, "t_max", None),
            L_max=getattr(ns, "L_max", 14),
            out=getattr(ns, "out", None),
        )


# -- subcommands ----------------------------------------------------------------

def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)


def cmd_count(ns) -> int:
    from prudent_walk import enumeration_oracle as eo
    from prudent_walk.effective_walk import excursion_count_table

    if ns.family == "omega":
        n = eo.enumerate_prudent(ns.L, False, ns.L_max).count
    elif ns.family == "omega_reduced":
        n = eo.enumerate_prudent(ns.L, True, ns.L_max).count
    elif ns.family == "omega_plus":
        n = eo.enumerate_two_sided_plus(ns.L, ns.L_max).count
    else:
        if ns.L < 1:
            raise DomainError("L must be >= 1")
        n = excursion_count_table(max(ns.L, 2))[ns.L]
    _emit(write_dataset({"family": ns.family, "L": ns.L, "count": str(n)}, ns.out), ns.out)
    return EXIT_OK


def cmd_excursions(ns) -> int:
    from prudent_walk.effective_walk import K_star_pmf, excursion_count_table

    counts = excursion_count_table(max(ns.t_max, 2))
    rows = [{"t": t, "count": str(counts[t]), "K": math.ldexp(counts[t], -t),
             "K_star": K_star_pmf(t)} for t in range(1, ns.t_max + 1)]
    text = write_dataset(rows, ns.out, "csv", ["t", "count", "K", "K_star"])
    _emit(text, ns.out)
    return EXIT_OK


def cmd_tilt(ns) -> int:
    from prudent_walk import effective_walk as ew
    from prudent_walk.scaling_analysis import covariance_B, speed_c

    tp = ew.lambda_star_solve(ns.tolerance, estimate_double_star=not ns.skip_double_star)
    g_hat = ew.G_of_lambda(tp.lambda_hat, check=False)
    k_star, k_tail = ew.K_hat(tp.lambda_star)
    rec = {
        "lambda_star": tp.lambda_star,
        "alpha_star": tp.alpha_star,
        "lambda_hat": tp.lambda_hat,
        "lambda_double_star": tp.lambda_double_star,
        "G_lambda_hat": g_hat,
        "G_lambda_hat_residual": g_hat - (0.5 + math.exp(-2 * tp.lambda_hat) / 8),
        "K_hat_lambda_star": k_star,
        "K_hat_tail_bound": k_tail,
        "c": speed_c(),
        "sigma": covariance_B().tolist(),
        "tolerance": ns.tolerance,
    }
    _emit(write_dataset(rec, ns.out), ns.out)
    return EXIT_OK


def cmd_sample(ns) -> int:
    from prudent_walk import samplers as S

    if ns.length < 1 or ns.n < 1:
        raise DomainError("--length and --n must be >= 1")
    rows = []
    sampler = S.ISSampler(ns.length) if ns.law == "uniform-is" else None
    for j in range(ns.n):
        rng = S.make_stream(ns.seed, 0, j)
        weight = 1.0
        if ns.law == "kinetic":
            path = S.sample_kinetic(ns.length, rng)
        elif ns.law == "two-sided":
            path = S.sample_two_sided_uniform(ns.length, rng)
        elif ns.law == "uniform-exact":
            path = S.sample_uniform_exact(ns.length, rng)
        else:
            wp = sampler.draw(rng)
            path, weight = wp.path, wp.weight
        rows.append({"sample_id": j, "steps": path.steps, "weight": float(weight)})
    text = write_dataset(rows, ns.out, "csv", ["sample_id", "steps", "weight"])
    _emit(text, ns.out)
    return EXIT_OK


def cmd_report(ns) -> int:
    from prudent_walk.scaling_analysis import build_report

    rep = build_report(L=ns.L, n_draws=ns.n, eps=ns.eps, seed=ns.seed,
                       workers=ns.workers, law=ns.law)
    _emit(write_dataset(rep.to_json_dict(), ns.out), ns.out)
    return EXIT_OK


def cmd_verify(ns) -> int:
    from prudent_walk.acceptance import run_all

    only = None
    if ns.only:
        only = [int(x) for x in ns.only.split(",")]
    results = run_all(only, seed=ns.seed)
    ok = all(r.passed for r in results)
    for r in results:
        print(r.line(), file=sys.stderr)
    rec = {"passed": ok, "checks": [r.as_dict() for r in results]}
    _emit(write_dataset(rec, ns.out), ns.out)
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prudent-walk",
                                description="Prudent walk excursion tools")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("count", help="exact family sizes by enumeration")
    c.add_argument("--family", choices=["omega", "omega_reduced", "omega_plus", "I"], default="omega")
    c.add_argument("--L", type=int, required=True)
    c.add_argument("--L-max", dest="L_max", type=int, default=14)
    c.add_argument("--out")
    c.set_defaults(func=cmd_count)

    e = sub.add_parser("excursions", help="excursion counts and kernels as CSV")
    e.add_argument("--t-max", dest="t_max", type=int, default=30)
    e.add_argument("--out")
    e.set_defaults(func=cmd_excursions)

    t = sub.add_parser("tilt", help="solve for the tilt constants")
    t.add_argument("--tolerance", type=float, default=1e-10)
    t.add_argument("--skip-double-star", action="store_true")
    t.add_argument("--out")
    t.set_defaults(func=cmd_tilt)

    s = sub.add_parser("sample", help="draw paths to CSV")
    s.add_argument("--law", choices=["kinetic", "two-sided", "uniform-is", "uniform-exact"],
                   required=True)
    s.add_argument("--length", type=int, required=True)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    r = sub.add_parser("report", help="scaling report as JSON")
    r.add_argument("--L", type=int, default=1000)
    r.add_argument("--n", type=int, default=2000)
    r.add_argument("--eps", type=float, default=0.1)
    r.add_argument("--law", choices=["uniform-is", "two-sided", "kinetic"], default="uniform-is")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)

    v = sub.add_parser("verify", help="run the acceptance checks")
    v.add_argument("--only", help="comma separated criterion numbers")
    v.add_argument("--seed", type=int, default=20240601)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return p


def run_command(argv: Iterable[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(None if argv is None else list(argv))
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        return ns.func(ns)
    except CapacityError as e:
        print(f"capacity error: {e}", file=sys.stderr)
        return EXIT_CAPACITY
    except (DomainError, ValueError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except PrudentWalkError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
