"""Command-line driver.

Each subcommand runs one pipeline stage and writes its outputs plus a
metadata.json (tool version, config hash) into --out.  Outputs are
deterministic: identical config, identical bytes.

Exit codes: 0 success, 2 invalid arguments, 3 resource guard tripped,
4 numerical failure.  Failures print exactly one line to stderr of the
form "error:<slug>:<message>".
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, fileio
from .analysis import (
    AnalysisError,
    landscape,
    landscape_bound_check,
    landscape_closed_forms,
    localization_report,
    regime_threshold,
)
from .extension import (
    alternating_boundary_data,
    decay_profile,
    energy_split,
    harmonic_extend,
    random_boundary_data,
)
from .lattice import LevelGuardError, MeshInvariantError, build_mesh, validate
from .operators import KINDS, assemble, energy_sequence
from .solver import DenseGuardError, NumericalError, eig_full, eig_partial

COMMANDS = ("mesh", "assemble", "eig", "count", "landscape", "localize",
            "extend", "energy-seq")
PATTERNS = ("alternating", "random")
FUNCTIONS = {
    "one": lambda x, y: 1.0,
    "linear-x": lambda x, y: x,
    "linear-y": lambda x, y: y,
    "product": lambda x, y: x * y,
    "quadratic": lambda x, y: x * x + y * y,
}


class CLIUsageError(Exception):
    """Raised instead of argparse's SystemExit so errors stay one line."""


@dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand needs; round-trips losslessly through JSON."""

    command: str
    level: int
    kind: str = "full"
    c0: float = 1.0
    solver: str = "dense"
    k: int | None = None
    which: str = "smallest"
    eps: float = 0.01
    out: str = "."
    seed: int = 0
    data: str | None = None
    pattern: str = "alternating"
    index: int | None = None
    function: str = "linear-x"
    n_max: int | None = None
    part: str = "total"

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise CLIUsageError(f"unknown command {self.command!r}")
        if self.level < 0:
            raise CLIUsageError(f"level must be >= 0, got {self.level}")
        if self.kind not in KINDS:
            raise CLIUsageError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.c0 > 0:
            raise CLIUsageError(f"c0 must be positive, got {self.c0}")
        if self.solver not in ("dense", "iterative"):
            raise CLIUsageError(f"solver must be dense or iterative, got {self.solver!r}")
        if self.k is not None and self.k < 1:
            raise CLIUsageError(f"k must be >= 1, got {self.k}")
        if self.which not in ("smallest", "largest"):
            raise CLIUsageError(f"which must be smallest or largest, got {self.which!r}")
        if not self.eps > 0:
            raise CLIUsageError(f"eps must be positive, got {self.eps}")
        if self.seed < 0:
            raise CLIUsageError(f"seed must be >= 0, got {self.seed}")
        if self.pattern not in PATTERNS:
            raise CLIUsageError(f"pattern must be one of {PATTERNS}, got {self.pattern!r}")
        if self.index is not None and self.index < 1:
            raise CLIUsageError(f"index must be >= 1, got {self.index}")
        if self.function not in FUNCTIONS:
            raise CLIUsageError(f"function must be one of {sorted(FUNCTIONS)}, "
                                f"got {self.function!r}")
        if self.n_max is not None and self.n_max < 0:
            raise CLIUsageError(f"n-max must be >= 0, got {self.n_max}")
        if self.part not in ("total", "interior", "boundary"):
            raise CLIUsageError(f"part must be total, interior or boundary, "
                                f"got {self.part!r}")

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        return cls(**data)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise CLIUsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="snowlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"snowlab {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command")

    def common(sp: argparse.ArgumentParser, kind: bool = True) -> None:
        sp.add_argument("--level", type=int, required=True)
        sp.add_argument("--c0", type=float, default=1.0)
        sp.add_argument("--out", type=str, default=".")
        if kind:
            sp.add_argument("--kind", choices=KINDS, default="full")

    sp = sub.add_parser("mesh", help="build, validate and export a mesh")
    common(sp, kind=False)

    sp = sub.add_parser("assemble", help="export stiffness matrix and mass vector")
    common(sp)

    sp = sub.add_parser("eig", help="solve and export a spectrum")
    common(sp)
    sp.add_argument("--solver", choices=("dense", "iterative"), default="dense")
    sp.add_argument("--k", type=int, default=None,
                    help="number of eigenpairs (iterative; default 6)")
    sp.add_argument("--which", choices=("smallest", "largest"), default="smallest")
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("count", help="counting functions and regime report "
                                      "(dense, full + dirichlet)")
    common(sp, kind=False)

    sp = sub.add_parser("landscape", help="landscape vector, closed forms, "
                                          "eigenvector bound check")
    common(sp)

    sp = sub.add_parser("localize", help="localization table and one contour CSV")
    common(sp, kind=False)
    sp.add_argument("--eps", type=float, default=0.01)
    sp.add_argument("--index", type=int, default=None,
                    help="1-based mode for the contour export (default: highest)")

    sp = sub.add_parser("extend", help="harmonic extension of boundary data")
    common(sp, kind=False)
    sp.add_argument("--data", type=str, default=None,
                    help="boundary CSV; omit to use --pattern")
    sp.add_argument("--pattern", choices=PATTERNS, default="alternating")
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("energy-seq", help="graph energy of a test function "
                                           "across levels 0..n-max")
    common(sp, kind=False)
    sp.add_argument("--function", choices=sorted(FUNCTIONS), default="linear-x")
    sp.add_argument("--n-max", dest="n_max", type=int, default=None)
    sp.add_argument("--part", choices=("total", "interior", "boundary"),
                    default="total")
    return p


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.command is None:
        raise CLIUsageError("a subcommand is required")
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    given = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    return RunConfig(**given)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _spectrum(cfg: RunConfig, op):
    if cfg.solver == "iterative":
        k = cfg.k if cfg.k is not None else 6
        return eig_partial(op, k, which=cfg.which, seed=cfg.seed)
    return eig_full(op)


def _cmd_mesh(cfg: RunConfig) -> None:
    mesh = build_mesh(cfg.level)
    report = validate(mesh)
    if not report.ok:
        failed = [c.name for c in report.failures()]
        raise MeshInvariantError(f"built mesh fails validation: {failed}")
    out = _outdir(cfg)
    fileio.write_mesh_json(mesh, out / "mesh.json")
    print(f"mesh level={mesh.level} vertices={mesh.num_vertices} "
          f"boundary={mesh.num_boundary_vertices} "
          f"interior={mesh.num_interior_vertices} "
          f"triangles={len(mesh.triangles)} edges={len(mesh.edges)}")


def _cmd_assemble(cfg: RunConfig) -> None:
    mesh = build_mesh(cfg.level)
    op = assemble(mesh, cfg.kind, cfg.c0)
    out = _outdir(cfg)
    fileio.write_matrix_market(op.S, out / "stiffness.mtx")
    fileio.write_mass_csv(op.m, out / "mass.csv")
    print(f"operator kind={op.kind} level={op.level} dimension={op.dimension} "
          f"nnz={op.S.nnz}")


def _cmd_eig(cfg: RunConfig) -> None:
    mesh = build_mesh(cfg.level)
    op = assemble(mesh, cfg.kind, cfg.c0)
    spec = _spectrum(cfg, op)
    out = _outdir(cfg)
    fileio.write_eigenvalues_csv(spec, out / "eigenvalues.csv")
    fileio.write_eigenvectors(spec, out / "eigenvectors.snwv")
    w = spec.eigenvalues
    print(f"spectrum kind={spec.kind} level={spec.level} count={spec.count} "
          f"min={float(w[0])!r} max={float(w[-1])!r} solver={spec.solver}")


def _cmd_count(cfg: RunConfig) -> None:
    mesh = build_mesh(cfg.level)
    spec_full = eig_full(assemble(mesh, "full", cfg.c0))
    spec_dir = eig_full(assemble(mesh, "dirichlet", cfg.c0))
    report = regime_threshold(spec_full, spec_dir)
    out = _outdir(cfg)
    fileio.write_counting_csv(spec_full, out / "counting_full.csv")
    fileio.write_counting_csv(spec_dir, out / "counting_dirichlet.csv")
    fileio.write_regime_json(report, out / "regime.json")
    print(f"regime lambda_star={report.lambda_star!r} "
          f"index_star={report.index_star} "
          f"nearest={report.nearest_eigenvalue!r}")


def _cmd_landscape(cfg: RunConfig) -> None:
    mesh = build_mesh(cfg.level)
    op = assemble(mesh, cfg.kind, cfg.c0)
    vec = landscape(op)
    spec = eig_full(op)
    check = landscape_bound_check(spec, vec)
    report: dict = {"kind": cfg.kind, "level": cfg.level, "c0": cfg.c0}
    if cfg.kind == "full":
        forms = landscape_closed_forms(cfg.level, cfg.c0)
        deg = mesh.degrees()
        interior = vec.values[~mesh.boundary_flags]
        tips = vec.values[mesh.boundary_flags & (deg == 2)]
        bases = vec.values[mesh.boundary_flags & (deg == 5)]
        report["closed_forms"] = forms
        report["matches_closed_forms"] = {
            "interior": bool(np.all(interior == forms["interior"])),
            "boundary_tip": bool(np.all(tips == forms["boundary_tip"])),
            "boundary_base": bool(np.all(bases == forms["boundary_base"])),
        }
    report["bound_check"] = {
        "ok": check.ok,
        "skipped_indices": list(check.skipped),  # already 1-based
        "violations": [dataclasses.asdict(v) for v in check.violations],
    }
    out = _outdir(cfg)
    fileio.write_landscape_csv(vec, out / "landscape.csv")
    fileio.write_json(report, out / "landscape_report.json")
    print(f"landscape kind={cfg.kind} level={cfg.level} "
          f"bound_ok={check.ok} violations={len(check.violations)}")


def _cmd_localize(cfg: RunConfig) -> None:
    mesh = build_mesh(cfg.level)
    op = assemble(mesh, "full", cfg.c0)
    spec = eig_full(op)
    report = localization_report(spec, mesh, eps=cfg.eps)
    index = cfg.index if cfg.index is not None else spec.count
    if index > spec.count:
        raise CLIUsageError(f"index {index} exceeds spectrum size {spec.count}")
    out = _outdir(cfg)
    fileio.write_localization_csv(report, out / "localization.csv")
    fileio.write_contour_csv(mesh, spec.eigenvectors[:, index - 1], cfg.eps,
                             out / "contour.csv")
    bmf = report.boundary_mass_fraction
    print(f"localization level={cfg.level} modes={spec.count} "
          f"contour_index={index} bmf_last={float(bmf[-1])!r}")


def _cmd_extend(cfg: RunConfig) -> None:
    mesh = build_mesh(cfg.level)
    if cfg.data is not None:
        path = Path(cfg.data)
        if not path.exists():
            raise CLIUsageError(f"boundary data file not found: {path}")
        values = fileio.read_boundary_csv(path)
        if values.shape != (mesh.num_boundary_vertices,):
            raise CLIUsageError(
                f"boundary data has {values.shape[0]} rows, mesh needs "
                f"{mesh.num_boundary_vertices}")
    elif cfg.pattern == "alternating":
        values = alternating_boundary_data(mesh).values
    else:
        values = random_boundary_data(mesh, seed=cfg.seed).values
    u = harmonic_extend(mesh, values, c0=cfg.c0)
    e_int, e_bd = energy_split(mesh, u, cfg.c0)
    profile = decay_profile(mesh, u)
    out = _outdir(cfg)
    fileio.write_boundary_csv(values, out / "boundary.csv")
    fileio.write_vectors(u, {"kind": "extension", "level": cfg.level,
                             "c0": cfg.c0, "normalization": "none",
                             "sign_rule": "none"}, out / "extension.snwv")
    fileio.write_decay_csv(profile, out / "decay.csv")
    fileio.write_json({"level": cfg.level, "c0": cfg.c0,
                       "energy_interior": e_int, "energy_boundary": e_bd,
                       "min": float(u.min()), "max": float(u.max())},
                      out / "extension_report.json")
    print(f"extension level={cfg.level} energy_interior={e_int!r} "
          f"range=[{float(u.min())!r}, {float(u.max())!r}]")


def _cmd_energy_seq(cfg: RunConfig) -> None:
    n_max = cfg.n_max if cfg.n_max is not None else cfg.level
    values = energy_sequence(FUNCTIONS[cfg.function], n_max, c0=cfg.c0,
                             part=cfg.part)
    out = _outdir(cfg)
    fileio.write_energy_csv(values, out / "energy_seq.csv")
    tail = ", ".join(repr(v) for v in values[-3:])
    print(f"energy-seq function={cfg.function} part={cfg.part} "
          f"n_max={n_max} tail=[{tail}]")


_DISPATCH = {
    "mesh": _cmd_mesh,
    "assemble": _cmd_assemble,
    "eig": _cmd_eig,
    "count": _cmd_count,
    "landscape": _cmd_landscape,
    "localize": _cmd_localize,
    "extend": _cmd_extend,
    "energy-seq": _cmd_energy_seq,
}


def _fail(slug: str, exc: BaseException, code: int) -> int:
    message = " ".join(str(exc).split()) or exc.__class__.__name__
    print(f"error:{slug}:{message}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _config_from_args(args)
    except CLIUsageError as exc:
        return _fail("usage", exc, 2)
    try:
        _DISPATCH[cfg.command](cfg)
        fileio.write_metadata(cfg.to_json(), _outdir(cfg) / "metadata.json")
    except CLIUsageError as exc:
        return _fail("usage", exc, 2)
    except (ValueError, OSError, fileio.FormatError) as exc:
        return _fail("invalid-input", exc, 2)
    except (LevelGuardError, DenseGuardError) as exc:
        return _fail("resource-guard", exc, 3)
    except (NumericalError, MeshInvariantError, AnalysisError) as exc:
        return _fail("numerical", exc, 4)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
