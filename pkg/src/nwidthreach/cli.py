"""Command-line front end: config parsing, orchestration, CSV and figures.

Configs are flat, case-sensitive ``key = value`` lines with ``#`` comments.
Every run writes a canonical, bit-exact ``report.csv`` (17 significant
digits, ``.`` decimal separator, LF line endings), a ``meta.txt`` echoing
the fully resolved configuration as reparseable lines plus model constants
as comments, and, unless ``plots = false``, rendered figures alongside.
Exit status: 0 when every asserted inequality held, 1 on a failed
assertion (named on stderr), 2 on a config or usage error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, fields
from itertools import product
from typing import Optional

import numpy as np

from .bounds import schrodinger_width_bound
from .models import BeamSpec, SchrodingerSpec, beam_model, schrodinger_model
from .operators import (
    BoundedSampleSet,
    OperatorSpec,
    image_inclusion_check,
    split_transport_check,
    transport_check,
)
from .reachset import BASIS_FAMILIES, ControlSet, compare_report
from .subspaces import AffineSubspace
from .volterra import SeriesDivergenceError, tail_bound
from .widths import SnapshotCloud, width_profile

SUBCOMMANDS = ("beam", "schrodinger", "synthetic", "widths")
REPORT_HEADER = (
    "n,constructive_residual,affine_width_est,linear_width_est,"
    "bound,affine_term,constant_term,valid"
)
PROFILE_HEADER = "n,affine_width_est,linear_width_est"
SUMMARY_HEADER = "check,trials,passes"


class ConfigError(ValueError):
    """Raised for malformed, unknown, or out-of-range config entries."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration for one subcommand."""

    subcommand: str
    seed: int = 0
    plots: bool = True
    # beam model
    L: Optional[float] = None
    a: Optional[float] = None
    z1: Optional[float] = None
    z2: Optional[float] = None
    # schrodinger model
    mu: Optional[str] = None
    mu_l2: Optional[float] = None
    quad_nodes: Optional[int] = None
    # shared model/control keys
    N_modes: Optional[tuple] = None
    T: Optional[tuple] = None
    cells: Optional[int] = None
    basis: Optional[str] = None
    m: Optional[int] = None
    r: Optional[float] = None
    sample_count: Optional[int] = None
    n_max: Optional[int] = None
    method: Optional[str] = None
    series_order: Optional[int] = None
    series_nodes: Optional[int] = None
    # widths subcommand
    points: Optional[tuple] = None
    # synthetic subcommand
    trials: Optional[int] = None
    dim: Optional[int] = None

    def echo_lines(self) -> list:
        """Reparseable ``key = value`` lines of every resolved setting."""
        out = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            out.append(f"{f.name} = {_render(value)}")
        return out


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(",".join(format(x, ".17g") for x in row) for row in value)
        return ",".join(
            format(x, ".17g") if isinstance(x, float) else str(x) for x in value
        )
    return str(value)


def _parse_bool(raw: str) -> bool:
    if raw == "true":
        return True
    if raw == "false":
        return False
    raise ValueError(f"expected true or false, got {raw!r}")


def _parse_int(raw: str) -> int:
    return int(raw, 10)


def _parse_float(raw: str) -> float:
    value = float(raw)
    if not np.isfinite(value):
        raise ValueError("value must be finite")
    return value


def _parse_float_list(raw: str) -> tuple:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(_parse_float(s) for s in items)


def _parse_int_list(raw: str) -> tuple:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(_parse_int(s) for s in items)


def _parse_points(raw: str) -> tuple:
    rows = [s.strip() for s in raw.split(";") if s.strip()]
    if not rows:
        raise ValueError("empty point list")
    parsed = tuple(tuple(_parse_float(x) for x in row.split(",")) for row in rows)
    width = len(parsed[0])
    if width == 0 or any(len(row) != width for row in parsed):
        raise ValueError("points must share one coordinate count")
    return parsed


def _parse_str(raw: str) -> str:
    return raw


_PARSERS = {
    "subcommand": _parse_str,
    "seed": _parse_int,
    "plots": _parse_bool,
    "L": _parse_float,
    "a": _parse_float,
    "z1": _parse_float,
    "z2": _parse_float,
    "mu": _parse_str,
    "mu_l2": _parse_float,
    "quad_nodes": _parse_int,
    "N_modes": _parse_int_list,
    "T": _parse_float_list,
    "cells": _parse_int,
    "basis": _parse_str,
    "m": _parse_int,
    "r": _parse_float,
    "sample_count": _parse_int,
    "n_max": _parse_int,
    "method": _parse_str,
    "series_order": _parse_int,
    "series_nodes": _parse_int,
    "points": _parse_points,
    "trials": _parse_int,
    "dim": _parse_int,
}

_CONTROL_KEYS = (
    "T", "cells", "basis", "m", "r", "sample_count",
    "n_max", "method", "series_order", "series_nodes",
)
_ALLOWED = {
    "beam": ("subcommand", "seed", "plots", "L", "a", "z1", "z2", "N_modes")
    + _CONTROL_KEYS,
    "schrodinger": (
        "subcommand", "seed", "plots", "mu", "mu_l2", "quad_nodes", "N_modes",
    )
    + _CONTROL_KEYS,
    "widths": ("subcommand", "seed", "plots", "points", "n_max"),
    "synthetic": ("subcommand", "seed", "plots", "trials", "dim"),
}


def _raw_entries(text: str) -> dict:
    entries = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: missing key in {line!r}")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = (raw, lineno)
    return entries


def parse_config(text: str, subcommand: Optional[str] = None) -> RunConfig:
    """Parse and fully resolve a flat key=value config.

    ``subcommand`` (from the command line) must agree with a ``subcommand``
    key in the text when both are present.  Unknown keys, malformed lines,
    type mismatches, and range violations all raise `ConfigError` naming
    the offending line.
    """
    entries = _raw_entries(text)
    if "subcommand" in entries:
        file_sub, lineno = entries["subcommand"]
        if file_sub not in SUBCOMMANDS:
            raise ConfigError(
                f"line {lineno}: unknown subcommand {file_sub!r}; "
                f"choose from {', '.join(SUBCOMMANDS)}"
            )
        if subcommand is not None and file_sub != subcommand:
            raise ConfigError(
                f"line {lineno}: config subcommand {file_sub!r} does not match "
                f"command-line subcommand {subcommand!r}"
            )
        subcommand = file_sub
    if subcommand is None:
        raise ConfigError("no subcommand given on the command line or in the config")

    allowed = _ALLOWED[subcommand]
    values = {"subcommand": subcommand}
    for key, (raw, lineno) in entries.items():
        if key == "subcommand":
            continue
        if key not in allowed:
            raise ConfigError(
                f"line {lineno}: unknown key {key!r} for subcommand {subcommand}"
            )
        try:
            values[key] = _PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc

    try:
        return _resolve(subcommand, values)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def _require(condition: bool, message: str):
    if not condition:
        raise ConfigError(message)


def _resolve(subcommand: str, values: dict) -> RunConfig:
    v = dict(values)
    v.setdefault("seed", 0)
    v.setdefault("plots", True)
    _require(v["seed"] >= 0, "seed must be nonnegative")

    if subcommand == "beam":
        v.setdefault("L", math.pi)
        v.setdefault("a", 1.0)
        v.setdefault("z1", 0.0)
        v.setdefault("z2", v["L"])
        v.setdefault("N_modes", (8,))
        _require(v["L"] > 0, "L must be positive")
        _require(v["a"] > 0, "a must be positive")
        _require(
            0.0 <= v["z1"] < v["z2"] <= v["L"],
            "actuator segment must satisfy 0 <= z1 < z2 <= L",
        )
        _resolve_control(v, default_T=0.25)
    elif subcommand == "schrodinger":
        v.setdefault("mu", "z")
        v.setdefault("quad_nodes", 200)
        v.setdefault("N_modes", (8,))
        _require(v["mu"] == "z", "config mu supports only the builtin 'z'")
        _require(v["quad_nodes"] >= 2, "quad_nodes must be at least 2")
        if "mu_l2" in v:
            _require(v["mu_l2"] > 0, "mu_l2 must be positive")
        _resolve_control(v, default_T=0.1)
    elif subcommand == "widths":
        _require("points" in v, "widths subcommand needs a points key")
        ambient = len(v["points"][0])
        v.setdefault("n_max", ambient)
        _require(v["n_max"] >= 0, "n_max must be nonnegative")
    else:
        v.setdefault("trials", 200)
        v.setdefault("dim", 4)
        _require(v["trials"] >= 1, "trials must be at least 1")
        _require(v["dim"] >= 2, "dim must be at least 2")

    if subcommand in ("beam", "schrodinger"):
        _require(
            all(n >= 1 for n in v["N_modes"]),
            "N_modes entries must be at least 1",
        )
    return RunConfig(**v)


def _resolve_control(v: dict, default_T: float):
    v.setdefault("T", (default_T,))
    v.setdefault("cells", 16)
    v.setdefault("basis", "legendre")
    v.setdefault("m", 2)
    v.setdefault("r", 1.0)
    v.setdefault("sample_count", 32)
    v.setdefault("n_max", v["m"] + 2)
    v.setdefault("method", "oracle")
    v.setdefault("series_order", 8)
    v.setdefault("series_nodes", 32)
    _require(all(t > 0 for t in v["T"]), "T entries must be positive")
    _require(v["cells"] >= 1, "cells must be at least 1")
    _require(
        v["basis"] in BASIS_FAMILIES,
        f"basis must be one of {', '.join(BASIS_FAMILIES)}",
    )
    _require(v["m"] >= 1, "m must be at least 1")
    _require(v["m"] <= v["cells"], "m cannot exceed cells")
    _require(v["r"] >= 0, "r must be nonnegative")
    _require(v["sample_count"] >= 0, "sample_count must be nonnegative")
    _require(v["n_max"] >= 0, "n_max must be nonnegative")
    _require(v["method"] in ("oracle", "series"), "method must be oracle or series")
    _require(v["series_order"] >= 1, "series_order must be at least 1")
    _require(v["series_nodes"] >= 2, "series_nodes must be at least 2")


def _fmt(x) -> str:
    if x is None:
        return "nan"
    return format(float(x), ".17g")


def _write_lines(path: str, lines: list):
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _report_csv_lines(report) -> list:
    lines = [REPORT_HEADER]
    for row in report.rows:
        b = row.bound
        lines.append(
            ",".join(
                [
                    str(row.n),
                    _fmt(row.constructive_residual),
                    _fmt(row.affine_width_est),
                    _fmt(row.linear_width_est),
                    _fmt(b.value),
                    _fmt(b.affine_term),
                    _fmt(b.constant_term),
                    "true" if b.valid else "false",
                ]
            )
        )
    return lines


def _combo_tag(N: int, T: float) -> str:
    return f"N{N}_T{T:g}"


def _out_names(out_dir: str, combos: list) -> dict:
    if len(combos) == 1:
        return {combos[0]: (os.path.join(out_dir, "report.csv"),
                            os.path.join(out_dir, "report.png"))}
    names = {}
    for combo in combos:
        tag = _combo_tag(*combo)
        names[combo] = (
            os.path.join(out_dir, f"report_{tag}.csv"),
            os.path.join(out_dir, f"report_{tag}.png"),
        )
    return names


def _series_budget_note(model, config: RunConfig, T: float, tag: str) -> str:
    if config.method != "series":
        return f"# series budget [{tag}]: none needed, oracle endpoints are exact per-cell exponentials"
    q = model.M * model.B_norm * math.sqrt(T) * config.r
    if q >= 1.0:
        return f"# series budget [{tag}]: unavailable, series gate q = {q:.6g} >= 1"
    budget = tail_bound(model, 1.0, T, config.r, k_start=config.series_order + 1)
    return (
        f"# series budget [{tag}]: truncation after order {config.series_order} "
        f"certified within {format(budget, '.17g')}"
    )


def _run_comparisons(config: RunConfig, out_dir: str, streams) -> int:
    from .plotting import save_comparison_figure

    out, err = streams
    combos = list(product(config.N_modes, config.T))
    names = _out_names(out_dir, combos)
    meta_notes = []
    for N, T in combos:
        tag = _combo_tag(N, T)
        if config.subcommand == "beam":
            spec = BeamSpec(L=config.L, a=config.a, z1=config.z1, z2=config.z2,
                            N_modes=N)
            model = beam_model(spec)
            bound_kind = "beam" if spec.full_segment else "bilinear"
            constants = {"a": config.a}
        else:
            spec = SchrodingerSpec(mu=config.mu, N_modes=N, mu_l2=config.mu_l2,
                                   quad_nodes=config.quad_nodes)
            model = schrodinger_model(spec)
            bound_kind = "bilinear"
            constants = {}
        x0 = np.zeros(model.dim, dtype=model.A_matrix.dtype)
        x0[0] = 1.0
        K = ControlSet(
            horizon=T, cells=config.cells, basis_family=config.basis,
            m=config.m, r=config.r, sample_count=config.sample_count,
            seed=config.seed,
        )
        q = model.M * model.B_norm * math.sqrt(T) * config.r
        if q >= 1.0:
            print(
                f"warning [{tag}]: bound hypothesis fails "
                f"(q = {q:.6g} >= 1); rows are flagged valid=false",
                file=err,
            )
        report = compare_report(
            model, x0, K, n_max=config.n_max, method=config.method,
            series_order=config.series_order, nodes=config.series_nodes,
            bound_kind=bound_kind, bound_constants=constants,
        )
        csv_path, fig_path = names[(N, T)]
        _write_lines(csv_path, _report_csv_lines(report))
        if config.plots:
            save_comparison_figure(report, fig_path)
        meta_notes.append(
            f"# constants [{tag}]: M = {_fmt(model.M)}, omega = {_fmt(model.omega)}, "
            f"B_norm = {_fmt(model.B_norm)}, q = {_fmt(q)}, bound = {bound_kind}"
        )
        if config.subcommand == "beam":
            meta_notes.append(
                f"# constants [{tag}]: 1/a = {_fmt(1.0 / config.a)}"
                + ("" if spec.full_segment else
                   " (actuator segment is partial; bound uses the truncated coupling norm)")
            )
        else:
            gate_mu = spec.mu_l2 * math.sqrt(T) * config.r
            ideal = schrodinger_width_bound(spec.mu_l2, 1.0, T, config.r, 0.0)
            ideal_txt = _fmt(ideal.value) if ideal.valid else "nan"
            meta_notes.append(
                f"# constants [{tag}]: mu_l2 = {_fmt(spec.mu_l2)}, "
                f"mu gate = {_fmt(gate_mu)}, idealized constant-term bound = {ideal_txt}; "
                "the bound column uses the truncated coupling norm"
            )
        meta_notes.append(_series_budget_note(model, config, T, tag))
        held = sum(1 for row in report.rows if row.bound.valid)
        print(
            f"{os.path.basename(csv_path)}: {len(report.rows)} rows, "
            f"{held} valid bound rows, assertions held",
            file=out,
        )
    _write_meta(config, out_dir, meta_notes)
    return 0


def _run_widths(config: RunConfig, out_dir: str, streams) -> int:
    from .plotting import save_profile_figure

    out, _ = streams
    cloud = SnapshotCloud(np.array(config.points, dtype=np.float64),
                          label="inline points")
    profile = width_profile(cloud, config.n_max)
    lines = [PROFILE_HEADER]
    for n, lin, aff in zip(
        profile.ns, profile.linear_estimates, profile.affine_estimates
    ):
        lines.append(f"{n},{_fmt(aff)},{_fmt(lin)}")
    csv_path = os.path.join(out_dir, "report.csv")
    _write_lines(csv_path, lines)
    if config.plots:
        save_profile_figure(profile, os.path.join(out_dir, "report.png"),
                            label=f"width profile of {cloud.count} points")
    _write_meta(config, out_dir, [
        f"# cloud: {cloud.count} points in dimension {cloud.ambient_dim}, "
        f"radius {_fmt(cloud.radius)}"
    ])
    print(f"report.csv: width profile rows 0..{config.n_max}", file=out)
    return 0


def _ball_points(rng, count: int, dim: int, radius: float) -> np.ndarray:
    g = rng.standard_normal((count, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    radii = radius * rng.uniform(size=count) ** (1.0 / dim)
    return g * radii[:, None]


def _run_synthetic(config: RunConfig, out_dir: str, streams) -> int:
    from .plotting import save_check_summary_figure

    out, err = streams
    rng = np.random.default_rng(config.seed)
    dim = config.dim
    counts = {"image_inclusion": 0, "transport": 0, "split_transport": 0}
    for _ in range(config.trials):
        radius = float(rng.uniform(0.5, 2.0))
        pts = _ball_points(rng, 30, dim, radius)
        direction = rng.standard_normal(dim)
        direction /= np.linalg.norm(direction)
        eps = float(rng.uniform(0.05, 0.3))
        spec = OperatorSpec(
            ell0=rng.standard_normal(dim),
            pi0=rng.standard_normal((dim, dim)) * 0.8,
            f=lambda x, _d=direction, _e=eps: _e * float(x @ x) * _d,
            f_sup=eps * radius**2,
        )
        k = BoundedSampleSet(samples=pts, radius_bound=radius)
        w = AffineSubspace.from_span(
            np.zeros(dim), rng.standard_normal((dim, 2))
        )
        r1 = float(np.max(np.linalg.norm(
            pts - (pts @ w.basis) @ w.basis.T, axis=1
        )))
        counts["image_inclusion"] += bool(
            image_inclusion_check(spec, w, k, r1 + 1e-9).ok
        )
        counts["transport"] += bool(transport_check(spec, k, 2).ok)
        counts["split_transport"] += bool(split_transport_check(spec, k, 2, 1).ok)
    lines = [SUMMARY_HEADER]
    for name in counts:
        lines.append(f"{name},{config.trials},{counts[name]}")
    _write_lines(os.path.join(out_dir, "report.csv"), lines)
    if config.plots:
        save_check_summary_figure(
            counts, config.trials, os.path.join(out_dir, "report.png")
        )
    _write_meta(config, out_dir, [
        f"# checks: {len(counts)} families, {config.trials} randomized trials each"
    ])
    failures = {k: config.trials - v for k, v in counts.items() if v < config.trials}
    for name, misses in failures.items():
        print(f"assertion failed: {name} check failed {misses} of "
              f"{config.trials} trials", file=err)
    print(
        "report.csv: "
        + ", ".join(f"{k} {v}/{config.trials}" for k, v in counts.items()),
        file=out,
    )
    return 1 if failures else 0


def _write_meta(config: RunConfig, out_dir: str, notes: list):
    lines = ["# resolved configuration"]
    lines += config.echo_lines()
    lines += notes
    _write_lines(os.path.join(out_dir, "meta.txt"), lines)


def run(config: RunConfig, out_dir: str = ".", streams=None) -> int:
    """Execute a resolved config; returns the process exit status."""
    streams = streams or (sys.stdout, sys.stderr)
    os.makedirs(out_dir, exist_ok=True)
    try:
        if config.subcommand in ("beam", "schrodinger"):
            return _run_comparisons(config, out_dir, streams)
        if config.subcommand == "widths":
            return _run_widths(config, out_dir, streams)
        return _run_synthetic(config, out_dir, streams)
    except SeriesDivergenceError as exc:
        print(f"error: {exc}", file=streams[1])
        return 2
    except ValueError as exc:
        print(f"assertion failed: {exc}", file=streams[1])
        return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nwidth-reach",
        description=(
            "Empirical width estimates and closed-form bounds for "
            "reachable sets of bilinear systems."
        ),
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="path to a flat key=value config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, help="override the config seed")
    args = parser.parse_args(argv)

    text = ""
    if args.config is not None:
        try:
            with open(args.config, "r") as fh:
                text = fh.read()
        except OSError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
    try:
        config = parse_config(text, subcommand=args.subcommand)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        if args.seed < 0:
            print("config error: --seed must be nonnegative", file=sys.stderr)
            return 2
        config = RunConfig(**{**config.__dict__, "seed": args.seed})
    return run(config, out_dir=args.out)


if __name__ == "__main__":
    sys.exit(main())
