"""Command line for simulations, published-table reproduction, sweeps, and profiling.

Exit codes: 0 success; 1 invalid configuration or malformed input data;
2 computed results deviate from the published tables or the exact reference;
3 missing or unreadable files. Relative output paths resolve under
$UNARYGEMM_OUTDIR when it is set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bundle import BundleError, TensorBundle
from .costmodel import (
    CSV_HEADER,
    CalibrationTable,
    check_published_cells,
    cost_report,
    render_cost_csv,
    render_cost_markdown,
    sparsity_energy_series,
)
from .engines import Design, SequenceConfig, run_design, run_ugemm
from .matrix import BitWidth, GemmShape, Matrix, exact_gemm, random_operands
from .sparsity import TileSpec, msb_truncate, profile_bundle

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DEVIATION = 2
EXIT_IO = 3

OUTDIR_ENV = "UNARYGEMM_OUTDIR"

SIM_FIELDS = (
    "design", "width", "shape", "seed", "checksum",
    "cycles", "wc_cycles", "max_transitions_per_wire", "wall_ms",
)
SWEEP_FIELDS = ("checksum", "cycles_sim", "max_transitions_per_wire") + tuple(CSV_HEADER.split(","))


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors by default; 2 is reserved for
    # result deviations here, so remap usage problems to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _resolve_out(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(OUTDIR_ENV)
    if base and not p.is_absolute():
        return Path(base) / p
    return p


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def _parse_shape(text: str) -> GemmShape:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise ValueError(f"shape must look like 16x16x16, got {text!r}")
    try:
        m, n, p = (int(v) for v in parts)
    except ValueError:
        raise ValueError(f"shape must be three integers, got {text!r}") from None
    return GemmShape(m, n, p)


def _parse_b_spa(entries: list[str] | None) -> dict[int, float]:
    out: dict[int, float] = {}
    for entry in entries or []:
        if "=" not in entry:
            raise ValueError(f"--b-spa expects WIDTH=FRACTION, got {entry!r}")
        w_str, v_str = entry.split("=", 1)
        try:
            w, v = int(w_str), float(v_str)
        except ValueError:
            raise ValueError(f"--b-spa expects WIDTH=FRACTION, got {entry!r}") from None
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"b_spa must be in [0, 1], got {v}")
        out[w] = v
    return out


def _parse_designs(values: list[str] | None) -> list[Design]:
    if not values or "all" in values:
        return list(Design)
    return [Design.parse(v) for v in values]


def _rows_to_text(rows: list[dict], fields: tuple[str, ...], fmt: str) -> str:
    if fmt == "jsonl":
        return "\n".join(json.dumps(r, sort_keys=True) for r in rows) + "\n"
    cells = [[str(r[f]) for f in fields] for r in rows]
    if fmt == "markdown":
        lines = ["| " + " | ".join(fields) + " |", "|" + "---|" * len(fields)]
        lines += ["| " + " | ".join(c) + " |" for c in cells]
        return "\n".join(lines) + "\n"
    return "\n".join([",".join(fields)] + [",".join(c) for c in cells]) + "\n"


def _load_operand(
    bundle_path: str, layer: str, width: BitWidth, truncate: bool
) -> Matrix:
    bundle = TensorBundle.load(bundle_path)
    arr = bundle.tensor(layer)
    if arr.ndim != 2:
        raise ValueError(f"layer {layer!r} is {arr.ndim}-D; operands must be 2-D")
    rec = bundle.layer(layer)
    source_bits = 8 if rec.dtype == "int8" else 32
    if source_bits > width.bits:
        if not truncate:
            raise ValueError(
                f"layer {layer!r} is {rec.dtype}; pass --truncate to use it at "
                f"{width.bits} bits"
            )
        arr = msb_truncate(arr.astype(np.int32 if source_bits == 32 else np.int8), width)
    return Matrix(arr, width)


@dataclass(frozen=True)
class RunConfig:
    """One simulate invocation resolved from flags."""

    designs: list[Design]
    widths: list[int]
    shape: GemmShape | None
    seed: int
    rotation: int
    stream_operand: str
    bundle: str | None
    layer: str | None
    layer_b: str | None
    truncate: bool


def _operands_for(cfg: RunConfig, width: BitWidth) -> tuple[Matrix, Matrix, GemmShape]:
    if cfg.bundle and cfg.layer:
        a = _load_operand(cfg.bundle, cfg.layer, width, cfg.truncate)
        if cfg.layer_b:
            b = _load_operand(cfg.bundle, cfg.layer_b, width, cfg.truncate)
        else:
            shape = GemmShape(a.rows, a.cols, cfg.shape.p if cfg.shape else a.cols)
            _, b = random_operands(shape, width, cfg.seed)
        if a.cols != b.rows:
            raise ValueError(
                f"operand shapes {a.rows}x{a.cols} and {b.rows}x{b.cols} do not conform"
            )
        return a, b, GemmShape(a.rows, a.cols, b.cols)
    shape = cfg.shape or GemmShape(16, 16, 16)
    a, b = random_operands(shape, width, cfg.seed)
    return a, b, shape


def _simulate_cell(
    design: Design, a: Matrix, b: Matrix, rotation: int, stream_operand: str
):
    """Run one engine; returns (EngineResult, oracle_ok, wall_ms)."""
    start = time.perf_counter()
    if stream_operand == "b":
        # Stream the other operand by running on the transposed problem.
        swapped = run_design(
            design, b.transposed(), a.transposed(),
            **({"schedule": SequenceConfig(rotation=rotation)} if design is Design.UGEMM else {}),
        )
        result = swapped.result.transposed()
        res = type(swapped)(
            result=result,
            cycles=swapped.cycles,
            wc_cycles=swapped.wc_cycles,
            max_transitions_per_wire=swapped.max_transitions_per_wire,
            design=design,
        )
    elif design is Design.UGEMM:
        res = run_ugemm(a, b, SequenceConfig(rotation=rotation))
    else:
        res = run_design(design, a, b)
    wall_ms = (time.perf_counter() - start) * 1e3
    oracle_ok = design is Design.UGEMM or res.result == exact_gemm(a, b)
    return res, oracle_ok, wall_ms


def cmd_simulate(args) -> int:
    cfg = RunConfig(
        designs=_parse_designs(args.design),
        widths=args.width or [8],
        shape=_parse_shape(args.shape) if args.shape else None,
        seed=args.seed,
        rotation=args.rotation,
        stream_operand=args.stream_operand,
        bundle=args.bundle,
        layer=args.layer,
        layer_b=args.layer_b,
        truncate=args.truncate,
    )
    rows = []
    for width_bits in cfg.widths:
        width = BitWidth(width_bits)
        a, b, shape = _operands_for(cfg, width)
        for design in cfg.designs:
            res, oracle_ok, wall_ms = _simulate_cell(
                design, a, b, cfg.rotation, cfg.stream_operand
            )
            if not oracle_ok:
                sys.stderr.write(
                    f"error: {design.value} result deviates from the exact reference "
                    f"(width={width_bits}, shape={shape.m}x{shape.n_common}x{shape.p})\n"
                )
                return EXIT_DEVIATION
            rows.append({
                "design": design.value,
                "width": width_bits,
                "shape": f"{shape.m}x{shape.n_common}x{shape.p}",
                "seed": cfg.seed,
                "checksum": res.result.checksum(),
                "cycles": res.cycles,
                "wc_cycles": res.wc_cycles,
                "max_transitions_per_wire": res.max_transitions_per_wire,
                "wall_ms": f"{wall_ms:.3f}",
            })
    _emit(_rows_to_text(rows, SIM_FIELDS, args.format), _resolve_out(args.out))
    return EXIT_OK


def _sweep_cell(design: Design, width_bits: int, size: int, seed: int,
                table: CalibrationTable, b_spa: dict[int, float], extrapolate: bool) -> dict:
    width = BitWidth(width_bits)
    a, b = random_operands(GemmShape(size, size, size), width, seed)
    res, oracle_ok, _ = _simulate_cell(design, a, b, rotation=0, stream_operand="a")
    if not oracle_ok:
        raise RuntimeError(f"{design.value} deviates from the exact reference at w={width_bits}")
    row = {
        "checksum": res.result.checksum(),
        "cycles_sim": res.cycles,
        "max_transitions_per_wire": res.max_transitions_per_wire,
        "design": design.value,
        "width": width_bits,
        "array": size,
    }
    cost_fields = CSV_HEADER.split(",")[3:]
    if table.has(design, width_bits, size) or extrapolate:
        rep = cost_report(table, design, width_bits, size, b_spa.get(width_bits), extrapolate)
        vals = rep.csv_row().split(",")
        for field, val in zip(CSV_HEADER.split(","), vals):
            row[field] = val
        row["design"] = design.value + (" ESTIMATE" if rep.estimated else "")
    else:
        for field in cost_fields:
            row[field] = ""
    return row


def cmd_sweep(args) -> int:
    table = CalibrationTable.load(args.calibration)
    b_spa = _parse_b_spa(args.b_spa)
    designs = _parse_designs(args.design)
    widths = [int(w) for w in args.widths.split(",")]
    sizes = [int(s) for s in args.sizes.split(",")]
    grid = [(d, w, s) for d in sorted(designs, key=lambda d: d.value) for w in sorted(widths) for s in sorted(sizes)]
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(
                lambda cell: _sweep_cell(*cell, args.seed, table, b_spa, args.extrapolate), grid
            ))
    else:
        rows = [_sweep_cell(d, w, s, args.seed, table, b_spa, args.extrapolate) for d, w, s in grid]
    rows.sort(key=lambda r: (r["design"], int(r["width"]), int(r["array"])))
    _emit(_rows_to_text(rows, SWEEP_FIELDS, args.format), _resolve_out(args.out))
    return EXIT_OK


def _grid_markdown(checks, metric: str, widths_arrays: list[tuple[int, int]]) -> str:
    """Configs as rows, designs as columns, mirroring the published layout."""
    designs = [Design.UGEMM, Design.TUGEMM_SERIAL, Design.TUBGEMM, Design.BGEMM]
    by_key = {(c.design, c.width, c.array): c for c in checks if c.metric == metric}
    lines = [
        "| width | array | " + " | ".join(d.value for d in designs) + " |",
        "|" + "---|" * (2 + len(designs)),
    ]
    for w, arr in widths_arrays:
        cells = [f"{by_key[(d, w, arr)].computed:.2f}" for d in designs]
        lines.append(f"| {w} | {arr}x{arr} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def cmd_report_tables(args) -> int:
    table = CalibrationTable.load(args.calibration)
    checks = check_published_cells(table)
    outdir = _resolve_out(args.outdir or ".") or Path(".")
    outdir.mkdir(parents=True, exist_ok=True)

    header = "metric,design,width,array,computed,published,rel_err_pct"
    small = [c for c in checks if c.array in (16, 32)]
    accel = [c for c in checks if c.array in (64, 128)]
    written = []
    for name, group in (("wc_energy_grid", small), ("accel_energy_adp", accel)):
        lines = [header] + [
            f"{c.metric},{c.design.value},{c.width},{c.array},"
            f"{c.computed:.6g},{c.published:.6g},{c.rel_error * 100:.4f}"
            for c in group
        ]
        path = outdir / f"{name}.csv"
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
        if args.format == "markdown":
            md_path = outdir / f"{name}.md"
            if name == "wc_energy_grid":
                md = _grid_markdown(checks, "energy_nJ", [(w, a) for w in (2, 4, 8) for a in (16, 32)])
            else:
                md = _grid_markdown(checks, "energy_nJ", [(4, 64), (4, 128)])
                md += "\n" + _grid_markdown(checks, "adp_mm2ns", [(4, 64), (4, 128)])
            md_path.write_text(md)
            written.append(md_path)

    if args.figure == "energy32":
        b_spa = _parse_b_spa(args.b_spa)
        for w in (2, 4, 8):
            if w not in b_spa:
                raise ValueError(f"--figure energy32 needs --b-spa {w}=FRACTION")
        series = sparsity_energy_series(table, b_spa, array=32)
        path = outdir / "fig_energy32.csv"
        path.write_text(render_cost_csv(series))
        written.append(path)
    elif args.figure == "areapower32":
        lines = ["design,width,array,area_um2,power_mW"]
        for design, w, arr in table.keys():
            if arr != 32:
                continue
            e = table.entry(design, w, arr)
            lines.append(f"{design.value},{w},{arr},{e.area_um2:.6g},{e.power_mw:.6g}")
        path = outdir / "fig_areapower32.csv"
        path.write_text("\n".join(lines) + "\n")
        written.append(path)

    worst = max(c.rel_error for c in checks)
    for path in written:
        print(f"wrote {path}")
    print(f"{len(checks)} cells checked; worst relative error {worst * 100:.4f}%")
    if worst > 0.005:
        bad = [c for c in checks if c.rel_error > 0.005]
        for c in bad:
            sys.stderr.write(
                f"deviation: {c.metric} {c.design.value} w={c.width} {c.array}x{c.array}: "
                f"computed {c.computed:.6g} vs published {c.published:.6g}\n"
            )
        return EXIT_DEVIATION
    return EXIT_OK


def cmd_profile(args) -> int:
    bundle = TensorBundle.load(args.bundle)
    width = BitWidth(args.width)
    tiles = None
    if args.tiles == "feature_map":
        tiles = TileSpec("per_feature_map")
    elif args.tiles == "block":
        rows, cols = (int(v) for v in args.block.lower().split("x"))
        tiles = TileSpec("block", rows, cols)
    report = profile_bundle(
        bundle, width, tiles, allow_truncate=args.truncate, weighted=args.weighted
    )
    text = report.to_markdown() if args.format == "markdown" else report.to_csv()
    _emit(text, _resolve_out(args.out))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="unarygemm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run one or more engines and report cycle counts")
    sim.add_argument("--design", action="append",
                     choices=[d.value for d in Design] + ["all"])
    sim.add_argument("--width", action="append", type=int)
    sim.add_argument("--shape", help="GEMM size as MxNxP, e.g. 16x16x16")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--rotation", type=int, default=0,
                     help="global stream rotation for the rate-coded design")
    sim.add_argument("--stream-operand", choices=["a", "b"], default="a",
                     help="which operand the temporal designs stream")
    sim.add_argument("--bundle", help="take operand A from this bundle directory")
    sim.add_argument("--layer", help="bundle layer for operand A")
    sim.add_argument("--layer-b", help="bundle layer for operand B")
    sim.add_argument("--truncate", action="store_true",
                     help="MSB-truncate wider bundle layers to the target width")
    sim.add_argument("--format", choices=["csv", "markdown", "jsonl"], default="csv")
    sim.add_argument("--out")
    sim.set_defaults(func=cmd_simulate)

    swp = sub.add_parser("sweep", help="full design/width/size grid with cost columns")
    swp.add_argument("--design", action="append",
                     choices=[d.value for d in Design] + ["all"])
    swp.add_argument("--widths", default="2,4,8")
    swp.add_argument("--sizes", default="16,32")
    swp.add_argument("--seed", type=int, default=0)
    swp.add_argument("--jobs", type=int, default=1)
    swp.add_argument("--b-spa", action="append", metavar="WIDTH=FRACTION")
    swp.add_argument("--calibration")
    swp.add_argument("--extrapolate", action="store_true",
                     help="estimate missing calibration cells (labeled ESTIMATE)")
    swp.add_argument("--format", choices=["csv", "markdown", "jsonl"], default="csv")
    swp.add_argument("--out")
    swp.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report-tables",
                         help="recompute the published energy/ADP tables and compare")
    rep.add_argument("--calibration")
    rep.add_argument("--figure", choices=["energy32", "areapower32"])
    rep.add_argument("--b-spa", action="append", metavar="WIDTH=FRACTION")
    rep.add_argument("--outdir")
    rep.add_argument("--format", choices=["csv", "markdown"], default="csv")
    rep.set_defaults(func=cmd_report_tables)

    prof = sub.add_parser("profile", help="word/bit sparsity of a tensor bundle")
    prof.add_argument("--bundle", required=True)
    prof.add_argument("--width", type=int, required=True)
    prof.add_argument("--tiles", choices=["auto", "feature_map", "block"], default="auto")
    prof.add_argument("--block", default="32x32")
    prof.add_argument("--truncate", action="store_true")
    prof.add_argument("--weighted", action="store_true",
                      help="weight the model aggregate by element count")
    prof.add_argument("--format", choices=["csv", "markdown"], default="csv")
    prof.add_argument("--out")
    prof.set_defaults(func=cmd_profile)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except BundleError as exc:
        # Missing files inside a bundle are I/O problems; bad content is usage.
        msg = str(exc)
        code = EXIT_IO if "missing" in msg or "no manifest" in msg else EXIT_USAGE
        sys.stderr.write(f"error: {msg}\n")
        return code
    except (ValueError, KeyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
