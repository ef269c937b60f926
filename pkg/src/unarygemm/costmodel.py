"""Analytical latency / energy / area-delay model on top of synthesis calibration data.

Calibrated area and power are stored per (design, width, array size) in a JSON
file (um^2 / mW, 400 MHz clock). Latency follows the worst-case cycle formulas;
energy is power * latency (mW * ns = pJ, scaled to nJ); temporal designs may
additionally be derated by a bit-sparsity factor.
"""

from __future__ import annotations

import importlib.resources
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .engines import Design, worst_case_cycles
from .matrix import BitWidth

__all__ = [
    "CalibrationEntry",
    "CalibrationTable",
    "CostReport",
    "PUBLISHED_WC_ENERGY_NJ",
    "PUBLISHED_TPU_ENERGY_NJ",
    "PUBLISHED_TPU_ADP",
    "check_published_cells",
    "cost_report",
    "dynamic_latency",
    "render_cost_csv",
    "render_cost_markdown",
    "sparsity_energy_series",
]

# Designs that stream data-dependent temporal pulse trains and therefore
# finish early on sparse operands. The other two always run worst case.
TEMPORAL_DESIGNS = frozenset({Design.TUGEMM_SERIAL, Design.TUBGEMM})

CSV_HEADER = (
    "design,width,array,area_um2,power_mW,wc_cycles,wc_latency_ns,"
    "energy_nJ,adp_mm2ns,b_spa,dyn_latency_ns,dyn_energy_nJ"
)


@dataclass(frozen=True)
class CalibrationEntry:
    design: Design
    width: int
    array: int
    area_um2: float
    power_mw: float
    source: str
    estimated: bool = False


class CalibrationTable:
    """Synthesis calibration shared by all cost queries.

    Missing (design, width, array) combinations are explicit absences: queries
    refuse them unless extrapolation is requested, and extrapolated numbers are
    labeled as estimates everywhere they surface.
    """

    def __init__(self, clock_period_ns: float, entries: list[CalibrationEntry]):
        if clock_period_ns <= 0:
            raise ValueError("clock period must be positive")
        self.clock_period_ns = clock_period_ns
        self._entries: dict[tuple[Design, int, int], CalibrationEntry] = {}
        for e in entries:
            key = (e.design, e.width, e.array)
            if key in self._entries:
                raise ValueError(f"duplicate calibration entry for {key}")
            self._entries[key] = e

    @classmethod
    def load(cls, path: str | Path | None = None) -> "CalibrationTable":
        """Load from a JSON file; defaults to the packaged calibration data."""
        if path is None:
            text = (
                importlib.resources.files("unarygemm")
                .joinpath("data/calibration.json")
                .read_text()
            )
        else:
            text = Path(path).read_text()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"calibration file is not valid JSON: {exc}") from exc
        try:
            entries = [
                CalibrationEntry(
                    design=Design.parse(e["design"]),
                    width=int(e["width"]),
                    array=int(e["array"]),
                    area_um2=float(e["area_um2"]),
                    power_mw=float(e["power_mW"]),
                    source=str(e["source"]),
                )
                for e in raw["entries"]
            ]
            return cls(float(raw["clock_period_ns"]), entries)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"calibration file missing required field: {exc}") from exc

    def keys(self) -> list[tuple[Design, int, int]]:
        return sorted(self._entries, key=lambda k: (k[0].value, k[1], k[2]))

    def has(self, design: Design, width: int, array: int) -> bool:
        return (design, width, array) in self._entries

    def entry(self, design: Design, width: int, array: int, extrapolate: bool = False) -> CalibrationEntry:
        key = (design, width, array)
        if key in self._entries:
            return self._entries[key]
        if not extrapolate:
            raise KeyError(
                f"no calibration for design={design.value}, width={width}, array={array}; "
                "pass extrapolate=True to estimate across the bitwidth axis"
            )
        return self._extrapolate(design, width, array)

    def _extrapolate(self, design: Design, width: int, array: int) -> CalibrationEntry:
        # Log-linear fit in log2(width) across the calibrated widths of the
        # same (design, array); plain least squares on the two log axes.
        points = [
            (w, e) for (d, w, arr), e in self._entries.items() if d is design and arr == array
        ]
        if len(points) < 2:
            raise KeyError(
                f"cannot extrapolate design={design.value}, array={array}: "
                f"need >= 2 calibrated widths, have {len(points)}"
            )
        xs = [math.log2(w) for w, _ in points]
        area = self._fit_log(xs, [math.log2(e.area_um2) for _, e in points], math.log2(width))
        power = self._fit_log(xs, [math.log2(e.power_mw) for _, e in points], math.log2(width))
        return CalibrationEntry(design, width, array, area, power, "ESTIMATE", estimated=True)

    @staticmethod
    def _fit_log(xs: list[float], ys: list[float], x: float) -> float:
        n = len(xs)
        mx, my = sum(xs) / n, sum(ys) / n
        sxx = sum((xi - mx) ** 2 for xi in xs)
        slope = sum((xi - mx) * (yi - my) for xi, yi in zip(xs, ys)) / sxx if sxx else 0.0
        return 2.0 ** (my + slope * (x - mx))

    def wc_latency_ns(self, design: Design, width: int, array: int) -> float:
        cycles = worst_case_cycles(design, BitWidth(width), array)
        return cycles * self.clock_period_ns

    def energy_nj(
        self, design: Design, width: int, array: int, latency_ns: float | None = None,
        extrapolate: bool = False,
    ) -> float:
        e = self.entry(design, width, array, extrapolate)
        lat = self.wc_latency_ns(design, width, array) if latency_ns is None else latency_ns
        return e.power_mw * lat * 1e-3  # mW * ns = pJ

    def adp_mm2_ns(self, design: Design, width: int, array: int, extrapolate: bool = False) -> float:
        e = self.entry(design, width, array, extrapolate)
        return (e.area_um2 * 1e-6) * self.wc_latency_ns(design, width, array)


def dynamic_latency(wc_latency: float, b_spa: float) -> float:
    """Sparsity-derated latency: wc * (1 - b_spa)."""
    if not 0.0 <= b_spa <= 1.0:
        raise ValueError(f"b_spa must be in [0, 1], got {b_spa}")
    return wc_latency * (1.0 - b_spa)


@dataclass(frozen=True)
class CostReport:
    """One costed configuration; dyn_* equal the worst case unless the design is temporal."""

    design: Design
    width: int
    array: int
    area_um2: float
    power_mw: float
    wc_cycles: int
    wc_latency_ns: float
    energy_nj: float
    adp_mm2_ns: float
    b_spa: float | None
    dyn_latency_ns: float
    dyn_energy_nj: float
    estimated: bool = False

    def csv_row(self) -> str:
        b = "" if self.b_spa is None else f"{self.b_spa:.6g}"
        tag = " ESTIMATE" if self.estimated else ""
        return (
            f"{self.design.value}{tag},{self.width},{self.array},{self.area_um2:.6g},"
            f"{self.power_mw:.6g},{self.wc_cycles},{self.wc_latency_ns:.6g},"
            f"{self.energy_nj:.6g},{self.adp_mm2_ns:.6g},{b},"
            f"{self.dyn_latency_ns:.6g},{self.dyn_energy_nj:.6g}"
        )


def cost_report(
    table: CalibrationTable,
    design: Design,
    width: int,
    array: int,
    b_spa: float | None = None,
    extrapolate: bool = False,
) -> CostReport:
    """Cost one configuration; b_spa derates only the temporal designs."""
    entry = table.entry(design, width, array, extrapolate)
    wc_cycles = worst_case_cycles(design, BitWidth(width), array)
    wc_lat = wc_cycles * table.clock_period_ns
    energy = entry.power_mw * wc_lat * 1e-3
    adp = (entry.area_um2 * 1e-6) * wc_lat
    if b_spa is not None and design in TEMPORAL_DESIGNS:
        dyn_lat = dynamic_latency(wc_lat, b_spa)
    else:
        if b_spa is not None:
            dynamic_latency(wc_lat, b_spa)  # still validate the range
        dyn_lat = wc_lat
    return CostReport(
        design=design,
        width=width,
        array=array,
        area_um2=entry.area_um2,
        power_mw=entry.power_mw,
        wc_cycles=wc_cycles,
        wc_latency_ns=wc_lat,
        energy_nj=energy,
        adp_mm2_ns=adp,
        b_spa=b_spa,
        dyn_latency_ns=dyn_lat,
        dyn_energy_nj=entry.power_mw * dyn_lat * 1e-3,
        estimated=entry.estimated,
    )


def sparsity_energy_series(
    table: CalibrationTable,
    b_spa_by_width: dict[int, float],
    array: int = 32,
    widths: tuple[int, ...] = (2, 4, 8),
) -> list[CostReport]:
    """Worst-case and sparsity-adjusted energy for all designs at one array size."""
    rows = []
    for width in widths:
        if width not in b_spa_by_width:
            raise ValueError(f"missing b_spa for width {width}")
        for design in Design:
            rows.append(cost_report(table, design, width, array, b_spa_by_width[width]))
    rows.sort(key=lambda r: (r.design.value, r.width, r.array))
    return rows


def render_cost_csv(rows: list[CostReport]) -> str:
    return "\n".join([CSV_HEADER] + [r.csv_row() for r in rows]) + "\n"


def render_cost_markdown(rows: list[CostReport]) -> str:
    head = CSV_HEADER.split(",")
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for r in rows:
        lines.append("| " + " | ".join(r.csv_row().split(",")) + " |")
    return "\n".join(lines) + "\n"


# Published worst-case energy per (design, width, array), nJ. These are the
# datasheet values the model must reproduce to within 0.5% per cell.
PUBLISHED_WC_ENERGY_NJ: dict[tuple[Design, int, int], float] = {
    (Design.UGEMM, 2, 16): 0.42, (Design.TUGEMM_SERIAL, 2, 16): 0.78,
    (Design.TUBGEMM, 2, 16): 0.20, (Design.BGEMM, 2, 16): 0.31,
    (Design.UGEMM, 2, 32): 3.24, (Design.TUGEMM_SERIAL, 2, 32): 5.86,
    (Design.TUBGEMM, 2, 32): 1.58, (Design.BGEMM, 2, 32): 2.47,
    (Design.UGEMM, 4, 16): 2.56, (Design.TUGEMM_SERIAL, 4, 16): 23.55,
    (Design.TUBGEMM, 4, 16): 1.58, (Design.BGEMM, 4, 16): 0.90,
    (Design.UGEMM, 4, 32): 20.54, (Design.TUGEMM_SERIAL, 4, 32): 190.46,
    (Design.TUBGEMM, 4, 32): 12.51, (Design.BGEMM, 4, 32): 7.06,
    (Design.UGEMM, 8, 16): 64.51, (Design.TUGEMM_SERIAL, 8, 16): 12910.59,
    (Design.TUBGEMM, 8, 16): 66.82, (Design.BGEMM, 8, 16): 2.91,
    (Design.UGEMM, 8, 32): 502.02, (Design.TUGEMM_SERIAL, 8, 32): 97910.78,
    (Design.TUBGEMM, 8, 32): 465.41, (Design.BGEMM, 8, 32): 25.70,
}

# Accelerator-scale 4-bit arrays: published energy (nJ) and area-delay (mm^2 * ns).
PUBLISHED_TPU_ENERGY_NJ: dict[tuple[Design, int, int], float] = {
    (Design.UGEMM, 4, 64): 164.61, (Design.TUGEMM_SERIAL, 4, 64): 1490.12,
    (Design.TUBGEMM, 4, 64): 98.83, (Design.BGEMM, 4, 64): 79.48,
    (Design.UGEMM, 4, 128): 1318.92, (Design.TUGEMM_SERIAL, 4, 128): 11863.65,
    (Design.TUBGEMM, 4, 128): 794.78, (Design.BGEMM, 4, 128): 894.34,
}

PUBLISHED_TPU_ADP: dict[tuple[Design, int, int], float] = {
    (Design.UGEMM, 4, 64): 635.6, (Design.TUGEMM_SERIAL, 4, 64): 4710.4,
    (Design.TUBGEMM, 4, 64): 377.6, (Design.BGEMM, 4, 64): 174.4,
    (Design.UGEMM, 4, 128): 5609.6, (Design.TUGEMM_SERIAL, 4, 128): 37478.4,
    (Design.TUBGEMM, 4, 128): 3084.8, (Design.BGEMM, 4, 128): 2124.8,
}


@dataclass(frozen=True)
class CellCheck:
    metric: str
    design: Design
    width: int
    array: int
    computed: float
    published: float
    decimals: int  # print precision of the published cell

    @property
    def rel_error(self) -> float:
        # Published cells are printed at fixed decimals; compare at that
        # precision so the check measures the model, not the table's rounding.
        return abs(round(self.computed, self.decimals) - self.published) / abs(self.published)


def check_published_cells(table: CalibrationTable) -> list[CellCheck]:
    """Recompute every published energy/ADP cell from calibration; sorted, complete."""
    groups = (
        ("energy_nJ", PUBLISHED_WC_ENERGY_NJ, table.energy_nj, 2),
        ("energy_nJ", PUBLISHED_TPU_ENERGY_NJ, table.energy_nj, 2),
        ("adp_mm2ns", PUBLISHED_TPU_ADP, table.adp_mm2_ns, 1),
    )
    checks: list[CellCheck] = []
    for metric, published, compute, decimals in groups:
        for (design, width, array), pub in sorted(
            published.items(), key=lambda kv: (kv[0][0].value, kv[0][1], kv[0][2])
        ):
            checks.append(
                CellCheck(metric, design, width, array, compute(design, width, array), pub, decimals)
            )
    return checks
