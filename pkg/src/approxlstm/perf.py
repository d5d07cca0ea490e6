"""Analytical roofline model of the factored-LSTM accelerator and its baseline.

The proposed architecture runs four gate units in parallel.  Each refinement
term streams ``u`` in tiles of ``tr`` and the non-zero part of ``v`` in tiles
of ``tc``; a shared elementwise stage of ``tr`` lanes finishes the step.  The
baseline is a dense row/column-tiled matrix-vector engine per gate.

All ratios of integers go through :class:`fractions.Fraction` so that the
float64 results are correctly rounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, InputError

REST_OPS_PER_ROW = 37
BYTES_PER_WORD = 4
PLATFORM_DIR = Path(__file__).with_name("platforms")
PLATFORM_KEYS = ("peak_gops", "mem_bandwidth_gbps", "clock_mhz", "onchip_kbytes", "multiplier_budget")


@dataclass(frozen=True)
class PlatformSpec:
    peak_gops: float
    mem_bandwidth_bytes_per_s: float
    clock_hz: float
    onchip_bytes: int
    multiplier_budget: int

    def __post_init__(self):
        for name in ("peak_gops", "mem_bandwidth_bytes_per_s", "clock_hz", "onchip_bytes", "multiplier_budget"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"platform field {name} must be positive, got {value}")

    @property
    def peak_ops_per_s(self) -> float:
        return self.peak_gops * 1e9

    def to_text(self) -> str:
        return (
            f"peak_gops = {self.peak_gops!r}\n"
            f"mem_bandwidth_gbps = {self.mem_bandwidth_bytes_per_s / 1e9!r}\n"
            f"clock_mhz = {self.clock_hz / 1e6!r}\n"
            f"onchip_kbytes = {self.onchip_bytes / 1024!r}\n"
            f"multiplier_budget = {self.multiplier_budget}\n"
        )


def parse_platform(text: str) -> PlatformSpec:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    ``mem_bandwidth_gbps`` is in gigabytes per second and ``onchip_kbytes`` in
    KiB.  Every key must appear exactly once.
    """
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key or not value:
            raise InputError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if key not in PLATFORM_KEYS:
            raise InputError(f"line {lineno}: unknown platform key {key!r}")
        if key in values:
            raise InputError(f"line {lineno}: duplicate platform key {key!r}")
        try:
            values[key] = float(value)
        except ValueError:
            raise InputError(f"line {lineno}: {key} is not a number: {value!r}") from None
    missing = [k for k in PLATFORM_KEYS if k not in values]
    if missing:
        raise InputError(f"platform file missing keys: {', '.join(missing)}")
    budget = values["multiplier_budget"]
    if budget != int(budget):
        raise InputError("multiplier_budget must be an integer")
    return PlatformSpec(
        peak_gops=values["peak_gops"],
        mem_bandwidth_bytes_per_s=values["mem_bandwidth_gbps"] * 1e9,
        clock_hz=values["clock_mhz"] * 1e6,
        onchip_bytes=int(round(values["onchip_kbytes"] * 1024)),
        multiplier_budget=int(budget),
    )


def load_platform(path) -> PlatformSpec:
    return parse_platform(Path(path).read_text(encoding="utf-8"))


def calibration_platform_path() -> Path:
    return PLATFORM_DIR / "zc706.txt"


def calibration_platform() -> PlatformSpec:
    """ZC706-like constants shipped with the package (see the file for sources)."""
    return load_platform(calibration_platform_path())


@dataclass(frozen=True)
class PerfEstimate:
    workload_ops: float
    ii_cycles: float
    perf_ops_per_cycle: float
    bytes_per_timestep: float

    @property
    def ctc(self) -> float:
        return self.workload_ops / self.bytes_per_timestep


@dataclass(frozen=True)
class DesignPoint:
    nz: int
    tr: int
    tc: int
    n_steps: int
    ii_cycles: float
    perf_ops_per_s: float
    ctc_ops_per_byte: float
    attainable_ops_per_s: float
    feasible: bool
    kind: str = "approx"

    @property
    def area(self) -> int:
        return self.tr * self.tc


def _check_positive(**kwargs) -> None:
    for name, value in kwargs.items():
        if value < 1:
            raise ConfigError(f"{name} must be >= 1, got {value}")


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _workload_int(R: int, nz: int, n_steps: int, rest: int) -> int:
    return 4 * n_steps * (2 * nz + 2 * R + 1) + rest * R


def _bytes_int(R: int, nz: int, n_steps: int) -> int:
    return BYTES_PER_WORD * (4 * n_steps * (nz + R + 1) + 2 * R)


def workload_ops(R: int, nz: int, n_steps: int, rest: int = REST_OPS_PER_ROW) -> float:
    """Operations per time-step: ``2nz + 2R + 1`` per gate per term, plus ``rest * R``."""
    _check_positive(R=R, nz=nz, n_steps=n_steps)
    return float(_workload_int(R, nz, n_steps, rest))


def memory_bytes(R: int, nz: int, n_steps: int) -> float:
    """Off-chip bytes per time-step: sigma, u and nz values per gate per term, plus h/c write-back."""
    _check_positive(R=R, nz=nz, n_steps=n_steps)
    return float(_bytes_int(R, nz, n_steps))


def _ii_int(R: int, nz: int, n_steps: int, tr: int, tc: int, rest: int) -> int:
    row_tiles = _ceil_div(R, tr)
    return max(n_steps * max(row_tiles, _ceil_div(nz, tc)), rest * row_tiles)


def initiation_interval(R: int, nz: int, n_steps: int, tr: int, tc: int, rest: int = REST_OPS_PER_ROW) -> float:
    """Cycles between successive time-steps.

    The slower of the gate stage (``n_steps`` terms, each bound by the dot
    product over ``nz/tc`` tiles or the ``R/tr`` multiplier tiles) and the
    elementwise stage (``rest * R/tr``).  Tile counts are rounded up.
    """
    _check_positive(R=R, nz=nz, n_steps=n_steps, tr=tr, tc=tc)
    if tr > R or tc > nz:
        raise ConfigError(f"tile ({tr}, {tc}) exceeds bounds (R={R}, nz={nz})")
    return float(_ii_int(R, nz, n_steps, tr, tc, rest))


def ctc(R: int, nz: int, n_steps: int, rest: int = REST_OPS_PER_ROW) -> float:
    """Operations per off-chip byte."""
    _check_positive(R=R, nz=nz, n_steps=n_steps)
    return float(Fraction(_workload_int(R, nz, n_steps, rest), _bytes_int(R, nz, n_steps)))


def estimate(R: int, nz: int, n_steps: int, tr: int, tc: int, rest: int = REST_OPS_PER_ROW) -> PerfEstimate:
    ii = initiation_interval(R, nz, n_steps, tr, tc, rest)
    work = _workload_int(R, nz, n_steps, rest)
    return PerfEstimate(
        workload_ops=float(work),
        ii_cycles=ii,
        perf_ops_per_cycle=float(Fraction(work, int(ii))),
        bytes_per_timestep=memory_bytes(R, nz, n_steps),
    )


def attainable(perf_ops_per_s: float, ctc_value: float, p: PlatformSpec) -> float:
    """Roofline: the modelled rate capped by the compute roof and the memory roof."""
    return min(perf_ops_per_s, p.peak_ops_per_s, ctc_value * p.mem_bandwidth_bytes_per_s)


def multipliers(tr: int, tc: int) -> int:
    # per gate: tc-wide dot unit + three tr-wide arrays; plus one tr-wide adder array
    return 4 * (tc + 3 * tr) + tr


def baseline_multipliers(tr: int, tc: int) -> int:
    # per gate: a tr x tc MAC grid + three tr-wide arrays; plus one tr-wide adder array
    return 4 * (tr * tc + 3 * tr) + tr


def onchip_bytes_needed(C: int) -> int:
    return BYTES_PER_WORD * C


def feasible(design: DesignPoint, R: int, C: int, p: PlatformSpec) -> bool:
    mults = baseline_multipliers(design.tr, design.tc) if design.kind == "baseline" else multipliers(design.tr, design.tc)
    return mults <= p.multiplier_budget and onchip_bytes_needed(C) <= p.onchip_bytes


def _perf_per_s(work: int, ii: int, clock_hz: float) -> float:
    return float(Fraction(work, ii)) * clock_hz


def design_point(
    p: PlatformSpec,
    R: int,
    C: int,
    nz: int,
    tr: int,
    tc: int,
    n_steps: int = 1,
    rest: int = REST_OPS_PER_ROW,
) -> DesignPoint:
    if nz > C:
        raise ConfigError(f"nz={nz} exceeds C={C}")
    ii = int(initiation_interval(R, nz, n_steps, tr, tc, rest))
    work = _workload_int(R, nz, n_steps, rest)
    intensity = ctc(R, nz, n_steps, rest)
    perf = _perf_per_s(work, ii, p.clock_hz)
    point = DesignPoint(
        nz=nz,
        tr=tr,
        tc=tc,
        n_steps=n_steps,
        ii_cycles=float(ii),
        perf_ops_per_s=perf,
        ctc_ops_per_byte=intensity,
        attainable_ops_per_s=attainable(perf, intensity, p),
        feasible=False,
    )
    return _with_feasibility(point, R, C, p)


def _with_feasibility(point: DesignPoint, R: int, C: int, p: PlatformSpec) -> DesignPoint:
    return replace(point, feasible=feasible(point, R, C, p))


def baseline_estimate(
    R: int,
    C: int,
    tr: int,
    tc: int,
    n_tiles_done: int | None = None,
    rest: int = REST_OPS_PER_ROW,
) -> PerfEstimate:
    """Dense tiled baseline, optionally stopped after ``n_tiles_done`` row tiles.

    Documented model, not taken from hardware: per time-step each of the four
    gates does ``2 R C`` operations and the elementwise stage ``rest * R``;
    ``4 R C`` weights are streamed plus the input and the h/c write-back.  The
    gate stage needs ``ceil(R/tr) * ceil(C/tc)`` cycles and the elementwise
    stage ``rest * ceil(R/tr)``.  A partial run of ``n`` row tiles covers
    ``rows = min(n * tr, R)`` rows and charges both stages for those tiles
    only, so ``n = ceil(R/tr)`` reproduces the full estimate.
    """
    _check_positive(R=R, C=C, tr=tr, tc=tc)
    if tr > R or tc > C:
        raise ConfigError(f"tile ({tr}, {tc}) exceeds bounds (R={R}, C={C})")
    total = _ceil_div(R, tr)
    n = total if n_tiles_done is None else n_tiles_done
    if not 1 <= n <= total:
        raise ConfigError(f"n_tiles_done={n} outside [1, {total}]")
    rows = min(n * tr, R)
    work = 4 * 2 * rows * C + rest * rows
    ii = max(n * _ceil_div(C, tc), rest * n)
    nbytes = BYTES_PER_WORD * (4 * rows * C + C + 2 * rows)
    return PerfEstimate(
        workload_ops=float(work),
        ii_cycles=float(ii),
        perf_ops_per_cycle=float(Fraction(work, ii)),
        bytes_per_timestep=float(nbytes),
    )


def baseline_design_point(
    p: PlatformSpec,
    R: int,
    C: int,
    tr: int,
    tc: int,
    rest: int = REST_OPS_PER_ROW,
) -> DesignPoint:
    est = baseline_estimate(R, C, tr, tc, rest=rest)
    work = int(est.workload_ops)
    intensity = float(Fraction(work, int(est.bytes_per_timestep)))
    perf = _perf_per_s(work, int(est.ii_cycles), p.clock_hz)
    point = DesignPoint(
        nz=C,
        tr=tr,
        tc=tc,
        n_steps=1,
        ii_cycles=est.ii_cycles,
        perf_ops_per_s=perf,
        ctc_ops_per_byte=intensity,
        attainable_ops_per_s=attainable(perf, intensity, p),
        feasible=False,
        kind="baseline",
    )
    return _with_feasibility(point, R, C, p)


def latency_seconds(ii_cycles: float, p: PlatformSpec) -> float:
    if not ii_cycles > 0:
        raise ConfigError(f"ii_cycles must be positive, got {ii_cycles}")
    return ii_cycles / p.clock_hz


# -- design-space exploration ------------------------------------------------


def tile_candidates(n: int, exhaustive: bool = False) -> np.ndarray:
    """Tile sizes worth trying along an axis of length ``n``.

    Only ``ceil(n / t)`` enters the cycle model while area grows with ``t``,
    so the smallest ``t`` of each ``ceil(n / t)`` class dominates its class.
    That leaves about ``2 * sqrt(n)`` sizes and loses no optimum.
    """
    t = np.arange(1, n + 1, dtype=np.int64)
    if exhaustive:
        return t
    q = -(-n // t)
    return np.unique(-(-n // q))


@dataclass(frozen=True)
class DseResult:
    best: tuple[DesignPoint, ...]
    infeasible_nz: tuple[int, ...]
    space: np.ndarray
    kind: str = "approx"

    def best_for(self, nz: int) -> DesignPoint | None:
        for d in self.best:
            if d.nz == nz:
                return d
        return None

    @property
    def no_feasible_design(self) -> bool:
        return not self.best

    def space_points(self) -> Iterable[DesignPoint]:
        for row in self.space:
            yield _row_to_point(row, self.kind)


SPACE_DTYPE = np.dtype(
    [
        ("nz", np.int64),
        ("tr", np.int64),
        ("tc", np.int64),
        ("n_steps", np.int64),
        ("ii_cycles", np.float64),
        ("perf_ops_per_s", np.float64),
        ("ctc_ops_per_byte", np.float64),
        ("attainable_ops_per_s", np.float64),
        ("feasible", np.bool_),
    ]
)


def _row_to_point(row, kind: str) -> DesignPoint:
    return DesignPoint(
        nz=int(row["nz"]),
        tr=int(row["tr"]),
        tc=int(row["tc"]),
        n_steps=int(row["n_steps"]),
        ii_cycles=float(row["ii_cycles"]),
        perf_ops_per_s=float(row["perf_ops_per_s"]),
        ctc_ops_per_byte=float(row["ctc_ops_per_byte"]),
        attainable_ops_per_s=float(row["attainable_ops_per_s"]),
        feasible=bool(row["feasible"]),
        kind=kind,
    )


def _select(table: np.ndarray) -> int | None:
    """Index of the best feasible row: max attainable, then min area, then min tr."""
    idx = np.flatnonzero(table["feasible"])
    if idx.size == 0:
        return None
    sub = table[idx]
    order = np.lexsort((sub["tr"], sub["tr"] * sub["tc"], -sub["attainable_ops_per_s"]))
    return int(idx[order[0]])


def _fill_table(
    table: np.ndarray,
    work: int,
    ii: np.ndarray,
    intensity: float,
    mults: np.ndarray,
    onchip_ok: bool,
    p: PlatformSpec,
) -> None:
    # Fraction(work, ii) rounded to float equals work / ii in IEEE division
    perf = (float(work) / ii.astype(np.float64)) * p.clock_hz
    table["ii_cycles"] = ii
    table["perf_ops_per_s"] = perf
    table["ctc_ops_per_byte"] = intensity
    table["attainable_ops_per_s"] = np.minimum(
        np.minimum(perf, p.peak_ops_per_s), intensity * p.mem_bandwidth_bytes_per_s
    )
    table["feasible"] = (mults <= p.multiplier_budget) & onchip_ok


def dse(
    p: PlatformSpec,
    R: int,
    C: int,
    nz_list: Sequence[int],
    n_steps: int = 1,
    exhaustive: bool = False,
    rest: int = REST_OPS_PER_ROW,
) -> DseResult:
    """Best ``(tr, tc)`` per ``nz`` for the factored architecture.

    ``tr`` ranges over ``1..R`` and ``tc`` over ``1..nz``; by default only the
    dominant tile sizes from :func:`tile_candidates` are evaluated, which
    yields the same optimum as the full grid.  ``n_steps`` is fixed during
    the search.
    """
    if not nz_list:
        raise InputError("nz_list must not be empty")
    _check_positive(R=R, C=C, n_steps=n_steps)
    onchip_ok = onchip_bytes_needed(C) <= p.onchip_bytes
    trs = tile_candidates(R, exhaustive)
    tables = []
    best = []
    infeasible = []
    for nz in nz_list:
        _check_positive(nz=nz)
        if nz > C:
            raise ConfigError(f"nz={nz} exceeds C={C}")
        tcs = tile_candidates(nz, exhaustive)
        tr_grid, tc_grid = (a.ravel() for a in np.meshgrid(trs, tcs, indexing="ij"))
        table = np.zeros(tr_grid.size, dtype=SPACE_DTYPE)
        table["nz"] = nz
        table["tr"] = tr_grid
        table["tc"] = tc_grid
        table["n_steps"] = n_steps
        row_tiles = -(-R // tr_grid)
        ii = np.maximum(n_steps * np.maximum(row_tiles, -(-nz // tc_grid)), rest * row_tiles)
        _fill_table(
            table,
            _workload_int(R, nz, n_steps, rest),
            ii,
            ctc(R, nz, n_steps, rest),
            4 * (tc_grid + 3 * tr_grid) + tr_grid,
            onchip_ok,
            p,
        )
        pick = _select(table)
        if pick is None:
            infeasible.append(nz)
        else:
            best.append(_row_to_point(table[pick], "approx"))
        tables.append(table)
    return DseResult(tuple(best), tuple(infeasible), np.concatenate(tables))


def dse_baseline(
    p: PlatformSpec,
    R: int,
    C: int,
    exhaustive: bool = False,
    rest: int = REST_OPS_PER_ROW,
) -> DseResult:
    """Best ``(tr, tc)`` for the dense baseline, same selection rule as :func:`dse`."""
    _check_positive(R=R, C=C)
    trs = tile_candidates(R, exhaustive)
    tcs = tile_candidates(C, exhaustive)
    tr_grid, tc_grid = (a.ravel() for a in np.meshgrid(trs, tcs, indexing="ij"))
    table = np.zeros(tr_grid.size, dtype=SPACE_DTYPE)
    table["nz"] = C
    table["tr"] = tr_grid
    table["tc"] = tc_grid
    table["n_steps"] = 1
    row_tiles = -(-R // tr_grid)
    ii = np.maximum(row_tiles * -(-C // tc_grid), rest * row_tiles)
    work = 4 * 2 * R * C + rest * R
    nbytes = BYTES_PER_WORD * (4 * R * C + C + 2 * R)
    _fill_table(
        table,
        work,
        ii,
        float(Fraction(work, nbytes)),
        4 * (tr_grid * tc_grid + 3 * tr_grid) + tr_grid,
        onchip_bytes_needed(C) <= p.onchip_bytes,
        p,
    )
    pick = _select(table)
    best = () if pick is None else (_row_to_point(table[pick], "baseline"),)
    infeasible = (C,) if pick is None else ()
    return DseResult(best, infeasible, table, kind="baseline")
