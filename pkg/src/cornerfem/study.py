"""Convergence studies: config files, the level loop, tables and verdicts."""
from __future__ import annotations

import configparser
import io
import logging
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import errors as em
from .exact import ExactSolution, besov_regularity, parse_solution
from .fem import (
    FAMILIES,
    apply_dirichlet_nodal,
    assemble_load,
    assemble_stiffness,
    build_space,
    solve_cg,
)
from .mesh import DomainTag, build_coarse_mesh, domain, refine_red
from .rates import (
    RatePrediction,
    predict_flux,
    predict_l2_global,
    predict_l2_local,
    predict_strip,
    shift_index,
    singular_exponent,
)

log = logging.getLogger(__name__)

METRICS = (em.L2_OMEGA, em.FLUX_GAMMA, em.L2_STRIP)
_METRIC_ALIASES = {"l2": em.L2_OMEGA, "flux": em.FLUX_GAMMA, "strip": em.L2_STRIP}
DEFAULT_LEVELS = {"P1": 7, "P2": 6, "Q1": 4}
# errors below this sit at the CG tolerance floor (patch tests); their
# ratios carry no rate information
DEGENERATE = 1e-9


class StudyError(RuntimeError):
    pass


@dataclass(frozen=True)
class StudyConfig:
    domain: DomainTag
    family: str
    solution: str
    levels: int
    metrics: tuple = (em.L2_OMEGA,)
    name: str = "study"
    table: str = ""
    tolerance: float = 0.06
    s: float | None = None
    corners: tuple | None = None  # ((alpha_j, s_j), ...) overriding the derived data
    cg_rtol: float = 1e-10
    max_dofs: int = 3_000_000
    paper_rates: tuple = ()
    paper_first_level: int = 1
    description: str = ""
    output: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.levels < 2:
            raise ValueError("a study needs at least levels 0..2")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        dom = domain(self.domain)
        if FAMILIES[self.family][0] != dom.dim:
            raise ValueError(f"{self.family} does not match the {dom.dim}D domain {self.domain.value}")
        if self.exact.dim != dom.dim:
            raise ValueError("solution dimension does not match the domain")
        for m in self.metrics:
            if m not in METRICS:
                raise ValueError(f"unknown metric {m!r}")

    @property
    def degree(self) -> int:
        return FAMILIES[self.family][1]

    @property
    def exact(self) -> ExactSolution:
        return parse_solution(self.solution)


def _floats(text: str) -> tuple:
    return tuple(float(t) for t in text.replace(" ", "").split(",") if t)


def parse_config(text: str) -> StudyConfig:
    """Read the flat ``key = value`` format (``#`` starts a comment)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str
    cp.read_string("[study]\n" + text)
    kv = dict(cp["study"])
    known = {f for f in StudyConfig.__dataclass_fields__}
    unknown = set(kv) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    args: dict = {}
    args["domain"] = DomainTag(kv.pop("domain"))
    args["family"] = kv.pop("family")
    args["solution"] = kv.pop("solution")
    args["levels"] = int(kv.pop("levels", DEFAULT_LEVELS[args["family"]]))
    if "metrics" in kv:
        names = [t.strip() for t in kv.pop("metrics").split(",") if t.strip()]
        args["metrics"] = tuple(_METRIC_ALIASES.get(n, n) for n in names)
    for key in ("tolerance", "s", "cg_rtol"):
        if key in kv:
            args[key] = float(kv.pop(key))
    for key in ("max_dofs", "paper_first_level"):
        if key in kv:
            args[key] = int(kv.pop(key))
    if "paper_rates" in kv:
        args["paper_rates"] = _floats(kv.pop("paper_rates"))
    if "corners" in kv:
        pairs = []
        for part in filter(None, (p.strip() for p in kv.pop("corners").split(";"))):
            a, _, sj = part.partition(":")
            pairs.append((float(a), float(sj)))
        args["corners"] = tuple(pairs)
    args.update(kv)  # name, description, output, format
    return StudyConfig(**args)


def load_config(path) -> StudyConfig:
    return parse_config(Path(path).read_text())


# -- bundled paper configurations -------------------------------------------------

TABLE_IDS = ("lshape1", "lshape2", "slit1", "slit2", "quadratic", "fichera")
APPENDIX_IDS = tuple(f"app-slit{i}" for i in range(1, 8)) + tuple(
    f"app-lshape{i}" for i in range(1, 7)
) + ("app-quadratic",)


def bundled_configs() -> dict:
    """All bundled configurations by name, in file order."""
    out = {}
    root = resources.files("cornerfem") / "configs"
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".cfg"):
            cfg = parse_config(entry.read_text())
            out[cfg.name] = cfg
    return out


def table_configs(table_id: str) -> list:
    """Bundled configurations making up one paper table (columns in order)."""
    found = [c for c in bundled_configs().values() if c.table == table_id]
    if not found:
        raise KeyError(f"no bundled table {table_id!r}")
    return found


# -- predictions -------------------------------------------------------------------

def predictions(cfg: StudyConfig) -> dict:
    """Predicted rate per requested metric."""
    dom = domain(cfg.domain)
    exact = cfg.exact
    reg = besov_regularity(exact, dom.corners)
    s = cfg.s if cfg.s is not None else reg.s
    k = cfg.degree
    out = {}
    for m in cfg.metrics:
        if m == em.L2_OMEGA:
            if dom.dim == 3:
                out[m] = predict_l2_global(k, s, shift_index(dom))
            else:
                corners = cfg.corners
                if corners is None:
                    corners = tuple(
                        (singular_exponent(c.angle), sj) for c, sj in zip(dom.corners, reg.corners)
                    )
                out[m] = predict_l2_local(k, s, corners)
        else:
            offset = min(float(k), max(0.0, s - 1.5))
            out[m] = predict_flux(k, offset) if m == em.FLUX_GAMMA else predict_strip(k, offset)
    return out


# -- tables --------------------------------------------------------------------------

@dataclass(frozen=True)
class Row:
    level: int
    h: float
    dofs: int
    values: dict


@dataclass(frozen=True)
class Verdict:
    metric: str
    passed: bool
    statistic: float
    lower: float
    upper: float
    explanation: str


@dataclass
class ConvergenceTable:
    dim: int
    metrics: tuple
    rows: list = field(default_factory=list)
    predictions: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    name: str = ""

    def errors(self, metric: str) -> list:
        return [r.values[metric] for r in self.rows]

    def rates(self, metric: str) -> list:
        """Observed rates (``None`` where both errors are at the solver floor)."""
        e = self.errors(metric)
        if len(e) < 2:
            return []
        raw = em.observed_rates(np.maximum(e, 1e-300), [r.dofs for r in self.rows], self.dim)
        return [None if max(e[i], e[i + 1]) < DEGENERATE else float(r) for i, r in enumerate(raw)]


def verdict(table: ConvergenceTable, prediction: RatePrediction, tolerance: float, metric: str | None = None) -> Verdict:
    """Pass iff the mean of the last two rates lies in [tau - tol, cap + tol].

    A predicted log factor widens the lower bound by a further 0.05.
    """
    metric = metric or prediction.metric
    if len(table.rows) < 3:
        raise ValueError("a verdict needs at least three levels")
    rates = table.rates(metric)[-2:]
    lower = prediction.tau - tolerance - (0.05 if prediction.log_factor else 0.0)
    upper = prediction.cap + tolerance
    if any(r is None for r in rates):
        return Verdict(metric, True, math.nan, lower, upper, "errors at the solver tolerance floor; rates degenerate")
    stat = float(np.mean(rates))
    ok = lower <= stat <= upper
    expl = (
        f"{metric}: mean of last two observed rates {stat:.3f} "
        f"{'in' if ok else 'outside'} [{lower:.3f}, {upper:.3f}] (predicted tau = {prediction})"
    )
    return Verdict(metric, ok, stat, lower, upper, expl)


# -- running ------------------------------------------------------------------------

def _measure(metric, space, uh, exact):
    if metric == em.L2_OMEGA:
        return em.l2_error(space, uh, exact).value
    if metric == em.FLUX_GAMMA:
        return em.flux_error(space, uh, exact).value
    return em.strip_l2_error(space, uh, exact).value


def run_study(cfg: StudyConfig) -> ConvergenceTable:
    """Solve on levels 0..L and tabulate errors, rates, predictions and verdicts."""
    exact = cfg.exact
    mesh = build_coarse_mesh(cfg.domain)
    table = ConvergenceTable(mesh.dim, tuple(cfg.metrics), name=cfg.name)
    growth = 4 if mesh.dim == 2 else 8
    for level in range(cfg.levels + 1):
        if level:
            estimate = table.rows[-1].dofs * growth
            if estimate > cfg.max_dofs:
                raise StudyError(
                    f"level {level} needs about {estimate} DOFs, above max_dofs = {cfg.max_dofs}; "
                    "lower 'levels' or raise 'max_dofs' if memory allows"
                )
            mesh = refine_red(mesh)
        t0 = time.perf_counter()
        space = build_space(mesh, cfg.family)
        K = assemble_stiffness(space)
        b = assemble_load(space, exact.f, exact.singular_point, exact.singular_exponent)
        system = apply_dirichlet_nodal(K, b, space, exact.u)
        try:
            x, info = solve_cg(system.matrix, system.rhs, cfg.cg_rtol)
        except Exception as exc:
            raise StudyError(f"level {level}: {exc}") from exc
        uh = system.expand(x)
        values = {m: _measure(m, space, uh, exact) for m in cfg.metrics}
        table.rows.append(Row(level, mesh.h, space.n_dofs, values))
        log.info(
            "%s level %d: %d DOFs, %d CG iterations, %.1fs, %s",
            cfg.name, level, space.n_dofs, info.iterations, time.perf_counter() - t0,
            ", ".join(f"{m}={v:.4e}" for m, v in values.items()),
        )
    table.predictions = predictions(cfg)
    for m, p in table.predictions.items():
        table.verdicts[m] = verdict(table, p, cfg.tolerance, m)
    return table


# -- output -----------------------------------------------------------------------------

def _fmt_rate(r) -> str:
    return "degenerate" if r is None else f"{r:.2f}"


def emit_table(table: ConvergenceTable, fmt: str = "csv") -> str:
    """CSV (errors to 6 significant digits, rates to 2 decimals) or Markdown."""
    if fmt == "csv":
        return _emit_csv(table)
    if fmt in ("markdown", "md"):
        return _emit_markdown(table)
    raise ValueError(f"unknown format {fmt!r}")


def _emit_csv(table: ConvergenceTable) -> str:
    out = io.StringIO()
    cols = ["level", "h", "dofs"]
    for m in table.metrics:
        cols += [m, f"{m}_rate"]
    for m in table.predictions:
        cols += [f"{m}_tau", f"{m}_log_flag", f"{m}_active_constraint"]
    out.write(",".join(cols) + "\n")
    rates = {m: [None] + table.rates(m) for m in table.metrics}
    for i, row in enumerate(table.rows):
        cells = [str(row.level), f"{row.h:.6g}", str(row.dofs)]
        for m in table.metrics:
            cells.append(f"{row.values[m]:.5e}")
            cells.append("" if i == 0 else _fmt_rate(rates[m][i]))
        for p in table.predictions.values():
            cells += [f"{p.tau:.4f}", str(int(p.log_factor)), p.active]
        out.write(",".join(cells) + "\n")
    for v in table.verdicts.values():
        out.write(f"# verdict,{v.metric},{'PASS' if v.passed else 'FAIL'},{v.explanation}\n")
    return out.getvalue()


def _emit_markdown(table: ConvergenceTable) -> str:
    head = ["level", "h", "DOFs"]
    for m in table.metrics:
        head += [f"{m} error", "rate"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    rates = {m: [None] + table.rates(m) for m in table.metrics}
    for i, row in enumerate(table.rows):
        cells = [str(row.level), f"{row.h:.6g}", str(row.dofs)]
        for m in table.metrics:
            cells += [f"{row.values[m]:.4e}", "-" if i == 0 else _fmt_rate(rates[m][i])]
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    for m, p in table.predictions.items():
        lines.append(f"- predicted {m} rate: {p} (active: {p.active}){'; ' + p.caveat if p.caveat else ''}")
    for v in table.verdicts.values():
        lines.append(f"- {'PASS' if v.passed else 'FAIL'}: {v.explanation}")
    return "\n".join(lines) + "\n"


def parse_table(text: str, dim: int = 2) -> ConvergenceTable:
    """Inverse of the CSV emitter (numeric fields at printed precision)."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    metrics = tuple(c for c in header[3:] if c in METRICS)
    table = ConvergenceTable(dim, metrics)
    for ln in lines[1:]:
        cells = dict(zip(header, ln.split(",")))
        values = {m: float(cells[m]) for m in metrics}
        table.rows.append(Row(int(cells["level"]), float(cells["h"]), int(cells["dofs"]), values))
    return table


def printed_rates(text: str) -> dict:
    """Rate columns of an emitted CSV as floats (``None`` for blank or degenerate)."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    out = {}
    for j, col in enumerate(header):
        if col.endswith("_rate"):
            vals = []
            for ln in lines[1:]:
                cell = ln.split(",")[j]
                vals.append(float(cell) if cell not in ("", "degenerate") else None)
            out[col[: -len("_rate")]] = vals
    return out


def paper_comparison(cfg: StudyConfig, table: ConvergenceTable) -> list:
    """(level, observed, paper) for levels where the paper prints a rate."""
    rates = table.rates(em.L2_OMEGA) if em.L2_OMEGA in table.metrics else []
    out = []
    for j, paper in enumerate(cfg.paper_rates):
        level = cfg.paper_first_level + 1 + j
        if 1 <= level < len(table.rows):
            out.append((level, rates[level - 1], paper))
    return out
