"""Parameter sweeps over T(n, m) writing CSV tables and log-log SVG plots."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import analyze
from .rt_flux import flux_error, reconstruct_flux, solve_averaged
from .witness import build_witness, fold, witness_report

log = logging.getLogger(__name__)

CSV_VERSION = "crlab-study/1"
COLUMNS = [
    "n", "m", "h", "tan_half_alpha", "kappa", "E", "E_ba", "E_c", "E_interp", "ba_lower",
    "witness_norm", "witness_ratio", "fw", "rt_error", "friedrichs", "error",
]
MODES = {
    "m_eq_n": 1.0,
    "m_n32": 1.5,
    "m_n2": 2.0,
    "m_n52": 2.5,
}
DEFAULT_N_MAX = {"m_eq_n": 32, "m_n32": 32, "m_n2": 32, "m_n52": 16}
SKIPPABLE = ("witness", "rt", "friedrichs")


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def m_for(mode: str, n: int) -> int:
    return max(n, round_half_up(n ** MODES[mode]))


@dataclass
class StudyConfig:
    mode: str = "m_eq_n"
    n_min: int = 4
    n_max: int | None = None
    pairs: list = field(default_factory=list)
    tol: float = 1e-12
    skip: frozenset = frozenset()
    threads: int = 1

    def __post_init__(self):
        if self.mode != "custom" and self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        unknown = set(self.skip) - set(SKIPPABLE)
        if unknown:
            raise ValueError(f"cannot skip {sorted(unknown)}")
        if self.mode == "custom" and not self.pairs:
            raise ValueError("custom mode needs explicit (n, m) pairs")
        if self.n_min < 1:
            raise ValueError("n_min must be >= 1")
        for n, m in self.pairs:
            if not m >= n >= 1:
                raise ValueError(f"invalid pair n={n}, m={m}: need m >= n >= 1")

    def points(self) -> list[tuple[int, int]]:
        if self.mode == "custom":
            return [(int(n), int(m)) for n, m in self.pairs]
        n_max = self.n_max if self.n_max is not None else DEFAULT_N_MAX[self.mode]
        out = []
        n = self.n_min
        while n <= n_max:
            out.append((n, m_for(self.mode, n)))
            n *= 2
        return out


def run_point(n: int, m: int, tol: float = 1e-12, skip=frozenset()) -> dict:
    """One CSV row; failures end up in the ``error`` column."""
    row = dict.fromkeys(COLUMNS, "")
    row.update(n=n, m=m)
    try:
        res = analyze(n, m, tol=tol, friedrichs="friedrichs" not in skip)
        rep = res.report
        row.update(
            h=rep.h_T, tan_half_alpha=rep.tan_half_alpha, kappa=rep.kappa, E=rep.E, E_ba=rep.E_ba,
            E_c=rep.E_c, E_interp=rep.E_interp, ba_lower=rep.ba_lower,
        )
        if "friedrichs" not in skip:
            row["friedrichs"] = rep.friedrichs
        if "witness" not in skip:
            wr = witness_report(res.system, build_witness(res.system.tri))
            row.update(witness_norm=wr.norm, witness_ratio=wr.ratio, fw=wr.fw)
        if "rt" not in skip:
            u_t, fbar = solve_averaged(res.system)
            row["rt_error"] = flux_error(res.system, reconstruct_flux(res.system.tri, u_t, fbar))
    except Exception as exc:  # recorded per point, the sweep continues
        log.warning("point (%d, %d) failed: %s", n, m, exc)
        row["error"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return row


def _run_point_args(args):
    return run_point(*args)


def run_study(config: StudyConfig) -> list[dict]:
    jobs = [(n, m, config.tol, frozenset(config.skip)) for n, m in config.points()]
    if config.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            # map preserves submission order
            return list(pool.map(_run_point_args, jobs))
    return [_run_point_args(j) for j in jobs]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(rows: list[dict], path, columns=COLUMNS, version=CSV_VERSION) -> None:
    """Write rows to a path or an open text stream."""
    if hasattr(path, "write"):
        _write_rows(rows, path, columns, version)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _write_rows(rows, fh, columns, version)


def _write_rows(rows, fh, columns, version):
    fh.write(f"# {version}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c, "")) for c in columns])


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def write_svg(rows: list[dict], path, title: str = "") -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ok = [r for r in rows if not r.get("error")]
    n = [float(r["n"]) for r in ok]
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.loglog(n, [float(r["E"]) for r in ok], "o-", color="tab:blue", label="Galerkin error E")
    ax.loglog(n, [float(r["E_c"]) for r in ok], "s-", color="tab:red", label="consistency error E_c")
    ax.set_xlabel("n")
    ax.set_ylabel("discrete H1 error")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    plt.rcParams["svg.hashsalt"] = "crlab"
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


MAXIMIZER_COLUMNS = ["x", "y", "slope", "folded_slope", "maximizer", "galerkin"]


def dump_maximizer(n: int, m: int, out=None, tol: float = 1e-12) -> list[dict]:
    """Midpoint values at slanted interior edges of the consistency
    maximizer and of the Galerkin solution."""
    res = analyze(n, m, tol=tol, friedrichs=False)
    tri = res.system.tri
    edges = res.system.dofmap.dof_to_edge
    cls = tri.edge_slopes[edges].astype(int)
    keep = np.abs(cls) == 1
    mid = tri.edge_midpoints[edges]
    _, flips = fold(mid)
    folded = np.where(flips % 2 == 1, -cls, cls)
    rows = [
        {"x": float(mid[i, 0]), "y": float(mid[i, 1]), "slope": int(cls[i]), "folded_slope": int(folded[i]),
         "maximizer": float(res.w_max.values[i]), "galerkin": float(res.u_h.values[i])}
        for i in np.flatnonzero(keep)
    ]
    if out is not None:
        write_csv(rows, out, MAXIMIZER_COLUMNS, "crlab-maximizer/1")
    return rows
