"""Experiment execution and output files.

Each subcommand maps trial indices to records.  Trial ``t`` draws only from
``derive_stream(master_seed, t)`` and records are merged by index, so the
output does not depend on the number of worker threads.  A run writes

* ``<subcommand>.csv``: ``#`` provenance lines (package version and the full
  config as JSON), a header row and one record per trial or grid point;
* ``<subcommand>.json``: one summary object with the run id, config echo,
  estimates, standard errors and wall time;
* ``<subcommand>.svg`` for subcommands with a scalar per-trial statistic.

Only the JSON file contains the wall time, so the CSV is byte-identical
across repeated runs of the same config.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import csv
import hashlib
import io
import json
import math
import time
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .. import __version__
from .streams import derive_stream

__all__ = [
    "RunConfig",
    "Histogram",
    "NumericalFailure",
    "SUBCOMMANDS",
    "run_experiment",
    "parse_params",
]


class NumericalFailure(RuntimeError):
    """Raised when an experiment produces non-finite output."""


@dataclass
class RunConfig:
    """Everything that determines the output of a run."""

    subcommand: str
    params: dict = field(default_factory=dict)
    master_seed: int = 0
    trials: int = 100
    threads: int = 1
    out_dir: str = "out"

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand {self.subcommand!r}")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.trials < 1 or self.threads < 1:
            raise ValueError("trials and threads must be positive")
        self.params = parse_params(self.subcommand, self.params)

    def echo(self) -> dict:
        """Config as plain JSON-serializable data (output directory excluded)."""
        d = asdict(self)
        d.pop("out_dir")
        return d

    def run_id(self) -> str:
        blob = json.dumps(self.echo(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class Histogram:
    """Counts over strictly increasing bin edges."""

    bin_edges: np.ndarray
    counts: np.ndarray
    total: int

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.bin_edges.size != self.counts.size + 1:
            raise ValueError("need one more edge than counts")
        if np.any(np.diff(self.bin_edges) <= 0):
            raise ValueError("edges must be strictly increasing")
        if np.any(self.counts < 0) or int(self.counts.sum()) != self.total:
            raise ValueError("counts must be nonnegative and sum to total")

    @classmethod
    def from_samples(cls, values, bins: int | None = None) -> "Histogram":
        """Unit-width bins for integer data, otherwise ``bins`` equal bins."""
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            raise ValueError("no samples")
        lo, hi = float(v.min()), float(v.max())
        if bins is None and np.all(v == np.round(v)) and hi - lo <= 400:
            edges = np.arange(lo - 0.5, hi + 1.5)
        else:
            # ranges at roundoff scale would give coincident edges
            if hi - lo <= 1e-9 * max(1.0, abs(lo), abs(hi)):
                mid = 0.5 * (lo + hi)
                lo, hi = mid - 0.5, mid + 0.5
            edges = np.linspace(lo, hi, (bins or 30) + 1)
        counts, _ = np.histogram(v, bins=edges)
        return cls(edges, counts, int(v.size))

    def to_svg(self, title: str = "", desc: str = "", width: int = 480, height: int = 300) -> str:
        """Self-contained SVG bar chart."""
        m = 30
        top = max(int(self.counts.max()), 1)
        e0, e1 = self.bin_edges[0], self.bin_edges[-1]
        sx = (width - 2 * m) / (e1 - e0)
        sy = (height - 2 * m) / top
        parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
                 f"<desc>{escape(desc)}</desc>",
                 f'<text x="{m}" y="{m - 10}" font-size="12">{escape(title)}</text>']
        for a, b, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
            h = c * sy
            parts.append(f'<rect x="{m + (a - e0) * sx:.2f}" y="{height - m - h:.2f}" '
                         f'width="{(b - a) * sx:.2f}" height="{h:.2f}" fill="steelblue"/>')
        parts.append(f'<text x="{m}" y="{height - 8}" font-size="10">{e0:g}</text>')
        parts.append(f'<text x="{width - m}" y="{height - 8}" font-size="10" '
                     f'text-anchor="end">{e1:g}</text>')
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def _ints(s):
    if isinstance(s, (list, tuple)):
        return tuple(int(v) for v in s)
    return tuple(int(v) for v in str(s).split(",") if v.strip() != "")


def _opt_float(s):
    return None if s is None or s == "" or s == "none" else float(s)


def _opt_int(s):
    return None if s is None or s == "" or s == "none" else int(s)


# name -> {param: (parser, default, help)}
PARAM_SPECS = {
    "mallows-sample": {"n": (int, 10, "permutation length"),
                       "q": (float, 0.5, "Mallows parameter in (0, 1]")},
    "lis-hist": {"n": (int, 1000, "permutation length"),
                 "q": (float, 1.0, "Mallows parameter in (0, 1]; 1 is uniform")},
    "asep-run": {"n": (int, 200, "even system size"),
                 "alpha": (float, 0.5, "bias exponent"),
                 "c": (float, 1.0, "bias constant, q = 1 - c/n**alpha"),
                 "observable": (str, "walk_lis", "midpoint or walk_lis"),
                 "burn_in": (_opt_int, None, "steps per chain (default 10 n^2)")},
    "kac-compress": {"n": (int, 60, "matrix size"), "k": (int, 30, "compression size"),
                     "matrix": (str, "grid", "grid, goe or two-atom"),
                     "mode": (str, "chain", "chain, haar or single"),
                     "burn_in": (_opt_int, None, "Kac steps (default n^2 ceil(log n))")},
    "thermo-compress": {"n": (int, 60, "matrix size"), "k": (int, 30, "compression size"),
                        "matrix": (str, "grid", "grid, goe or two-atom"),
                        "beta": (float, 1.0, "inverse variance"),
                        "mu": (float, 1.0, "thermostat rate"),
                        "lam": (float, 0.0, "collision rate"),
                        "burn_in": (int, 0, "extra coupled steps")},
    "ginibre-moments": {"n": (int, 100, "matrix size"),
                        "p": (_ints, (2, 2), "powers of A, comma separated"),
                        "q": (_ints, (2, 2), "powers of A*, comma separated")},
    "ginibre-density": {"N": (int, 100, "matrix size"),
                        "rmax": (float, 1.5, "largest radius"),
                        "points": (int, 61, "grid points"),
                        "mc": (int, 0, "1 adds Monte Carlo tables (N <= 200)")},
    "ginibre-constraint": {"N": (int, 1000, "matrix size"),
                           "p": (_ints, (0, 1, 2), "moment orders"),
                           "o2": (str, "none", "none, exact or bulk")},
    "qstirling": {"beta": (float, 1.0, "q = exp(-beta/n)"),
                  "n": (_ints, (100, 1000, 10000), "sizes")},
    "foursquare": {"n": (int, 6, "number of points"),
                   "s": (float, 0.5, "vertical split"), "t": (float, 0.5, "horizontal split"),
                   "q": (float, 0.5, "Mallows parameter"),
                   "beta": (_opt_float, None, "if set, q = exp(-beta/n)")},
}


def parse_params(subcommand: str, params: dict) -> dict:
    """Fill defaults and convert values; unknown keys raise ``ValueError``."""
    spec = PARAM_SPECS[subcommand]
    unknown = set(params) - set(spec)
    if unknown:
        raise ValueError(f"unknown parameters for {subcommand}: {sorted(unknown)}")
    out = {}
    for key, (conv, default, _) in spec.items():
        val = params.get(key, default)
        try:
            out[key] = val if val is None else conv(val)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"bad value for {key}: {val!r}") from exc
    for key, val in out.items():
        if isinstance(val, tuple):
            out[key] = list(val)
    return out


def _map(fn, n, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, range(n)))
    return [fn(t) for t in range(n)]


def _mean_se(v):
    v = np.asarray(v, dtype=float)
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else float("nan")
    return float(v.mean()), se


def _test_matrix(name, n, seed):
    from ..spectra import diagonal_grid, goe_matrix, two_atom_matrix
    if name == "grid":
        return diagonal_grid(n)
    if name == "goe":
        return goe_matrix(n, derive_stream(seed, 2 ** 63))
    if name == "two-atom":
        return two_atom_matrix(n)
    raise ValueError(f"unknown matrix {name!r}")


# each runner returns (header, rows, summary, histogram values or None)

def _run_mallows_sample(cfg):
    from ..lis import lis_length
    from ..mallows import format_permutation, inversions, sample_mallows_fy, sample_uniform_fy
    n, q = cfg.params["n"], cfg.params["q"]

    def one(t):
        rng = derive_stream(cfg.master_seed, t)
        perm = sample_uniform_fy(n, rng) if q == 1.0 else sample_mallows_fy(n, q, rng)
        return t, inversions(perm), lis_length(perm), format_permutation(perm)

    rows = _map(one, cfg.trials, cfg.threads)
    inv = [r[1] for r in rows]
    m, se = _mean_se(inv)
    return ["trial", "inversions", "lis", "permutation"], rows, \
        {"mean_inversions": m, "stderr_inversions": se}, inv


def _run_lis_hist(cfg):
    from ..lis import lis_length
    from ..mallows import sample_mallows_fy, sample_uniform_fy
    n, q = cfg.params["n"], cfg.params["q"]

    def one(t):
        rng = derive_stream(cfg.master_seed, t)
        perm = sample_uniform_fy(n, rng) if q == 1.0 else sample_mallows_fy(n, q, rng)
        return t, lis_length(perm)

    rows = _map(one, cfg.trials, cfg.threads)
    vals = [r[1] for r in rows]
    m, se = _mean_se(vals)
    return ["trial", "lis"], rows, {"mean": m, "stderr": se,
                                    "sd": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
                                    "mean_over_2sqrt_n": m / (2 * math.sqrt(n))}, vals


def _run_asep(cfg):
    from ..exclusion import fluctuation_experiment
    p = cfg.params
    s = fluctuation_experiment(p["n"], p["alpha"], p["c"], p["observable"], p["burn_in"],
                               cfg.trials, cfg.master_seed, threads=cfg.threads)
    rows = [(t, v) for t, v in enumerate(s.values.tolist())]
    summ = {"q": s.q, "mean": s.mean, "sd": s.sd, "stderr": s.sd / math.sqrt(s.trials),
            "r_grid": s.r_grid.tolist(), "exceedance": s.exceedance.tolist(),
            "envelope": s.envelope.tolist(), "within_envelope": s.within_envelope()}
    return ["trial", p["observable"]], rows, summ, s.values


def _compression_output(s):
    rows = [(t, d, e) for t, (d, e) in enumerate(zip(s.distances.tolist(), s.step_sensitivity.tolist()))]
    summ = {"mean_distance": float(s.distances.mean()),
            "table": [{"r": r, "empirical": e, "envelope": v} for r, e, v, _ in s.table()],
            "within_envelope": s.within_envelope(),
            "max_step_sensitivity": float(s.step_sensitivity.max()),
            "sensitivity_bound": s.sensitivity_bound, "bai_violations": s.bai_violations}
    return ["trial", "distance", "step_sensitivity"], rows, summ, s.distances


def _run_kac(cfg):
    from ..spectra import kac_compression_experiment
    p = cfg.params
    G = _test_matrix(p["matrix"], p["n"], cfg.master_seed)
    s = kac_compression_experiment(G, p["k"], p["burn_in"], cfg.trials, cfg.master_seed,
                                   p["mode"], threads=cfg.threads)
    return _compression_output(s)


def _run_thermo(cfg):
    from ..kacwalk import ThermoParams
    from ..spectra import thermostat_compression_experiment
    p = cfg.params
    G = _test_matrix(p["matrix"], p["n"], cfg.master_seed)
    s = thermostat_compression_experiment(G, p["k"], ThermoParams(p["beta"], p["mu"], p["lam"]),
                                          cfg.trials, cfg.master_seed, p["burn_in"],
                                          threads=cfg.threads)
    return _compression_output(s)


def _run_moments(cfg):
    from ..ginibre import MomentSignature, limit_moment_matchings, sample_ginibre, trace_word
    p = cfg.params
    sig = MomentSignature(tuple(p["p"]), tuple(p["q"]))

    def one(t):
        v = trace_word(sample_ginibre(p["n"], derive_stream(cfg.master_seed, t)), sig)
        return t, v.real, v.imag

    rows = _map(one, cfg.trials, cfg.threads)
    mr, ser = _mean_se([r[1] for r in rows])
    mi, sei = _mean_se([r[2] for r in rows])
    summ = {"mean_real": mr, "stderr_real": ser, "mean_imag": mi, "stderr_imag": sei}
    if sig.R <= 24:
        summ["limit_matchings"] = limit_moment_matchings(sig)
    return ["trial", "real", "imag"], rows, summ, [r[1] for r in rows]


def _run_density(cfg):
    from ..ginibre import estimate_overlaps_mc, o1_density, r1_density
    p = cfg.params
    N = p["N"]
    r = np.linspace(0.0, p["rmax"], p["points"])
    r1 = r1_density(N, r)
    o1 = o1_density(N, r) / N
    rows = [("exact", float(a), float(b), float(c), "", "") for a, b, c in zip(r, r1, o1)]
    summ = {"note": "o1 column is N^-1 O1"}
    if p["mc"]:
        edges = np.linspace(0.0, p["rmax"], 16)
        tab = estimate_overlaps_mc(N, max(cfg.trials, 100), cfg.master_seed, r_edges=edges,
                                   threads=cfg.threads)
        for c, a, sa, b, sb in zip(tab.r_centers, tab.r1, tab.r1_se, tab.o1 / N, tab.o1_se / N):
            rows.append(("mc", float(c), float(a), float(b), float(sa), float(sb)))
        summ["mc_trials"] = tab.trials
        summ["mc_skipped"] = tab.skipped
    return ["kind", "r", "r1", "o1_over_N", "r1_stderr", "o1_stderr"], rows, summ, None


def _run_constraint(cfg):
    from ..ginibre import constraint_check
    p = cfg.params
    rows, summ = [], {}
    for order in p["p"]:
        rep = constraint_check(p["N"], order, p["o2"])
        rows.append((order, rep.o1_integral, rep.o1_correction, rep.o1_exact,
                     "" if rep.o2_integral is None else rep.o2_integral,
                     "" if rep.total is None else rep.total,
                     "" if rep.log_coefficient is None else rep.log_coefficient))
        summ[f"p{order}_o1_correction"] = rep.o1_correction
    return ["p", "o1_integral", "o1_correction", "o1_exact", "o2_integral", "total",
            "o2_log_coefficient"], rows, summ, None


def _run_qstirling(cfg):
    from ..qcomb import q_stirling_remainder, stirling_coefficients
    p = cfg.params
    a, b = stirling_coefficients(p["beta"])
    rows = [(n, q_stirling_remainder(n, p["beta"])) for n in p["n"]]
    return ["n", "remainder"], rows, {"A": a, "B": b}, None


def _run_foursquare(cfg):
    from .. import foursquare as fs
    p = cfg.params
    n, s, t = p["n"], p["s"], p["t"]
    kw = {"log_q": -p["beta"] / n} if p["beta"] is not None else {"q": p["q"]}
    qv = math.exp(kw["log_q"]) if "log_q" in kw else p["q"]
    brute = fs.brute_force_quadrant_law(n, qv, s, t) if n <= 8 else {}
    rows, err = [], 0.0
    for vec in fs.all_count_vectors(n):
        c = fs.QuadrantCounts.from_split(vec, s, t)
        lp = fs.log_prob_exact(c, **kw)
        cond = math.exp(fs.log_conditional_prob(c, **kw))
        bf = brute.get(vec, "")
        if vec in brute:
            err = max(err, abs(cond - brute[vec]))
        rows.append((*vec, lp, math.exp(lp), cond, bf))
    summ = {"total_probability": math.fsum(r[5] for r in rows)}
    if brute:
        summ["max_conditional_error"] = err
    return ["n11", "n12", "n21", "n22", "log_prob", "prob", "conditional_given_margins",
            "brute_force_fixed_margins"], rows, summ, None


SUBCOMMANDS = {
    "mallows-sample": _run_mallows_sample,
    "lis-hist": _run_lis_hist,
    "asep-run": _run_asep,
    "kac-compress": _run_kac,
    "thermo-compress": _run_thermo,
    "ginibre-moments": _run_moments,
    "ginibre-density": _run_density,
    "ginibre-constraint": _run_constraint,
    "qstirling": _run_qstirling,
    "foursquare": _run_foursquare,
}


def _finite(x):
    if isinstance(x, str):
        return True
    if isinstance(x, (list, tuple)):
        return all(_finite(v) for v in x)
    if isinstance(x, dict):
        return all(_finite(v) for v in x.values())
    if isinstance(x, (bool, np.bool_)):
        return True
    if isinstance(x, (int, float, np.number)):
        return math.isfinite(float(x))
    return True


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def run_experiment(config: RunConfig) -> dict:
    """Run ``config`` and write its output files.

    Returns
    -------
    dict
        Paths of the written files keyed by ``"csv"``, ``"json"`` and, when
        a histogram applies, ``"svg"``; plus the summary under ``"summary"``.

    Raises
    ------
    NumericalFailure
        If any record or summary value is not finite.
    """
    start = time.perf_counter()
    header, rows, summary, hist_values = SUBCOMMANDS[config.subcommand](config)
    if not all(_finite(list(r)) for r in rows) or not _finite(summary):
        raise NumericalFailure(f"{config.subcommand} produced non-finite values")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    echo = json.dumps(config.echo(), sort_keys=True)
    stem = config.subcommand

    buf = io.StringIO()
    buf.write(f"# probwork {__version__}\n# config {echo}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    paths = {"csv": out / f"{stem}.csv"}
    paths["csv"].write_text(buf.getvalue())

    if hist_values is not None:
        h = Histogram.from_samples(hist_values)
        paths["svg"] = out / f"{stem}.svg"
        paths["svg"].write_text(h.to_svg(title=f"{stem} ({h.total} trials)",
                                         desc=f"probwork {__version__} config {echo}"))
        summary["histogram"] = {"bin_edges": h.bin_edges.tolist(), "counts": h.counts.tolist(),
                                "total": h.total}

    doc = {"run_id": config.run_id(), "version": __version__, "config": config.echo(),
           "records": len(rows), "estimates": summary,
           "wall_time_s": time.perf_counter() - start}
    paths["json"] = out / f"{stem}.json"
    paths["json"].write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
    return {**{k: str(v) for k, v in paths.items()}, "summary": summary}


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)
