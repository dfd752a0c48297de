"""Declarative experiments: spec validation and the per-kind runners.

A spec is one JSON object.  Common keys:

    kind        one of KINDS
    family      {"family": ..., "params": {...}}  (see ``seq.from_dict``)
    n_grid      strictly increasing list of sample sizes
    replicates  Monte Carlo replicates (or sample pairs for ``coverage``)
    seed        unsigned 64-bit integer, written into every output row
    delta       confidence parameter for ``coverage``
    outputs     {"csv": file name, ...} relative to the output directory

Kind-specific keys are documented on each runner.  Runners return a list of
row dicts plus a pass flag; writing files is left to ``write_outputs``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import ineq
from .config import subgamma_grid
from .estimator import draw_sample, empirical_bound
from .exact import exact_delta_n
from .mc import SimConfig, TruncationError, simulate_delta
from .rng import TAG_CASES, TAG_SAMPLE_A, TAG_SAMPLE_B, uniforms
from .seq import Finite, LogInverse, from_dict, s_functional, t_functional
from .vc import shattered_set, to_rows, vc_bruteforce, verify_shatter

KINDS = ("rates_S", "rates_T_probe", "certify", "coverage", "crossval", "vc_demo", "lgc_floor")
CERT_GRIDS = ("subgamma", "kl", "reverse_chernoff", "bk_mad", "okamoto")
LGC_FLOOR = 0.5 * (1.0 - math.exp(-1.0))

_NEEDS_FAMILY = {"rates_S", "rates_T_probe", "coverage"}
_NEEDS_N = {"rates_S", "rates_T_probe", "coverage", "crossval", "lgc_floor"}


@dataclass
class Result:
    rows: list
    passed: bool = True
    jsonl: str = ""
    text: str = ""
    notes: dict = field(default_factory=dict)


def spec_hash(spec: dict) -> str:
    """sha256 of the canonical JSON of the spec without its output paths."""
    body = {k: v for k, v in spec.items() if k != "outputs"}
    return hashlib.sha256(json.dumps(body, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


# -- validation ----------------------------------------------------------------

def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def validate_spec(spec) -> list[str]:
    """Schema and range diagnostics; an empty list means the spec is runnable."""
    if not isinstance(spec, dict):
        return ["spec must be a JSON object"]
    diags = []
    kind = spec.get("kind")
    if kind not in KINDS:
        return [f"kind: expected one of {', '.join(KINDS)}, got {kind!r}"]
    if kind in _NEEDS_N:
        grid = spec.get("n_grid")
        if not isinstance(grid, list) or not grid:
            diags.append("n_grid: must be a nonempty list of integers")
        elif not all(_is_int(n) and n >= 1 for n in grid):
            diags.append("n_grid: entries must be positive integers")
        elif any(b <= a for a, b in zip(grid, grid[1:])):
            diags.append("n_grid: must be strictly increasing")
    if kind in _NEEDS_FAMILY:
        fam = spec.get("family")
        if fam is None:
            diags.append("family: required for this kind")
        else:
            try:
                from_dict(fam)
            except (ValueError, TypeError, KeyError) as exc:
                diags.append(f"family: {exc}")
    seed = spec.get("seed", 0)
    if not (_is_int(seed) and 0 <= seed < 2 ** 64):
        diags.append("seed: must be an integer in [0, 2^64)")
    reps = spec.get("replicates", 1)
    if not (_is_int(reps) and reps >= 1):
        diags.append("replicates: must be a positive integer")
    if kind == "coverage":
        delta = spec.get("delta")
        if not (isinstance(delta, (int, float)) and 0 < delta < 1):
            diags.append("delta: must lie in (0, 1)")
        d = spec.get("d")
        if not (_is_int(d) and d >= 1):
            diags.append("d: coverage needs a positive integer dimension")
    if kind == "certify":
        grids = spec.get("grids")
        if not isinstance(grids, list) or not grids:
            diags.append(f"grids: nonempty list drawn from {', '.join(CERT_GRIDS)}")
        else:
            bad = [g for g in grids if g not in CERT_GRIDS]
            if bad:
                diags.append(f"grids: unknown entries {bad}")
    if kind == "vc_demo":
        k = spec.get("k", 3)
        if not (_is_int(k) and 1 <= k <= 20):
            diags.append("k: must be an integer in 1..20")
    if kind == "lgc_floor":
        J = spec.get("J_grid")
        if not isinstance(J, list) or not J or not all(_is_int(x) and x >= 1 for x in J):
            diags.append("J_grid: nonempty list of positive integers")
        elif any(b <= a for a, b in zip(J, J[1:])):
            diags.append("J_grid: must be strictly increasing")
    if kind == "crossval":
        dm = spec.get("d_max", 8)
        if not (_is_int(dm) and dm >= 1):
            diags.append("d_max: must be a positive integer")
        cases = spec.get("cases", 50)
        if not (_is_int(cases) and cases >= 1):
            diags.append("cases: must be a positive integer")
    for key in ("tail_tolerance",):
        if key in spec and not (isinstance(spec[key], (int, float)) and 0 < spec[key] <= 1):
            diags.append(f"{key}: must lie in (0, 1]")
    return diags


# -- runners -------------------------------------------------------------------

def _sim_config(spec, n):
    extra = {k: spec[k] for k in ("tail_tolerance", "max_truncation", "head_size", "block_ratio")
             if k in spec}
    return SimConfig(n=n, replicates=spec.get("replicates", 1000), seed=spec.get("seed", 0), **extra)


def run_rates_S(spec, threads):
    """Rows ``{n, delta_est, ci, sqrtn_delta, sqrt_S, ratio}``.

    Optional ``expect``: ``{"ratio_min", "ratio_max", "max_spread"}``; a
    violated expectation marks the run as failed.
    """
    p = from_dict(spec["family"])
    S = s_functional(p, spec.get("functional_prefix", 10 ** 5))
    rows = []
    for n in spec["n_grid"]:
        est = simulate_delta(p, _sim_config(spec, n), workers=threads)
        sq = math.sqrt(n) * est.mean
        rows.append({"n": n, "delta_est": est.mean, "ci": est.ci_halfwidth,
                     "bracket_lo": est.bracket_lo, "bracket_hi": est.bracket_hi,
                     "sqrtn_delta": sq, "sqrt_S": math.sqrt(S.value),
                     "ratio": sq / math.sqrt(S.value)})
    passed = True
    exp = spec.get("expect", {})
    ratios = [r["ratio"] for r in rows]
    if "ratio_min" in exp:
        passed &= min(ratios) >= exp["ratio_min"]
    if "ratio_max" in exp:
        passed &= max(ratios) <= exp["ratio_max"]
    if "max_spread" in exp:
        passed &= max(ratios) / min(ratios) <= exp["max_spread"]
    return Result(rows, bool(passed), notes={"S": S.value, "S_certified": S.tail_certified})


def run_rates_T_probe(spec, threads):
    """Rows ``{n, n_delta, T, ratio, ratio_log}`` with ``ratio = n Delta / T``.

    ``ratio_log`` divides by ``T log n`` as well: a flat ``ratio`` points to
    T/n scaling, a flat ``ratio_log`` to T log(n)/n.
    """
    p = from_dict(spec["family"])
    T = t_functional(p, spec.get("functional_prefix", 10 ** 5)).value
    rows = []
    for n in spec["n_grid"]:
        est = simulate_delta(p, _sim_config(spec, n), workers=threads)
        nd = n * est.mean
        rows.append({"n": n, "n_delta": nd, "T": T, "ratio": nd / T,
                     "ratio_log": nd / (T * math.log(n)) if n > 1 else math.nan,
                     "ci": est.ci_halfwidth})
    return Result(rows)


def _grid_certs(name):
    from .config import (CHERNOFF_EPS_POINTS, CHERNOFF_Q_POINTS, CLASSICAL_N_MAX,
                         KL_EPS_POINTS, KL_Q_POINTS, MAD_Q_POINTS, OKAMOTO_Q_POINTS,
                         OKAMOTO_T_POINTS)
    if name == "subgamma":
        for q, s, t in subgamma_grid():
            yield ineq.check_subgamma_mgf, (q, s, t)
    elif name == "kl":
        for q in np.geomspace(1e-6, 0.5, KL_Q_POINTS):
            for e in np.linspace(0.0, 1.0 - q, KL_EPS_POINTS):
                yield ineq.check_kl_upper, (float(q), float(e))
    elif name == "reverse_chernoff":
        qs = np.linspace(0.5 / CHERNOFF_Q_POINTS, 0.5, CHERNOFF_Q_POINTS)
        es = np.linspace(0.5 / CHERNOFF_EPS_POINTS, 0.5, CHERNOFF_EPS_POINTS)
        for n in range(2, CLASSICAL_N_MAX + 1):
            for q in qs:
                for e in es:
                    if e * e * q * n >= 3.0:
                        yield ineq.check_reverse_chernoff, (n, float(q), float(e))
    elif name == "bk_mad":
        for n in range(2, CLASSICAL_N_MAX + 1):
            for q in np.linspace(1.0 / n, 0.5, MAD_Q_POINTS):
                yield ineq.check_bk_mad, (n, float(q))
    elif name == "okamoto":
        for n in range(1, CLASSICAL_N_MAX + 1):
            for q in np.linspace(0.5 / OKAMOTO_Q_POINTS, 0.5, OKAMOTO_Q_POINTS):
                for t in np.linspace(0.0, q, OKAMOTO_T_POINTS):
                    yield ineq.check_okamoto_lower_tail, (n, float(q), float(t))


def certify_grid(name, threads=1):
    tasks = list(_grid_certs(name))
    if threads <= 1:
        return [f(*args) for f, args in tasks]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda fa: fa[0](*fa[1]), tasks))


def run_certify(spec, threads):
    """Certificate sweeps; ``grids`` lists which of CERT_GRIDS to run.

    Rows summarize each grid ``{grid, checked, failed, min_margin, min_rel_margin}``;
    the full certificates go to the JSONL output.
    """
    rows, lines, ok = [], [], True
    for g in spec["grids"]:
        certs = certify_grid(g, threads)
        failed = sum(not c.passed for c in certs)
        ok &= failed == 0
        rows.append({"grid": g, "checked": len(certs), "failed": failed,
                     "min_margin": min(c.margin for c in certs),
                     "min_rel_margin": min(c.rel_margin for c in certs)})
        lines.append(ineq.certificates_to_jsonl(certs))
    return Result(rows, ok, jsonl="".join(lines))


def coverage_trials(pvec, n, delta, pairs, seed):
    """Two-sample empirical bound vs exact Delta_n over independent sample pairs."""
    exact = exact_delta_n(pvec, n)
    rows = []
    for r in range(pairs):
        s1 = draw_sample(pvec, n, seed, pair=r, tag=TAG_SAMPLE_A)
        s2 = draw_sample(pvec, n, seed, pair=r, tag=TAG_SAMPLE_B)
        b = empirical_bound(s1, s2, delta).bound
        rows.append({"replicate": r, "bound": b, "exact_delta": exact, "covered": bool(b >= exact)})
    return rows


def coverage_target(delta, pairs):
    return 1.0 - delta - 3.0 * math.sqrt(delta * (1.0 - delta) / pairs)


def run_coverage(spec, threads):
    """Rows ``{replicate, bound, exact_delta, covered}``; passes when coverage
    reaches ``1 - delta - 3 sqrt(delta (1 - delta) / pairs)``."""
    p = from_dict(spec["family"])
    pvec = p.prefix(spec["d"])
    n = spec["n_grid"][0]
    pairs = spec.get("replicates", 1000)
    rows = coverage_trials(pvec, n, spec["delta"], pairs, spec.get("seed", 0))
    cov = sum(r["covered"] for r in rows) / pairs
    target = coverage_target(spec["delta"], pairs)
    return Result(rows, cov >= target, notes={"coverage": cov, "target": target})


def random_case(seed, case, d_max, n_grid):
    """Decreasing pvec in (0, 1/2]^d and a sample size, keyed by (seed, case)."""
    u = uniforms(seed, TAG_CASES, case, np.arange(d_max + 2, dtype=np.uint64))
    d = 1 + int(u[0] * d_max)
    n = n_grid[int(u[1] * len(n_grid))]
    pvec = np.sort(0.5 * (1.0 - u[2:d + 2]))[::-1]
    return pvec, n


def run_crossval(spec, threads):
    """Rows ``{case, d, n, exact, mc_mean, mc_ci, pass}``; passes when at least
    ``min_pass_fraction`` (default 0.96) of cases agree within 3 ci."""
    seed = spec.get("seed", 0)
    rows = []
    for c in range(spec.get("cases", 50)):
        pvec, n = random_case(seed, c, spec.get("d_max", 8), spec["n_grid"])
        est = simulate_delta(Finite(pvec), _sim_config(spec, n), workers=threads)
        ex = exact_delta_n(pvec, n)
        rows.append({"case": c, "d": pvec.size, "n": n, "exact": ex, "mc_mean": est.mean,
                     "mc_ci": est.ci_halfwidth, "pass": bool(abs(est.mean - ex) <= 3 * est.ci_halfwidth)})
    frac = sum(r["pass"] for r in rows) / len(rows)
    return Result(rows, frac >= spec.get("min_pass_fraction", 0.96), notes={"pass_fraction": frac})


def run_vc_demo(spec, threads):
    """Prints the k-point shattered construction; rows compare vc_bruteforce
    with floor(log2 d) for d = 1..d_max (default 16)."""
    k = spec.get("k", 3)
    m = shattered_set(k)
    rows = []
    ok = verify_shatter(m)
    for d in range(1, spec.get("d_max", 16) + 1):
        v = vc_bruteforce(d)
        f = int(math.floor(math.log2(d)))
        ok &= v == f
        rows.append({"d": d, "vc": v, "floor_log2": f, "match": v == f})
    text = "\n".join(to_rows(m)) + "\n"
    return Result(rows, bool(ok), text=text)


def run_lgc_floor(spec, threads):
    """Delta_n for growing prefixes of the non-LGC log family at fixed n.

    ``J_grid`` lists prefix lengths; ``method`` is ``exact`` (default) or
    ``mc``.  Passes when the values are nondecreasing in J and the last one
    reaches ``threshold`` (default 0.25).
    """
    p = from_dict(spec.get("family", {"family": "log_inverse", "params": {"offset": 2}}))
    if not isinstance(p, LogInverse):
        raise ValueError("lgc_floor runs on the log_inverse family")
    n = spec["n_grid"][0]
    rows = []
    for J in spec["J_grid"]:
        pvec = p.prefix(J)
        if spec.get("method", "exact") == "mc":
            val = simulate_delta(Finite(pvec), _sim_config(spec, n), workers=threads).mean
        else:
            val = exact_delta_n(pvec, n)
        rows.append({"J": J, "n": n, "delta": val, "floor": LGC_FLOOR})
    vals = [r["delta"] for r in rows]
    mono = all(b >= a for a, b in zip(vals, vals[1:]))
    thr = spec.get("threshold", 0.25)
    return Result(rows, bool(mono and vals[-1] >= thr),
                  notes={"nondecreasing": mono, "threshold": thr, "last": vals[-1]})


RUNNERS = {
    "rates_S": run_rates_S, "rates_T_probe": run_rates_T_probe, "certify": run_certify,
    "coverage": run_coverage, "crossval": run_crossval, "vc_demo": run_vc_demo,
    "lgc_floor": run_lgc_floor,
}


def run_spec(spec: dict, threads: int = 1) -> Result:
    diags = validate_spec(spec)
    if diags:
        raise ValueError("; ".join(diags))
    try:
        return RUNNERS[spec["kind"]](spec, threads)
    except TruncationError as exc:
        raise ValueError(str(exc)) from exc


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows, seed, digest) -> str:
    """CSV text with LF endings; floats are written with ``repr``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if not rows:
        w.writerow(["seed", "spec_hash"])
        return buf.getvalue()
    keys = list(rows[0])
    w.writerow(keys + ["seed", "spec_hash"])
    for r in rows:
        w.writerow([_fmt(r[k]) for k in keys] + [str(seed), digest])
    return buf.getvalue()
