"""Command-line front end: ``fracbloch <experiment> [options]``.

Exit status is 0 whenever a run completes, whatever the verdicts; verify-*
suites exit 1 when a tolerance check fails and 2 signals bad input.
"""

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import experiments as ex
from .bands import jsonable
from .classes import classify
from .config import EXPERIMENTS, ExperimentConfig, parse_weight_spec
from .constructions import achievable_depth, counterexample_report, dyadic_radii, lacunary_band
from .errors import FracBlochError, InvalidWeightError
from .grids import DEFAULT_DEPTH, PER_OCTAVE, geometric_grid
from .kernels import DEFAULT_N, prop23_ratio_band
from .norms import bloch_profile, bmu_norm
from .series import TaylorPoly, classical_frac_deriv, frac_deriv, fractional_multipliers


class Output:
    """A report as a JSON document plus long-format CSV rows."""

    def __init__(self, doc, rows, passed=True):
        self.doc, self.rows, self.passed = doc, rows, passed

    def render(self, fmt):
        if fmt == "json":
            return json.dumps(jsonable(self.doc), indent=2, sort_keys=True) + "\n"
        buf = io.StringIO()
        cols = []
        for r in self.rows:
            cols.extend(k for k in r if k not in cols)
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _cell(v) for k, v in r.items()})
        return buf.getvalue()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(jsonable(v))
    return v


def read_coefficients(path):
    """Taylor coefficients from a CSV with columns ``n, re, im``.

    ``n`` and ``im`` are optional; without ``n`` rows are taken in order and
    indices missing from an explicit ``n`` column are zero.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "re" not in reader.fieldnames:
            raise InvalidWeightError(f"{path}: expected a header with column 're'")
        try:
            rows = [(int(r["n"]) if "n" in r else k, complex(float(r["re"]), float(r.get("im") or 0.0)))
                    for k, r in enumerate(reader)]
        except (TypeError, ValueError) as exc:
            raise InvalidWeightError(f"{path}: bad coefficient row ({exc})") from None
    if not rows:
        raise InvalidWeightError(f"{path}: no coefficients")
    idx = [n for n, _ in rows]
    if min(idx) < 0 or len(set(idx)) != len(idx):
        raise InvalidWeightError(f"{path}: indices must be distinct and non-negative")
    c = np.zeros(max(idx) + 1, dtype=complex)
    for n, v in rows:
        c[n] = v
    return TaylorPoly(c)


def _weights(cfg, default=None):
    specs = cfg.weights or default or []
    return [parse_weight_spec(s) for s in specs]


def _one_weight(cfg):
    if len(cfg.weights) != 1:
        raise InvalidWeightError(f"{cfg.experiment} needs exactly one --weight")
    return parse_weight_spec(cfg.weights[0])


def _poly(cfg):
    if "coeffs" in cfg.options:
        return read_coefficients(cfg.options["coeffs"])
    rng = np.random.default_rng(cfg.seed)
    deg = int(cfg.options.get("degree", 16))
    return TaylorPoly(rng.standard_normal(deg + 1))


def _suite(rep):
    rows = [dict(r, result=rep.header) for r in rep.rows()]
    return Output(rep.to_dict(), rows, rep.passed)


def run_classify(cfg):
    depth = cfg.grid_depth or DEFAULT_DEPTH
    reports = [classify(w, depth=depth) for w in _weights(cfg, ["constant"])]
    rows = []
    for r in reports:
        for cls, v in r.verdicts.items():
            rows.append({"weight": r.weight, "class": cls, "verdict": v,
                         "refinement_stable": r.refinement_stable})
    doc = reports[0].to_dict() if len(reports) == 1 else [r.to_dict() for r in reports]
    return Output(doc, rows)


def run_dmu(cfg):
    beta = cfg.options.get("beta")
    if beta is not None:
        if cfg.weights:
            raise InvalidWeightError("give either --weight or --beta, not both")
        if "coeffs" not in cfg.options:
            raise InvalidWeightError("--beta needs --coeffs")
        f = read_coefficients(cfg.options["coeffs"])
        return _coeff_output(f"classical D^{beta!r}", classical_frac_deriv(f, float(beta)))
    w = _one_weight(cfg)
    if "coeffs" in cfg.options:
        return _coeff_output(w.name, frac_deriv(read_coefficients(cfg.options["coeffs"]), w))
    N = cfg.trunc or 64
    m = fractional_multipliers(w, N)
    rows = [{"n": n, "multiplier": float(v)} for n, v in enumerate(m)]
    return Output({"weight": w.name, "multipliers": [float(v) for v in m]}, rows)


def _coeff_output(label, g):
    rows = [{"n": n, "re": float(c.real), "im": float(c.imag)} for n, c in enumerate(g.coeffs)]
    return Output({"operator": label, "coefficients": rows}, rows)


def run_norms(cfg):
    w = _one_weight(cfg)
    f = _poly(cfg)
    grid = geometric_grid(cfg.grid_depth or DEFAULT_DEPTH, PER_OCTAVE)
    prof = bmu_norm(f, w, grid)
    bl = bloch_profile(f, grid)
    doc = {"weight": w.name, "degree": f.degree, "bmu": prof.to_dict(),
           "bloch_norm": abs(f.coeffs[0]) + bl.sup, "bloch": bl.to_dict()}
    rows = [{"r": float(r), "bmu_value": float(a), "bloch_value": float(b)}
            for r, a, b in zip(grid, prof.values, bl.values)]
    return Output(doc, rows)


def run_kernel_asymptotics(cfg):
    om = parse_weight_spec(cfg.omega or "constant")
    mu = parse_weight_spec(cfg.mu or "constant")
    N = cfg.trunc or DEFAULT_N
    res = prop23_ratio_band(om, mu, N=N, N_ref=N // 2)
    rows = [dict(r, omega=om.name, mu=mu.name) for r in res.rows]
    return Output(res.to_dict(), rows)


def run_lacunary(cfg):
    w = _one_weight(cfg)
    nmax = int(cfg.options.get("nmax", min(40, achievable_depth(w))))
    d = dyadic_radii(w, nmax)
    doc = {"data": d.to_dict()}
    try:
        doc["band"] = lacunary_band(w, nmax, depth=cfg.grid_depth or DEFAULT_DEPTH).to_dict()
    except FracBlochError as exc:
        doc["band_error"] = str(exc)
    rows = [{"n": n, "r_n": float(r), "one_minus_r_n": float(q), "M_n": int(m)}
            for n, (r, q, m) in enumerate(zip(d.radii, d.complements, d.exponents))]
    return Output(doc, rows)


def run_counterexample(cfg):
    w = _one_weight(cfg)
    nmax = int(cfg.options.get("nmax", 20))
    extra = int(cfg.options.get("extra", 5))
    notes = []
    reach = achievable_depth(w)
    if nmax + extra > reach:
        extra = min(extra, max(1, reach // 2))
        nmax = reach - extra
        notes.append(f"tail reaches only 2^-{reach} before 1 - r = 1e-14; "
                     f"using nmax={nmax} against nmax={nmax + extra}")
        if nmax < 1:
            raise InvalidWeightError(f"weight {w.name!r} supports no counterexample depth")
    rep = counterexample_report(w, int(nmax), extra)
    rep.notes.extend(notes)
    rows = [{"k": k, "S_k": s, "M_k": m} for k, (s, m) in enumerate(zip(rep.partial_sums, rep.exponents))]
    return Output(rep.to_dict(), rows)


def run_verify_thm12(cfg):
    weights = _weights(cfg) or None
    return _suite(ex.thm12_embedding(weights, ex.CorpusNorms(seed=cfg.seed)))


def run_verify_thm13(cfg):
    weights = _weights(cfg) or None
    return _suite(ex.thm13_band(weights, ex.CorpusNorms(seed=cfg.seed)))


def run_verify_prop23(cfg):
    pairs = None
    if cfg.omega or cfg.mu:
        pairs = [(parse_weight_spec(cfg.omega or "constant"), parse_weight_spec(cfg.mu or "constant"))]
    return _suite(ex.prop23_suite(pairs, N=cfg.trunc or DEFAULT_N))


def run_verify_partition(cfg):
    a = ex.partition_of_unity(seed=cfg.seed)
    b = ex.vn_norm_band()
    a.checks.extend(b.checks)
    a.data.update(b.data)
    return _suite(a)


def run_verify_multiplier(cfg):
    mus = _weights(cfg) or None
    return _suite(ex.multiplier_suite(mus, N=cfg.trunc or DEFAULT_N))


RUNNERS = {
    "classify": run_classify,
    "dmu": run_dmu,
    "norms": run_norms,
    "kernel-asymptotics": run_kernel_asymptotics,
    "lacunary": run_lacunary,
    "counterexample": run_counterexample,
    "verify-thm12": run_verify_thm12,
    "verify-thm13": run_verify_thm13,
    "verify-prop23": run_verify_prop23,
    "verify-partition": run_verify_partition,
    "verify-multiplier": run_verify_multiplier,
}


def run(cfg):
    """Run one experiment; returns (rendered text, exit code)."""
    out = RUNNERS[cfg.experiment](cfg)
    text = out.render(cfg.format)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    code = 0 if (out.passed or not cfg.experiment.startswith("verify-")) else 1
    return text, code


def build_parser():
    p = argparse.ArgumentParser(prog="fracbloch", description=__doc__.splitlines()[0])
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--weight", action="append", default=[], metavar="SPEC",
                   help="weight spec, e.g. constant, standard:beta=2, exp:alpha=1,l=1,beta=1, "
                        "lograpid:alpha=2, tabulated:file=PATH (repeatable)")
    p.add_argument("--omega", metavar="SPEC", help="kernel weight for kernel experiments")
    p.add_argument("--mu", metavar="SPEC", help="derivative weight for kernel experiments")
    p.add_argument("--trunc", type=int, metavar="N", help="series truncation")
    p.add_argument("--grid-depth", type=int, metavar="J", help="geometric grid depth")
    p.add_argument("--seed", type=int, default=ex.CORPUS_SEED, metavar="S")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--coeffs", metavar="PATH", help="CSV of Taylor coefficients (columns n, re, im)")
    p.add_argument("--beta", type=float, help="dmu: apply the classical D^beta instead of a weight")
    p.add_argument("--degree", type=int, help="degree of the seeded random test polynomial")
    p.add_argument("--nmax", type=int, help="lacunary depth")
    p.add_argument("--config", metavar="PATH", help="read the whole configuration from JSON")
    p.add_argument("--save-config", metavar="PATH", help="write the effective configuration as JSON")
    return p


def config_from_args(ns):
    if ns.config:
        with open(ns.config) as fh:
            cfg = ExperimentConfig.from_json(fh.read())
        if cfg.experiment != ns.experiment:
            raise InvalidWeightError(f"config is for {cfg.experiment!r}, not {ns.experiment!r}")
        return cfg
    options = {k: getattr(ns, k) for k in ("coeffs", "degree", "nmax", "beta") if getattr(ns, k) is not None}
    return ExperimentConfig(experiment=ns.experiment, weights=ns.weight, omega=ns.omega, mu=ns.mu,
                            trunc=ns.trunc, grid_depth=ns.grid_depth, seed=ns.seed, out=ns.out,
                            format=ns.format, options=options)


def main(argv=None):
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        if ns.save_config:
            with open(ns.save_config, "w") as fh:
                fh.write(cfg.to_json() + "\n")
        text, code = run(cfg)
    except (FracBlochError, OSError) as exc:
        print(f"fracbloch {ns.experiment}: {exc}", file=sys.stderr)
        return 2
    if not cfg.out:
        sys.stdout.write(text)
    if cfg.experiment.startswith("verify-"):
        print(("PASS" if code == 0 else "FAIL") + f" {cfg.experiment}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
