"""Verification suites: each runs one family of checks and returns a SuiteReport."""

from dataclasses import dataclass, field

import numpy as np

from .bands import STABILITY_TOL, jsonable, make_band, rel_change
from .classes import NO, YES, classify, lemma22_integral, lemmaA_moment_doubling, lemmaA_moment_tail
from .constructions import counterexample_report, dyadic_radii, lacunary_band
from .kernels import (kernel_reproduction_residual, mixed_moment_equiv, multiplier_band,
                      prop23_ratio_band, repro_identity_residual)
from .norms import bloch_norm, bmu_norm, hardy_norm, random_corpus
from .series import (TaylorPoly, cesaro_block, cesaro_blocks_needed, classical_frac_deriv,
                     frac_deriv)
from .weights import builtin_weight, log_mixed_moments, log_moments

CORPUS_SIZE = 200
CORPUS_SEED = 20240601


def builtin_corpus():
    """The built-in weights used by the corpus-wide suites."""
    return [
        builtin_weight("constant"),
        builtin_weight("standard", beta=0.5),
        builtin_weight("standard", beta=1.0),
        builtin_weight("standard", beta=2.0),
        builtin_weight("standard", beta=3.7),
        builtin_weight("exp", alpha=1.0, l=1.0, beta=1.0),
        builtin_weight("lograpid", alpha=2.0),
    ]


@dataclass
class Check:
    name: str
    passed: bool
    value: object = None
    bound: object = None
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return jsonable({"name": self.name, "passed": bool(self.passed), "value": self.value,
                         "bound": self.bound, "detail": self.detail})


@dataclass
class SuiteReport:
    suite: str
    header: str
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, name, passed, value=None, bound=None, **detail):
        self.checks.append(Check(name, bool(passed), value, bound, detail))

    def to_dict(self):
        return jsonable({"suite": self.suite, "header": self.header, "passed": self.passed,
                         "checks": [c.to_dict() for c in self.checks], "data": self.data})

    def rows(self):
        """Long-format rows for CSV output."""
        return [{"suite": self.suite, "check": c.name, "passed": c.passed,
                 "value": c.value, "bound": c.bound} for c in self.checks]


# ---------------------------------------------------------------------------
# series and moments
# ---------------------------------------------------------------------------

def classical_agreement(betas=(0.5, 1.0, 2.0, 3.7), degree=500, tol=1e-9):
    rep = SuiteReport("classical", "D^mu for mu = beta(1 - r^2)^(beta - 1) against Hardy-Littlewood D^beta")
    f = TaylorPoly(np.ones(degree + 1))
    for beta in betas:
        a = frac_deriv(f, builtin_weight("standard", beta=beta)).coeffs.real
        b = classical_frac_deriv(f, beta).coeffs.real
        err = float(np.max(np.abs(a - b) / np.abs(b)))
        rep.add(f"beta={beta}", err <= tol, err, tol)
    return rep


def moment_identities(weights=None, xs=(1, 3, 7, 31, 101, 1001), tol=1e-8, exact_tol=1e-12):
    rep = SuiteReport("moments", "tail-form against density-form moments; closed forms for mu = 1")
    xs = np.asarray(xs, dtype=float)
    for w in weights or builtin_corpus():
        a = log_moments(w, xs, method="tail")
        b = log_moments(w, xs, method="density")
        err = float(np.max(np.abs(np.expm1(a - b))))
        rep.add(f"tail vs density {w.name}", err <= tol, err, tol)
    c = builtin_weight("constant")
    m = np.exp(log_moments(c, xs))
    mm = np.exp(log_mixed_moments(c, xs))
    e1 = float(np.max(np.abs(m * (xs + 1.0) - 1.0)))
    e2 = float(np.max(np.abs(mm * (xs + 1.0) * (xs + 2.0) - 1.0)))
    rep.add("mu_x = 1/(x+1)", e1 <= exact_tol, e1, exact_tol)
    rep.add("(mu mu-hat)_x = 1/((x+1)(x+2))", e2 <= exact_tol, e2, exact_tol)
    return rep


# ---------------------------------------------------------------------------
# classes
# ---------------------------------------------------------------------------

_D_ALL = {"Dhat": YES, "Dcheck": YES, "M": YES, "D": YES}
TRUTH_TABLE = {
    "constant": _D_ALL,
    "standard:beta=0.5": _D_ALL,
    "standard:beta=2": _D_ALL,
    "standard:beta=3.7": _D_ALL,
    "exp:alpha=1,l=1,beta=1": {"Dhat": NO, "Dcheck": YES, "D": NO},
    "lograpid:alpha=2": {"Dhat": YES, "Dcheck": NO, "M": NO, "D": NO},
}


def truth_table(parse):
    """Classification of the reference weights against the expected verdicts."""
    rep = SuiteReport("classify", "class membership of the reference weights")
    for spec, expected in TRUTH_TABLE.items():
        r = classify(parse(spec))
        got = r.verdicts
        ok = all(got[k] == v for k, v in expected.items()) and r.refinement_stable
        rep.add(spec, ok, got, expected, refinement_stable=r.refinement_stable)
        rep.data[spec] = r.to_dict()
    return rep


def lemma_crosschecks(weights=None, gammas=(0.5, 1.0, 2.0), tol=STABILITY_TOL):
    """Lemma bands of the doubling classes, each checked for stability under grid doubling.

    ``drift`` is the change against the doubled-density grid; ``drift_all``
    also counts the grid stopped 6.5 octaves short of the boundary.
    """
    rep = SuiteReport("lemmas", "Lemma A and Lemma 2.2 characterisations of the doubling classes")

    def add(name, band, two_sided):
        d = band.drift_against("fine")
        ok = (band.bounded if two_sided else np.isfinite(band.hi)) and d < tol
        rep.add(name, ok, [band.lo, band.hi], tol, drift=d, drift_all=band.drift)

    for w in weights or builtin_corpus():
        r = classify(w, check_refinement=False)
        if r.dhat.evidence:
            add(f"Lemma A(iii) {w.name}", lemmaA_moment_tail(w), True)
            add(f"Lemma A(iv) {w.name}", lemmaA_moment_doubling(w), False)
        if r.dcheck.evidence:
            for g in gammas:
                add(f"Lemma 2.2(iii) {w.name} gamma={g}", lemma22_integral(w, g), False)
    return rep


# ---------------------------------------------------------------------------
# Cesaro blocks
# ---------------------------------------------------------------------------

def partition_of_unity(kmax=2 ** 14, degree=4096, seed=CORPUS_SEED, tol_sum=1e-13, tol_rec=1e-12):
    rep = SuiteReport("verify-partition", "Cesaro blocks V_n: partition of unity and f = sum V_n * f")
    nb = cesaro_blocks_needed(kmax)
    total = np.zeros(kmax + 1)
    for n in range(nb):
        c = cesaro_block(n).coeffs.real
        m = min(c.size, kmax + 1)
        total[:m] += c[:m]
    err = float(np.max(np.abs(total - 1.0)))
    rep.add(f"sum_n V_n = 1 for k <= {kmax}", err <= tol_sum, err, tol_sum)

    rng = np.random.default_rng(seed)
    f = TaylorPoly(rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1))
    acc = np.zeros(degree + 1, dtype=complex)
    for n in range(cesaro_blocks_needed(degree)):
        h = cesaro_block(n).coeffs
        m = min(h.size, degree + 1)
        acc[:m] += h[:m] * f.coeffs[:m]
    err = float(np.max(np.abs(acc - f.coeffs)) / np.max(np.abs(f.coeffs)))
    rep.add(f"sum_n V_n * f = f, degree {degree}", err <= tol_rec, err, tol_rec)
    return rep


def vn_norm_band(ns=range(2, 13), spread_max=10.0):
    """||V_n||_{H^1} over n: bounded above and below."""
    ns = list(ns)
    vals = [hardy_norm(cesaro_block(n), 1.0) for n in ns]
    band = make_band("||V_n||_H1", ns, vals)
    rep = SuiteReport("vn-norms", "||V_n||_{H^p} comparable to 2^(n(1 - 1/p)) at p = 1")
    rep.add(f"C/c over n in {ns[0]}..{ns[-1]}", band.spread <= spread_max, band.spread, spread_max,
            lo=band.lo, hi=band.hi)
    rep.data["norms"] = dict(zip(ns, vals))
    return rep


# ---------------------------------------------------------------------------
# corpus suites
# ---------------------------------------------------------------------------

class CorpusNorms:
    """Bloch and B^mu norms of a fixed corpus, computed once per weight."""

    def __init__(self, size=CORPUS_SIZE, seed=CORPUS_SEED):
        self.size, self.seed = size, seed
        self.polys = random_corpus(2 * size, seed)
        self._bloch = None
        self._bmu = {}

    @property
    def bloch(self):
        if self._bloch is None:
            self._bloch = np.array([bloch_norm(f) for f in self.polys])
        return self._bloch

    def bmu(self, w):
        if w.name not in self._bmu:
            self._bmu[w.name] = np.array([bmu_norm(f, w).sup for f in self.polys])
        return self._bmu[w.name]


def thm12_embedding(weights=None, corpus=None, tol=STABILITY_TOL):
    """||f||_B <= C ||f||_{B^mu}: corpus-wide C and its change when the corpus doubles."""
    corpus = corpus or CorpusNorms()
    rep = SuiteReport("verify-thm12", "Theorem 1.2: B^mu embeds in the Bloch space for radial mu")
    n = corpus.size
    for w in weights or builtin_corpus():
        ratio = corpus.bloch / corpus.bmu(w)
        c1, c2 = float(np.max(ratio[:n])), float(np.max(ratio))
        drift = rel_change(c1, c2)
        rep.add(f"C for {w.name}", np.isfinite(c2) and drift < tol, c2, tol, C_half=c1, drift=drift)
    return rep


def monomial_closed_forms(ns=(1, 2, 10, 100), tol=1e-9):
    rep = SuiteReport("monomials", "monomial norms for mu = 1")
    c = builtin_weight("constant")
    for n in ns:
        f = TaylorPoly.monomial(n)
        bmu, bl = bmu_norm(f, c).sup, bloch_norm(f)
        e_bmu = 2.0 * (n / (n + 1.0)) ** n
        e_bl = ((n - 1.0) / n) ** (n - 1) if n > 1 else 1.0
        rep.add(f"||z^{n}||_B^mu", abs(bmu - e_bmu) <= tol * e_bmu, bmu, e_bmu)
        rep.add(f"||z^{n}||_B", abs(bl - e_bl) <= tol * e_bl, bl, e_bl)
    return rep


def thm13_band(weights=None, corpus=None, spread_max=100.0, tol=STABILITY_TOL):
    """Two-sided band of ||f||_{B^mu} / ||f||_B for D-evidence weights.

    Weights outside D are reported (the ratio's growth is data) but not checked.
    """
    corpus = corpus or CorpusNorms()
    rep = SuiteReport("verify-thm13", "Theorem 1.3: B^mu = B with equivalent norms when mu is in D")
    n = corpus.size
    for w in weights or builtin_corpus():
        verdict = classify(w, check_refinement=False).verdicts["D"]
        ratio = corpus.bmu(w) / corpus.bloch
        band = make_band(w.name, np.arange(2 * n), ratio, {"half": ratio[:n]})
        info = dict(lo=band.lo, hi=band.hi, drift=band.drift, D=verdict)
        if verdict == YES:
            rep.add(f"band {w.name}", band.spread <= spread_max and band.stable, band.spread,
                    spread_max, **info)
        else:
            rep.data[w.name] = info
    for c in monomial_closed_forms().checks:
        rep.checks.append(c)
    return rep


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def prop23_suite(pairs=None, N=8192, spread_max=50.0, tol=STABILITY_TOL):
    rep = SuiteReport("verify-prop23",
                      "Proposition 2.3: M_1 of D^mu applied to the Bergman kernel against its integral")
    if pairs is None:
        ws = [builtin_weight("constant"), builtin_weight("standard", beta=2.0)]
        pairs = [(a, b) for a in ws for b in ws]
    for om, mu in pairs:
        res = prop23_ratio_band(om, mu, N=N, N_ref=N // 2)
        b = res.band
        rep.add(f"band {om.name}/{mu.name}", b.spread <= spread_max and b.stable, b.spread,
                spread_max, lo=b.lo, hi=b.hi, drift=b.drift, excluded=res.excluded)
        rep.data[f"{om.name}/{mu.name}"] = res.to_dict()
    return rep


def prop24_residuals(omegas=None, mus=None, zs=(0.0, 0.5, 0.9), degree=16, count=3,
                     seed=CORPUS_SEED, tol=1e-7):
    rep = SuiteReport("prop24", "Proposition 2.4: reproducing formula for D^mu through B^omega")
    omegas = omegas or [builtin_weight("constant"), builtin_weight("standard", beta=2.0)]
    mus = mus or [builtin_weight("constant"), builtin_weight("standard", beta=0.5)]
    rng = np.random.default_rng(seed)
    polys = [TaylorPoly(rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1))
             for _ in range(count)]
    for om in omegas:
        for mu in mus:
            worst = max(repro_identity_residual(f, om, mu, z) for f in polys for z in zs)
            rep.add(f"residual {om.name}/{mu.name}", worst <= tol, worst, tol)
        worst = max(kernel_reproduction_residual(f, om, z) for f in polys for z in zs)
        rep.add(f"kernel reproduction {om.name}", worst <= tol, worst, tol)
    return rep


def multiplier_suite(mus=None, N=8192, tol=STABILITY_TOL):
    rep = SuiteReport("verify-multiplier",
                      "Theorem 1.3: the multiplier lambda_n = mu_{2n+1}^2 / (mu mu-hat)_{2n+1}")
    for mu in mus or [builtin_weight("constant"), builtin_weight("standard", beta=2.0)]:
        b = multiplier_band(mu, N)
        rep.add(f"sup (1-r) M_1(r, lambda^[1]) {mu.name}", np.isfinite(b.hi) and b.stable, b.hi, tol,
                drift=b.drift, variants=b.variants)
    b = mixed_moment_equiv(builtin_weight("constant"))
    ok = b.lo >= 2.0 / 3.0 - 1e-12 and b.hi <= 1.0
    rep.add("mixed-moment band for mu = 1 within [2/3, 1]", ok, [b.lo, b.hi], [2.0 / 3.0, 1.0])
    return rep


# ---------------------------------------------------------------------------
# lacunary constructions
# ---------------------------------------------------------------------------

def lacunary_suite(weights=None, nmax=20, extra=5, growth_min=10.0, norm_tol=0.05):
    rep = SuiteReport("lacunary", "Lemma 4.1 and Proposition 1.1: lacunary radii and the counterexample")
    c = builtin_weight("constant")
    d = dyadic_radii(c, 40)
    n = np.arange(41)
    exact = bool(np.all(d.exponents == 2 ** n))
    rerr = float(np.max(np.abs(d.radii - (1.0 - 2.0 ** -n))))
    rep.add("M_n = 2^n for mu = 1", exact, int(d.exponents[-1]), 2 ** 40)
    rep.add("r_n = 1 - 2^-n for mu = 1", rerr <= 1e-12, rerr, 1e-12)
    for w in weights or builtin_corpus():
        if not classify(w, check_refinement=False).dhat.evidence:
            continue
        b = lacunary_band(w)
        rep.add(f"lacunary band {w.name}", b.bounded and b.stable, [b.lo, b.hi], STABILITY_TOL,
                drift=b.drift, min_complement=b.variants["min_complement"][0])
    cr = counterexample_report(c, nmax, extra)
    rep.add(f"B^mu norm drift nmax {nmax} -> {nmax + extra}", cr.norm_drift < norm_tol,
            cr.norm_drift, norm_tol, norm=cr.norm, norm_ref=cr.norm_ref)
    rep.add("partial sums increasing", cr.sums_increasing, None, None)
    rep.add(f"S_{nmax} / S_0", cr.growth >= growth_min, cr.growth, growth_min)
    return rep
