import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracbloch.cli import main, read_coefficients
from fracbloch.config import EXPERIMENTS, ExperimentConfig, parse_weight_spec
from fracbloch.errors import ConfigurationError, InvalidWeightError, SpecParseError


class TestParse:
    def test_families(self):
        assert parse_weight_spec("constant").name == "constant"
        w = parse_weight_spec("standard:beta=2")
        assert w.density(np.array([0.5]))[0] == pytest.approx(2 * 0.75, rel=1e-14)
        e = parse_weight_spec("exp:alpha=1,l=1,beta=1")
        assert e.density(np.array([0.5]))[0] == pytest.approx(np.exp(-2.0), rel=1e-14)
        assert parse_weight_spec("lograpid:alpha=2").params["alpha"] == 2.0
        assert parse_weight_spec(" exponential:alpha=1,l=1,beta=1 ").name == e.name

    @pytest.mark.parametrize("text,pos", [
        ("gauss", 0),
        ("standard;beta=2", 8),
        ("standard:beta", 13),
        ("standard:beta=x", 14),
        ("standard:beta=2,beta=3", 16),
        ("standard:=2", 9),
    ])
    def test_errors_carry_position(self, text, pos):
        with pytest.raises(SpecParseError, match=f"position {pos} "):
            parse_weight_spec(text)

    def test_bad_parameters(self):
        with pytest.raises(SpecParseError):
            parse_weight_spec("standard:beta=-1")
        with pytest.raises(SpecParseError):
            parse_weight_spec("")
        with pytest.raises(SpecParseError):
            parse_weight_spec("tabulated:path=x.csv")

    def test_tabulated(self, tmp_path):
        good = tmp_path / "good.csv"
        r = np.linspace(0, 0.99, 50)
        good.write_text("r,tail\n" + "".join(f"{float(a)!r},{float((1 - a) ** 2)!r}\n" for a in r))
        w = parse_weight_spec(f"tabulated:file={good}")
        assert float(np.exp(w.log_tail_q(np.array([0.5]))[0])) == pytest.approx(0.25, rel=1e-2)
        bad = tmp_path / "bad.csv"
        bad.write_text("r,tail\n0,1\n0.5,0.6\n0.4,0.5\n")
        with pytest.raises(InvalidWeightError):
            parse_weight_spec(f"tabulated:file={bad}")


exp_names = st.sampled_from(EXPERIMENTS)
maybe_spec = st.none() | st.sampled_from(["constant", "standard:beta=2", "lograpid:alpha=2"])


@settings(max_examples=60, deadline=None)
@given(exp=exp_names, ws=st.lists(st.sampled_from(["constant", "standard:beta=0.5"]), max_size=3),
       om=maybe_spec, mu=maybe_spec, trunc=st.none() | st.integers(1, 10 ** 6),
       depth=st.none() | st.integers(1, 400), seed=st.integers(0, 2 ** 32),
       fmt=st.sampled_from(["json", "csv"]), nmax=st.none() | st.integers(0, 40))
def test_config_round_trip(exp, ws, om, mu, trunc, depth, seed, fmt, nmax):
    opts = {} if nmax is None else {"nmax": nmax}
    cfg = ExperimentConfig(exp, ws, om, mu, trunc, depth, seed, None, fmt, opts)
    again = ExperimentConfig.from_json(cfg.to_json())
    assert again == cfg and again.to_json() == cfg.to_json()


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ExperimentConfig("nope")
    with pytest.raises(ConfigurationError):
        ExperimentConfig("classify", format="xml")
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_json('{"experiment": "classify", "colour": 1}')


def _csv(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestSubcommands:
    def test_classify_lograpid(self, capsys):
        assert main(["classify", "--weight", "lograpid:alpha=2"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["verdicts"]["Dhat"] == "evidence-yes"
        assert doc["verdicts"]["Dcheck"] == "evidence-no"

    def test_classify_csv_multiple(self, capsys):
        assert main(["classify", "--weight", "constant", "--weight", "exp:alpha=1,l=1,beta=1",
                     "--format", "csv"]) == 0
        rows = _csv(capsys.readouterr().out)
        assert len(rows) == 8
        got = {(r["weight"], r["class"]): r["verdict"] for r in rows}
        assert got[("constant", "D")] == "evidence-yes"
        assert sum(v == "evidence-no" for (w, c), v in got.items() if c == "D") == 1

    def test_dmu(self, tmp_path, capsys):
        src = tmp_path / "f.csv"
        src.write_text("n,re,im\n0,1,0\n3,1,0.5\n")
        assert main(["dmu", "--weight", "constant", "--coeffs", str(src), "--format", "csv"]) == 0
        rows = _csv(capsys.readouterr().out)
        assert np.allclose([float(r["re"]) for r in rows], [2.0, 0.0, 0.0, 8.0], rtol=1e-14)
        assert float(rows[3]["im"]) == pytest.approx(4.0, rel=1e-14)
        assert main(["dmu", "--beta", "2", "--coeffs", str(src), "--format", "csv"]) == 0
        rows = _csv(capsys.readouterr().out)
        assert float(rows[3]["re"]) == pytest.approx(20.0, rel=1e-14)

    def test_dmu_multipliers(self, capsys):
        assert main(["dmu", "--weight", "constant", "--trunc", "5"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert np.allclose(doc["multipliers"], 2 * np.arange(1, 7))

    def test_read_coefficients(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("re\n1\n2\n")
        assert read_coefficients(p).coeffs.tolist() == [1, 2]
        p.write_text("n,re\n1,1\n1,2\n")
        with pytest.raises(InvalidWeightError):
            read_coefficients(p)

    def test_norms(self, capsys):
        assert main(["norms", "--weight", "standard:beta=2", "--degree", "8", "--grid-depth", "40"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["degree"] == 8 and doc["bmu"]["sup"] > 0

    def test_kernel_asymptotics(self, capsys):
        assert main(["kernel-asymptotics", "--omega", "constant", "--mu", "constant",
                     "--trunc", "2048", "--format", "csv"]) == 0
        rows = _csv(capsys.readouterr().out)
        assert {"r", "a_mod", "m1", "comparison", "ratio"} <= set(rows[0])

    def test_lacunary(self, capsys):
        assert main(["lacunary", "--weight", "constant", "--nmax", "12", "--format", "csv"]) == 0
        rows = _csv(capsys.readouterr().out)
        assert [int(r["M_n"]) for r in rows] == [2 ** n for n in range(13)]

    def test_counterexample(self, capsys):
        assert main(["counterexample", "--weight", "lograpid:alpha=2"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["notes"] and doc["partial_sums_increasing"]

    def test_verify_partition(self, capsys):
        assert main(["verify-partition"]) == 0
        out = capsys.readouterr()
        assert "PASS verify-partition" in out.err
        assert "header" in json.loads(out.out)

    def test_verify_prop23(self, capsys):
        assert main(["verify-prop23", "--omega", "constant", "--mu", "constant", "--trunc", "4096"]) == 0
        assert "Proposition 2.3" in json.loads(capsys.readouterr().out)["header"]

    def test_verify_multiplier(self, capsys):
        assert main(["verify-multiplier", "--weight", "standard:beta=2", "--trunc", "4096"]) == 0

    @pytest.mark.slow
    def test_verify_thm12_constant(self, capsys):
        assert main(["verify-thm12", "--weight", "constant"]) == 0
        assert "Theorem 1.2" in json.loads(capsys.readouterr().out)["header"]

    def test_bad_input_exit_2(self, capsys, tmp_path):
        assert main(["classify", "--weight", "standard:beta"]) == 2
        assert "position" in capsys.readouterr().err
        assert main(["dmu", "--weight", "constant", "--coeffs", str(tmp_path / "missing.csv")]) == 2
        assert main(["lacunary", "--weight", "lograpid:alpha=2", "--nmax", "30"]) == 2
        with pytest.raises(SystemExit):
            main(["frobnicate"])

    def test_csv_determinism(self, tmp_path):
        outs = []
        for k in range(2):
            p = tmp_path / f"o{k}.csv"
            assert main(["norms", "--weight", "exp:alpha=1,l=1,beta=1", "--degree", "20", "--seed", "9",
                         "--format", "csv", "--out", str(p)]) == 0
            outs.append(p.read_bytes())
        assert outs[0] == outs[1] and len(outs[0]) > 100

    def test_config_files(self, tmp_path, capsys):
        saved = tmp_path / "cfg.json"
        assert main(["lacunary", "--weight", "constant", "--nmax", "5", "--save-config", str(saved)]) == 0
        first = capsys.readouterr().out
        assert main(["lacunary", "--config", str(saved)]) == 0
        assert capsys.readouterr().out == first
        assert main(["classify", "--config", str(saved)]) == 2
