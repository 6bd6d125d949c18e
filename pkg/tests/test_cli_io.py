import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specdraft import cli_io as cio
from specdraft.alpha_fit import TarObservation
from specdraft.errors import InsufficientData, NoFeasiblePoint, ParseError, SchemaError
from specdraft.draft_optimizer import optimal_draft_size
from specdraft.scaling_models import TrainingBudgets
from specdraft.specdec_sim import simulate_tar, synth_pair

OPT13B = 12853473280


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_bundled_alpha_table(alpha_table):
    assert len(alpha_table) == 130
    assert len({o.target_id for o in alpha_table}) == 13
    first = alpha_table[0]
    assert (first.draft_id, first.target_id, first.alpha, first.alpha_ci) == ("OPT-125M", "OPT-13B", 0.5959, 0.0018)


def test_alpha_table_empty_and_errors(tmp_path):
    header = ",".join(cio.ALPHA_HEADER) + "\n"
    assert cio.load_alpha_table(write(tmp_path, "e.csv", header)) == []
    bad = write(tmp_path, "b.csv", header + "d,t,20,10,0.6,0.01\nd,t,20,10,1.2,0.01\n")
    with pytest.raises(ParseError, match="row 3") as exc:
        cio.load_alpha_table(bad)
    assert exc.value.row == 3 and exc.value.column == "alpha"
    ppl = write(tmp_path, "p.csv", header + "d,t,0.5,10,0.6,0.01\n")
    with pytest.raises(ParseError, match="draft_ppl"):
        cio.load_alpha_table(ppl)
    nan = write(tmp_path, "n.csv", header + "d,t,abc,10,0.6,0.01\n")
    with pytest.raises(ParseError, match="not a number"):
        cio.load_alpha_table(nan)
    short = write(tmp_path, "s.csv", header + "d,t,20,10\n")
    with pytest.raises(ParseError, match="row 2"):
        cio.load_alpha_table(short)
    with pytest.raises(SchemaError):
        cio.load_alpha_table(write(tmp_path, "h.csv", "a,b,c\n"))
    with pytest.raises(SchemaError):
        cio.load_alpha_table(write(tmp_path, "z.csv", ""))


def test_alpha_table_blank_ci_and_bom(tmp_path):
    p = write(tmp_path, "a.csv", "\ufeff" + ",".join(cio.ALPHA_HEADER) + "\nd,t,20,10,0.6,\n")
    (o,) = cio.load_alpha_table(p)
    assert math.isnan(o.alpha_ci)


def test_tar_samples(tmp_path):
    rows = "".join(f"{g},{1 + 0.5 * g}\n" for g in range(1, 10))
    assert len(cio.load_tar_samples(write(tmp_path, "t.csv", "gamma,tar\n" + rows))) == 9
    with pytest.raises(ParseError, match="row 2"):
        cio.load_tar_samples(write(tmp_path, "b.csv", "gamma,tar\n3,5\n"))
    with pytest.raises(ParseError, match="integer"):
        cio.load_tar_samples(write(tmp_path, "c.csv", "gamma,tar\n2.5,2\n"))


def test_simulated_tar_round_trip(tmp_path):
    pair = synth_pair(100, 0.4, 2)
    obs = [simulate_tar(pair, g, 3000, g).to_tar_observation() for g in range(1, 7)]
    p = tmp_path / "tar.csv"
    cio.write_atomic(p, cio.tar_samples_csv(obs))
    assert cio.load_tar_samples(p) == obs


def test_latency_loader(tmp_path):
    header = ",".join(cio.LATENCY_HEADER) + "\n"
    rows = cio.load_latency(write(tmp_path, "l.csv", header + "a,0.1,2.0,100\nb,0.2,3.0,120\n"))
    assert [r.tokens_generated for r in rows] == [100, 120]
    with pytest.raises(ParseError, match="row 3.*ttot_s"):
        cio.load_latency(write(tmp_path, "m.csv", header + "a,0.1,2.0,100\nb,0.2,-3.0,120\n"))
    with pytest.raises(ParseError, match="tokens"):
        cio.load_latency(write(tmp_path, "n.csv", header + "a,0.1,2.0,0\n"))


def test_latency_report_closed_form():
    rng = np.random.default_rng(0)
    rows = [cio.LatencyRow(f"p{i}", float(a), float(b), int(k)) for i, (a, b, k) in
            enumerate(zip(rng.uniform(0.05, 0.2, 50), rng.uniform(1, 5, 50), rng.integers(50, 500, 50)))]
    rep = cio.latency_report(rows, 125239296, 117313808, OPT13B)
    ttft = np.array([r.ttft_seconds for r in rows])
    tpot = np.array([r.ttot_seconds / r.tokens_generated for r in rows])
    assert rep.n_prompts == 50
    assert rep.ttft_mean == pytest.approx(ttft.mean(), abs=1e-10)
    assert rep.ttft_moe == pytest.approx(1.96 * ttft.std(ddof=1) / math.sqrt(50), abs=1e-10)
    assert rep.tpot_mean == pytest.approx(tpot.mean(), abs=1e-10)
    assert rep.tpot_moe == pytest.approx(1.96 * tpot.std(ddof=1) / math.sqrt(50), abs=1e-10)
    assert round(rep.normalized_distance, 6) == 0.000617


def test_latency_report_constant_rows_and_errors():
    rows = [cio.LatencyRow(str(i), 0.1, 2.0, 100) for i in range(5)]
    rep = cio.latency_report(rows, 2e8, 1e8, 1e10)
    assert rep.ttft_moe == 0 and rep.ttot_moe == 0 and rep.tpot_moe == 0
    assert rep.normalized_distance == pytest.approx(0.01)
    with pytest.raises(InsufficientData):
        cio.latency_report(rows[:1], 2e8, 1e8, 1e10)


def test_bundled_configs(plane, chinchilla, mesh):
    assert (plane.a, plane.b, plane.c) == (-0.0067, 0.012971, 0.642084)
    assert chinchilla.irreducible == 1.8172 and chinchilla.coef_model == 482.01
    assert (mesh.n_points, mesh.m_points, mesh.d_points, mesh.dprime_points) == (10000, 8, 6, 6)
    t5 = cio.load_table5()
    assert len(t5) == 39
    assert sum(r.draft_family == "OPT" for r in t5) == 13
    sizes = cio.load_draft_sizes()
    assert sizes["OPT-125M"] == 125239296


def test_config_errors(tmp_path):
    with pytest.raises(SchemaError):
        cio.load_plane(write(tmp_path, "p.json", json.dumps({"a": 1, "b": 2})))
    with pytest.raises(SchemaError):
        cio.load_grid(write(tmp_path, "g.toml", "[n]\nlow = 1\n"))
    with pytest.raises(FileNotFoundError):
        cio.resolve_path("no-such-file.json")


def test_record_round_trip(tmp_path, sweep_records):
    p = tmp_path / "r.csv"
    cio.write_atomic(p, cio.records_csv(sweep_records))
    assert cio.load_records(p) == sweep_records


def test_write_atomic_leaves_no_temp(tmp_path):
    p = tmp_path / "x.txt"
    cio.write_atomic(p, "one")
    cio.write_atomic(p, "two")
    assert p.read_text() == "two"
    assert [q.name for q in tmp_path.iterdir()] == ["x.txt"]


def _curve_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_emit_curve_argmax_matches_optimizer(mesh, plane, chinchilla):
    b = TrainingBudgets(180e9, 180e9)
    rows = _curve_rows(cio.emit_curve(OPT13B, b, plane, chinchilla, chinchilla, mesh))
    assert len(rows) == 10000
    feas = [r for r in rows if r["feasible"] == "1"]
    best = max(feas, key=lambda r: float(r["throughput"]))
    rec = optimal_draft_size(OPT13B, b, plane, chinchilla, chinchilla, mesh)
    assert float(best["n"]) == rec.optimal_draft
    assert rec.optimal_draft == pytest.approx(117313808.6, rel=0.01)
    # throughput keeps falling as N approaches M
    assert float(feas[-1]["throughput"]) < float(feas[-2]["throughput"])


def test_emit_curve_single_point_and_infeasible(plane, chinchilla):
    b = TrainingBudgets(1e12, 1e12)
    rows = _curve_rows(cio.emit_curve(1e10, b, plane, chinchilla, chinchilla, [1e9]))
    assert len(rows) == 1 and rows[0]["feasible"] == "1"
    rows = _curve_rows(cio.emit_curve(1e10, b, plane, chinchilla, chinchilla, [1e9, 2e10]))
    assert rows[1]["feasible"] == "0" and rows[1]["throughput"] == ""
    with pytest.raises(NoFeasiblePoint):
        cio.emit_curve(1e9, b, plane, chinchilla, chinchilla, [2e9])


def test_report_round_trip():
    rep = cio.Report(cio.ReportKind.ALPHA_ESTIMATE, {"alpha": 0.1 + 0.2, "v": np.float64(1 / 3),
                                                       "h": np.arange(3), "nested": {"t": (1, 2.5)}})
    back = cio.Report.from_json(rep.to_json())
    assert back == rep
    assert back.payload["alpha"] == 0.1 + 0.2
    with pytest.raises(SchemaError):
        cio.Report.from_json('{"kind": "Nope", "payload": {}}')
    with pytest.raises(SchemaError):
        cio.Report.from_json('{"payload": {}}')


@settings(max_examples=200, deadline=None)
@given(st.dictionaries(st.text(max_size=8), st.floats(allow_nan=False, allow_infinity=False)
                       | st.integers(min_value=-2**53, max_value=2**53) | st.text(max_size=8), max_size=6),
       st.sampled_from(list(cio.ReportKind)))
def test_report_round_trip_property(payload, kind):
    rep = cio.Report(kind, payload)
    assert cio.Report.from_json(rep.to_json()) == rep


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(min_value=0, max_value=20), st.floats(min_value=0, max_value=1)),
                max_size=12))
def test_tar_csv_round_trip_property(tmp_path_factory, pairs):
    obs = [TarObservation(g, 1 + f * g) for g, f in pairs]
    p = tmp_path_factory.mktemp("tar") / "t.csv"
    cio.write_atomic(p, cio.tar_samples_csv(obs))
    assert cio.load_tar_samples(p) == obs
