import json
import math

import numpy as np
import pytest

from nlqrm import sweep
from nlqrm.errors import ConfigError, InvalidSpec
from nlqrm.model import ModelParams
from nlqrm.spectra import TruncationSpec
from nlqrm.sweep import (
    Axis,
    SweepSpec,
    SweepTable,
    emit,
    format_config,
    parse_config_text,
    read_config_text,
    read_csv_table,
    render,
    run_sweep,
    table_columns,
)


def same(a, b):
    if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
        return True
    return a == b


def small_spec(**kw):
    base = dict(
        base=ModelParams(0.1, 1.0, g2=0.02),
        axes=(Axis("g1", 0.0, 0.2, 3),),
        quantities=("qfi_g1", "qfi_eps", "gap", "boundary"),
    )
    base.update(kw)
    return SweepSpec(**base)


def test_minimal_config_defaults():
    spec = parse_config_text("g1_min = 0\ng1_max = 0.1\ng1_steps = 3\n")
    assert spec.base == ModelParams(0.1, 1.0)
    assert spec.trunc == TruncationSpec()
    assert spec.trunc.rtol == 1e-8
    assert spec.quantities == ("qfi_g1", "gap")
    assert [a.name for a in spec.axes] == ["g1"]


def test_collapse_at_grid_edge_rejected():
    with pytest.raises(InvalidSpec):
        parse_config_text("omega = 0.1\ng2_min = 0\ng2_max = 0.06\ng2_steps = 4\n")


@pytest.mark.parametrize("text, line, key", [
    ("g1_min = 0\nbogus = 1\n", 2, "bogus"),
    ("g1_min = 0\ng1_min = 1\n", 2, "g1_min"),
    ("g1_min = 0\njust words\n", 2, None),
    ("omega =\n", 1, "omega"),
])
def test_config_errors_carry_location(text, line, key):
    with pytest.raises(ConfigError) as info:
        read_config_text(text)
    assert info.value.line == line
    assert info.value.key == key


def test_config_type_errors():
    with pytest.raises(ConfigError):
        parse_config_text("g1_min = 0\ng1_max = 1\ng1_steps = 2.5\n")
    with pytest.raises(ConfigError):
        parse_config_text("g1_min = 0\ng1_max = x\ng1_steps = 2\n")
    with pytest.raises(ConfigError):
        parse_config_text("g1_min = 0\ng1_max = 1\n")
    with pytest.raises(ConfigError):
        parse_config_text("g1_min = 0\ng1_max = 1\ng1_steps = 2\naxes = g2\n")
    with pytest.raises(InvalidSpec):
        parse_config_text("g1_min = 0\ng1_max = 1\ng1_steps = 1\n")
    with pytest.raises(InvalidSpec):
        parse_config_text("g1_min = 0\ng1_max = 1\ng1_steps = 2\nquantities = wobble\n")


def test_axis_order_and_scaling():
    spec = parse_config_text(
        "scaled = true\nomega = 0.1\ng2-min = 0\ng2_max = 0.5\ng2_steps = 2\n"
        "g1_min = 1\ng1_max = 2\ng1_steps = 3\neps = 0.1\n"
    )
    pts = spec.points()
    assert len(pts) == 6
    assert pts[1].g1 == pytest.approx(1.5 * pts[1].g_s)
    assert pts[3].g2 == pytest.approx(0.5 * 0.05)
    assert all(p.eps == pytest.approx(0.1) for p in pts)
    assert [p.g2 for p in pts[:3]] == [0.0] * 3  # first axis slowest


def test_log_axis():
    spec = parse_config_text("omega_min = 0.01\nomega_max = 1\nomega_steps = 3\nomega_scale = log\n")
    np.testing.assert_allclose([p.omega for p in spec.points()], [0.01, 0.1, 1.0])
    with pytest.raises(InvalidSpec):
        parse_config_text("eps_min = -1\neps_max = 1\neps_steps = 3\neps_scale = log\n")


def test_round_trip():
    text = (
        "omega = 0.05\nbig_omega = 2\ng2 = 0.01\nscaled = false\naxes = eps, g1\n"
        "g1_min = 0\ng1_max = 0.3\ng1_steps = 4\neps_min = -0.1\neps_max = 0.1\neps_steps = 3\n"
        "quantities = qfi_eps, boundary\nncut = 40\nnmax = 500\ngrowth = 1.3\nrtol = 1e-9\n"
        "method = both\nworkers = 2\ndelta = 5e-5\nquad_rtol = 1e-7\npeak_lo = 0.4\npeak_hi = 1.7\n"
    )
    spec = parse_config_text(text)
    assert parse_config_text(format_config(spec)) == spec
    assert format_config(parse_config_text(format_config(spec))) == format_config(spec)


def test_columns():
    spec = small_spec(qfi_method="both", quantities=("qfi_g1", "prep_time", "peak"))
    cols = table_columns(spec)
    assert cols[:7] == ["omega", "big_omega", "g1", "g2", "eps", "n_c_final", "converged"]
    assert cols[7:] == ["qfi_g1_overlap", "qfi_g1_sum", "prep_time", "qfi_over_time", "g_m", "qfi_max",
                        "prep_time_at_gm", "qfi_over_time_at_gm", "error"]


def test_sweep_values_match_direct_calls():
    from nlqrm.metrology import qfi_overlap, qfi_sum_rule
    table = run_sweep(small_spec(qfi_method="both"))
    col = table.columns.index
    assert len(table.rows) == 3
    for row in table.rows:
        p = ModelParams(0.1, 1.0, row[col("g1")], 0.02)
        assert row[col("qfi_g1_sum")] == pytest.approx(qfi_sum_rule(p, "g1").value, rel=1e-12)
        assert row[col("qfi_g1_overlap")] == pytest.approx(qfi_overlap(p, "g1").value, rel=1e-12)
        assert row[col("converged")] is True and row[col("error")] == ""
    assert table.meta["converged"] == [True] * 3


def test_csv_reparse_bit_exact(tmp_path):
    table = run_sweep(small_spec())
    table.rows[0][table.columns.index("gap")] = math.nan
    path = tmp_path / "t.csv"
    emit(table, "csv", path)
    back = read_csv_table(path)
    assert back.columns == table.columns
    assert back.meta == json.loads(json.dumps(table.meta))
    for r1, r2 in zip(table.rows, back.rows):
        for a, b in zip(r1, r2):
            assert same(a, b) or (a == "" and b == "")
            if isinstance(a, float) and not math.isnan(a):
                assert np.float64(a).tobytes() == np.float64(b).tobytes()


def test_json_and_csv_agree(tmp_path):
    table = run_sweep(small_spec())
    emit(table, "json", tmp_path / "t.json")
    emit(table, "csv", tmp_path / "t.csv")
    payload = json.loads((tmp_path / "t.json").read_text())
    back = read_csv_table(tmp_path / "t.csv")
    assert payload["columns"] == back.columns
    assert payload["meta"] == back.meta
    for jrow, crow in zip(payload["rows"], back.rows):
        for a, b in zip(jrow, crow):
            assert (a is None and math.isnan(b)) or a == b


def test_empty_table_renders_header_and_meta():
    text = render(SweepTable(["a", "b"], [], {"version": "x"}), "csv")
    assert text == '# version: "x"\na,b\n'
    assert json.loads(render(SweepTable(["a"], [], {}), "json")) == {"meta": {}, "columns": ["a"], "rows": []}


def test_no_quantity_rows_still_carry_flags():
    table = run_sweep(small_spec(quantities=()))
    assert table.columns[-1] == "error"
    assert all(row[table.columns.index("converged")] for row in table.rows)


def test_emit_reports_path(tmp_path):
    target = tmp_path / "missing" / "t.csv"
    with pytest.raises(OSError, match="missing"):
        emit(SweepTable(["a"], [], {}), "csv", target)


def test_failures_become_tags():
    spec = SweepSpec(
        base=ModelParams(0.01, 1.0),
        axes=(Axis("g1", 0.03, 0.075, 2),),
        quantities=("qfi_g1", "gap", "boundary"),
    )
    table = run_sweep(spec)
    errors = [row[-1] for row in table.rows]
    assert errors[0] == "eps_c:BiasNeedsNonlinearity"
    assert "qfi_g1:DegenerateGround" in errors[1].split(";")
    assert math.isnan(table.rows[1][table.columns.index("qfi_g1")])
    assert table.rows[1][table.columns.index("gap")] >= 0.0


def test_crash_isolation(monkeypatch):
    real = sweep.evaluate_point

    def flaky(spec, p):
        if p.g1 == 0.1:
            raise RuntimeError("boom")
        return real(spec, p)

    monkeypatch.setattr(sweep, "evaluate_point", flaky)
    table = run_sweep(small_spec())
    errors = [row[-1] for row in table.rows]
    assert errors[1] == "point:RuntimeError"
    assert errors[0] == errors[2] == ""
    assert all(math.isfinite(table.rows[i][table.columns.index("qfi_g1")]) for i in (0, 2))


def test_unconverged_rows_flagged():
    spec = small_spec(trunc=TruncationSpec(n_start=4, n_max=6), base=ModelParams(0.1, 1.0, g2=0.045))
    table = run_sweep(spec)
    assert table.meta["converged"] == [False] * 3
    assert all("ground:TruncationExhausted" in row[-1] for row in table.rows)


def test_worker_count_does_not_change_rows():
    spec = small_spec(axes=(Axis("g2", -0.03, 0.03, 3), Axis("g1", 0.05, 0.2, 3)))
    one = run_sweep(spec)
    many = run_sweep(SweepSpec(**{**spec.__dict__, "workers": 4}))
    assert one.columns == many.columns
    assert render(SweepTable(one.columns, one.rows, {}), "csv") == render(SweepTable(many.columns, many.rows, {}), "csv")
