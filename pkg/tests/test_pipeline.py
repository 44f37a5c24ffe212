import io
import json
import math

import numpy as np
import pytest

from optolattice import cavity_steady as cs
from optolattice import gutzwiller as gz
from optolattice import optomech_dynamics as od
from optolattice import pipeline as pl
from optolattice.errors import InvalidParameterError, RangeError, StageError

SHORT = {"name": "short", "drive": {"preset": "nominal", "cycle": 40.0, "width": 2.0}, "tau_end": 40.0,
         "dtau": 0.01}


def test_stage_consistency(slow_record, curve):
    rec = slow_record
    cols = rec.columns()
    assert np.array_equal(cols["V0"], cols["X2"])
    assert np.array_equal(cols["J"], curve.J(cols["V0"]))
    assert np.array_equal(cols["U"], curve.U(cols["V0"]))
    assert rec.rows().shape == (len(rec.tau), len(pl.RECORD_COLUMNS))


def test_baseline_loop(slow_record):
    rec = slow_record
    a = rec.trace.abs_a
    assert a[0] == pytest.approx(abs(gz.ground_state(rec.J[0], rec.U[0]).order_parameter))
    assert rec.v0[0] == pytest.approx(5.0, rel=1e-9)
    # collapse happens only after the depth passes the critical value
    first = rec.crossings[0]
    at_cross = np.interp(first, rec.tau, rec.v0)
    assert at_cross == pytest.approx(10.76, abs=0.05)
    assert len(rec.crossings) == 2
    # loop closure
    assert rec.trajectory.xi[-1] == pytest.approx(rec.trajectory.xi[0], rel=0.01)
    assert rec.v0[-1] == pytest.approx(rec.v0[0], rel=0.01)


def test_constant_drive_stays_superfluid(nominal, curve):
    base = float(cs.drive_for_intensity(5.0, nominal))
    sc = pl.Scenario(nominal, od.constant_drive(base), tau_end=20.0, dtau=0.01)
    rec = pl.run(sc, curve)
    assert np.max(np.abs(rec.trace.abs_a - rec.trace.abs_a[0])) < 1e-6
    assert set(rec.trace.phase()) == {"superfluid"}
    assert rec.crossings == []


def test_fast_loop_is_rescaled_copy(slow_record, fast_record):
    assert np.array_equal(slow_record.v0, fast_record.v0)
    assert pl.residual_oscillation(fast_record) > pl.residual_oscillation(slow_record)


def test_range_error_names_tau(nominal):
    doc = dict(SHORT, hubbard={"v0_min": 6.0})
    with pytest.raises(StageError) as err:
        pl.run(pl.Scenario.from_dict(doc))
    assert err.value.stage == "hubbard"
    assert isinstance(err.value.error, RangeError)
    assert err.value.error.tau == 0.0


def test_scenario_validation(tmp_path):
    with pytest.raises(InvalidParameterError):
        pl.Scenario.from_dict({"unknown": 1})
    with pytest.raises(InvalidParameterError):
        pl.Scenario.from_dict({"mode": "fast"})
    with pytest.raises(InvalidParameterError):
        pl.Scenario.from_dict({"drive": {"preset": "nominal", "edge": 3}})
    with pytest.raises(InvalidParameterError):
        pl.Scenario.from_dict({"drive": {"y2_lo": 0.01}})
    with pytest.raises(InvalidParameterError):
        pl.Scenario.from_dict({"gutzwiller": {"nmax": 8}})
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"drive": {"y2_lo": 0.01, "y2_hi": 0.05, "tau_rise": 5,
                                          "tau_fall": 10, "width": 1},
                                "initial": {"xi": 0.0}, "mode": "full"}))
    sc = pl.Scenario.load(path)
    assert sc.mode == "full" and sc.initial == (0.0, 0.0)


def test_determinism(curve, tmp_path):
    outs = []
    for k in range(2):
        rec = pl.run(pl.Scenario.from_dict(SHORT), curve)
        d = pl.write_record(rec, tmp_path / f"r{k}")
        outs.append((d / "record.csv").read_bytes())
    assert outs[0] == outs[1]


def test_csv_format():
    buf = io.StringIO()
    pl.write_csv(buf, ["a", "b"], [[1 / 3, "x"]], {"k": 0.1})
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# k=0.10000000000000001"
    assert lines[1] == "a,b"
    assert lines[2] == "0.33333333333333331,x"
    assert float(lines[2].split(",")[0]) == 1 / 3


def test_figure2(nominal):
    header, rows, meta = pl.figure2(nominal, np.linspace(0, 0.08, 81))
    assert header == ["Y2", "root_index", "X2", "xi", "stability"]
    assert meta["critical_depth"] == 10.8
    assert meta["y2_lower"] < meta["critical_depth_y2"] < meta["y2_upper"]
    assert {r[4] for r in rows} == {"stable", "unstable"}


def test_figure3(nominal):
    header, data, _ = pl.figure3(nominal)
    assert header[0] == "xi" and len(header) == 4
    xi = data[:, 0]
    counts = []
    for k, y2 in enumerate((0.03, 0.044, 0.06)):
        v = data[:, k + 1]
        idx = np.nonzero((v[1:-1] < v[:-2]) & (v[1:-1] < v[2:]))[0] + 1
        counts.append(len(idx))
        # grid minima agree with the steady states within a grid step
        stable = [b.displacement for b in cs.steady_states(y2, nominal) if b.stable]
        step = xi[1] - xi[0]
        for i, x in zip(idx, stable):
            assert abs(xi[i] - x) <= step
    assert counts == [1, 2, 1]
    # ξ grid spans every stationary point
    top = max(b.displacement for y2 in (0.03, 0.044, 0.06) for b in cs.steady_states(y2, nominal))
    assert xi[0] < 0 and xi[-1] > top
    _, flat, _ = pl.figure3(nominal, (0.0,), xi)
    np.testing.assert_allclose(flat[:, 1], xi**2 / 2)


def test_figure4_crosses_critical_depth():
    header, data, meta = pl.figure4(pl.Scenario.nominal())
    assert header == ["tau", "Y2", "X2"]
    assert data[:, 2].max() > meta["critical_depth"]
    assert meta["y2_lower"] < meta["y2_upper"]


def test_figure4_below_fold_no_switch(nominal):
    region = cs.bistable_region(nominal)
    base = float(cs.drive_for_intensity(5.0, nominal))
    s = od.DriveSchedule(base, 0.99 * region.y2_upper, 10.0, 60.0, 2.0)
    sc = pl.Scenario(nominal, s, tau_end=80.0, dtau=0.05)
    _, data, _ = pl.figure4(sc)
    assert data[:, 2].max() < region.x2_at_upper


def test_figure5(curve):
    header, data, meta = pl.figure5(pl.Scenario.from_dict(SHORT), curve)
    assert header == ["tau", "ratio_2J_U", "abs_a"]
    crossings = [float(t) for t in meta["crossings_tau"].split()]
    for t in crossings:
        r = np.interp(t, data[:, 0], data[:, 1])
        assert r == pytest.approx(gz.CRITICAL_RATIO, abs=1e-4)


def test_summary_is_json(slow_record):
    s = slow_record.summary()
    json.dumps(s)
    assert s["adiabatic"] and s["norm_drift"] < 1e-8
    assert math.isclose(s["max_rate_per_s"], s["max_rate_over_omega"] * 2 * math.pi * 10)
