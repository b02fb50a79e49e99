import json
import math

import numpy as np
import pytest

from cubic_ist import harness as h


def _run(argv):
    return h.main(argv)


def test_anchors_resolve():
    for anchor in h.ANCHORS:
        assert h.resolve_anchor(anchor) is not None
    with pytest.raises(KeyError):
        h.resolve_anchor("no-such-anchor")


def test_every_record_anchor_is_registered():
    cfg = h.RunConfig("verify-identities", options={"samples": 5})
    _, res = h.run(cfg)
    assert {r.anchor for r in res.records} <= set(h.ANCHORS)


def test_identity_table_is_deterministic(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"id{i}.csv"
        assert _run(["verify-identities", "--samples", "40", "--seed", "11", "--out", str(path)]) == h.EXIT_OK
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    lines = outs[0].decode().splitlines()
    assert lines[0] == "identity,max_residual,samples"
    assert len(lines) == 1 + len(h.cubicexp.IDENTITY_FAMILIES)


def test_seed_changes_samples():
    a = h.run(h.RunConfig("verify-identities", seed=1, options={"samples": 30}))[1].table
    b = h.run(h.RunConfig("verify-identities", seed=2, options={"samples": 30}))[1].table
    assert a != b


def test_fmt_round_trips():
    for v in (0.1, 1 / 3, 1e-300, -2.5e17):
        assert float(h.fmt(v)) == v
    assert h.fmt(float("nan")) == "nan"


def test_config_validation():
    with pytest.raises(h.ConfigError):
        h.RunConfig("nope").validate()
    with pytest.raises(h.ConfigError) as exc:
        h.RunConfig("forward", tolerances={"det": -1}).validate()
    assert "tolerances.det" in str(exc.value)
    with pytest.raises(h.ConfigError):
        h.RunConfig("forward", seed=-3).validate()


def test_potential_errors_are_usage_errors(tmp_path):
    bad = tmp_path / "p.json"
    bad.write_text(json.dumps({"type": "triangle"}))
    assert _run(["forward", "--potential", str(bad)]) == h.EXIT_USAGE
    bad.write_text(json.dumps({"type": "sech", "decay_rate": 5.0}))
    assert _run(["bound-states", "--potential", str(bad)]) == h.EXIT_USAGE
    with pytest.raises(h.ConfigError):
        h.builtin_potential("samples", {"x": [0, 1, 2, 3], "q": [0, 1, 1, 0]})
    with pytest.raises(h.ConfigError):
        h.builtin_potential("gaussian", {"w": 0})
    with pytest.raises(h.ConfigError):
        h.builtin_potential("gaussian", {"depth": 1})


def test_failed_checks_exit_code(tmp_path):
    grid = tmp_path / "g.json"
    grid.write_text(json.dumps({"points": [{"re": 0.4}, {"re": 0.7}]}))
    out = tmp_path / "f.csv"
    code = _run(["forward", "--lambda-grid", str(grid), "--tol", "det=1e-300", "--out", str(out)])
    assert code == h.EXIT_FAILED_CHECKS
    header = out.read_text().splitlines()[0].split(",")
    assert header == list(h.FORWARD_COLUMNS)
    assert _run(["forward", "--lambda-grid", str(grid), "--out", str(out)]) == h.EXIT_OK


def test_numeric_exit_code(tmp_path):
    data = tmp_path / "d.json"
    sc = [{"t": t, "re": math.exp(-t * t)} for t in np.linspace(0, 6, 30)]
    data.write_text(json.dumps({"bound": [], "sc2": sc}))
    assert _run(["invert", "--data", str(data)]) == h.EXIT_NUMERIC


def test_invert_soliton_table(tmp_path):
    data = tmp_path / "d.json"
    data.write_text(json.dumps({"bound": [{"kappa": 1.0, "b_re": 1.0}]}))
    out = tmp_path / "q.csv"
    assert _run(["invert", "--data", str(data), "--x-min", "-2", "--x-max", "2", "--out", str(out)]) == h.EXIT_OK
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    assert rows.shape == (1601, 5)
    from cubic_ist.invscatter import closed_form_soliton
    q = closed_form_soliton(1.0, 1.0)(rows[:, 0])
    assert np.max(np.abs(rows[:, 1] + 1j * rows[:, 2] - q)) <= 1e-6 * np.max(np.abs(q))


def test_config_file_is_overridden_by_flags(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 5, "options": {"samples": 7}, "tolerances": {"identity": 1e-9}}))
    args = h._parser().parse_args(["--config", str(cfg), "verify-identities", "--samples", "9"])
    rc = h.config_from_args(args)
    assert rc.seed == 5 and rc.options["samples"] == 9 and rc.tol("identity") == 1e-9


def test_kv_parsing():
    assert h._kv(["q0=0.2", "name=x"], "p") == {"q0": 0.2, "name": "x"}
    with pytest.raises(h.ConfigError):
        h._kv(["q0"], "p")


def test_zero_gaussian_is_zero():
    pot = h.builtin_potential("gaussian", {"q0": 0.0})
    assert pot.is_zero and pot.q1 == 0


def test_bump_mass():
    pot = h.builtin_potential("bump", {"q0": 0.05, "w": 1.5})
    summary = h.potential_summary(pot)
    assert abs(summary["sigma_inf"] - pot.q1) <= 1e-10
    assert np.all(pot(np.array([-1.6, 1.5, 3.0])) == 0)


def test_sampled_potential_from_csv(tmp_path):
    x = np.linspace(-6, 6, 121)
    np.savetxt(tmp_path / "q.csv", np.column_stack([x, 0.1 * np.exp(-x * x)]), delimiter=",",
               header="x,q", comments="")
    (tmp_path / "p.json").write_text(json.dumps({"csv": "q.csv", "decay_rate": 3.0}))
    pot = h.load_potential(tmp_path / "p.json")
    assert pot.name == "samples"
    assert abs(pot.q1 - 0.1 * math.sqrt(math.pi)) < 1e-4


def test_default_lambda_grid_layout():
    grid = h.default_lambda_grid(3.0)
    labels = [p.label for p in grid]
    assert labels.count("real") == 20 and labels.count("imag") == 10
    assert all(abs(p.lam) < 1 for p in grid if p.label != "imag")
    with pytest.raises(h.ConfigError):
        h.default_lambda_grid(0.03)


def test_bound_states_json_reports_condition(tmp_path):
    out = tmp_path / "bs.json"
    assert _run(["bound-states", "--potential", "gaussian", "--param", "q0=0", "--out", str(out)]) == h.EXIT_OK
    body = json.loads(out.read_text())
    assert body["states"] == [] and set(body["condition"]) == {"lhs", "decay_rate", "holds"}


def test_jump_suite_columns():
    cfg = h.RunConfig("jump-residual", potential={"type": "gaussian", "q0": 0.0}, options={"t": [0.5, 1.0]})
    status, res = h.run(cfg)
    assert status == h.EXIT_OK
    assert res.table.splitlines()[0].split(",") == h.JUMP_COLUMNS
    assert len(res.records) == 4


def test_threads_env(monkeypatch):
    monkeypatch.setenv("CUBIC_IST_THREADS", "3")
    assert h.threads() == 3
    assert h._pmap(lambda v: v * v, [1, 2, 3]) == [1, 4, 9]
