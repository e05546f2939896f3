"""Experiment configs, runners, CSV/JSON persistence and the CLI shell."""

import json
import math

import numpy as np
import pytest

from chiralab import cli
from chiralab.energy import ModelParams, energy_sliced, scaled_energy
from chiralab.errors import ConfigError, RegimeViolationError, ValidationError
from chiralab.experiments import (
    COLUMNS,
    CSV_MAGIC,
    EXPERIMENTS,
    ExperimentConfig,
    ResultRow,
    _corner_chain,
    emit_plots,
    run_critical_scaling,
    run_experiment,
    run_regime_sweep,
    summarize,
    write_results,
)
from chiralab.geometry import make_uniform_axes

# config hashes double as regression pins for the default grids: they move
# only when the defaults (or the hash recipe) change, which should be loud
_DEFAULT_HASHES = {
    "transition_constant": "815ab59c2f",
    "critical_scaling": "e746875bc1",
    "regime_sweep": "23261c0fda",
    "mm_1d_profile": "507f72cce0",
    "sandwich_audit": "b3c5a46ed4",
}


@pytest.fixture(scope="module")
def audit_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("audit")
    cfg = ExperimentConfig("sandwich_audit", seeds=(0,), output_dir=str(out))
    rows, summary, paths = run_experiment(cfg)
    return cfg, rows, summary, paths


def test_result_row_formatting():
    row = ResultRow(
        experiment="regime_sweep", method="tanh", lam=1e-4, delta=1e-2, k=4,
        scaled_energy=2.5, feasible=False, wall_time_ms=12.5,
    )
    cells = row.as_csv().split(",")
    assert len(cells) == len(COLUMNS) == 18
    assert cells[0] == "regime_sweep"
    assert cells[COLUMNS.index("lam")] == "0.0001"
    assert cells[COLUMNS.index("m_from")] == ""  # None fields stay empty
    assert cells[COLUMNS.index("feasible")] == "0"
    assert cells[-1] == ""  # timing is blanked in the main table
    assert row.as_csv(with_timing=True).split(",")[-1] == "12.5"


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig("no_such_experiment")
    with pytest.raises(ConfigError):
        ExperimentConfig("sandwich_audit", grid=((1e-4, 1e-2),))
    with pytest.raises(ConfigError):
        ExperimentConfig("sandwich_audit", grid=((-1e-4, 1e-2, 4),))
    with pytest.raises(ConfigError):
        ExperimentConfig("sandwich_audit", grid=((1e-4, 1e-2, 2.5),))
    with pytest.raises(ConfigError):
        ExperimentConfig("sandwich_audit", seeds=())
    with pytest.raises(ConfigError):
        ExperimentConfig("sandwich_audit", workers=0)
    # empty grid falls back to the experiment default
    cfg = ExperimentConfig("sandwich_audit")
    assert cfg.grid == ((1e-4, 1e-2, 4), (1e-4, 1e-4, 4))


def test_config_hash_pins_physics_only():
    for name in EXPERIMENTS:
        assert ExperimentConfig(name).config_hash == _DEFAULT_HASHES[name]
    base = ExperimentConfig("sandwich_audit", seeds=(0,))
    moved = ExperimentConfig(
        "sandwich_audit", seeds=(0,), output_dir="elsewhere",
        write_plots=True, workers=4,
    )
    assert moved.config_hash == base.config_hash == "b3c5a46ed4"
    assert ExperimentConfig("sandwich_audit", seeds=(1,)).config_hash != base.config_hash
    assert (
        ExperimentConfig("sandwich_audit", grid=((1e-4, 1e-2, 4),)).config_hash
        != base.config_hash
    )


def test_from_sources_precedence(tmp_path):
    toml = tmp_path / "audit.toml"
    toml.write_text(
        'experiment = "sandwich_audit"\n'
        "seeds = [3, 4]\n"
        'output_dir = "fromfile"\n'
        "grid = [[1e-4, 1e-2, 4]]\n"
    )
    cfg = ExperimentConfig.from_sources("sandwich_audit", str(toml))
    assert cfg.seeds == (3, 4) and cfg.output_dir == "fromfile"
    assert cfg.grid == ((1e-4, 1e-2, 4),)
    # explicit flags override the file
    cfg = ExperimentConfig.from_sources(
        "sandwich_audit", str(toml), out="flagdir", seeds=(5,), plots=True
    )
    assert cfg.output_dir == "flagdir" and cfg.seeds == (5,) and cfg.write_plots

    jsn = tmp_path / "audit.json"
    jsn.write_text(json.dumps({"seeds": [7]}))
    assert ExperimentConfig.from_sources("sandwich_audit", str(jsn)).seeds == (7,)

    bad = tmp_path / "bad.toml"
    bad.write_text("n_sites = 100\n")
    with pytest.raises(ConfigError, match="unknown config keys"):
        ExperimentConfig.from_sources("sandwich_audit", str(bad))
    with pytest.raises(ConfigError, match="not found"):
        ExperimentConfig.from_sources("sandwich_audit", str(tmp_path / "nope.toml"))
    with pytest.raises(ConfigError, match="invoked as"):
        ExperimentConfig.from_sources("regime_sweep", str(toml))
    broken = tmp_path / "broken.toml"
    broken.write_text("seeds = [")
    with pytest.raises(ConfigError, match="cannot parse"):
        ExperimentConfig.from_sources("sandwich_audit", str(broken))


def test_written_files_contract(audit_run):
    cfg, rows, summary, paths = audit_run
    lines = paths["csv"].read_text().splitlines()
    assert lines[0] == CSV_MAGIC
    assert lines[1] == ",".join(COLUMNS)
    assert len(lines) == 2 + len(rows)
    for line in lines[2:]:
        cells = line.split(",")
        assert len(cells) == 18
        assert cells[-1] == ""  # timings live in the sidecar
    sidecar = paths["timings"].read_text().splitlines()
    assert sidecar[0] == "row,wall_time_ms"
    assert len(sidecar) == 1 + len(rows)
    on_disk = json.loads(paths["summary"].read_text())
    assert on_disk == summary
    assert summary["config_hash"] == cfg.config_hash
    assert summary["violations"] == 0
    assert summary["infeasible_rows"] == 0
    for block in summary["per_gamma"]:
        assert block["min_upper_slack"] >= 0.0
        assert block["min_lower_slack"] >= 0.0


def test_write_results_failure_modes(tmp_path, audit_run):
    cfg, rows, _, _ = audit_run
    with pytest.raises(ValidationError):
        write_results(cfg, [])
    blocker = tmp_path / "file"
    blocker.write_text("x")
    bad = ExperimentConfig("sandwich_audit", seeds=(0,), output_dir=str(blocker))
    with pytest.raises(ConfigError, match="cannot create"):
        write_results(bad, rows)


def test_csv_bytes_are_reproducible(tmp_path):
    payload = []
    for sub in ("a", "b"):
        cfg = ExperimentConfig(
            "sandwich_audit", seeds=(0,), output_dir=str(tmp_path / sub)
        )
        _, _, paths = run_experiment(cfg)
        payload.append((paths["csv"].name, paths["csv"].read_bytes()))
    assert payload[0] == payload[1]


def test_corner_chain_energy_closed_form():
    # two helices switching circles at a shared point: the whole cost sits in
    # the two stencils at the switch, and works out to
    # 2*sqrt(2)*sin^2(pi/(2k))*(1 - delta/2)/sqrt(delta)
    for k in (4, 8, 20):
        for delta in (1e-2, 1e-4):
            p = ModelParams(lam=1e-3, delta=delta)
            fam = make_uniform_axes(k)
            chain = _corner_chain(fam, p, 0, 1)
            expected = (
                2.0 * math.sqrt(2.0) * math.sin(math.pi / (2 * k)) ** 2
                * (1.0 - delta / 2.0) / math.sqrt(delta)
            )
            got = scaled_energy(energy_sliced(chain), p)
            assert got == pytest.approx(expected, rel=1e-10)


def test_critical_scaling_guards():
    with pytest.raises(ConfigError, match="k = 2"):
        run_critical_scaling(
            ExperimentConfig("critical_scaling", grid=((1e-5, 1e-4, 6),))
        )
    with pytest.raises(RegimeViolationError):
        run_critical_scaling(
            ExperimentConfig("critical_scaling", grid=((1e-2, 1e-4, 0),))
        )


def test_regime_sweep_small_grid():
    cfg = ExperimentConfig(
        "regime_sweep",
        grid=((1e-3, 6.25e-6, 1), (1e-3, 1e-4, 4), (1e-3, 1e-4, 30)),
    )
    # the k = 1 point has lam/sqrt(delta) = 0.4, so the flip wall is barely
    # resolved; the builder is expected to say so
    with pytest.warns(UserWarning, match="plateau estimates degrade"):
        rows = run_regime_sweep(cfg)
    methods = {(r.k, r.method) for r in rows}
    assert (1, "flip") in methods
    assert (4, "tanh") in methods and (4, "corner") in methods
    assert (4, "anneal") in methods and (30, "anneal") in methods
    summary = summarize(cfg, rows)
    assert summary["target"] == pytest.approx(8.0 / 3.0)
    spans = [pt["span"] for pt in summary["points"]]
    assert spans == sorted(spans)
    assert {pt["k"] for pt in summary["points"]} == {1, 4, 30}
    assert "leftmost_rel_error" in summary
    # at k = 30 the circles crowd the sphere and the corner chain undercuts
    # the smooth wall
    wide = next(pt for pt in summary["points"] if pt["k"] == 30)
    assert wide["method"] in ("corner", "anneal")
    assert wide["min_energy"] < 8.0 / 3.0


def test_emit_plots(audit_run, tmp_path):
    cfg, rows, _, _ = audit_run
    plot_cfg = ExperimentConfig(
        "sandwich_audit", seeds=(0,), output_dir=str(tmp_path)
    )
    written = emit_plots(plot_cfg, rows)
    assert written, "expected at least one figure"
    for path in written:
        assert path.suffix == ".svg" and path.stat().st_size > 0
    with pytest.raises(ValidationError):
        emit_plots(plot_cfg, rows, kinds=("histogram",))
    with pytest.raises(ValidationError):
        emit_plots(plot_cfg, [])


def test_run_experiment_with_plots(tmp_path):
    cfg = ExperimentConfig(
        "sandwich_audit", seeds=(0,), output_dir=str(tmp_path), write_plots=True
    )
    rows, summary, paths = run_experiment(cfg)
    assert paths["plots"] and all(p.exists() for p in paths["plots"])


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "results"
    assert cli.main(["audit", "--out", str(out), "--seeds", "0"]) == 0
    printed = capsys.readouterr().out
    assert "rows" in printed and str(out) in printed
    assert list(out.glob("sandwich_audit-*.csv"))

    assert cli.main(["audit", "--config", str(tmp_path / "missing.toml")]) == 3
    assert "missing.toml" in capsys.readouterr().err

    assert cli.main(["audit", "--seeds", "zero"]) == 3
    capsys.readouterr()

    hot = tmp_path / "hot.toml"
    hot.write_text("grid = [[0.01, 1e-4, 0]]\n")
    assert cli.main(
        ["critical", "--config", str(hot), "--out", str(tmp_path / "r2")]
    ) == 2
    assert "lam/delta^(3/4)" in capsys.readouterr().err
