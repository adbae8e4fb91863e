"""End-to-end tests of the orlicz-reg command line through :func:`run`.

Each test writes a YAML config into ``tmp_path`` and checks the exit code
and the artifacts. Runs over the shipped example configs are heavy.
"""

import pathlib

import pytest
import yaml

from orlicz_reg.cli import run
from orlicz_reg.conditions import InconsistentReportsError

CONFIGS = pathlib.Path(__file__).resolve().parent.parent / "configs"

POWER_CHECK = {
    "phi": {"family": "power", "params": {"p": 3.0}},
    "domain": {"kind": "interval", "bounds": [-1.0, 1.0]},
    "check": {"r_grid": [0.016, 0.008, 0.004], "ball_count": 8, "t_points": 16, "samples": 16},
}

WEIGHTED_SOLVE = {
    "phi": {"family": "perturbed", "params": {"p": 2.0}, "coefficients": {"a": "1 + x1"}},
    "domain": {"kind": "interval", "bounds": [0.0, 1.0]},
    "grid": {"n": 64},
    "boundary": "x1",
}


def write_config(tmp_path: pathlib.Path, raw: dict, name: str = "run") -> pathlib.Path:
    raw = {**raw, "output_dir": str(tmp_path / name)}
    path = tmp_path / f"{name}.yaml"
    path.write_text(yaml.safe_dump(raw))
    return path


def shipped(tmp_path: pathlib.Path, name: str) -> pathlib.Path:
    raw = yaml.safe_load((CONFIGS / name).read_text())
    return write_config(tmp_path, raw, pathlib.Path(name).stem)


# =============================================================================
# Input errors
# =============================================================================


class TestInvalidInput:

    def test_missing_file(self, tmp_path):
        assert run(["check", "--config", str(tmp_path / "none.yaml")]) == 2

    def test_unknown_key(self, tmp_path):
        path = write_config(tmp_path, {**POWER_CHECK, "plot": True})
        assert run(["check", "-c", str(path)]) == 2

    def test_missing_section(self, tmp_path):
        path = write_config(tmp_path, POWER_CHECK)
        assert run(["solve", "-c", str(path)]) == 2

    def test_bad_eps_flag(self, tmp_path):
        path = write_config(tmp_path, POWER_CHECK)
        assert run(["check", "-c", str(path), "--eps", "2"]) == 2

    def test_regularize_needs_radius(self, tmp_path):
        path = write_config(tmp_path, POWER_CHECK)
        assert run(["regularize", "-c", str(path)]) == 2

    def test_config_flag_required(self):
        with pytest.raises(SystemExit):
            run(["check"])


# =============================================================================
# check
# =============================================================================


class TestCheck:

    def test_power_function(self, tmp_path):
        path = write_config(tmp_path, POWER_CHECK)
        assert run(["check", "-c", str(path)]) == 0
        out = tmp_path / "run"
        report = (out / "report.txt").read_text()
        assert "omega ≡ 0" in report
        assert "predicted regularity: C^1alpha" in report
        header = (out / "conditions.csv").read_text().splitlines()[0]
        assert header == "condition,parameter,verdict,constant,holder_rate"
        assert (out / "modulus.csv").exists()
        assert not (out / "modulus.svg").exists()

    def test_identical_runs_give_identical_bytes(self, tmp_path):
        first = write_config(tmp_path, POWER_CHECK, "first")
        second = write_config(tmp_path, POWER_CHECK, "second")
        assert run(["check", "-c", str(first)]) == 0
        assert run(["check", "-c", str(second)]) == 0
        for name in ("conditions.csv", "modulus.csv"):
            assert (tmp_path / "first" / name).read_bytes() == (
                tmp_path / "second" / name
            ).read_bytes()

    def test_broken_implication_chain_is_a_numeric_failure(self, tmp_path, monkeypatch):
        def broken(reports):
            raise InconsistentReportsError("VA1 holds but A1 fails")

        monkeypatch.setattr("orlicz_reg.cli.classify_regularity", broken)
        path = write_config(tmp_path, POWER_CHECK)
        assert run(["check", "-c", str(path)]) == 3

    def test_svg(self, tmp_path):
        path = write_config(tmp_path, {**POWER_CHECK, "svg": True})
        assert run(["check", "-c", str(path), "--eps", "0.5"]) == 0
        assert (tmp_path / "run" / "modulus.svg").exists()
        assert "wVA1(0.5)" in (tmp_path / "run" / "report.txt").read_text()


# =============================================================================
# solve
# =============================================================================


class TestSolve:

    def test_weighted_problem(self, tmp_path):
        path = write_config(tmp_path, WEIGHTED_SOLVE)
        assert run(["solve", "-c", str(path)]) == 0
        out = tmp_path / "run"
        assert len((out / "solution.csv").read_text().splitlines()) == 1 + 65
        assert len((out / "solution_gradient.csv").read_text().splitlines()) == 1 + 64
        assert "converged: yes" in (out / "report.txt").read_text()

    def test_no_convergence_keeps_artifacts(self, tmp_path):
        path = write_config(tmp_path, {**WEIGHTED_SOLVE, "solve": {"max_iterations": 1}})
        assert run(["solve", "-c", str(path)]) == 3
        out = tmp_path / "run"
        assert (out / "solution.csv").exists()
        assert "converged: no" in (out / "report.txt").read_text()


# =============================================================================
# sweep
# =============================================================================


class TestSweep:

    def test_failed_rows_are_reported(self, tmp_path):
        path = write_config(tmp_path, {"sweep": {"points": [[2.0, 1.5, 1.0]]}})
        assert run(["-q", "sweep", "-c", str(path)]) == 0
        lines = (tmp_path / "run" / "sweep.csv").read_text().splitlines()
        assert lines[0].startswith("p,q,beta,predicted_gamma0")
        assert "failed" in lines[1]


# =============================================================================
# Shipped configs
# =============================================================================


@pytest.mark.heavy
class TestShippedConfigs:

    def test_solve_1d(self, tmp_path):
        assert run(["solve", "-c", str(shipped(tmp_path, "solve_1d.yaml"))]) == 0
        report = (tmp_path / "solve_1d" / "report.txt").read_text()
        energy = float(report.split("energy: ")[1].split()[0])
        assert energy == pytest.approx(1.4426950408889634, abs=1e-4)

    def test_regularize(self, tmp_path):
        assert run(["regularize", "-c", str(shipped(tmp_path, "regularize.yaml"))]) == 0
        out = tmp_path / "regularize"
        assert (out / "phi_tilde.csv").exists()
        assert "theta:" in (out / "report.txt").read_text()

    def test_compare(self, tmp_path):
        assert run(["compare", "-c", str(shipped(tmp_path, "compare.yaml"))]) == 0
        rows = (tmp_path / "compare" / "comparison.csv").read_text().splitlines()
        assert len(rows) == 2

    def test_holder(self, tmp_path):
        assert run(["holder", "-c", str(shipped(tmp_path, "holder.yaml"))]) == 0
        out = tmp_path / "holder"
        assert (out / "campanato.csv").exists()
        assert (out / "decay.svg").exists()
