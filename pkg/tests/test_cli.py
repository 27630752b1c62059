"""End-to-end runs of the bernstein-lab command line."""

import io

import pandas as pd
import pytest

from bernstein_lab.config import CONFIGS_DIR
from bernstein_lab.pipeline.exports import (
    DENSITY_COLUMNS,
    FK_COLUMNS,
    ROOT_COLUMNS,
    VERIFY_COLUMNS,
)
from bernstein_lab.pipeline.main_pipeline import main

EXAMPLE1 = str(CONFIGS_DIR / "example1.cfg")


@pytest.fixture
def model_file(tmp_path):
    path = tmp_path / "cosine.cfg"
    path.write_text("geometry=interval\nhorizon=1\nphi=1,0.5\npsi=1,0.25\n", encoding="utf-8")
    return str(path)


def run(capsys, *argv: str) -> tuple[int, pd.DataFrame | None]:
    status = main(list(argv))
    out = capsys.readouterr().out
    return status, pd.read_csv(io.StringIO(out)) if out else None


class TestUsage:

    @pytest.mark.parametrize("argv", [
        ["frobnicate"],
        ["roots", "--bogus"],
        ["roots", "--count", "0"],
        ["simulate", "--paths", "10"],
        ["simulate", "--model", EXAMPLE1, "--seed", "-3"],
        ["verify", "--model", EXAMPLE1, "--only", "nonsense"],
        ["density", "--model", EXAMPLE1, "--format", "parquet"],
        ["simulate", "--model", EXAMPLE1, "--steps", "1"],
        ["fk", "--model", EXAMPLE1, "--x", "0.5", "--t", "0.5", "--steps", "1"],
        ["verify", "--model", EXAMPLE1, "--paths", "50"],
    ])
    def test_usage_errors(self, argv, capsys):
        assert main(argv) == 2
        assert capsys.readouterr().out == ""

    def test_help(self, capsys):
        assert main(["--help"]) == 0


class TestRoots:

    def test_first_rows(self, capsys):
        status, frame = run(capsys, "roots", "--count", "5")
        assert status == 0
        assert list(frame.columns) == ROOT_COLUMNS
        assert len(frame) == 5
        assert frame.loc[0, "n"] == 1
        assert frame.loc[0, "mu"] == 0.0
        assert frame.loc[1, "sqrt_mu"] == pytest.approx(3.8317059702075125, abs=1e-12)
        assert (frame["residual"].abs() < 1e-12).all()

    def test_out_file(self, tmp_path, capsys):
        out = tmp_path / "roots.csv"
        assert main(["roots", "--count", "3", "--out", str(out)]) == 0
        assert capsys.readouterr().out == ""
        assert out.read_text().splitlines()[0] == "n,mu,sqrt_mu,residual"

    def test_too_many(self, capsys):
        assert main(["roots", "--count", "65"]) == 1


class TestDensity:

    def test_default_times(self, capsys):
        status, frame = run(capsys, "density", "--model", EXAMPLE1, "--grid", "11")
        assert status == 0
        assert list(frame.columns) == DENSITY_COLUMNS
        assert sorted(frame["t"].unique()) == [0.0, 0.25, 0.5, 0.75, 1.0]
        assert len(frame) == 55
        # psi = 1 gives a vanishing forward drift; phi = 1 + cos(pi x) / 2 does not
        assert (frame["b_star"].abs() < 1e-12).all()
        assert frame["b"].abs().max() > 0.1

    def test_explicit_times(self, model_file, capsys):
        status, frame = run(capsys, "density", "--model", model_file, "--grid", "5",
                            "--times", "0.1,0.9")
        assert status == 0
        assert list(frame["t"].unique()) == [0.1, 0.9]
        assert frame["rho"].gt(0).all()

    def test_time_out_of_range(self, capsys):
        assert main(["density", "--model", EXAMPLE1, "--times", "2"]) == 1

    def test_parquet(self, tmp_path, capsys):
        out = tmp_path / "density.parquet"
        args = ["density", "--model", EXAMPLE1, "--grid", "3", "--format", "parquet",
                "--out", str(out)]
        assert main(args) == 0
        assert list(pd.read_parquet(out).columns) == DENSITY_COLUMNS


class TestSimulate:

    def test_columns(self, model_file, capsys):
        status, frame = run(capsys, "simulate", "--model", model_file, "--paths", "4",
                            "--steps", "20", "--seed", "1", "--threads", "1")
        assert status == 0
        assert list(frame.columns) == ["path_id", "t", "z"]
        assert len(frame) == 4 * 21
        assert frame["z"].between(0.0, 1.0).all()
        assert list(frame["path_id"].unique()) == [0, 1, 2, 3]

    def test_record_every(self, model_file, capsys):
        status, frame = run(capsys, "simulate", "--model", model_file, "--paths", "2",
                            "--steps", "20", "--record-every", "7", "--threads", "1")
        assert status == 0
        assert frame["t"].iloc[-1] == 1.0

    def test_byte_identical(self, model_file, tmp_path):
        outputs = []
        for threads in ("1", "1", "2"):
            out = tmp_path / f"paths_{len(outputs)}.csv"
            args = ["simulate", "--model", model_file, "--paths", "300", "--steps", "50",
                    "--seed", "11", "--direction", "backward", "--threads", threads,
                    "--out", str(out)]
            assert main(args) == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]

    def test_seed_changes_output(self, model_file, capsys):
        base = ["simulate", "--model", model_file, "--paths", "3", "--steps", "10",
                "--threads", "1"]
        main(base + ["--seed", "1"])
        first = capsys.readouterr().out
        main(base + ["--seed", "2"])
        assert capsys.readouterr().out != first


class TestFeynmanKac:

    def test_both(self, model_file, capsys):
        status, frame = run(capsys, "fk", "--model", model_file, "--x", "0.5", "--t", "0.5",
                            "--paths", "2000", "--steps", "100", "--seed", "1", "--threads", "1")
        assert status == 0
        assert list(frame.columns) == FK_COLUMNS
        assert list(frame["which"]) == ["u", "v"]
        assert (frame["z_score"].abs() < 5).all()

    def test_occupation(self, capsys):
        status, frame = run(capsys, "fk", "--model", EXAMPLE1, "--x", "0.3", "--t", "0.5",
                            "--paths", "1000", "--steps", "100", "--which", "rho",
                            "--threads", "1")
        assert status == 0
        assert list(frame["which"]) == ["rho"]


class TestVerify:

    def test_green_only(self, capsys):
        status, frame = run(capsys, "verify", "--model", EXAMPLE1, "--only", "green",
                            "--threads", "1")
        assert status == 0
        assert list(frame.columns) == VERIFY_COLUMNS
        assert frame["name"].str.startswith("green.").all()
        assert frame["passed"].all()
        assert (frame["metric"] <= frame["threshold"]).all()


class TestRuntimeErrors:

    def test_missing_model_file(self, tmp_path, capsys):
        assert main(["density", "--model", str(tmp_path / "absent.cfg")]) == 1
        assert capsys.readouterr().out == ""

    def test_bad_model_file(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("geometry=interval\nphi=unit\nspeed=3\n", encoding="utf-8")
        assert main(["density", "--model", str(path)]) == 1
        assert capsys.readouterr().out == ""

    def test_non_positive_datum(self, tmp_path, capsys):
        path = tmp_path / "negative.cfg"
        path.write_text("geometry=interval\nphi=1,2\npsi=unit\n", encoding="utf-8")
        assert main(["density", "--model", str(path)]) == 1
