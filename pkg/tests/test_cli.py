import numpy as np
import pytest

from polyls.cli import main


def write_csv(path, rows):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


@pytest.fixture
def simple_problem(tmp_path):
    x_path = tmp_path / "X.csv"
    y_path = tmp_path / "y.csv"
    write_csv(x_path, [[1.0], [1.0]])
    write_csv(y_path, [[1.0], [1.0]])
    return x_path, y_path


class TestSolveCommand:
    def test_closed_form(self, simple_problem, tmp_path, capsys):
        x_path, y_path = simple_problem
        out = tmp_path / "beta.csv"
        code = main(["solve", "--x", str(x_path), "--y", str(y_path),
                     "--out", str(out)])
        assert code == 0
        assert float(out.read_text().strip()) == pytest.approx(1.0)
        line = capsys.readouterr().out.strip()
        assert line.startswith("objective=")
        assert "kkt=pass" in line
        assert "positives=1" in line
        assert "time_s=" in line

    def test_dimension_mismatch_exits_1(self, tmp_path, capsys):
        x_path = tmp_path / "X.csv"
        y_path = tmp_path / "y.csv"
        write_csv(x_path, [[1.0, 2.0], [3.0, 4.0]])
        write_csv(y_path, [[1.0], [2.0], [3.0]])
        code = main(["solve", "--x", str(x_path), "--y", str(y_path)])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_degenerate_box(self, simple_problem, capsys):
        x_path, y_path = simple_problem
        code = main(["solve", "--x", str(x_path), "--y", str(y_path),
                     "--lower", "0", "--upper", "0"])
        assert code == 0
        assert "objective=1.0 " in capsys.readouterr().out

    def test_malformed_csv_names_location(self, tmp_path, capsys):
        x_path = tmp_path / "X.csv"
        x_path.write_text("1.0,2.0\n3.0,oops\n")
        y_path = tmp_path / "y.csv"
        write_csv(y_path, [[1.0], [2.0]])
        code = main(["solve", "--x", str(x_path), "--y", str(y_path)])
        assert code == 1
        err = capsys.readouterr().err
        assert "row 2" in err and "column 2" in err

    def test_header_row_detected(self, tmp_path, capsys):
        x_path = tmp_path / "X.csv"
        x_path.write_text("value\n1.0\n1.0\n")
        y_path = tmp_path / "y.csv"
        y_path.write_text("y\n1.0\n1.0\n")
        code = main(["solve", "--x", str(x_path), "--y", str(y_path)])
        assert code == 0

    def test_non_convergence_exits_2(self, tmp_path):
        rng = np.random.default_rng(0)
        x_path = tmp_path / "X.csv"
        y_path = tmp_path / "y.csv"
        write_csv(x_path, rng.standard_normal((10, 30)).tolist())
        write_csv(y_path, [[v] for v in rng.standard_normal(10)])
        code = main(["solve", "--x", str(x_path), "--y", str(y_path),
                     "--max-iters", "1", "--kkt-tol", "1e-14"])
        assert code == 2

    def test_sparsify_flag(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        X = rng.uniform(size=(6, 20))
        y = rng.standard_normal(6) + 1.0
        x_path, y_path = tmp_path / "X.csv", tmp_path / "y.csv"
        write_csv(x_path, X.tolist())
        write_csv(y_path, [[v] for v in y])
        out = tmp_path / "beta.csv"
        code = main(["solve", "--x", str(x_path), "--y", str(y_path),
                     "--sparsify", "--out", str(out)])
        assert code == 0
        beta = np.array([float(line) for line in out.read_text().split()])
        assert np.count_nonzero(beta > 1e-9) <= 6

    def test_missing_file_exits_1(self, tmp_path, capsys):
        code = main(["solve", "--x", str(tmp_path / "nope.csv"),
                     "--y", str(tmp_path / "nope2.csv")])
        assert code == 1

    def test_bad_usage_exits_1(self, capsys):
        assert main(["solve"]) == 1


class TestSparsifyCommand:
    def test_orthant_example(self, tmp_path, capsys):
        q_path, w_path = tmp_path / "Q.csv", tmp_path / "w.csv"
        write_csv(q_path, [[1.0, 1.0]])
        write_csv(w_path, [[0.5], [0.5]])
        out = tmp_path / "w2.csv"
        code = main(["sparsify", "--q", str(q_path), "--w", str(w_path),
                     "--polyhedron", "orthant", "--out", str(out)])
        assert code == 0
        w = [float(v) for v in out.read_text().split()]
        np.testing.assert_allclose(w, [1.0, 0.0], atol=1e-10)
        line = capsys.readouterr().out.strip()
        assert "binding=1" in line
        assert "guarantee=1" in line
        assert "unique=true" in line

    def test_already_sparse_is_noop(self, tmp_path, capsys):
        q_path, w_path = tmp_path / "Q.csv", tmp_path / "w.csv"
        write_csv(q_path, [[1.0, 0.0], [0.0, 1.0]])
        write_csv(w_path, [[1.0], [2.0]])
        code = main(["sparsify", "--q", str(q_path), "--w", str(w_path),
                     "--polyhedron", "orthant"])
        assert code == 0
        assert "binding=0" in capsys.readouterr().out

    def test_infeasible_point_exits_1(self, tmp_path, capsys):
        q_path, w_path = tmp_path / "Q.csv", tmp_path / "w.csv"
        write_csv(q_path, [[1.0, 1.0]])
        write_csv(w_path, [[-0.5], [0.5]])
        code = main(["sparsify", "--q", str(q_path), "--w", str(w_path),
                     "--polyhedron", "orthant"])
        assert code == 1

    def test_simplex_requires_budget(self, tmp_path):
        q_path, w_path = tmp_path / "Q.csv", tmp_path / "w.csv"
        write_csv(q_path, [[1.0, 1.0]])
        write_csv(w_path, [[0.5], [0.5]])
        code = main(["sparsify", "--q", str(q_path), "--w", str(w_path),
                     "--polyhedron", "simplex"])
        assert code == 1

    def test_simplex_with_budget(self, tmp_path, capsys):
        q_path, w_path = tmp_path / "Q.csv", tmp_path / "w.csv"
        write_csv(q_path, [[1.0, 2.0, 3.0]])
        write_csv(w_path, [[0.2], [0.3], [0.5]])
        code = main(["sparsify", "--q", str(q_path), "--w", str(w_path),
                     "--polyhedron", "simplex", "--c", "1.0"])
        assert code == 0


class TestBenchCommand:
    def test_sim_row_count(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = main(["bench", "sim", "--n", "8", "--p", "12", "--seed", "7",
                     "--solvers", "cd", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "instance,solver,wall_time_s,objective,n_positive,kkt_passed"
        assert len(lines) == 21

    def test_sim_deterministic_bytes_without_timing(self, tmp_path):
        out1, out2 = tmp_path / "b1.csv", tmp_path / "b2.csv"
        args = ["bench", "sim", "--n", "8", "--p", "12", "--seed", "7",
                "--solvers", "cd,projected_gradient", "--no-timing"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_spike_synthetic_fallback(self, tmp_path):
        out = tmp_path / "spike.csv"
        code = main(["bench", "spike", "--p", "50", "--n", "40",
                     "--k-spikes", "2", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert len(lines) == 2
        assert "spike:synthetic" in lines[1]

    def test_spike_from_data_file(self, tmp_path):
        data = tmp_path / "data.csv"
        rng = np.random.default_rng(11)
        t = np.sort(rng.uniform(0, 10, 40))
        v = np.abs(rng.standard_normal(40))
        with open(data, "w") as fh:
            fh.write("time,value\n")
            for ti, vi in zip(t, v):
                fh.write(f"{ti},{vi}\n")
        out = tmp_path / "spike.csv"
        code = main(["bench", "spike", "--data", str(data), "--p", "60",
                     "--out", str(out)])
        assert code == 0
        assert "spike:data" in out.read_text()

    def test_unreadable_data_exits_1(self, tmp_path):
        code = main(["bench", "spike", "--data", str(tmp_path / "nope.csv"),
                     "--p", "50", "--out", str(tmp_path / "o.csv")])
        assert code == 1
