import argparse
import json
from unittest.mock import patch

import numpy as np
import pytest

import ensemble_logreg_cli as cli
from src.meanfield import GaussianMoments, probit_predictive
from src.utils import ArtifactStore, sha256_file


def run_cli(*argv):
    """Run the CLI and return its exit code (0 when it returns normally)."""
    try:
        cli.main([str(a) for a in argv])
    except SystemExit as e:
        return e.code
    return 0


@pytest.fixture
def dataset_file(tmp_path):
    """A small synthetic logistic dataset written through the CLI."""
    out = tmp_path / "data"
    assert run_cli("synthesize", "--D", 3, "--N", 40, "--out", out) == 0
    return out / "dataset_seed0.csv"


class TestArgumentTypes:
    """Tests for the argparse value converters."""

    def test_positive_int(self):
        """Test accepted and rejected integers."""
        assert cli.positive_int("7") == 7
        for bad in ("0", "-3", "2.5", "many"):
            with pytest.raises(argparse.ArgumentTypeError):
                cli.positive_int(bad)

    def test_positive_float(self):
        """Test that zero, negatives, inf and NaN are rejected."""
        assert cli.positive_float("1e-3") == 1e-3
        for bad in ("0", "-0.1", "inf", "nan", "x"):
            with pytest.raises(argparse.ArgumentTypeError):
                cli.positive_float(bad)

    def test_size_list(self):
        """Test comma-separated ensemble sizes."""
        assert cli.size_list("50, 100,200") == [50, 100, 200]
        with pytest.raises(argparse.ArgumentTypeError):
            cli.size_list("10,0")


class TestUsageErrors:
    """Tests for exit code 2 on invalid command lines."""

    def test_zero_samples(self, tmp_path):
        """Test that --N 0 is a usage error."""
        assert run_cli("synthesize", "--N", 0, "--out", tmp_path) == 2

    def test_missing_command(self):
        """Test that a bare invocation is a usage error."""
        assert run_cli() == 2

    def test_inconsistent_homotopy_steps(self, dataset_file, tmp_path):
        """Test that Δs·K ≠ 1 is rejected before running."""
        code = run_cli("sample", "--data", dataset_file, "--method", "homotopy", "--dt", 0.1, "--steps", 5,
                       "--out", tmp_path / "run")
        assert code == 2


class TestSynthesize:
    """Tests for the synthesize subcommand."""

    def test_default_dataset(self, tmp_path):
        """Test 300 rows, the reference parameter and the manifest."""
        out = tmp_path / "out"
        assert run_cli("synthesize", "--out", out) == 0
        header, rows = ArtifactStore.read_matrix(out / "dataset_seed0.csv")
        assert rows.shape == (300, 21)
        assert header[-1] == 'label'
        assert (out / "theta_ref_seed0.csv").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest['subcommand'] == 'synthesize'
        assert set(manifest['outputs']) == {'dataset_seed0.csv', 'theta_ref_seed0.csv'}

    def test_same_seed_same_bytes(self, tmp_path):
        """Test that a repeated seed writes byte-identical data."""
        for name in ("a", "b"):
            assert run_cli("synthesize", "--D", 4, "--N", 25, "--seed", 11, "--out", tmp_path / name) == 0
        assert sha256_file(tmp_path / "a" / "dataset_seed11.csv") == sha256_file(tmp_path / "b" / "dataset_seed11.csv")

    def test_blobs(self, tmp_path):
        """Test that the blobs kind writes labels 1..K."""
        out = tmp_path / "blobs"
        assert run_cli("synthesize", "--kind", "blobs", "--classes", 4, "--N", 40, "--out", out) == 0
        _, rows = ArtifactStore.read_matrix(out / "dataset_seed0.csv")
        assert set(rows[:, -1]) == {1.0, 2.0, 3.0, 4.0}


class TestSample:
    """Tests for the sample subcommand."""

    def test_homotopy_end_to_end(self, dataset_file, tmp_path):
        """Test that a homotopy run writes its ensemble and report."""
        out = tmp_path / "run"
        assert run_cli("sample", "--data", dataset_file, "--method", "homotopy", "--dt", 0.1, "--J", 10,
                       "--out", out) == 0
        header, particles = ArtifactStore.read_matrix(out / "sample_homotopy_J10_seed0.csv")
        assert particles.shape == (10, 3)
        assert header == ['theta_0', 'theta_1', 'theta_2']
        report = json.loads((out / "sample_homotopy_J10_seed0.json").read_text())
        assert report['steps_taken'] == 10
        assert (out / "manifest.json").exists()

    def test_second_order_stops_on_threshold(self, dataset_file, tmp_path):
        """Test that a second-order run ends on the covariance-change threshold."""
        out = tmp_path / "run"
        assert run_cli("sample", "--data", dataset_file, "--method", "second-order", "--J", 20,
                       "--out", out) == 0
        report = json.loads((out / "sample_second-order_J20_seed0.json").read_text())
        assert report['terminated_by'] == 'threshold'
        assert report['steps_taken'] < report['config']['max_steps']
        _, particles = ArtifactStore.read_matrix(out / "sample_second-order_J20_seed0.csv")
        assert particles.shape == (20, 3)

    def test_prior_dimension_mismatch(self, dataset_file, tmp_path):
        """Test that a prior file of the wrong dimension exits with code 3."""
        prior_file = tmp_path / "prior.csv"
        prior_file.write_text("p_0,p_1\n1,0\n0,1\n")
        code = run_cli("sample", "--data", dataset_file, "--prior-file", prior_file, "--out", tmp_path / "run")
        assert code == 3


class TestPredict:
    """Tests for the predict subcommand."""

    def test_zero_particle_predicts_one_half(self, tmp_path):
        """Test that θ = 0 gives probability 1/2 at every test point."""
        ensemble = tmp_path / "ensemble.csv"
        ensemble.write_text("theta_0,theta_1\n0,0\n")
        features = tmp_path / "features.csv"
        features.write_text("x_0,x_1\n1,2\n-3,0.5\n")
        out = tmp_path / "pred"
        assert run_cli("predict", "--features", features, "--ensemble", ensemble, "--out", out) == 0
        header, rows = ArtifactStore.read_matrix(out / "predictions_seed0.csv")
        assert header == ['probability', 'confidence']
        np.testing.assert_allclose(rows, 0.5)

    def test_moments_use_probit(self, dataset_file, tmp_path):
        """Test that a Laplace moments file gives the probit predictive at every row."""
        fit = tmp_path / "fit"
        assert run_cli("laplace", "--data", dataset_file, "--out", fit) == 0
        features = tmp_path / "features.csv"
        features.write_text("x_0,x_1,x_2\n1,0,0\n0.5,-2,1\n0,0,0\n")
        out = tmp_path / "pred"
        assert run_cli("predict", "--features", features, "--moments", fit / "laplace_seed0.json",
                       "--out", out) == 0
        header, rows = ArtifactStore.read_matrix(out / "predictions_seed0.csv")
        assert header == ['probability', 'confidence']
        moments = GaussianMoments.from_json(fit / "laplace_seed0.json")
        points = np.array([[1.0, 0.5, 0.0], [0.0, -2.0, 0.0], [0.0, 1.0, 0.0]])
        np.testing.assert_allclose(rows[:, 0], probit_predictive(moments, points))
        assert rows[2, 0] == pytest.approx(0.5)
        np.testing.assert_allclose(rows[:, 1], np.maximum(rows[:, 0], 1 - rows[:, 0]))

    def test_missing_features_file(self, tmp_path):
        """Test that an unreadable input exits with code 5."""
        ensemble = tmp_path / "ensemble.csv"
        ensemble.write_text("theta_0\n0\n")
        code = run_cli("predict", "--features", tmp_path / "absent.csv", "--ensemble", ensemble,
                       "--out", tmp_path / "pred")
        assert code == 5


class TestLaplace:
    """Tests for the laplace subcommand."""

    def test_writes_moments(self, dataset_file, tmp_path):
        """Test that the moments file holds a D-vector mean and an SPD covariance."""
        out = tmp_path / "fit"
        assert run_cli("laplace", "--data", dataset_file, "--out", out) == 0
        moments = json.loads((out / "laplace_seed0.json").read_text())
        assert len(moments['mean']) == 3
        covariance = np.array(moments['covariance'])
        np.testing.assert_allclose(covariance, covariance.T)
        assert np.linalg.eigvalsh(covariance).min() > 0
        assert 'laplace_seed0.json' in json.loads((out / "manifest.json").read_text())['outputs']

    def test_iteration_cap_is_numeric_error(self, dataset_file, tmp_path):
        """Test that an unmet tolerance exits with code 4."""
        code = run_cli("laplace", "--data", dataset_file, "--max-iter", 1, "--tol", 1e-300,
                       "--out", tmp_path / "fit")
        assert code == 4


class TestMeanField:
    """Tests for the meanfield subcommand."""

    def test_second_order_reports_residuals(self, dataset_file, tmp_path, capsys):
        """Test the trajectory columns and the residuals of the final moments."""
        out = tmp_path / "mf"
        assert run_cli("meanfield", "--data", dataset_file, "--T", 1, "--out", out) == 0
        header, rows = ArtifactStore.read_matrix(out / "meanfield_second-order_Jna_seed0.csv")
        assert header[0] == 's' and header[-2:] == ['res_m', 'res_P']
        assert rows[-1, 0] == pytest.approx(1.0)
        payload = json.loads((out / "meanfield_second-order_Jna_seed0.json").read_text())
        assert payload['residual_mean'] >= 0.0
        assert 'res_m' in capsys.readouterr().out

    def test_homotopy_has_no_residual_columns(self, dataset_file, tmp_path, capsys):
        """Test that the homotopy variant neither writes nor prints equilibrium residuals."""
        out = tmp_path / "mf"
        assert run_cli("meanfield", "--data", dataset_file, "--variant", "homotopy", "--out", out) == 0
        header, rows = ArtifactStore.read_matrix(out / "meanfield_homotopy_Jna_seed0.csv")
        assert 'res_m' not in header
        assert rows[-1, 0] == pytest.approx(1.0)
        payload = json.loads((out / "meanfield_homotopy_Jna_seed0.json").read_text())
        assert 'residual_mean' not in payload
        printed = capsys.readouterr().out
        assert 'res_m' not in printed
        assert 'nan' not in printed.split('Artifacts written')[0]


class TestExperiment:
    """Tests for the experiment subcommand."""

    def test_small_recovery(self, tmp_path, capsys):
        """Test that a small recovery run writes one CSV per J, the summary JSON and the manifest."""
        out = tmp_path / "exp"
        assert run_cli("experiment", "recovery", "--J", "5,8", "--repeats", 1, "--D", 3, "--N", 30,
                       "--out", out) == 0
        for size in (5, 8):
            header, rows = ArtifactStore.read_matrix(out / f"recovery_second-order_J{size}_seed0.csv")
            assert header == ['repeat', 'error', 'posterior_error', 'failed']
            assert rows.shape == (1, 4)
            assert np.isfinite(rows[0, :3]).all()
        payload = json.loads((out / "recovery_second-order_Jna_seed0.json").read_text())
        assert [r['J'] for r in payload['results']] == [5, 8]
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest['subcommand'] == 'experiment'
        assert manifest['config']['experiment']['repeats'] == 1
        assert 'to posterior mean' in capsys.readouterr().out

    def test_unknown_recipe(self, tmp_path):
        """Test that an unknown recipe is a usage error."""
        assert run_cli("experiment", "tables", "--out", tmp_path) == 2


class TestCheckConfig:
    """Tests for --check-config."""

    @patch('ensemble_logreg_cli.ConfigManager.package_versions')
    def test_stack_available(self, mock_versions, capsys):
        """Test the success message when numpy and scipy are installed."""
        mock_versions.return_value = {'numpy': '1.26.4', 'scipy': '1.13.0', 'pytest': None}
        assert run_cli("--check-config") == 0
        assert "SUCCESS" in capsys.readouterr().out

    @patch('ensemble_logreg_cli.ConfigManager.package_versions')
    def test_missing_runtime_package(self, mock_versions, capsys):
        """Test exit code 1 when scipy is missing."""
        mock_versions.return_value = {'numpy': '1.26.4', 'scipy': None}
        assert run_cli("--check-config") == 1
        assert "scipy" in capsys.readouterr().out


class TestManifestReplay:
    """Tests for replaying a run from its manifest."""

    def test_replay_reproduces_outputs(self, tmp_path):
        """Test that a replay into a fresh directory writes identical artifacts."""
        first = tmp_path / "first"
        assert run_cli("synthesize", "--D", 3, "--N", 20, "--seed", 5, "--out", first) == 0
        replay = tmp_path / "replay"
        assert run_cli("--manifest", first / "manifest.json", "--manifest-out", replay) == 0
        for name in ("dataset_seed5.csv", "theta_ref_seed5.csv"):
            assert sha256_file(first / name) == sha256_file(replay / name)

    def test_not_a_manifest(self, tmp_path):
        """Test that a JSON file without argv is a usage error."""
        bogus = tmp_path / "bogus.json"
        bogus.write_text('{"outputs": {}}')
        assert run_cli("--manifest", bogus) == 2

    def test_missing_manifest(self, tmp_path):
        """Test that a missing manifest is an I/O error."""
        assert run_cli("--manifest", tmp_path / "nope.json") == 5
