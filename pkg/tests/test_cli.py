import subprocess
import sys

CONFIG_OK = """\
# desk-scale defaults
r1 = 1.0
r2 = 2.0
R1 = 1.2
R2 = 1.5
A = 0.0
B = 0.15
eps = 1e-2
kappa = 0.1
m = 3
M = 8
sigma = 1e-3
nz = 48
n_theta = 64
"""

MINIMAL = """\
r1 = 1.0
r2 = 2.0
R1 = 1.2
R2 = 1.5
A = 0.0
B = 0.15
"""


def run_cli(tmp_path, config_text, *args):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(config_text)
    out = tmp_path / "out"
    cmd = [sys.executable, "-m", "annulus_rotor", "--config", str(cfg),
           "--outdir", str(out)] + list(args)
    proc = subprocess.run(cmd, capture_output=True, text=True, timeout=600)
    return proc, out


def test_minimal_config_defaults(tmp_path):
    proc, out = run_cli(tmp_path, MINIMAL, "profile-dump", "--points", "64")
    assert proc.returncode == 0, proc.stderr
    assert (out / "profile.csv").exists()


def test_unknown_key_rejected(tmp_path):
    proc, _ = run_cli(tmp_path, MINIMAL + "bogus = 3\n", "profile-dump")
    assert proc.returncode == 2
    assert "bogus" in proc.stderr


def test_ordering_violation_rejected(tmp_path):
    bad = MINIMAL.replace("R1 = 1.2", "R1 = 1.7")
    proc, _ = run_cli(tmp_path, bad, "profile-dump")
    assert proc.returncode == 2
    assert "r1 < R1 < R2 < r2" in proc.stderr


def test_zero_B_rejected(tmp_path):
    bad = MINIMAL.replace("B = 0.15", "B = 0.0")
    proc, _ = run_cli(tmp_path, bad, "profile-dump")
    assert proc.returncode == 2
    assert "B" in proc.stderr


def test_missing_key_rejected(tmp_path):
    proc, _ = run_cli(tmp_path, "r1 = 1.0\nr2 = 2.0\n", "profile-dump")
    assert proc.returncode == 2
    assert "missing" in proc.stderr.lower()


def test_numeric_failure_exit_code(tmp_path):
    # B = 1 has no rate-slope root at kappa = 0.1: bracket failure -> 3
    bad = CONFIG_OK.replace("B = 0.15", "B = 1.0")
    proc, _ = run_cli(tmp_path, bad, "find-eigen")
    assert proc.returncode == 3
    assert "kappa" in proc.stderr or "invalid" in proc.stderr


def test_poisson_subcommand(tmp_path):
    proc, out = run_cli(tmp_path, CONFIG_OK, "poisson-test", "--n-max", "4")
    assert proc.returncode == 0, proc.stderr
    assert (out / "poisson_manufactured.csv").exists()
    body = (out / "poisson_manufactured.csv").read_text().splitlines()
    assert body[0] == "mode,rel_l2_error"
    assert len(body) == 5


def test_find_eigen_outputs(tmp_path):
    proc, out = run_cli(tmp_path, CONFIG_OK, "find-eigen")
    assert proc.returncode == 0, proc.stderr
    assert "lambda0=" in proc.stdout
    assert "lambda1=" in proc.stdout
    assert "lambda2=" in proc.stdout
    assert (out / "eigen_sigma_table.csv").exists()
    assert (out / "eigen_kernel.csv").exists()
    header = (out / "eigen_kernel.csv").read_text().splitlines()[0]
    assert header == "z,a,b,a_star,b_star"


def test_determinism_byte_identical(tmp_path):
    proc1, out1 = run_cli(tmp_path, CONFIG_OK, "find-eigen")
    body1 = (out1 / "eigen_kernel.csv").read_bytes()
    import shutil
    shutil.rmtree(out1)
    proc2, out2 = run_cli(tmp_path, CONFIG_OK, "find-eigen")
    body2 = (out2 / "eigen_kernel.csv").read_bytes()
    assert proc1.returncode == proc2.returncode == 0
    assert body1 == body2


def test_validate_kernel_subcommand(tmp_path):
    proc, out = run_cli(tmp_path, CONFIG_OK, "validate-kernel")
    assert proc.returncode == 0, proc.stderr
    assert "gap ratio" in proc.stdout
    assert (out / "kernel_offmodes.csv").exists()


def test_transversality_subcommand(tmp_path):
    proc, out = run_cli(tmp_path, CONFIG_OK, "transversality")
    assert proc.returncode == 0, proc.stderr
    assert "pairing T=" in proc.stdout


def test_simulate_subcommand_tiny(tmp_path):
    proc, out = run_cli(tmp_path, CONFIG_OK, "simulate", "--nr", "96",
                        "--ntheta", "32", "--T", "2.0", "--snapshots")
    assert proc.returncode == 0, proc.stderr
    series = (out / "simulate_series.csv").read_text().splitlines()
    assert series[0] == "t,lam_measured,return_error,circulation,energy"
    assert len(series) >= 3
    assert (out / "snapshot_t0.csv").exists()


def test_distance_subcommand(tmp_path):
    proc, out = run_cli(tmp_path, CONFIG_OK, "distance",
                        "--eps-list", "1e-2", "5e-3", "--s-list", "1.0")
    assert proc.returncode == 0, proc.stderr
    lines = (out / "distance.csv").read_text().splitlines()
    assert lines[0] == "eps,kappa,s,norm_estimate,h1,h2"
    assert len(lines) == 3
