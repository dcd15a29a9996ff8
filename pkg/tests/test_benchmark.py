import subprocess
import sys
from pathlib import Path

import pytest

from fleetbalance.solver import kernels

SCRIPT = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"


@pytest.mark.skipif(kernels.compiled_kernels is None, reason="compiled kernels not built")
def test_benchmark_smoke():
    proc = subprocess.run(
        [sys.executable, str(SCRIPT), "--sizes", "5", "--repeat", "1", "--skip-solve"],
        capture_output=True, text=True, check=False, timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    lines = proc.stdout.splitlines()
    assert lines[0].split() == ["case", "python", "compiled", "speedup"]
    assert len(lines) == 4


def test_pure_python_fallback_selected_by_env():
    code = "from fleetbalance.solver import kernels; print(kernels.BACKEND)"
    env = {"FLEETBALANCE_PURE_PYTHON": "1", "PATH": ""}
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"
