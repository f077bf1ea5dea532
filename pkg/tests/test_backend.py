from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from mfrac import _backend

SCRIPT = """
import numpy as np
from mfrac import BACKEND
from mfrac.exponents import ExponentConfig
from mfrac.grid import GridFunction
from mfrac.operators import mfi, strong_mfm
rng = np.random.default_rng(4)
cfg = ExponentConfig(1, 2, (2, 2), 2, 0.5)
fs = [GridFunction.from_array(rng.random(32)) for _ in range(2)]
a = mfi(fs, cfg).values
s = ExponentConfig(1, 2, (2, 2), 2, (0.5, 0.5), k=2)
gs = [GridFunction.from_array(rng.random((8, 8))) for _ in range(2)]
b = strong_mfm(gs, s).values
print(BACKEND)
np.save({path!r} + "_mfi.npy", a)
np.save({path!r} + "_mfm.npy", b)
"""


def run(backend, path):
    env = dict(os.environ, MFRAC_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", SCRIPT.format(path=str(path))], env=env,
                         capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_fallback_is_selectable_and_agrees(tmp_path):
    assert run("python", tmp_path / "py") == "python"
    if _backend.BACKEND != "cython":
        pytest.skip("compiled core not built")
    assert run("cython", tmp_path / "cy") == "cython"
    assert np.allclose(np.load(tmp_path / "py_mfi.npy"), np.load(tmp_path / "cy_mfi.npy"),
                       rtol=1e-13, atol=0)
    # maxima involve no arithmetic, so the two backends agree bit for bit
    assert np.array_equal(np.load(tmp_path / "py_mfm.npy"), np.load(tmp_path / "cy_mfm.npy"))


def test_thread_setting_clamps():
    old = _backend.get_threads()
    try:
        _backend.set_threads(0)
        assert _backend.get_threads() == 1
    finally:
        _backend.set_threads(old)


def test_kernels_lookup():
    from mfrac import _fallback

    assert _backend.kernels("python") == (_fallback.range_max, _fallback.mfi_contract)
    if _backend.BACKEND != "cython":
        with pytest.raises(RuntimeError):
            _backend.kernels("cython")
