"""Smoke test for the Python extension.

Build first:

    cargo build --release -p aplm-py --features extension-module

then run `python3 python/smoke_test.py`. The script copies the built library
into a temporary directory under the importable name `aplm`.
"""

import importlib
import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        return importlib.import_module("aplm")
    except ImportError:
        pass
    for name in ("libaplm.so", "libaplm.dylib", "aplm.dll"):
        lib = ROOT / "target" / "release" / name
        if lib.exists():
            tmp = pathlib.Path(tempfile.mkdtemp())
            suffix = ".pyd" if name.endswith(".dll") else ".so"
            shutil.copy(lib, tmp / f"aplm{suffix}")
            sys.path.insert(0, str(tmp))
            return importlib.import_module("aplm")
    sys.exit("extension not built; run: cargo build --release -p aplm-py --features extension-module")


def main():
    aplm = load()

    names = aplm.tableau_names()
    assert "BDF2" in names and len(names) == 8, names
    assert max(abs(r) for r in aplm.order_residuals("BDF3", 3)) < 1e-12

    out = aplm.run("test2-riemann", {"nx": "40", "scheme": "BDF2"})
    assert len(out["x"]) == 40 and out["steps"] > 0
    assert all(math.isfinite(u) for u in out["u"])
    assert 1.9 < min(out["u"]) and max(out["u"]) < 4.1

    rep = aplm.converge("BDF2", eps=1.0, base_n=32, levels=3)
    assert math.isnan(rep["rate_u"][0]) and rep["rate_u"][1] > 1.0, rep

    pts = aplm.stability_scan("BDF2", "ap-implicit", 0.4, zr_max=5.0, nr=8, ni=8)
    assert len(pts) == 64 and all(p[3] for p in pts)

    assert abs(aplm.exact_erf_riemann(2.25, 0.25, 4.0, 2.0) - 3.0) < 1e-15
    assert abs(aplm.barenblatt(0.0, 3.0) - 48 ** (-1 / 3)) < 1e-12

    try:
        aplm.run("no-such-preset")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown preset accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
