"""Smoke test for the chiralis_py extension.

Build and run:
    cargo build --release -p chiralis-py
    python3 python/smoke_test.py [path/to/libchiralis_py.so]
"""

import importlib.machinery
import importlib.util
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load(path):
    loader = importlib.machinery.ExtensionFileLoader("chiralis_py", str(path))
    spec = importlib.util.spec_from_loader("chiralis_py", loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def main():
    default = ROOT / "target" / "release" / "libchiralis_py.so"
    cp = load(pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else default)

    heis = cp.VertexAlgebra.heisenberg(2)
    assert "1" in heis.labels() and len(heis) > 1
    # [b_1, b_-1] = 1 on the vacuum
    assert heis.mode("b-1", 1, "b-1") == [("1", "1")], heis.mode("b-1", 1, "b-1")
    assert heis.check("borcherds", 2)["violations"] == []

    f0 = cp.Module.fock(heis, "0", 2)
    f1 = cp.Module.fock(heis, "1", 2)
    assert f0.check("borcherds", 2)["violations"] == []

    triv = cp.Module.trivial(cp.VertexAlgebra.trivial())
    h = cp.Complex(triv, triv).homology((-3, 3), 2)
    assert (h["dimH0"], h["dimH1"]) == (1, 0), h

    cx = cp.Complex(f0, f1)
    assert cx.homology((-4, 4), 2)["dimH1"] == 0

    cx = cp.Complex(f0, f0)
    h = cx.homology((-4, 4), 2)
    assert (h["dimH0"], h["dimH1"]) == (1, 1), h
    assert cx.d_squared(2, (-3, 3), 2)["failures"] == []

    report = cp.run("pairing", "")
    assert report["certificate"] is True, report
    print("chiralis_py smoke test passed")


if __name__ == "__main__":
    main()
