"""Smoke test for the orlicz_lab_py extension.

Build first:  cargo build --release -p orlicz_lab_py
Run:          python3 python/smoke_test.py [path/to/liborlicz_lab_py.so]
"""

import importlib.util
import json
import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def find_library():
    if len(sys.argv) > 1:
        return pathlib.Path(sys.argv[1])
    for profile in ("release", "debug"):
        p = ROOT / "target" / profile / "liborlicz_lab_py.so"
        if p.exists():
            return p
    sys.exit("liborlicz_lab_py.so not found; run cargo build -p orlicz_lab_py")


def load(lib):
    # python wants the module file to carry the module name
    tmp = pathlib.Path(tempfile.mkdtemp())
    target = tmp / "orlicz_lab_py.so"
    shutil.copy(lib, target)
    spec = importlib.util.spec_from_file_location("orlicz_lab_py", target)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def close(a, b, tol):
    return abs(a - b) <= tol * max(abs(b), 1e-300)


def main():
    ol = load(find_library())
    print("orlicz_lab_py", ol.__version__)

    l2 = ol.OrliczSpec.power(2.0)
    assert close(l2.sequence_norm([3.0, -4.0]), 5.0, 1e-9)
    assert close(ol.luxemburg_norm(l2, ol.Function.constant(2.0)), 2.0, 1e-9)
    (a, _), (b, _) = ol.OrliczSpec.power(1.5).indices_at_infinity()
    assert close(a, 1.5, 1e-6) and close(b, 1.5, 1e-6)
    assert ol.OrliczSpec.power(1.5).delta2("global") > 0

    back = ol.OrliczSpec.from_json(l2.to_json())
    assert close(back(3.0), 9.0, 1e-12)
    try:
        ol.OrliczSpec.from_json('{"kind": "power",')
        raise AssertionError("malformed spec accepted")
    except ValueError as e:
        assert "line" in str(e)

    f = ol.Function.steps([0.0, 0.25, 1.0], [1.0, 3.0])
    g = f.rearrangement()
    assert close(g(0.1), 3.0, 1e-12) and close(g.distribution(2.0), 0.75, 1e-9)

    # Example 1: ψ^{-1}(t) against t^{1/p} ln^{1/(2p)}(e/t)
    p = 1.5
    m, f = ol.example1(p)
    psi = ol.build_psi(m, f)
    ratios = [
        psi.inverse(t) / (t ** (1 / p) * (1 - math.log(t)) ** (1 / (2 * p)))
        for t in (10.0 ** (-k / 2) for k in range(17))
    ]
    band = max(ratios) / min(ratios)
    assert band <= 3.0, band
    print(f"example1 inverse band {band:.3f}")

    v = json.loads(ol.verdict(*ol.example2()))
    print("example2 verdict:", v["strongly_embedded"], v["equicontinuous"])
    assert v["strongly_embedded"] == "yes" and v["equicontinuous"] == "yes"
    print("ok")


if __name__ == "__main__":
    main()
