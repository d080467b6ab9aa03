"""Build the extension module, import it and run a short lifecycle.

    python3 python/smoke_test.py

Set PYH2STACK_LIB to an already built shared library to skip the build.
"""

import os
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build() -> Path:
    prebuilt = os.environ.get("PYH2STACK_LIB")
    if prebuilt:
        return Path(prebuilt)
    subprocess.run(
        ["cargo", "build", "--release", "-p", "h2stack-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    target = Path(os.environ.get("CARGO_TARGET_DIR", ROOT / "target"))
    for name in ("libpyh2stack.so", "libpyh2stack.dylib", "pyh2stack.dll"):
        lib = target / "release" / name
        if lib.exists():
            return lib
    sys.exit("shared library not found under " + str(target / "release"))


def main() -> None:
    lib = build()
    suffix = ".pyd" if lib.suffix == ".dll" else ".so"
    with tempfile.TemporaryDirectory() as tmp:
        shutil.copy(lib, Path(tmp) / ("pyh2stack" + suffix))
        sys.path.insert(0, tmp)
        import pyh2stack as h2

        cfg = h2.RunConfig()
        cfg.horizon = 48
        cfg.j_points = 3
        res = h2.simulate_lifecycle(cfg)
        print(res)
        assert res.eol_years == 7, res.eol_years
        assert abs(sum(res.shares.values()) - 1.0) < 1e-9

        cfg.max_years = 3
        try:
            h2.simulate_lifecycle(cfg)
        except h2.MaxYearsExceededError as e:
            print("expected failure:", e)
        else:
            raise AssertionError("max_years=3 should not reach the threshold")
    print("smoke test ok")


if __name__ == "__main__":
    main()
