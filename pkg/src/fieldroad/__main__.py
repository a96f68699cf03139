"""Entry point; caps BLAS threads before numpy is imported."""

import os
import sys


def _cap_threads() -> None:
    n = os.environ.get("FIELDROAD_NUM_THREADS")
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, n)


def run() -> None:
    _cap_threads()
    from .cli import main
    sys.exit(main())


if __name__ == "__main__":
    run()
