"""Fast learning of visual concepts in geometric embedding spaces."""

import os as _os

# Must run before numpy is first imported anywhere in the package, so the
# BLAS thread pools pick it up.
_threads = _os.environ.get("CONCEPTLEARN_THREADS")
if _threads and _threads.isdigit() and int(_threads) >= 1:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                 "VECLIB_MAXIMUM_THREADS", "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"
