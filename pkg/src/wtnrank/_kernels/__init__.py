"""Hot kernel behind GoogleMatrix.apply, with backend selection at import.

The compiled Cython kernel fuses the three terms of the damped operator
(sparse links, dangling repair, teleportation) into a single pass over the
CSC arrays. When the extension is missing, or ``WTNRANK_PURE_PYTHON`` is set
to a non-empty value, a scipy-based fallback with identical semantics is
used instead. ``benchmarks/bench_kernels.py`` compares the two.
"""

import os

from . import _apply_np

_FORCE_PURE = bool(os.environ.get("WTNRANK_PURE_PYTHON"))

try:
    from . import _apply_cy
except ImportError:  # extension not built
    _apply_cy = None

DEFAULT_BACKEND = "cython" if (_apply_cy is not None and not _FORCE_PURE) else "numpy"


def available_backends() -> tuple[str, ...]:
    return ("cython", "numpy") if _apply_cy is not None else ("numpy",)


def apply_google(sm, v, alpha, x, backend=None):
    """out = alpha*S'x + (1-alpha)*(sum x)*v with dangling columns as 1/N.

    ``sm`` is a gmatrix.StochasticMatrix; ``backend`` overrides the
    import-time default ("cython" or "numpy").
    """
    backend = backend or DEFAULT_BACKEND
    if backend == "cython":
        if _apply_cy is None:
            raise RuntimeError("cython kernel requested but the extension is not built")
        return _apply_cy.apply_google_csc(
            sm.kernel_indptr, sm.kernel_indices, sm.kernel_data,
            sm.kernel_dangling_ids, v, alpha, x,
        )
    if backend == "numpy":
        return _apply_np.apply_google_scipy(sm.matrix, sm.kernel_dangling_ids, v, alpha, x)
    raise ValueError(f"unknown backend {backend!r}")
