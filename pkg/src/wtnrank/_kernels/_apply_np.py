"""Pure-Python (scipy) fallback for the damped-operator apply kernel."""

import numpy as np


def apply_google_scipy(matrix, dangling_ids, v, alpha, x):
    """Three-term composition: alpha*Sx + alpha*mass(dangling)/N + (1-alpha)*(sum x)*v."""
    n = matrix.shape[0]
    out = alpha * (matrix @ x)
    if dangling_ids.size:
        out += alpha * x[dangling_ids].sum() / n
    out += (1.0 - alpha) * x.sum() * v
    return out
