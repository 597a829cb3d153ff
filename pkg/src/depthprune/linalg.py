"""Minimal dense linear-algebra kernel.

All accumulation happens in float64 regardless of input dtype; stored
activations may be float32 but high-dimensional dot products cancel badly
at 32 bits.
"""

import numpy as np

from .errors import EmptyInput, ZeroNormInput

ZERO_NORM_THRESHOLD = 1e-12


def cosine(u, v) -> float:
    """Cosine similarity <u,v> / (|u||v|) of two equal-length vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape:
        raise ValueError(f"cosine expects equal-length vectors, got {u.shape} and {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu < ZERO_NORM_THRESHOLD or nv < ZERO_NORM_THRESHOLD:
        raise ZeroNormInput(f"degenerate vector norm ({min(nu, nv):.3e} < {ZERO_NORM_THRESHOLD})")
    return float(np.dot(u, v) / (nu * nv))


def mean_pool(m) -> np.ndarray:
    """Column-wise arithmetic mean over rows; (n, d) -> (d,)."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"mean_pool expects a matrix, got ndim={m.ndim}")
    if m.shape[0] == 0:
        raise EmptyInput("cannot mean-pool a matrix with zero rows")
    return m.mean(axis=0)


def center_rows(m) -> np.ndarray:
    """Subtract the column mean from every row; output columns have mean 0."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"center_rows expects a matrix, got ndim={m.ndim}")
    if m.shape[0] == 0:
        raise EmptyInput("cannot center a matrix with zero rows")
    return m - m.mean(axis=0, keepdims=True)


def token_cosine_mean(h_in, h_out) -> float:
    """Mean over rows t of cosine(h_in[t], h_out[t]) for two (T, d) matrices."""
    h_in = np.asarray(h_in, dtype=np.float64)
    h_out = np.asarray(h_out, dtype=np.float64)
    if h_in.shape != h_out.shape or h_in.ndim != 2:
        raise ValueError(f"shape mismatch: {h_in.shape} vs {h_out.shape}")
    n_in = np.linalg.norm(h_in, axis=1)
    n_out = np.linalg.norm(h_out, axis=1)
    if float(n_in.min()) < ZERO_NORM_THRESHOLD or float(n_out.min()) < ZERO_NORM_THRESHOLD:
        raise ZeroNormInput("a token activation has near-zero norm")
    dots = np.einsum("td,td->t", h_in, h_out)
    return float(np.mean(dots / (n_in * n_out)))
