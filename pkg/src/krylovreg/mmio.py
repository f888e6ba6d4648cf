"""Matrix Market array files for dense matrices and vectors (via :mod:`scipy.io`)."""

import numpy as np
import scipy.io

__all__ = ["write_array", "read_array"]


def write_array(path, a):
    """Write a dense matrix, or a vector as an ``m x 1`` matrix, in array format."""
    a = np.asarray(a)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError("only matrices and vectors can be written")
    if np.iscomplexobj(a) and not np.any(a.imag):
        a = a.real
    # scipy writes shortest round-trip representations, so reads are bit-exact
    scipy.io.mmwrite(str(path), a)


def read_array(path, vector=False):
    """Read a dense array file; ``vector=True`` flattens an ``m x 1`` result."""
    a = scipy.io.mmread(str(path))
    if hasattr(a, "toarray"):
        a = a.toarray()
    a = np.asarray(a)
    if vector:
        if a.ndim == 2 and a.shape[1] != 1:
            raise ValueError(f"{path} holds a {a.shape} matrix, expected a column vector")
        a = a.reshape(-1)
    return a
