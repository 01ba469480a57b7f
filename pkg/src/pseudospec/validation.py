"""Input validation helpers shared by the estimators and the functional API."""

import numpy as np

from .exceptions import DimensionError, PreconditionError


def check_matrix(A, square=True, name="A"):
    """Return ``A`` as a finite 2-D complex128 array.

    Raises DimensionError for non-2-D or (when ``square``) non-square input and
    ValueError for NaN/Inf entries.
    """
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2 or M.size == 0:
        raise DimensionError(f"{name} must be a nonempty 2-D matrix, got shape {M.shape}")
    if square and M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return M


def check_vector(z, length=None, name="z"):
    v = np.atleast_1d(np.asarray(z, dtype=complex))
    if v.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise DimensionError(f"{name} has length {v.shape[0]}, expected {length}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return v


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise PreconditionError(f"{name} must be a positive finite number, got {value}")
    return value


def check_box(box):
    re_min, re_max, im_min, im_max = (float(b) for b in box)
    if not (re_min < re_max and im_min < im_max):
        raise PreconditionError(f"degenerate box {box}")
    return re_min, re_max, im_min, im_max


def check_resolution(resolution):
    if np.isscalar(resolution):
        resolution = (resolution, resolution)
    n_re, n_im = (int(r) for r in resolution)
    if n_re < 1 or n_im < 1:
        raise PreconditionError(f"resolution must be positive, got {resolution}")
    return n_re, n_im
