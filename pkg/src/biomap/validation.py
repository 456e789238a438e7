"""Input checks shared by the estimator wrappers."""
from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .core import DetPomdpEnv, NotCheckpointable


def check_env(env, require_checkpoint: bool = True) -> DetPomdpEnv:
    for attr in ("reset", "step", "action_count", "unit_vectors"):
        if not hasattr(env, attr):
            raise TypeError(f"{type(env).__name__} lacks required attribute {attr!r}")
    if env.action_count < 1 or len(env.unit_vectors) != env.action_count:
        raise ValueError("env must expose one unit vector per action")
    if require_checkpoint and not getattr(env, "checkpointable", False):
        raise NotCheckpointable(type(env).__name__)
    return env


def check_action_vectors(X, dim: int) -> np.ndarray:
    X = check_array(X, dtype=None, ensure_2d=True, ensure_min_samples=0)
    if X.shape[1] != dim:
        raise ValueError(f"expected action vectors of length {dim}, got {X.shape[1]}")
    if not np.all(np.equal(np.mod(X, 1), 0)):
        raise ValueError("action vectors must be integer valued")
    return X.astype(np.int64)


def check_beliefs(B, n_states: int, atol: float = 1e-9) -> np.ndarray:
    B = check_array(B, dtype=np.float64, ensure_2d=True)
    if B.shape[1] != n_states:
        raise ValueError(f"expected beliefs over {n_states} states, got {B.shape[1]}")
    if (B < -atol).any() or not np.allclose(B.sum(axis=1), 1.0, atol=1e-6):
        raise ValueError("each belief must be a probability vector")
    return B
