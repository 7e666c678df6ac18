"""Pure-numpy bath-sum kernel, used when the compiled extension is absent."""
import numpy as np

_CHUNK_ELEMENTS = 1 << 22


def bath_sums(z, modes, weights):
    """S[j, m] = sum_k weights[j, k] / (z[m] - modes[k])."""
    z = np.ascontiguousarray(z, dtype=np.complex128)
    modes = np.ascontiguousarray(modes, dtype=float)
    weights = np.ascontiguousarray(weights, dtype=float)
    if weights.shape[1] != modes.shape[0]:
        raise ValueError("weights must have one column per mode")
    out = np.empty((weights.shape[0], z.shape[0]), dtype=np.complex128)
    step = max(1, _CHUNK_ELEMENTS // max(1, modes.shape[0]))
    for start in range(0, z.shape[0], step):
        zc = z[start:start + step]
        inv = 1.0 / (zc[:, None] - modes[None, :])
        out[:, start:start + step] = (inv @ weights.T).T
    return out
