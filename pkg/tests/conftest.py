import numpy as np


def spearman(x, y) -> float:
    """Spearman rank correlation with average ranks for ties (pure numpy)."""
    def ranks(a):
        order = np.argsort(a, kind="stable")
        r = np.empty(len(a))
        r[order] = np.arange(len(a), dtype=float)
        vals, inverse, counts = np.unique(a, return_inverse=True, return_counts=True)
        sums = np.zeros(len(vals))
        np.add.at(sums, inverse, r)
        return sums[inverse] / counts[inverse]

    rx = ranks(np.asarray(x, dtype=float))
    ry = ranks(np.asarray(y, dtype=float))
    rx -= rx.mean()
    ry -= ry.mean()
    return float((rx * ry).sum() / np.sqrt((rx**2).sum() * (ry**2).sum()))
