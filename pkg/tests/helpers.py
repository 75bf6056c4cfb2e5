import numpy as np

from limelle.surrogate import DesignMatrix


def random_system(rng, lam, n_max=50, d_max=20):
    """Binary design with random targets and weights; full column rank whenever lam == 0."""
    while True:
        d = int(rng.integers(1, d_max + 1))
        n = int(rng.integers(d + 2, max(d + 3, n_max + 1)))
        Z = rng.integers(0, 2, size=(n, d)).astype(float)
        y = rng.uniform(0, 1, size=n)
        pi = rng.uniform(0.05, 1.0, size=n)
        X = np.hstack([np.ones((n, 1)), Z])
        if lam > 0 or np.linalg.matrix_rank(X) == d + 1:
            return DesignMatrix(Z, y, pi)
