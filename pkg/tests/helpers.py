"""Synthetic data shared by the test modules."""
import numpy as np


def gaussian_blobs(n_per_class=100, n_features=168, n_informative=10, separation=5.0, seed=0,
                   classes=("covid", "normal", "pneumonia")):
    """Three unit-variance Gaussian classes.

    Class means differ only on the first ``n_informative`` coordinates,
    where each coordinate of each pair of class means is ``separation``
    standard deviations apart (or equal). Remaining coordinates are pure
    N(0, 1) noise.
    """
    rng = np.random.default_rng(seed)
    m = len(classes)
    centers = np.zeros((m, n_features))
    # class 0 at the origin, class 1 shifted on every informative axis,
    # class 2 shifted up on half of them and down on the rest
    centers[1, :n_informative] = separation
    half = n_informative // 2
    centers[2, :half] = separation
    centers[2, half:n_informative] = -separation
    y_idx = np.repeat(np.arange(m), n_per_class)
    X = rng.normal(size=(y_idx.size, n_features)) + centers[y_idx]
    labels = [classes[i] for i in y_idx]
    return X, labels


def random_image(rng, h, w):
    return rng.random((h, w))
