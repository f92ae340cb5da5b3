"""Per-sequence discriminant fitting over trajectory feature histories.

Each trajectory contributes a queue of recent features.  Class centroids are
recency-weighted: an observation of age t' (frames before the current one)
carries weight lambda0**t', so the centroid leans toward the newest samples;
lambda0 = 1 recovers the plain mean with the identical summation order.
Scatter matrices are built from those centroids, the within-class scatter is
shrunk to keep it positive-definite, and the projection is the top
min(C - 1, D) generalized eigenvectors of (S_B, S_W_reg).  A PCA fit over the
same pooled samples is provided purely as the comparison arm.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyQueueError,
    EmptySampleSetError,
    InsufficientClassesError,
    InsufficientSamplesError,
)
from .linalg import cosine_matrix, generalized_eig, sym_eig

SHRINKAGE_FLOOR = 1e-8


@dataclass
class FeatureQueue:
    """One trajectory's recent features: (age, feature) pairs, newest first.

    Ages count frames before the current one and increase strictly along the
    list; they reflect true frame gaps, so an observation made k frames ago
    has age k even when intermediate frames went unobserved.  The stacked
    views are cached, so entries must not be mutated after first use.
    """

    identity: int
    entries: list[tuple[int, np.ndarray]]
    capacity: int

    def ages(self) -> np.ndarray:
        cached = getattr(self, "_ages", None)
        if cached is None:
            cached = np.array([age for age, _ in self.entries], dtype=np.float64)
            object.__setattr__(self, "_ages", cached)
        return cached

    def features_matrix(self) -> np.ndarray:
        cached = getattr(self, "_feats", None)
        if cached is None:
            cached = np.stack([f for _, f in self.entries]).astype(
                np.float64, copy=False
            )
            object.__setattr__(self, "_feats", cached)
        return cached


@dataclass
class CentroidSet:
    per_class: dict[int, np.ndarray]
    global_mean: np.ndarray | None
    lambda0: float


@dataclass
class ProjectionMatrix:
    """Linear map from the ambient feature space to the discriminant space."""

    w: np.ndarray                    # D x D'
    eigenvalues: np.ndarray          # descending, length D'
    epsilon: float
    class_count: int
    sample_count: int

    @property
    def input_dim(self) -> int:
        return self.w.shape[0]

    @property
    def output_dim(self) -> int:
        return self.w.shape[1]


def naive_centroid(queue: FeatureQueue) -> np.ndarray:
    """Plain mean of the queue's features (newest-first summation order)."""
    if not queue.entries:
        raise EmptyQueueError(f"queue {queue.identity} is empty")
    return queue.features_matrix().sum(axis=0) / float(len(queue.entries))


def weighted_centroid(queue: FeatureQueue, lambda0: float) -> np.ndarray:
    """Recency-weighted centroid: sum(lambda0**age * f) / sum(lambda0**age)."""
    if not (0.0 < lambda0 <= 1.0):
        raise ValueError("lambda0 must lie in (0, 1]")
    if not queue.entries:
        raise EmptyQueueError(f"queue {queue.identity} is empty")
    weights = lambda0 ** queue.ages()
    return (weights[:, None] * queue.features_matrix()).sum(axis=0) / weights.sum()


def weighted_global_mean(queues, lambda0: float) -> np.ndarray:
    """Recency-weighted mean over the union of all queues' entries."""
    if not (0.0 < lambda0 <= 1.0):
        raise ValueError("lambda0 must lie in (0, 1]")
    queues = [q for q in queues if q.entries]
    if not queues:
        raise EmptySampleSetError("no samples in any queue")
    ages = np.concatenate([q.ages() for q in queues])
    feats = np.concatenate([q.features_matrix() for q in queues], axis=0)
    weights = lambda0 ** ages
    return (weights[:, None] * feats).sum(axis=0) / weights.sum()


def compute_centroids(queues, lambda0: float) -> CentroidSet:
    per_class = {q.identity: weighted_centroid(q, lambda0) for q in queues}
    global_mean = weighted_global_mean(queues, lambda0) if per_class else None
    return CentroidSet(per_class, global_mean, lambda0)


def _mirror(g: np.ndarray) -> np.ndarray:
    # exact bitwise symmetry: fill the upper triangle from the lower
    return np.tril(g) + np.tril(g, -1).T


def scatter_within(queues, centroids: CentroidSet) -> np.ndarray:
    """Within-class scatter: unweighted deviations from each class centroid."""
    deviations = []
    dim = None
    for q in queues:
        if q.identity not in centroids.per_class:
            raise ValueError(f"no centroid for queue {q.identity}")
        center = centroids.per_class[q.identity]
        feats = q.features_matrix()
        if dim is None:
            dim = feats.shape[1]
        if feats.shape[1] != dim or center.shape[0] != dim:
            raise DimensionMismatchError(
                f"queue {q.identity} dim {feats.shape[1]} vs {dim}"
            )
        deviations.append(feats - center)
    stacked = np.concatenate(deviations, axis=0)
    return _mirror(stacked.T @ stacked)


def scatter_between(queues, centroids: CentroidSet) -> np.ndarray:
    """Between-class scatter: integer-count-weighted centroid deviations."""
    gm = centroids.global_mean
    diffs = []
    dim = gm.shape[0]
    for q in queues:
        center = centroids.per_class[q.identity]
        if center.shape[0] != dim:
            raise DimensionMismatchError(
                f"queue {q.identity} dim {center.shape[0]} vs {dim}"
            )
        diffs.append(center - gm)
    stacked = np.stack(diffs)
    counts = np.array([float(len(q.entries)) for q in queues])
    return _mirror(stacked.T @ (counts[:, None] * stacked))


def shrink_within(sw: np.ndarray, epsilon: float) -> np.ndarray:
    """S_W + epsilon * (trace(S_W)/D + floor) * I, keeping exact symmetry."""
    dim = sw.shape[0]
    ridge = epsilon * (float(np.trace(sw)) / dim + SHRINKAGE_FLOOR)
    out = sw.copy()
    out[np.diag_indices(dim)] += ridge
    return out


def fit_projection(queues, lambda0: float, epsilon: float) -> ProjectionMatrix:
    """Fit the discriminant projection from trajectory feature queues.

    Requires at least two classes with one sample each and a total sample
    count of at least C + 1.  The within-class scatter is shrunk before the
    generalized eigensolve, and the top min(C - 1, D) eigenvectors become the
    projection columns.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    queues = list(queues)
    n_classes = len(queues)
    if n_classes < 2:
        raise InsufficientClassesError(
            f"need at least 2 trajectories, got {n_classes}"
        )
    n_samples = sum(len(q.entries) for q in queues)
    if n_samples < n_classes + 1:
        raise InsufficientSamplesError(
            f"need at least {n_classes + 1} samples, got {n_samples}"
        )
    centroids = compute_centroids(queues, lambda0)
    sw = scatter_within(queues, centroids)
    sb = scatter_between(queues, centroids)
    sw_reg = shrink_within(sw, epsilon)
    result = generalized_eig(sb, sw_reg)
    dim = sw.shape[0]
    d_out = min(n_classes - 1, dim)
    return ProjectionMatrix(
        w=np.ascontiguousarray(result.eigenvectors[:, :d_out]),
        eigenvalues=result.eigenvalues[:d_out].copy(),
        epsilon=epsilon,
        class_count=n_classes,
        sample_count=n_samples,
    )


def fit_pca_projection(queues, lambda0: float, target_dim: int) -> ProjectionMatrix:
    """Principal-component fit over the pooled samples (comparison arm only).

    Centering uses the plain unweighted mean; lambda0 is accepted for call
    symmetry with fit_projection but does not enter the fit.  target_dim is
    capped at the feature dimension.
    """
    if target_dim < 1:
        raise ValueError("target_dim must be at least 1")
    queues = [q for q in queues if q.entries]
    total = sum(len(q.entries) for q in queues)
    if total < 2:
        raise InsufficientSamplesError(f"need at least 2 samples, got {total}")
    x = np.concatenate([q.features_matrix() for q in queues], axis=0)
    centered = x - x.sum(axis=0) / float(x.shape[0])
    scatter = _mirror(centered.T @ centered)
    result = sym_eig(scatter)
    d_out = min(target_dim, x.shape[1])
    return ProjectionMatrix(
        w=np.ascontiguousarray(result.eigenvectors[:, :d_out]),
        eigenvalues=result.eigenvalues[:d_out].copy(),
        epsilon=0.0,
        class_count=len(queues),
        sample_count=x.shape[0],
    )


def project(features, proj: ProjectionMatrix) -> np.ndarray:
    """Map features (k x D) into the projection's output space (k x D')."""
    x = np.asarray(features, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != proj.input_dim:
        raise DimensionMismatchError(
            f"feature dim {x.shape[1]} vs projection rows {proj.input_dim}"
        )
    out = x @ proj.w
    return out[0] if single else out


def similarity_parts(det_feats, traj_feats, proj, alpha: float):
    """Integrated similarity plus its per-space components.

    Returns (integrated, original, projected); a component that does not
    enter the blend (alpha at 0 or 1, or no projection) is None and is never
    computed.
    """
    if not (0.0 <= alpha <= 1.0):
        raise ValueError("alpha must lie in [0, 1]")
    if proj is None:
        alpha = 0.0
    original = cosine_matrix(det_feats, traj_feats) if alpha < 1.0 else None
    projected = (
        cosine_matrix(project(det_feats, proj), project(traj_feats, proj))
        if alpha > 0.0
        else None
    )
    if alpha == 0.0:
        integrated = original.copy()
    elif alpha == 1.0:
        integrated = projected.copy()
    else:
        integrated = alpha * projected + (1.0 - alpha) * original
    return integrated, original, projected


def integrated_similarity(det_feats, traj_feats, proj, alpha: float) -> np.ndarray:
    """Blend of projected-space and original-space cosine similarities.

    Entry (i, j) is alpha * cos(f_i W, g_j W) + (1 - alpha) * cos(f_i, g_j);
    with proj absent the call behaves as alpha = 0.
    """
    integrated, _, _ = similarity_parts(det_feats, traj_feats, proj, alpha)
    return integrated


def fisher_criterion(w: np.ndarray, sb: np.ndarray, sw: np.ndarray) -> float:
    """trace((W^T S_W W)^-1 (W^T S_B W)) for a candidate projection W."""
    wm = np.asarray(w, dtype=np.float64)
    num = wm.T @ sb @ wm
    den = wm.T @ sw @ wm
    return float(np.trace(np.linalg.solve(den, num)))
