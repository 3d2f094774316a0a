"""Approximate bisection from the second Laplacian eigenvector.

The eigenvector for the second-smallest eigenvalue of L = J J^T splits the
nodes by sign; when the sign split violates the minimum partition size the
nodes are re-thresholded in sorted eigenvector order, so the entries of
least magnitude are the ones that switch sides.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from .ilp import BisectionProblem, Partition, PartitionError, partition_for_side
from .network import Network

_DENSE_LIMIT = 512
_ZERO_TOL = 1e-8


class Rounding(str, Enum):
    PURE_SIGN = "pure-sign"
    SIZE_CONSTRAINED = "size-constrained"


class Weighting(str, Enum):
    """How edge costs enter the incidence entries.

    LITERAL uses +-w_k (weights the quadratic form by w_k^2); SQRT uses
    +-sqrt(w_k) so the quadratic form matches the linear cut cost.
    """

    LITERAL = "literal"
    SQRT = "sqrt"


@dataclass(frozen=True)
class SpectralSolution:
    fiedler: np.ndarray
    lambda2: float
    partition: Partition
    rounding: Rounding
    # the node set assigned +1 by the rounding, before |S| <= |S-bar|
    # normalization; exactly the top-k nodes in eigenvector order
    positive_side: frozenset[int]


def fiedler_vector(net: Network, weights=None) -> tuple[float, np.ndarray]:
    """Second-smallest eigenpair of the (optionally weighted) Laplacian.

    The vector is unit-norm and sign-normalized so its first nonzero entry
    in node-id order is positive.  A zero lambda-2 flags a disconnected
    network.
    """
    if net.n < 2:
        raise PartitionError(f"need at least 2 nodes, got {net.n}")
    L = net.laplacian(weights=weights)
    if net.n <= _DENSE_LIMIT:
        vals, vecs = scipy.linalg.eigh(L.toarray())
        lam2, u2 = float(vals[1]), vecs[:, 1]
    else:
        # deflate the constant vector so the zero eigenvalue cannot interfere
        ones = np.ones(net.n) / np.sqrt(net.n)
        v0 = np.arange(net.n, dtype=float)
        v0 -= v0 @ ones * ones
        vals, vecs = sp.linalg.eigsh(L.tocsc().astype(float), k=2, sigma=-1.0,
                                     which="LM", v0=v0)
        idx = np.argsort(vals)
        lam2, u2 = float(vals[idx[1]]), vecs[:, idx[1]]
    lam_max = float(sp.linalg.norm(L, np.inf))
    if lam2 <= _ZERO_TOL * max(lam_max, 1.0):
        raise PartitionError(
            "second eigenvalue is numerically zero: network is disconnected")
    u2 = u2 / np.linalg.norm(u2)
    u2 = u2 - (u2.sum() / net.n)  # re-orthogonalize against the ones vector
    u2 = u2 / np.linalg.norm(u2)
    scale = np.max(np.abs(u2))
    for v in u2:
        if abs(v) > 1e-12 * scale:
            if v < 0:
                u2 = -u2
            break
    return lam2, u2


def spectral_bisect(prob: BisectionProblem,
                    weighting: Weighting = Weighting.LITERAL) -> SpectralSolution:
    """Round the Fiedler vector into a feasible balanced partition."""
    net = prob.net
    if net.n < 2:
        raise PartitionError(f"need at least 2 nodes, got {net.n}")
    raw = {e.id: prob.weight(e.id) for e in net.edges}
    w = None
    if len(set(raw.values())) > 1 or (raw and next(iter(raw.values())) != 1.0):
        # zero-cost (sensor) edges must not disconnect the graph spectrally
        positive = [v for v in raw.values() if v > 0]
        floor = 1e-3 * (min(positive) if positive else 1.0)
        w = {k: max(v, floor) for k, v in raw.items()}
        if weighting is Weighting.SQRT:
            w = {k: float(np.sqrt(v)) for k, v in w.items()}
    lam2, u2 = fiedler_vector(net, weights=w)

    s_min, _s_max = prob.window
    ids = net.node_ids
    # descending eigenvector value, ties by node id: the top-k prefix is the
    # k-node side maximizing the projection onto the Fiedler vector
    order = sorted(range(net.n), key=lambda b: (-u2[b], ids[b]))
    k_sign = int(np.count_nonzero(u2 > 0.0))
    k = min(max(k_sign, s_min), net.n - s_min)
    rounding = Rounding.PURE_SIGN if k == k_sign else Rounding.SIZE_CONSTRAINED
    positive = frozenset(ids[b] for b in order[:k])
    return SpectralSolution(fiedler=u2, lambda2=lam2,
                            partition=partition_for_side(prob, positive),
                            rounding=rounding, positive_side=positive)
