"""Nodal decompositions of P1 functions and the Courant bound checks.

A vertex counts as zero when its coefficient is below a relative
threshold; a triangle takes the common sign of its nonzero vertices and
falls into the zero set when the signs conflict.  Nodal domains are
edge-connected components of same-sign triangles, matching the open-set
connectivity of the positive and negative regions of the piecewise
linear representative.
"""

from dataclasses import dataclass

import numpy as np

from . import mesh as meshmod
from ._backend import union_find_label
from .spectral import eigen_clusters

DEFAULT_REL_THRESHOLD = 1e-8


@dataclass(frozen=True)
class NodalDecomposition:
    """Per-triangle component labels (-1 marks the zero set) and count."""

    labels: np.ndarray
    count: int
    threshold_used: float

    def __post_init__(self):
        self.labels.setflags(write=False)


def nodal_components(mesh, u, rel_threshold=DEFAULT_REL_THRESHOLD):
    """Nodal domains of the P1 function with the given coefficients.

    Mixed-sign triangles join the zero set rather than being split; this
    undercounts by at most the one-triangle-wide band around the nodal
    line and sharpens under refinement.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_vertices,):
        raise ValueError("coefficient vector does not match mesh size")
    umax = np.abs(u).max()
    if umax == 0.0:
        raise ValueError("cannot decompose the zero function")
    thr = rel_threshold * umax
    vsign = np.zeros(mesh.n_vertices, dtype=np.int8)
    vsign[u > thr] = 1
    vsign[u < -thr] = -1

    tsign = np.zeros(mesh.n_triangles, dtype=np.int8)
    s = vsign[mesh.triangles]
    has_pos = (s == 1).any(axis=1)
    has_neg = (s == -1).any(axis=1)
    tsign[has_pos & ~has_neg] = 1
    tsign[has_neg & ~has_pos] = -1

    uniq, tri_a, tri_b = meshmod.adjacency_for(mesh)
    interior = tri_b >= 0
    live = (vsign[uniq[interior, 0]] != 0) | (vsign[uniq[interior, 1]] != 0)
    labels, count = union_find_label(tsign, tri_a[interior].astype(np.int64),
                                     tri_b[interior].astype(np.int64),
                                     live.astype(np.uint8))
    return NodalDecomposition(np.asarray(labels), int(count),
                              float(rel_threshold))


@dataclass(frozen=True)
class CourantRow:
    index: int
    lam: float
    multiplicity: int
    nodal_count: int
    bound: int
    passed: bool


@dataclass(frozen=True)
class CourantReport:
    rows: tuple
    all_pass: bool


def courant_check(pairs, decomps, boundary_condition):
    """Check nodal counts against the cluster-aware Courant bounds.

    Dirichlet: an eigenfunction at index n in a multiplicity-r cluster
    has at most (last cluster index) nodal domains; closed manifolds get
    one extra domain, and the constant mode at index 0 exactly one.
    """
    if len(pairs) != len(decomps):
        raise ValueError("pairs and decompositions must align")
    closed = boundary_condition == "closed"
    lams = [p.lam for p in pairs]
    clusters = eigen_clusters(lams)
    cluster_of = {}
    for (a, b) in clusters:
        for i in range(a, b + 1):
            cluster_of[i] = (a, b)
    rows = []
    for i, (pair, dec) in enumerate(zip(pairs, decomps)):
        a, b = cluster_of[i]
        mult = b - a + 1
        last_index = pairs[b].index
        if closed and pair.index == 0:
            bound = 1
        elif closed:
            bound = last_index + 1
        else:
            bound = last_index
        rows.append(CourantRow(pair.index, pair.lam, mult, dec.count,
                               bound, dec.count <= bound))
    return CourantReport(tuple(rows), all(r.passed for r in rows))
