"""Backend selection for the hot inner-loop kernels.

Two interchangeable implementations are provided for each kernel:

* ``numpy`` -- pure NumPy / Python reference path, always available;
* ``numba`` -- ``@njit``-compiled twins of the same loops.

The active backend is chosen once at import time from the environment
variable ``KREINLAB_BACKEND`` (``"numba"`` or ``"numpy"``).  When the
variable is unset the numba path is used if numba imports cleanly,
otherwise the NumPy fallback.  Both paths compute identical results;
``benchmarks/compare_backends.py`` times them against each other.
"""

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


# ---------------------------------------------------------------------------
# kernel: union-find labelling of same-sign triangle components
# ---------------------------------------------------------------------------

def _union_find_label_py(tri_sign, edge_a, edge_b, edge_live):
    """Connected components of same-sign triangles linked by shared edges.

    Parameters
    ----------
    tri_sign : int8 array, shape (n_tri,)
        Per-triangle sign: -1, 0 (zero set) or +1.
    edge_a, edge_b : int64 arrays
        Triangle index pairs adjacent across each interior edge.
    edge_live : uint8 array
        1 when at least one endpoint of the shared edge is nonzero; an
        edge with both endpoints in the zero set cannot connect the open
        sign regions of a P1 function.

    Returns
    -------
    labels : int64 array, shape (n_tri,)
        Component id (0-based, first-seen order) or -1 for zero-set
        triangles.
    count : int
        Number of components.
    """
    n = tri_sign.shape[0]
    parent = np.arange(n, dtype=np.int64)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for k in range(edge_a.shape[0]):
        a = edge_a[k]
        b = edge_b[k]
        if edge_live[k] and tri_sign[a] != 0 and tri_sign[a] == tri_sign[b]:
            ra = find(a)
            rb = find(b)
            if ra != rb:
                if ra < rb:
                    parent[rb] = ra
                else:
                    parent[ra] = rb

    labels = np.full(n, -1, dtype=np.int64)
    remap = np.full(n, -1, dtype=np.int64)
    count = 0
    for i in range(n):
        if tri_sign[i] == 0:
            continue
        r = find(i)
        if remap[r] < 0:
            remap[r] = count
            count += 1
        labels[i] = remap[r]
    return labels, count


@njit(cache=True)
def _union_find_label_nb(tri_sign, edge_a, edge_b, edge_live):  # pragma: no cover - jit
    n = tri_sign.shape[0]
    parent = np.arange(n)
    for k in range(edge_a.shape[0]):
        a = edge_a[k]
        b = edge_b[k]
        if edge_live[k] != 0 and tri_sign[a] != 0 and tri_sign[a] == tri_sign[b]:
            ra = a
            while parent[ra] != ra:
                parent[ra] = parent[parent[ra]]
                ra = parent[ra]
            rb = b
            while parent[rb] != rb:
                parent[rb] = parent[parent[rb]]
                rb = parent[rb]
            if ra != rb:
                if ra < rb:
                    parent[rb] = ra
                else:
                    parent[ra] = rb
    labels = np.full(n, -1, dtype=np.int64)
    remap = np.full(n, -1, dtype=np.int64)
    count = 0
    for i in range(n):
        if tri_sign[i] == 0:
            continue
        r = i
        while parent[r] != r:
            parent[r] = parent[parent[r]]
            r = parent[r]
        if remap[r] < 0:
            remap[r] = count
            count += 1
        labels[i] = remap[r]
    return labels, count


# ---------------------------------------------------------------------------
# kernel: ball-mass sums for weighted point clouds (IFS leaf measures)
# ---------------------------------------------------------------------------

def _ball_masses_py(points, weights, centers, delta):
    """Sum of point weights within Euclidean distance ``delta`` per center."""
    d2 = delta * delta
    out = np.empty(centers.shape[0])
    for c in range(centers.shape[0]):
        dx = points[:, 0] - centers[c, 0]
        dy = points[:, 1] - centers[c, 1]
        out[c] = weights[(dx * dx + dy * dy) <= d2].sum()
    return out


@njit(cache=True)
def _ball_masses_nb(points, weights, centers, delta):  # pragma: no cover
    d2 = delta * delta
    out = np.zeros(centers.shape[0])
    for c in range(centers.shape[0]):
        acc = 0.0
        for p in range(points.shape[0]):
            dx = points[p, 0] - centers[c, 0]
            dy = points[p, 1] - centers[c, 1]
            if dx * dx + dy * dy <= d2:
                acc += weights[p]
        out[c] = acc
    return out


# ---------------------------------------------------------------------------
# kernel: affine IFS leaf enumeration
# ---------------------------------------------------------------------------

@njit(cache=True)
def _ifs_leaves_nb(mats, offs, probs, depth, root):  # pragma: no cover
    m = mats.shape[0]
    n = 1
    for _ in range(depth):
        n *= m
    pts = np.empty((n, 2))
    wts = np.empty(n)
    for leaf in range(n):
        x = root[0]
        y = root[1]
        w = 1.0
        # decode the word most-significant digit first
        rem = leaf
        p = n // m
        for _ in range(depth):
            digit = rem // p
            rem -= digit * p
            p //= m
            if p == 0:
                p = 1
            xx = mats[digit, 0, 0] * x + mats[digit, 0, 1] * y + offs[digit, 0]
            yy = mats[digit, 1, 0] * x + mats[digit, 1, 1] * y + offs[digit, 1]
            x = xx
            y = yy
            w *= probs[digit]
        pts[leaf, 0] = x
        pts[leaf, 1] = y
        wts[leaf] = w
    return pts, wts


def _ifs_leaves_py(mats, offs, probs, depth, root):
    """Enumerate depth-``depth`` leaf points and weights of an affine IFS.

    Leaves come out in lexicographic word order (first map symbol most
    significant), matching the numba twin exactly.
    """
    m = mats.shape[0]
    n = m ** depth
    pts = np.empty((n, 2))
    wts = np.empty(n)
    stack = [(root.copy(), 1.0, 0)]
    idx = 0
    while stack:
        x, w, level = stack.pop()
        if level == depth:
            pts[idx] = x
            wts[idx] = w
            idx += 1
            continue
        for i in range(m - 1, -1, -1):
            stack.append((mats[i] @ x + offs[i], w * probs[i], level + 1))
    return pts, wts


NUMPY_IMPL = {
    "union_find_label": _union_find_label_py,
    "ball_masses": _ball_masses_py,
    "ifs_leaves": _ifs_leaves_py,
}

NUMBA_IMPL = {
    "union_find_label": _union_find_label_nb,
    "ball_masses": _ball_masses_nb,
    "ifs_leaves": _ifs_leaves_nb,
}


def _select_backend():
    choice = os.environ.get("KREINLAB_BACKEND", "").strip().lower()
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("KREINLAB_BACKEND=numba but numba is not importable")
        return "numba"
    if choice:
        raise RuntimeError(f"unknown KREINLAB_BACKEND value: {choice!r}")
    return "numba" if HAS_NUMBA else "numpy"


BACKEND = _select_backend()
_impl = NUMBA_IMPL if BACKEND == "numba" else NUMPY_IMPL

union_find_label = _impl["union_find_label"]
ball_masses = _impl["ball_masses"]
ifs_leaves = _impl["ifs_leaves"]
