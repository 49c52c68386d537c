"""Generalized eigensolves for the (K, M) pencil with semidefinite M.

The mass matrix of a singular measure annihilates every basis function
vanishing on the support, so K u = lambda M u is solved through the
inverted pencil: with K positive definite on the active space, the
finite spectrum is the reciprocal of the nonzero spectrum of the compact
operator K^{-1} M.  Two routes are used:

* dense range restriction when the measure support touches few degrees
  of freedom (eigendecompose M on its support, solve K against the range
  basis, then a small dense symmetric problem);
* ARPACK shift-invert Lanczos otherwise, with a seeded start vector so
  runs are reproducible.

Closed-manifold pencils carry the constant zero mode at index 0; the
positive modes live in the mean-zero complement and come out M-orthogonal
to the constants automatically.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

DENSE_SUPPORT_CUTOFF = 2000
CLUSTER_RTOL = 1e-6
RESIDUAL_RTOL = 1e-8
CLOSED_SHIFT = 1.0


@dataclass(frozen=True)
class EigenPair:
    """One pencil eigenpair, L2(mu)-normalized, on the full vertex set.

    ``index`` is 1-based for Dirichlet problems; closed problems reserve
    index 0 for the constant zero mode.
    """

    lam: float
    coeffs: np.ndarray
    index: int

    def __post_init__(self):
        self.coeffs.setflags(write=False)


def solve_eigenpairs(pencil, k, seed=0, dense_cutoff=DENSE_SUPPORT_CUTOFF):
    """The k smallest finite eigenpairs of K u = lambda M u.

    Pairs are M-orthonormal, ordered by eigenvalue, and sign-normalized
    (first significant coefficient positive).  Requesting more pairs than
    rank(M) returns the available ones with a warning.  For closed
    pencils the zero mode is reported as index 0 and counts toward k+1
    returned pairs.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    closed = pencil.boundary_condition == "closed"
    K = pencil.K_red.tocsc()
    M = pencil.M_red.tocsr()
    n = K.shape[0]
    shift = CLOSED_SHIFT if closed else 0.0
    A = (K + shift * M).tocsc() if closed else K
    want = k + 1 if closed else k

    support = np.flatnonzero(M.diagonal() > 1e-14 * max(M.diagonal().max(),
                                                        1e-300))
    if len(support) <= dense_cutoff:
        lams, vecs = _solve_dense_range(A, M, support, want)
    else:
        lams, vecs = _solve_arpack(A, M, want, seed)
    lams = lams - shift

    order = np.argsort(lams, kind="stable")
    lams, vecs = lams[order], vecs[:, order]
    lams = lams[:want]
    vecs = vecs[:, :want]

    if len(lams) < want:
        warnings.warn(f"requested {want} pairs but the pencil has rank "
                      f"{len(lams)}; returning the available ones")

    _validate_residuals(K, M, lams, vecs)
    lams, vecs = _orthonormalize_clusters(M, lams, vecs)

    pairs = []
    for i in range(len(lams)):
        idx = i if closed else i + 1
        lam = float(lams[i])
        if closed and i == 0:
            if abs(lam) > 1e-6 * max(abs(lams[-1]), 1.0):
                raise RuntimeError("closed pencil is missing its zero mode")
            lam = 0.0 if abs(lam) < 1e-10 else lam
        pairs.append(EigenPair(lam, pencil.embed(vecs[:, i]), idx))
    return pairs


def _solve_dense_range(A, M, support, want):
    """Exact solve restricted to the range of M (dense in rank(M))."""
    Ms = M[support][:, support].toarray()
    Ms = 0.5 * (Ms + Ms.T)
    w, Q = np.linalg.eigh(Ms)
    keep = w > max(w.max(), 0.0) * 1e-12
    w, Q = w[keep], Q[:, keep]
    r = len(w)
    if r == 0:
        raise ValueError("mass matrix vanishes: measure quadrature sees no "
                         "basis function")
    n = A.shape[0]
    V = np.zeros((n, r))
    V[support] = Q * np.sqrt(w)

    lu = spla.splu(A)
    W = lu.solve(V)
    B = V.T @ W
    B = 0.5 * (B + B.T)
    beta, G = np.linalg.eigh(B)
    pos = beta > max(beta.max(), 0.0) * 1e-14
    beta, G = beta[pos], G[:, pos]
    order = np.argsort(-beta)[:want]
    lams = 1.0 / beta[order]
    U = W @ G[:, order]
    # normalize in the M inner product
    for j in range(U.shape[1]):
        nrm = np.sqrt(max(U[:, j] @ (M @ U[:, j]), 1e-300))
        U[:, j] /= nrm
    return lams, U


def _solve_arpack(A, M, want, seed):
    n = A.shape[0]
    if want >= n - 1:
        raise ValueError("requested too many pairs for an iterative solve")
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n)
    lams, vecs = spla.eigsh(A, k=want, M=M, sigma=0.0, which="LM",
                            v0=v0, tol=0)
    for j in range(vecs.shape[1]):
        nrm = np.sqrt(max(vecs[:, j] @ (M @ vecs[:, j]), 1e-300))
        vecs[:, j] /= nrm
    return lams, vecs


def _validate_residuals(K, M, lams, vecs):
    for j in range(vecs.shape[1]):
        u = vecs[:, j]
        lam = lams[j]
        Ku = K @ u
        Mu = M @ u
        r = np.linalg.norm(Ku - lam * Mu)
        scale = max(np.linalg.norm(Ku), np.linalg.norm(Mu))
        if r > RESIDUAL_RTOL * scale:
            raise RuntimeError(
                f"eigenpair residual {r:.3e} exceeds tolerance "
                f"(eigenvalue {lam:.6g})")


def eigen_clusters(lams, rtol=CLUSTER_RTOL):
    """Consecutive index runs of numerically equal eigenvalues."""
    lams = np.asarray(lams, dtype=float)
    clusters = []
    start = 0
    for i in range(1, len(lams) + 1):
        if i == len(lams) or abs(lams[i] - lams[start]) > rtol * max(
                abs(lams[start]), 1.0):
            clusters.append((start, i - 1))
            start = i
    return clusters


def _orthonormalize_clusters(M, lams, vecs):
    for (a, b) in eigen_clusters(lams):
        if b == a:
            vecs[:, a] = _sign_normalize(vecs[:, a])
            continue
        block = vecs[:, a:b + 1]
        # modified Gram-Schmidt in the M inner product
        for j in range(block.shape[1]):
            for i in range(j):
                block[:, j] -= (block[:, i] @ (M @ block[:, j])) * block[:, i]
            block[:, j] /= np.sqrt(max(block[:, j] @ (M @ block[:, j]),
                                       1e-300))
            block[:, j] = _sign_normalize(block[:, j])
        key = [tuple(np.round(block[:, j], 9)) for j in range(block.shape[1])]
        order = sorted(range(block.shape[1]), key=lambda j: key[j])
        vecs[:, a:b + 1] = block[:, order]
    return lams, vecs


def _sign_normalize(u):
    nz = np.flatnonzero(np.abs(u) > 1e-8 * max(np.abs(u).max(), 1e-300))
    if len(nz) and u[nz[0]] < 0:
        return -u
    return u


def rayleigh_quotient(pencil, u_full):
    """Dirichlet energy over mu-mass of a full-vertex coefficient vector."""
    u = pencil.reduce(u_full)
    den = float(u @ (pencil.M_red @ u))
    num = float(u @ (pencil.K_red @ u))
    if den <= 0.0:
        raise ValueError("Rayleigh quotient undefined: u vanishes in "
                         "L2(mu)")
    return num / den


def solve_dirichlet_source(pencil, f_full):
    """Solve K u = M f on interior DOFs with zero boundary values."""
    if pencil.boundary_condition != "dirichlet":
        raise ValueError("source solves require a Dirichlet pencil")
    rhs = (pencil.M @ np.asarray(f_full, dtype=float))[pencil.dof_map]
    if pencil._lu is None:
        pencil._lu = spla.splu(pencil.K_red.tocsc())
    u_red = pencil._lu.solve(rhs)
    return pencil.embed(u_red)
