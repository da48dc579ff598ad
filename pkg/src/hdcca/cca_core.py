"""Deterministic canonical correlation analysis.

The production route whitens each data panel with a Cholesky factor of its
Gram matrix and reads correlations and vectors off a singular value
decomposition of the whitened cross-Gram.  Two independent oracle routes
(projector products and sequential constrained maximization) are provided
for cross-validation on small instances, plus the population-covariance
version and the subspace alignment angle.

Conventions, fixed so results are deterministic:

* squared correlations are sorted descending and clipped to [0, 1] inside
  a tolerance band; values further outside raise ``ClippingError``;
* canonical variables have unit norm: ||U^T alpha_i|| = 1;
* <U^T alpha_i, V^T beta_i> >= 0, and when that inner product vanishes the
  largest-magnitude coordinate of the vector is made positive;
* correlations closer than 1e-6 to a neighbour are flagged as clustered;
  the vectors inside a cluster are an arbitrary orthonormal basis of the
  cluster space and should not be compared individually.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .errors import (
    ClippingError,
    DimensionMismatch,
    NotConverged,
    RankDeficient,
    SingularCovariance,
    TooFewObservations,
    ZeroImage,
)
from .wachter import Spectrum

DEFAULT_TOL = 1e-10
CLUSTER_GAP = 1e-6
_SEQ_MAX_ITER = 2000


@dataclass(frozen=True)
class DataPanel:
    """Real data matrix: rows are variables, columns are observations."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float, order="C", copy=True)
        if arr.ndim != 2:
            raise DimensionMismatch(f"panel must be 2-d, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionMismatch(f"panel must be at least 1x1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DimensionMismatch("panel entries must all be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class CanonicalSystem:
    """Squared correlations plus the coefficient vectors realizing them.

    ``alphas[i]`` is the i-th K-dimensional coefficient vector for the
    first panel (all K of them form a basis); ``betas[j]`` likewise for
    the second panel (M vectors).  ``correlations_sq`` has length
    min(K, M); pairs beyond that index are unpaired basis completions.
    ``clustered[i]`` marks correlations that sit in a near-degenerate
    cluster, where individual vectors are not identified.
    """

    correlations_sq: np.ndarray
    alphas: np.ndarray
    betas: np.ndarray
    clustered: np.ndarray = field(default=None)

    def __post_init__(self):
        c = np.asarray(self.correlations_sq, dtype=float)
        if np.any(c < -1e-12) or np.any(c > 1.0 + 1e-12):
            raise ClippingError(f"correlations_sq outside [0,1]: {c}")
        if np.any(np.diff(c) > 1e-12):
            raise ClippingError("correlations_sq must be sorted descending")
        object.__setattr__(self, "correlations_sq", np.clip(c, 0.0, 1.0))
        if self.clustered is None:
            object.__setattr__(self, "clustered", _cluster_flags(self.correlations_sq))

    @property
    def correlations(self) -> np.ndarray:
        return np.sqrt(self.correlations_sq)


@dataclass(frozen=True)
class CovarianceTriple:
    """Population covariance blocks (Luu, Lvv, Luv) of a joint vector."""

    luu: np.ndarray
    lvv: np.ndarray
    luv: np.ndarray

    def __post_init__(self):
        luu = np.array(self.luu, dtype=float, copy=True)
        lvv = np.array(self.lvv, dtype=float, copy=True)
        luv = np.array(self.luv, dtype=float, copy=True)
        K, M = luu.shape[0], lvv.shape[0]
        if luu.shape != (K, K) or lvv.shape != (M, M) or luv.shape != (K, M):
            raise DimensionMismatch(
                f"block shapes inconsistent: {luu.shape}, {lvv.shape}, {luv.shape}"
            )
        for name, block in (("luu", luu), ("lvv", lvv)):
            if not np.allclose(block, block.T, atol=1e-10):
                raise SingularCovariance(f"{name} is not symmetric")
            if np.min(np.linalg.eigvalsh(block)) <= 0.0:
                raise SingularCovariance(f"{name} is not positive-definite")
        joint = np.block([[luu, luv], [luv.T, lvv]])
        w = np.linalg.eigvalsh(joint)
        if np.min(w) < -1e-8 * max(np.max(w), 1.0):
            raise SingularCovariance("joint covariance block is not positive semi-definite")
        for arr in (luu, lvv, luv):
            arr.setflags(write=False)
        object.__setattr__(self, "luu", luu)
        object.__setattr__(self, "lvv", lvv)
        object.__setattr__(self, "luv", luv)


def _cluster_flags(c: np.ndarray) -> np.ndarray:
    n = len(c)
    flags = np.zeros(n, dtype=bool)
    for i in range(n - 1):
        if c[i] - c[i + 1] < CLUSTER_GAP:
            flags[i] = flags[i + 1] = True
    flags.setflags(write=False)
    return flags


def _clip_unit_interval(vals: np.ndarray, tol: float) -> np.ndarray:
    """Clip roundoff excursions; anything outside the band is an error."""
    if np.any(vals < -tol) or np.any(vals > 1.0 + tol):
        raise ClippingError(
            f"eigenvalues outside [-tol, 1+tol] with tol={tol}: "
            f"min={vals.min()}, max={vals.max()}"
        )
    return np.clip(vals, 0.0, 1.0)


def _checked_cholesky(G: np.ndarray, tol: float, side: str) -> np.ndarray:
    w = np.linalg.eigvalsh(G)
    if w[0] <= tol * w[-1]:
        raise RankDeficient(
            f"{side} Gram matrix is rank-deficient within tol={tol} "
            f"(eigenvalue ratio {w[0] / w[-1]:.3e})"
        )
    return cholesky(G, lower=True)


def _canonical_signs(alphas: np.ndarray, betas: np.ndarray, corr: np.ndarray) -> None:
    """Fix the +/- freedom in place.

    Paired vectors with a positive correlation flip jointly so the
    alpha-side largest-magnitude coordinate is positive (the cross inner
    product stays +c).  Zero-correlation pairs and unpaired completions
    flip independently, each by its own largest coordinate.
    """
    n_pairs = len(corr)

    def flip_col(mat, i):
        j = int(np.argmax(np.abs(mat[:, i])))
        if mat[j, i] < 0.0:
            mat[:, i] = -mat[:, i]
            return True
        return False

    for i in range(alphas.shape[1]):
        if i < n_pairs and corr[i] > 1e-8:
            if flip_col(alphas, i):
                betas[:, i] = -betas[:, i]
        else:
            flip_col(alphas, i)
    # unpaired and zero-correlation beta columns flip independently
    for j in range(betas.shape[1]):
        if j >= n_pairs or corr[j] <= 1e-8:
            flip_col(betas, j)


def sample_cca(U: DataPanel, V: DataPanel, tol: float = DEFAULT_TOL) -> CanonicalSystem:
    """Sample canonical correlations and vectors between two data panels.

    Whitens with Cholesky factors of the Gram matrices U U^T and V V^T and
    takes the SVD of the whitened cross-Gram; singular values are the
    sample canonical correlations, and back-substituted singular vectors
    are the canonical vectors.  Requires equal observation counts,
    K + M <= S, and both Gram matrices invertible within ``tol``.
    """
    if U.cols != V.cols:
        raise DimensionMismatch(f"observation counts differ: {U.cols} vs {V.cols}")
    K, M, S = U.rows, V.rows, U.cols
    if K + M > S:
        raise TooFewObservations(
            f"K + M = {K + M} > S = {S}: {K + M - S} unit correlations are forced"
        )
    Lu = _checked_cholesky(U.values @ U.values.T, tol, "U")
    Lv = _checked_cholesky(V.values @ V.values.T, tol, "V")
    C = solve_triangular(Lu, U.values @ V.values.T, lower=True)
    C = solve_triangular(Lv, C.T, lower=True).T
    A, s, Bt = np.linalg.svd(C, full_matrices=True)
    corr_sq = _clip_unit_interval(s**2, max(tol, 1e-12))
    corr = np.sqrt(corr_sq)
    alphas = solve_triangular(Lu.T, A, lower=False)
    betas = solve_triangular(Lv.T, Bt.T, lower=False)
    _canonical_signs(alphas, betas, corr)
    return CanonicalSystem(
        correlations_sq=corr_sq, alphas=alphas.T.copy(), betas=betas.T.copy()
    )


def sample_cca_projector_oracle(U: DataPanel, V: DataPanel, tol: float = DEFAULT_TOL) -> Spectrum:
    """Squared correlations via the product of orthogonal projectors.

    Builds the S x S projectors onto the row spaces and reads eigenvalues
    off the symmetrized product P_U P_V P_U, whose nonzero spectrum equals
    that of P_U P_V.  Cross-validates :func:`sample_cca`; intended for
    small S only.
    """
    if U.cols != V.cols:
        raise DimensionMismatch(f"observation counts differ: {U.cols} vs {V.cols}")
    K, M, S = U.rows, V.rows, U.cols
    if K + M > S:
        raise TooFewObservations(f"K + M = {K + M} > S = {S}")
    _checked_cholesky(U.values @ U.values.T, tol, "U")
    _checked_cholesky(V.values @ V.values.T, tol, "V")

    def projector(X: np.ndarray) -> np.ndarray:
        G = X @ X.T
        P = X.T @ np.linalg.solve(G, X)
        return 0.5 * (P + P.T)

    Pu = projector(U.values)
    Pv = projector(V.values)
    prod = Pu @ Pv @ Pu
    w = np.linalg.eigvalsh(0.5 * (prod + prod.T))[::-1]
    vals = _clip_unit_interval(w[: min(K, M)], max(tol, 1e-12))
    return Spectrum(values=vals, meta={"K": K, "M": M, "S": S})


def _orthonormal_rowspace(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """QR of X^T: returns (Q, R) with columns of Q an orthonormal basis."""
    Q, R = np.linalg.qr(X.T)
    return Q, R


def _project_off(x: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    for b in basis:
        x = x - np.dot(b, x) * b
    return x


def sequential_maximization_oracle(
    U: DataPanel, V: DataPanel, restarts: int = 32
) -> CanonicalSystem:
    """Greedy constrained-maximization oracle for tiny instances (K, M <= 3).

    Maximizes <u, v> over unit vectors of the two row spaces by alternating
    projected ascent with random restarts, deflating past maximizers at
    each step.  Restarts use a fixed internal RNG so the result is
    deterministic.  Agrees with :func:`sample_cca` to ~1e-6 on correlations.
    """
    if U.rows > 3 or V.rows > 3:
        raise DimensionMismatch("maximization oracle only supports K <= 3 and M <= 3")
    if restarts < 16:
        raise ValueError(f"need at least 16 restarts, got {restarts}")
    if U.cols != V.cols:
        raise DimensionMismatch(f"observation counts differ: {U.cols} vs {V.cols}")
    K, M = U.rows, V.rows
    if K + M > U.cols:
        raise TooFewObservations(f"K + M = {K + M} > S = {U.cols}")
    Qu, Ru = _orthonormal_rowspace(U.values)
    Qv, Rv = _orthonormal_rowspace(V.values)
    W = Qu.T @ Qv  # K x M, entries are inner products of basis vectors

    rng = np.random.default_rng(1729)
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    corrs: list[float] = []
    for _ in range(min(K, M)):
        best = None
        for _restart in range(restarts):
            x = _feasible_unit(rng, K, xs)
            y = _feasible_unit(rng, M, ys)
            converged = False
            f_old = -np.inf
            for _it in range(_SEQ_MAX_ITER):
                x_new = _ascend(W @ y, xs, x)
                y_new = _ascend(W.T @ x_new, ys, y)
                f = float(x_new @ W @ y_new)
                if abs(f - f_old) < 1e-15 and (
                    np.linalg.norm(x_new - x) < 1e-12 or abs(f) < 1e-12
                ):
                    x, y = x_new, y_new
                    converged = True
                    break
                x, y, f_old = x_new, y_new, f
            f = float(x @ W @ y)
            if f < 0.0:
                y, f = -y, -f
            if converged and (best is None or f > best[0]):
                best = (f, x, y)
        if best is None:
            raise NotConverged("projected ascent failed to converge in every restart")
        corrs.append(best[0])
        xs.append(best[1])
        ys.append(best[2])

    x_basis = _complete_basis(xs, K)
    y_basis = _complete_basis(ys, M)
    alphas = solve_triangular(Ru, np.column_stack(x_basis))
    betas = solve_triangular(Rv, np.column_stack(y_basis))
    corr = np.array(corrs)
    order = np.argsort(-corr, kind="stable")
    corr = corr[order]
    n = len(corr)
    alphas[:, :n] = alphas[:, order]
    betas[:, :n] = betas[:, order]
    _canonical_signs(alphas, betas, corr)
    return CanonicalSystem(
        correlations_sq=_clip_unit_interval(corr**2, 1e-9),
        alphas=alphas.T.copy(),
        betas=betas.T.copy(),
    )


def _feasible_unit(rng, dim, fixed):
    for _ in range(64):
        x = _project_off(rng.standard_normal(dim), fixed)
        n = np.linalg.norm(x)
        if n > 1e-8:
            return x / n
    raise NotConverged("could not draw a feasible unit vector")


def _ascend(grad, fixed, fallback):
    g = _project_off(grad, fixed)
    n = np.linalg.norm(g)
    if n < 1e-13:
        return fallback  # flat direction: correlation ~ 0, stay feasible
    return g / n


def _complete_basis(vecs: list[np.ndarray], dim: int) -> list[np.ndarray]:
    basis = [v.copy() for v in vecs]
    for e in np.eye(dim):
        if len(basis) == dim:
            break
        w = _project_off(e, basis)
        n = np.linalg.norm(w)
        if n > 1e-8:
            basis.append(w / n)
    return basis


def population_cca(cov: CovarianceTriple) -> CanonicalSystem:
    """Population canonical correlations and vectors from covariance blocks.

    Same whitened-SVD route as :func:`sample_cca`, applied to the
    population covariances instead of Gram matrices.
    """
    try:
        Lu = cholesky(cov.luu, lower=True)
        Lv = cholesky(cov.lvv, lower=True)
    except np.linalg.LinAlgError as e:  # pragma: no cover - validated upstream
        raise SingularCovariance(str(e)) from e
    C = solve_triangular(Lu, cov.luv, lower=True)
    C = solve_triangular(Lv, C.T, lower=True).T
    A, s, Bt = np.linalg.svd(C, full_matrices=True)
    corr_sq = _clip_unit_interval(s**2, 1e-10)
    alphas = solve_triangular(Lu.T, A, lower=False)
    betas = solve_triangular(Lv.T, Bt.T, lower=False)
    _canonical_signs(alphas, betas, np.sqrt(corr_sq))
    return CanonicalSystem(
        correlations_sq=corr_sq, alphas=alphas.T.copy(), betas=betas.T.copy()
    )


def alignment_angle(U: DataPanel, a_ref: np.ndarray, a_hat: np.ndarray) -> float:
    """sin^2 of the angle between U^T a_ref and U^T a_hat.

    Scale- and sign-invariant in both arguments; 0 means the estimated
    canonical variable matches the reference direction exactly, 1 means
    orthogonal.
    """
    a_ref = np.asarray(a_ref, dtype=float).reshape(-1)
    a_hat = np.asarray(a_hat, dtype=float).reshape(-1)
    if a_ref.shape != (U.rows,) or a_hat.shape != (U.rows,):
        raise DimensionMismatch(
            f"coefficient vectors must have length {U.rows}, "
            f"got {a_ref.shape} and {a_hat.shape}"
        )
    img_ref = U.values.T @ a_ref
    img_hat = U.values.T @ a_hat
    scale = np.linalg.norm(U.values)
    n_ref = np.linalg.norm(img_ref)
    n_hat = np.linalg.norm(img_hat)
    if n_ref <= 1e-14 * scale * max(np.linalg.norm(a_ref), 1e-300):
        raise ZeroImage("a_ref maps to the zero vector under U^T")
    if n_hat <= 1e-14 * scale * max(np.linalg.norm(a_hat), 1e-300):
        raise ZeroImage("a_hat maps to the zero vector under U^T")
    cos2 = (img_ref @ img_hat) ** 2 / (n_ref**2 * n_hat**2)
    return float(np.clip(1.0 - cos2, 0.0, 1.0))
