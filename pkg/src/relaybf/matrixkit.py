"""Linear-algebra primitives used by the beamforming protocol.

Everything here works on complex numpy arrays and is side-effect free.
The joint diagonalizer has a batched entry point because the simulator
solves many tiny (N_U x N_U) problems per channel sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SingularMatrixError",
    "SvdResult",
    "JointDiagResult",
    "svd",
    "right_inverse",
    "gram_schmidt_residual",
    "semi_orthogonality",
    "jd_objective",
    "joint_diagonalize",
    "joint_diagonalize_batch",
]

#: Singular values at or below this fraction of the largest are treated as zero.
RANK_TOL = 1e-12


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a matrix that must have full row rank does not."""


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``A = U diag(s) Vh`` with singular values in descending order."""

    u: np.ndarray
    s: np.ndarray
    vh: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.vh

    def rank(self, tol: float = RANK_TOL) -> int:
        if self.s.size == 0 or self.s[0] == 0:
            return 0
        return int(np.count_nonzero(self.s > tol * self.s[0]))


@dataclass
class JointDiagResult:
    """Outcome of :func:`joint_diagonalize`.

    ``combiner`` is the matrix ``B`` such that ``B A_i B^H`` is as close to
    diagonal as the algorithm could get; ``objective_trace[0]`` is the
    objective at the initial point.
    """

    combiner: np.ndarray
    objective_trace: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


def _check_finite(a: np.ndarray) -> None:
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")


def svd(a) -> SvdResult:
    """Thin singular value decomposition of a nonempty matrix."""
    a = np.asarray(a)
    if a.ndim != 2 or a.size == 0:
        raise ValueError(f"expected a nonempty 2-D matrix, got shape {a.shape}")
    _check_finite(a)
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    return SvdResult(u, s, vh)


def right_inverse(a) -> np.ndarray:
    """Zero-forcing right inverse ``A^H (A A^H)^-1`` of a full-row-rank matrix.

    Evaluated through the SVD, which gives the same matrix as the normal
    equations but without squaring the condition number.

    Raises
    ------
    SingularMatrixError
        If the smallest singular value is at most ``1e-12`` times the largest.
    """
    a = np.atleast_2d(np.asarray(a))
    res = svd(a)
    if res.s.size < a.shape[0] or res.s[0] == 0 or res.s[-1] <= RANK_TOL * res.s[0]:
        raise SingularMatrixError(f"matrix of shape {a.shape} is not of full row rank")
    return (res.vh.conj().T / res.s) @ res.u.conj().T


def gram_schmidt_residual(v, basis) -> tuple[np.ndarray, float]:
    """Component of ``v`` orthogonal to ``span(basis)`` and its norm.

    The basis is orthonormalized with modified Gram-Schmidt; vectors that are
    (numerically) dependent on earlier ones are skipped. The projection of
    ``v`` is removed twice, which keeps the residual orthogonal to working
    precision even for nearly dependent inputs.

    Returns
    -------
    residual : ndarray
    noc : float
        Norm of the orthogonal component, ``||residual||``.
    """
    v = np.asarray(v, dtype=complex)
    q: list[np.ndarray] = []
    for b in basis:
        w = np.asarray(b, dtype=complex).copy()
        scale = np.linalg.norm(w)
        if scale == 0:
            raise ValueError("basis vectors must be nonzero")
        for _ in range(2):
            for e in q:
                w -= np.vdot(e, w) * e
        nw = np.linalg.norm(w)
        if nw > 1e-12 * scale:
            q.append(w / nw)
    r = v.copy()
    for _ in range(2):
        for e in q:
            r -= np.vdot(e, r) * e
    return r, float(np.linalg.norm(r))


def semi_orthogonality(v1, v2) -> float:
    """``|Re(v1^H v2)| / (||v1|| ||v2||)``: 0 for orthogonal, 1 for dependent real multiples."""
    v1 = np.asarray(v1)
    v2 = np.asarray(v2)
    n1 = np.linalg.norm(v1)
    n2 = np.linalg.norm(v2)
    if n1 == 0 or n2 == 0:
        raise ValueError("semi-orthogonality is undefined for zero vectors")
    return float(min(1.0, abs(np.vdot(v1, v2).real) / (n1 * n2)))


# ---------------------------------------------------------------------------
# Joint diagonalization
# ---------------------------------------------------------------------------


def _diag_real(m: np.ndarray) -> np.ndarray:
    return np.real(np.diagonal(m, axis1=-2, axis2=-1))


def _objective(b: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Batched objective; ``b`` is (P, n, n) and ``a`` is (P, L, n, n)."""
    x = np.linalg.inv(b)[:, None]
    bb = b[:, None]
    lam = _diag_real(bb @ a @ bb.conj().swapaxes(-1, -2))
    e = a - (x * lam[..., None, :]) @ x.conj().swapaxes(-1, -2)
    return np.sum(np.abs(e) ** 2, axis=(1, 2, 3))


def _objective_and_grad(b: np.ndarray, a: np.ndarray):
    """Objective and its gradient w.r.t. a relative update ``B <- (I + D) B``.

    With ``M_i = B A_i B^H``, ``X = B^-1``, ``E_i`` the residual and
    ``P_i = X^H E_i X`` the first-order change of the objective is
    ``-4 Re tr(sum_i (M_i diag(P_i) - diag(M_i) P_i) D)``.
    """
    x = np.linalg.inv(b)[:, None]
    xh = x.conj().swapaxes(-1, -2)
    bb = b[:, None]
    m = bb @ a @ bb.conj().swapaxes(-1, -2)
    lam = _diag_real(m)
    e = a - (x * lam[..., None, :]) @ xh
    f = np.sum(np.abs(e) ** 2, axis=(1, 2, 3))
    p = xh @ e @ x
    dp = _diag_real(p)
    gt = np.sum(m * dp[..., None, :] - lam[..., :, None] * p, axis=1)
    return f, -4.0 * gt.conj().swapaxes(-1, -2)


def jd_objective(b, targets) -> float:
    """``sum_i ||A_i - B^-1 diag(B A_i B^H) B^-H||_F^2`` for one combiner ``B``."""
    b = np.asarray(b, dtype=complex)
    a = np.asarray(targets, dtype=complex)
    return float(_objective(b[None], a[None])[0])


def _check_targets(a: np.ndarray) -> None:
    if a.ndim != 4 or a.shape[-1] != a.shape[-2] or a.shape[1] == 0:
        raise ValueError(f"targets must be square matrices, got shape {a.shape[1:]}")
    _check_finite(a)
    herm_err = np.abs(a - a.conj().swapaxes(-1, -2)).max(axis=(-1, -2))
    scale = np.maximum(np.abs(a).max(axis=(-1, -2)), np.finfo(float).tiny)
    if np.any(herm_err > 1e-10 * scale):
        raise ValueError("joint diagonalization targets must be Hermitian")


def _rip(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Real inner product of stacked complex matrices."""
    return np.real(np.sum(x.conj() * y, axis=(-2, -1)))


def _initial_combiner(a: np.ndarray) -> np.ndarray:
    """Starting point: the better of two closed-form diagonalizers.

    One is the unitary eigenbasis of ``S = sum_i A_i``. The other holds the
    generalized eigenvectors of the pencil ``(sum_i w_i A_i, S)`` with
    distinct weights ``w_i``; it diagonalizes every target exactly when there
    are at most two of them or when they commute.
    """
    _, l_count, _, _ = a.shape
    s = a.sum(axis=1)
    _, vecs = np.linalg.eigh(s)
    b = vecs.conj().swapaxes(-1, -2)[..., ::-1, :].copy()
    if l_count == 1:
        return b  # the eigenbasis is already exact
    weights = np.arange(1, l_count + 1) / l_count
    c = np.einsum("l,plij->pij", weights, a)
    # Batched Cholesky fails as a whole if any S is singular; do that slice by slice.
    pencil = np.full_like(b, np.nan)
    blocks = range(s.shape[0]) if _any_not_pd(s) else [slice(None)]
    for i in blocks:
        try:
            li = np.linalg.inv(np.linalg.cholesky(s[i]))
        except np.linalg.LinAlgError:
            continue
        m = li @ c[i] @ li.conj().swapaxes(-1, -2)
        _, u = np.linalg.eigh(0.5 * (m + m.conj().swapaxes(-1, -2)))
        pencil[i] = u.conj().swapaxes(-1, -2) @ li
    with np.errstate(all="ignore"):
        pencil /= np.linalg.norm(pencil, axis=-1, keepdims=True)
        # Prefer the unitary eigenbasis unless the pencil is clearly better.
        scale = np.sum(np.abs(a) ** 2, axis=(1, 2, 3))
        better = _objective(pencil, a) < _objective(b, a) - 1e-12 * scale
    b[better] = pencil[better]
    return b


def _any_not_pd(s: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        return True
    return False


def joint_diagonalize_batch(targets, tol: float = 1e-8, max_iter: int = 500, memory: int = 6):
    """Solve a stack of independent joint-diagonalization problems.

    Parameters
    ----------
    targets : array_like, shape (P, L, n, n)
        ``P`` problems, each with ``L`` Hermitian targets.
    tol : float
        Stop a problem once the relative objective decrease of an accepted
        step drops below ``tol``.
    max_iter : int
        Maximum number of accepted descent steps per problem.
    memory : int
        Number of curvature pairs kept by the quasi-Newton update.

    Returns
    -------
    combiners : ndarray, shape (P, n, n)
        Row-normalized combiners ``B``.
    traces : list of list of float
        Objective value after initialization and after every accepted step.
    converged : ndarray of bool, shape (P,)

    Notes
    -----
    The diagonal targets are tied to the combiner (``diag(B A_i B^H)``). Each
    iteration takes a relative step ``B <- (I + t D) B`` where ``D`` is an
    L-BFGS direction built from relative gradients, with Armijo backtracking
    on ``t``. Steps are only accepted when they decrease the objective, so
    every trace is non-increasing. Rows are renormalized after each step; the
    objective is invariant to row scaling. See :func:`_initial_combiner` for
    the starting point.
    """
    a = np.asarray(targets, dtype=complex)
    _check_targets(a)
    p_count, _, n, _ = a.shape
    # Work in units where sum_i ||A_i||^2 = 1 so absolute thresholds are meaningful.
    scale = np.sum(np.abs(a) ** 2, axis=(1, 2, 3))
    scale = np.where(scale > 0, scale, 1.0)
    a = a / np.sqrt(scale)[:, None, None, None]

    b = _initial_combiner(a)
    f, g = _objective_and_grad(b, a)
    traces = [[float(fi)] for fi in f]
    hist_s = np.zeros((p_count, memory, n, n), dtype=complex)
    hist_y = np.zeros_like(hist_s)
    hist_rho = np.zeros((p_count, memory))
    stored = np.zeros(p_count, dtype=np.int64)
    active = f > 1e-28
    converged = ~active
    eye = np.eye(n)

    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        d = -_two_loop(g[idx], hist_s[idx], hist_y[idx], hist_rho[idx], stored[idx])
        slope = _rip(g[idx], d)
        uphill = ~(slope < 0)
        d[uphill] = -g[idx][uphill]
        slope[uphill] = -_rip(g[idx][uphill], g[idx][uphill])

        t = np.ones(idx.size)
        searching = np.ones(idx.size, dtype=bool)
        b_new = b[idx].copy()
        f_new = f[idx].copy()
        for _ls in range(60):
            s = np.flatnonzero(searching)
            if s.size == 0:
                break
            j = idx[s]
            cand = (eye + t[s, None, None] * d[s]) @ b[j]
            cand /= np.linalg.norm(cand, axis=-1, keepdims=True)
            with np.errstate(all="ignore"):
                fc = _objective(cand, a[j])
            ok = np.isfinite(fc) & (fc <= f[j] + 1e-4 * t[s] * slope[s])
            b_new[s[ok]] = cand[ok]
            f_new[s[ok]] = fc[ok]
            searching[s[ok]] = False
            t[s[~ok]] *= 0.5
        # Line search exhausted: no numerically representable descent remains.
        stalled = idx[searching]
        active[stalled] = False
        converged[stalled] = True

        mv = ~searching
        moved = idx[mv]
        if moved.size == 0:
            continue
        f_old = f[moved]
        b[moved] = b_new[mv]
        f_acc = f_new[mv]
        _, gm = _objective_and_grad(b[moved], a[moved])
        step = t[mv, None, None] * d[mv]
        dy = gm - g[moved]
        sy = _rip(step, dy)
        curv = sy > 1e-12 * np.sqrt(_rip(step, step) * _rip(dy, dy))
        k = moved[curv]
        slot = stored[k] % memory
        hist_s[k, slot] = step[curv]
        hist_y[k, slot] = dy[curv]
        hist_rho[k, slot] = 1.0 / sy[curv]
        stored[k] += 1
        f[moved] = f_acc
        g[moved] = gm
        for i, fi in zip(moved, f_acc):
            traces[i].append(float(fi))
        rel = (f_old - f_acc) / np.maximum(f_old, 1e-300)
        done = (rel < tol) | (f_acc <= 1e-28)
        active[moved[done]] = False
        converged[moved[done]] = True

    traces = [[v * float(scale[i]) for v in tr] for i, tr in enumerate(traces)]
    return b, traces, converged


def _two_loop(g, hist_s, hist_y, hist_rho, stored):
    """L-BFGS product ``H g`` for a batch; newest pair at slot ``(stored - 1) % m``."""
    memory = hist_s.shape[1]
    rows = np.arange(g.shape[0])
    q = g.copy()
    alpha = np.zeros((g.shape[0], memory))
    used = np.minimum(stored, memory)
    for j in range(memory):
        slot = (stored - 1 - j) % memory
        valid = j < used
        s_j, y_j, rho_j = hist_s[rows, slot], hist_y[rows, slot], hist_rho[rows, slot]
        alpha[:, j] = np.where(valid, rho_j * _rip(s_j, q), 0.0)
        q -= alpha[:, j, None, None] * y_j
    newest = (stored - 1) % memory
    s_n, y_n = hist_s[rows, newest], hist_y[rows, newest]
    with np.errstate(all="ignore"):
        gamma = np.where(
            stored > 0,
            _rip(s_n, y_n) / np.maximum(_rip(y_n, y_n), 1e-300),
            0.1 / np.sqrt(np.maximum(_rip(g, g), 1e-300)),
        )
    r = gamma[:, None, None] * q
    for j in range(memory - 1, -1, -1):
        slot = (stored - 1 - j) % memory
        valid = j < used
        s_j, y_j, rho_j = hist_s[rows, slot], hist_y[rows, slot], hist_rho[rows, slot]
        beta = np.where(valid, rho_j * _rip(y_j, r), 0.0)
        r += s_j * np.where(valid, alpha[:, j] - beta, 0.0)[:, None, None]
    return r


def joint_diagonalize(targets, tol: float = 1e-8, max_iter: int = 500) -> JointDiagResult:
    """Find ``B`` minimizing ``sum_i ||A_i - B^-1 Lambda_i B^-H||_F^2``.

    ``Lambda_i`` is the diagonal of ``B A_i B^H``. See
    :func:`joint_diagonalize_batch` for the algorithm.
    """
    a = np.asarray(targets, dtype=complex)
    if a.ndim == 2:
        a = a[None]
    b, traces, conv = joint_diagonalize_batch(a[None], tol=tol, max_iter=max_iter)
    return JointDiagResult(b[0], traces[0], bool(conv[0]))
