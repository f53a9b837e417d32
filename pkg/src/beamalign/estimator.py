"""Non-negative least-squares recovery of the angle-domain power matrix.

The solver is a Lawson-Hanson active-set method on the floor-shifted target
q' = q - floor, which minimizes ||B x + floor - q||^2 over x >= 0.  Restricted
least-squares subproblems run on an incrementally maintained Gram system with
an SVD fallback and a final SVD polish, so per-iteration cost stays low at
the typical fat-system sizes (hundreds of rows, ~1e3 unknowns) while the exit
gradients remain tight.

Also provides the M+ coverage check on the sensing matrix, the
instantaneous-coefficient OMP baseline, and argmax beam selection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class PsfEstimate:
    """Recovered non-negative angle-domain power matrix and solver certificate."""

    gamma_star: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    residual_trace: np.ndarray | None = None


@dataclass(frozen=True)
class BeamSelection:
    """Strongest AoA-AoD cell: row (UE grid) and column (BS grid) indices, 0-based."""

    ue_index: int
    bs_index: int
    strength: float


@dataclass(frozen=True)
class MPlusReport:
    """Coverage certificate: every angle cell probed at least once, or the holes."""

    satisfied: bool
    unprobed_columns: np.ndarray


@dataclass
class OmpResult:
    """Outcome of the OMP baseline; ``selection`` is None when nothing was recovered."""

    selection: BeamSelection | None
    support: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    coefficients: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=complex))
    regularized: bool = False
    note: str = ""


class _GramSolver:
    """Restricted LS solves through an incrementally grown Gram matrix."""

    def __init__(self, b: np.ndarray, y: np.ndarray):
        self.b = b
        self.by = b.T @ y
        self.idx: list[int] = []
        self.gram = np.empty((16, 16))

    def add(self, j: int) -> None:
        p = len(self.idx)
        if p >= self.gram.shape[0]:
            grown = np.empty((2 * self.gram.shape[0],) * 2)
            grown[:p, :p] = self.gram[:p, :p]
            self.gram = grown
        col = self.b[:, self.idx].T @ self.b[:, j] if p else np.empty(0)
        self.gram[:p, p] = col
        self.gram[p, :p] = col
        self.gram[p, p] = self.b[:, j] @ self.b[:, j]
        self.idx.append(j)

    def remove(self, positions: np.ndarray) -> None:
        keep = np.setdiff1d(np.arange(len(self.idx)), positions)
        p = keep.size
        self.gram[:p, :p] = self.gram[np.ix_(keep, keep)]
        self.idx = [self.idx[k] for k in keep]

    def solve(self) -> np.ndarray:
        p = len(self.idx)
        g = self.gram[:p, :p]
        rhs = self.by[self.idx]
        try:
            return np.linalg.solve(g, rhs)
        except np.linalg.LinAlgError:
            return np.linalg.lstsq(g, rhs, rcond=None)[0]


def nnls_solve(
    b: np.ndarray,
    q: np.ndarray,
    floor: float = 0.0,
    shape: tuple[int, int] | None = None,
    tol: float = 1e-10,
    max_iter: int | None = None,
) -> PsfEstimate:
    """Minimize ||B vec(Gamma) + floor - q||^2 over the non-negative orthant.

    ``shape`` reshapes the solution to (ue, bs) column-major; a flat column
    vector is returned when omitted.  ``tol`` is relative to the gradient
    scale ||B^T q||_inf: at exit every positive entry has |gradient| below
    tol * scale and every zero entry has gradient above -tol * scale.  If
    ``max_iter`` passes are exhausted the best iterate so far is returned
    with ``converged=False``.
    """
    b = np.asarray(b, dtype=float)
    q = np.asarray(q, dtype=float)
    if b.ndim != 2 or q.ndim != 1 or b.shape[0] != q.size:
        raise ValueError(f"inconsistent system: B {b.shape}, q {q.shape}")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    m, n = b.shape
    if shape is not None and shape[0] * shape[1] != n:
        raise ValueError(f"shape {shape} does not match {n} unknowns")
    if max_iter is None:
        max_iter = 3 * n

    y = q - floor
    scale = float(np.abs(b.T @ q).max(initial=0.0))
    if scale == 0.0:
        scale = max(float(np.abs(b.T @ y).max(initial=0.0)), 1.0)
    tol_abs = tol * scale

    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    banned = np.zeros(n, dtype=bool)  # anti-cycling guard for degenerate columns
    solver = _GramSolver(b, y)
    resid = y.copy()
    trace = [float(np.linalg.norm(resid))]
    iterations = 0
    converged = False

    while iterations < max_iter:
        w = b.T @ resid
        w_masked = np.where(passive | banned, -np.inf, w)
        j = int(np.argmax(w_masked))
        if not np.isfinite(w_masked[j]) or w_masked[j] <= tol_abs:
            converged = not np.any(banned & ~passive & (w > tol_abs))
            break
        iterations += 1
        passive[j] = True
        solver.add(j)
        s = solver.solve()
        while s.size and np.any(s <= 0.0):
            iterations += 1
            xp = x[solver.idx]
            neg = s <= 0.0
            denom = xp[neg] - s[neg]
            alphas = np.where(denom > 0, xp[neg] / np.where(denom > 0, denom, 1.0), 0.0)
            alpha = float(alphas.min())
            xp = xp + alpha * (s - xp)
            tiny = np.finfo(float).eps * float(np.abs(xp).max(initial=0.0))
            drop = np.flatnonzero(xp <= tiny)
            if drop.size == 0:
                drop = np.array([int(np.argmin(xp))])
            for pos in drop:
                passive[solver.idx[pos]] = False
            x[:] = 0.0
            keep_mask = np.ones(len(solver.idx), dtype=bool)
            keep_mask[drop] = False
            for pos in np.flatnonzero(keep_mask):
                x[solver.idx[pos]] = xp[pos]
            solver.remove(drop)
            if iterations >= max_iter or not solver.idx:
                break
            s = solver.solve()
        if not passive[j]:
            # entering column left immediately: numerically degenerate, bar it
            banned[j] = True
        x[:] = 0.0
        if solver.idx:
            x[solver.idx] = np.maximum(s, 0.0)
            resid = y - b[:, solver.idx] @ x[solver.idx]
        else:
            resid = y.copy()
        trace.append(float(np.linalg.norm(resid)))

    if solver.idx:
        # SVD polish on the final support for a tight gradient certificate
        polished = np.linalg.lstsq(b[:, solver.idx], y, rcond=None)[0]
        if np.all(polished > 0.0):
            x[:] = 0.0
            x[solver.idx] = polished

    gamma = x.reshape(shape, order="F") if shape is not None else x.reshape(-1, 1)
    return PsfEstimate(
        gamma_star=gamma,
        residual_norm=float(np.linalg.norm(b @ x + floor - q)),
        iterations=iterations,
        converged=converged,
        residual_trace=np.asarray(trace),
    )


def kkt_violation(b: np.ndarray, q: np.ndarray, floor: float, x: np.ndarray) -> float:
    """Worst KKT violation of a candidate solution, relative to ||B^T q||_inf.

    Independent certificate used by the tests: positive entries must have a
    vanishing gradient, zero entries a non-negative one.
    """
    x = np.asarray(x).reshape(-1, order="F")
    grad = b.T @ (b @ x + floor - q)
    scale = float(np.abs(b.T @ q).max(initial=0.0))
    if scale == 0.0:
        scale = 1.0
    positive = x > 0
    worst = 0.0
    if np.any(positive):
        worst = float(np.abs(grad[positive]).max())
    if np.any(~positive):
        worst = max(worst, float(np.maximum(-grad[~positive], 0.0).max()))
    return worst / scale


def m_plus_check(b: np.ndarray) -> MPlusReport:
    """Check that d = 1 certifies B^T d > 0, i.e. every cell is probed at least once."""
    b = np.asarray(b)
    coverage = b.sum(axis=0)
    unprobed = np.flatnonzero(coverage <= 0)
    return MPlusReport(satisfied=unprobed.size == 0, unprobed_columns=unprobed)


def select_beam(gamma_star: np.ndarray) -> BeamSelection | None:
    """Argmax cell of the recovered matrix; lexicographic (row, col) tie-break.

    Returns None for an all-zero matrix (no detection).
    """
    gamma_star = np.asarray(gamma_star)
    if gamma_star.ndim != 2:
        raise ValueError("gamma_star must be 2-D")
    if not np.any(gamma_star > 0):
        return None
    flat = int(np.argmax(gamma_star))  # C-order argmax = smallest (row, col) among ties
    n_idx, m_idx = divmod(flat, gamma_star.shape[1])
    return BeamSelection(ue_index=n_idx, bs_index=m_idx, strength=float(gamma_star[n_idx, m_idx]))


def _support_lstsq(a_sub: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, bool]:
    """LS on the selected columns; ridge fallback when the Gram is rank-deficient."""
    gram = a_sub.conj().T @ a_sub
    rhs = a_sub.conj().T @ y
    k = a_sub.shape[1]
    if np.linalg.matrix_rank(gram) < k:
        ridge = 1e-10 * np.trace(gram).real / max(k, 1)
        return np.linalg.solve(gram + ridge * np.eye(k), rhs), True
    return np.linalg.solve(gram, rhs), False


def omp_baseline(
    measurements: np.ndarray,
    sensing: np.ndarray,
    sparsity: int,
    shape: tuple[int, int],
) -> OmpResult:
    """Orthogonal matching pursuit on the stacked complex instantaneous model.

    Assumes the beamspace channel stayed constant over the whole training
    window; ``sensing`` rows are the combined probing vectors.  Correlations
    are normalized by column norms.  Runs exactly ``sparsity`` greedy
    iterations, then returns the cell of the largest recovered coefficient.
    The columns of ``sensing`` follow the same column-major (ue, bs) layout
    as the energy-domain system.
    """
    y = np.asarray(measurements, dtype=complex).reshape(-1)
    a = np.asarray(sensing, dtype=complex)
    if a.shape[0] != y.size:
        raise ValueError(f"inconsistent model: A {a.shape}, y {y.shape}")
    if sparsity < 1:
        raise ValueError("sparsity must be >= 1")
    if not np.any(np.abs(y) > 0):
        return OmpResult(selection=None, note="zero measurements")

    col_norms = np.linalg.norm(a, axis=0)
    usable = col_norms > 0
    if not np.any(usable):
        return OmpResult(selection=None, note="all-zero sensing matrix")
    norms_safe = np.where(usable, col_norms, 1.0)

    support: list[int] = []
    resid = y.copy()
    coef = np.empty(0, dtype=complex)
    regularized = False
    for _ in range(min(sparsity, int(usable.sum()))):
        corr = np.abs(a.conj().T @ resid) / norms_safe
        corr[~usable] = -1.0
        corr[support] = -1.0
        j = int(np.argmax(corr))
        if corr[j] <= 0:
            break
        support.append(j)
        a_sub = a[:, support]
        coef, fell_back = _support_lstsq(a_sub, y)
        regularized = regularized or fell_back
        resid = y - a_sub @ coef

    if not support:
        return OmpResult(selection=None, regularized=regularized, note="no column selected")
    best = support[int(np.argmax(np.abs(coef)))]
    n_idx = best % shape[0]
    m_idx = best // shape[0]
    selection = BeamSelection(
        ue_index=int(n_idx), bs_index=int(m_idx), strength=float(np.abs(coef).max())
    )
    return OmpResult(
        selection=selection,
        support=np.asarray(support, dtype=np.int64),
        coefficients=np.asarray(coef),
        regularized=regularized,
    )
