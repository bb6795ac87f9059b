"""First step: group LARS over time-indexed break groups.

The objective is ``(1/T) ||Y - Z theta||^2 + lam * sum_j ||theta_j||`` over
the ``T`` coefficient-change groups.  Internally everything is expressed on
the correlation scale ``kappa = T * lam / 2`` at which the optimality
conditions read ``c_j = kappa * theta_j / ||theta_j||`` for nonzero groups
and ``||c_j|| <= kappa`` otherwise, where ``c_j`` is the group correlation
with the current residual.

Two path variants share the same entry bookkeeping: the path stops once
``M`` break groups are active, and every entered group blocks its
``h_min`` neighbourhood from later entry.

``method="lasso"`` traces the exact path.  Groups enter at the knots where
an inactive correlation norm reaches ``kappa``; between knots the
active-set problem is re-solved exactly (Newton with block coordinate
descent as fallback), and the next knot is located by a linear predictor
along the equiangular direction followed by a bracketing corrector.

``method="refit"`` takes full LARS steps: after every entry the active
groups sit at their least squares fit, and the next group is the one whose
correlation norm, in the metric of its design orthogonalized against the
active groups, is largest.  Shrinkage bias of the exact path leaves
residual structure next to every entered break that attracts spurious
entries; the refit variant does not have that problem and needs a much
smaller ``M`` to cover all breaks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .design import cumulative_fit, group_correlations, regressor_rows
from .panel import BreakSet, PanelError, SelectionMask, TimeSeriesPanel, validate_panel

log = logging.getLogger(__name__)

ZERO_FLOOR = 1e-10


class RankDeficientError(PanelError):
    """Active-set Gram is singular; h_min is too small for the model size."""


@dataclass
class KKTReport:
    """Optimality check for a group coefficient array at one penalty level.

    Violations are relative to ``kappa = T * lam / 2``: for inactive groups
    ``(||c_j|| - kappa) / kappa``, for active groups the misalignment
    ``||c_j - kappa * theta_j / ||theta_j|| || / kappa``.
    """

    lam: float
    inactive_slack: NDArray[np.float64]
    active_error: dict[int, float]
    tol: float

    @property
    def max_inactive(self) -> float:
        return float(self.inactive_slack.max()) if self.inactive_slack.size else -np.inf

    @property
    def max_active(self) -> float:
        return max(self.active_error.values(), default=0.0)

    @property
    def max_violation(self) -> float:
        return max(self.max_inactive, self.max_active)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol


@dataclass
class PathState:
    """Mutable state of one path computation (1-based group indices)."""

    active: list[int]
    theta: dict[int, NDArray[np.float64]]
    residual: NDArray[np.float64]
    lambda_trace: list[float] = field(default_factory=list)
    excluded: set[int] = field(default_factory=set)
    trimmed: set[int] = field(default_factory=set)
    ssr_trace: list[float] = field(default_factory=list)


@dataclass
class FirstStepResult:
    candidates: BreakSet
    theta_hat: NDArray[np.float64]
    lambda_trace: list[float]
    kkt_report: KKTReport
    state: PathState
    h_min: int
    entry_order: list[int]
    thetas: list[NDArray[np.float64]] = field(default_factory=list, repr=False)


def default_h_min(panel: TimeSeriesPanel, configured: int | None = None) -> int:
    """Minimum break distance: at least ``d + 1``."""
    base = panel.d + 1
    return base if configured is None else max(base, int(configured))


def kkt_verify(
    panel: TimeSeriesPanel,
    theta_hat: NDArray[np.float64],
    lam: float,
    tol: float = 1e-6,
    mask: SelectionMask | None = None,
    exclude=None,
    penalize_baseline: bool = True,
) -> KKTReport:
    """Check the group LASSO optimality conditions for ``theta_hat`` (T x d).

    Groups listed in ``exclude`` (1-based) are skipped in the inactive
    check; this is how the min-distance blocking of the path is honoured.
    With ``penalize_baseline=False`` group 1 must have zero correlation.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    theta_hat = np.asarray(theta_hat, dtype=float).reshape(panel.T, panel.d)
    Z = regressor_rows(panel)
    resid = panel.Y - cumulative_fit(theta_hat, Z, panel.q)
    corr = group_correlations(panel, resid, mask, Z=Z)
    kappa = 0.5 * panel.T * lam
    norms = np.linalg.norm(theta_hat, axis=1)
    active = norms > 0
    skip = np.zeros(panel.T, dtype=bool)
    err = {}
    if not penalize_baseline:
        err[1] = float(np.linalg.norm(corr[0]) / kappa)
        active[0] = False
        skip[0] = True
    if exclude:
        skip[np.asarray(sorted(exclude), dtype=int) - 1] = True
    inactive = ~active & ~skip
    slack = (np.linalg.norm(corr[inactive], axis=1) - kappa) / kappa
    for p in np.flatnonzero(active):
        direction = theta_hat[p] / norms[p]
        err[int(p) + 1] = float(np.linalg.norm(corr[p] - kappa * direction) / kappa)
    return KKTReport(lam, slack, err, tol)


def _block_prox(Hjj_eig, c: NDArray[np.float64], kappa: float) -> NDArray[np.float64]:
    """Minimize ``0.5 x'Hx - c'x + kappa ||x||`` for one block."""
    e, V = Hjj_eig
    g = V.T @ c
    if kappa == 0:
        return V @ (g / e)
    cn = np.linalg.norm(c)
    if cn <= kappa:
        return np.zeros_like(c)
    g2 = g * g
    # x = V y with y_i = g_i rho / (e_i rho + kappa) and rho = ||x|| the root
    # of psi(rho) = sum g_i^2 / (e_i rho + kappa)^2 = 1; 1/sqrt(psi) is close
    # to linear in rho, so Newton on it needs only a few steps.
    rho = (cn - kappa) / e.max()
    for _ in range(100):
        den = e * rho + kappa
        psi = np.sum(g2 / den**2)
        f = psi**-0.5 - 1.0
        df = psi**-1.5 * np.sum(g2 * e / den**3)
        rho_new = max(rho - f / df, 0.5 * rho)
        if abs(rho_new - rho) <= 1e-15 * rho:
            rho = rho_new
            break
        rho = rho_new
    return V @ (g * rho / (e * rho + kappa))


class _ActiveProblem:
    """Group LASSO restricted to the active groups, in correlation units.

    Minimizes ``0.5 theta'H theta - b'theta + kappa sum w_j ||theta_j||``
    with ``w_j`` in {0, 1}; ``H`` and ``b`` come from suffix Grams and
    suffix correlations.
    """

    def __init__(self, Gs, B, coords, q):
        self.Gs = Gs
        self.B = B
        self.coords = coords
        self.q = q
        self.groups: list[int] = []
        self.weights: list[float] = []
        self.slices: list[slice] = []
        self.H = np.zeros((0, 0))
        self.b = np.zeros(0)
        self._eig: list = []

    def _block(self, i: int, j: int) -> NDArray[np.float64]:
        full = np.kron(np.eye(self.q), self.Gs[max(i, j)])
        return full[np.ix_(self.coords(i), self.coords(j))]

    def add(self, p: int, weight: float = 1.0) -> None:
        Hpp = self._block(p, p)
        n, k = self.H.shape[0], Hpp.shape[0]
        H = np.zeros((n + k, n + k))
        H[:n, :n] = self.H
        if self.groups:
            C = np.vstack([self._block(g, p) for g in self.groups])
            H[:n, n:] = C
            H[n:, :n] = C.T
        H[n:, n:] = Hpp
        self.H = H
        self.b = np.concatenate([self.b, self.B[p, self.coords(p)]])
        self.groups.append(p)
        self.weights.append(weight)
        self.slices.append(slice(n, n + k))
        self._eig.append(np.linalg.eigh(Hpp))
        self._check_rank()

    def _check_rank(self) -> None:
        d = np.sqrt(np.diag(self.H))
        d[d == 0] = 1.0
        try:
            L = np.linalg.cholesky(self.H / np.outer(d, d))
        except np.linalg.LinAlgError:
            L = None
        if L is None or np.min(np.diag(L)) ** 2 < 1e-12:
            raise RankDeficientError(
                "active-set Gram is singular; increase h_min relative to the model size"
            )

    def _free(self, theta):
        """Blocks currently treated as nonzero (unpenalized blocks always)."""
        return [
            i for i, sl in enumerate(self.slices)
            if self.weights[i] == 0 or np.any(theta[sl])
        ]

    def _optimal(self, theta, kappa, scale) -> bool:
        c = self.b - self.H @ theta
        for sl, w in zip(self.slices, self.weights):
            nrm = np.linalg.norm(theta[sl])
            if w == 0:
                target = np.zeros(sl.stop - sl.start)
            elif nrm == 0:
                if np.linalg.norm(c[sl]) > kappa * (1 + 1e-11):
                    return False
                continue
            else:
                target = kappa * theta[sl] / nrm
            if np.linalg.norm(c[sl] - target) > 1e-11 * scale:
                return False
        return True

    def solve(self, kappa: float, theta0: NDArray[np.float64]) -> NDArray[np.float64]:
        theta = np.array(theta0, dtype=float)
        H, b = self.H, self.b
        scale = max(np.linalg.norm(b), kappa, 1e-300)
        for outer in range(60):
            c = b - H @ theta
            # wake up zero blocks whose condition is violated
            for sl, eig, w in zip(self.slices, self._eig, self.weights):
                if not np.any(theta[sl]) and (w == 0 or np.linalg.norm(c[sl]) > kappa):
                    new = _block_prox(eig, c[sl], kappa * w)
                    theta[sl] = new
                    c -= H[:, sl] @ new
            theta = self._newton(theta, kappa, scale)
            if self._optimal(theta, kappa, scale):
                return theta
            # a block wants to leave or Newton stalled: exact block sweeps
            c = b - H @ theta
            for _sweep in range(5 + 10 * outer):
                for sl, eig, w in zip(self.slices, self._eig, self.weights):
                    old = theta[sl].copy()
                    new = _block_prox(eig, c[sl] + H[sl, sl] @ old, kappa * w)
                    diff = new - old
                    if np.any(diff):
                        theta[sl] = new
                        c -= H[:, sl] @ diff
        log.debug("active-set solver stopped at iteration limit")
        return theta

    def _stationarity(self, theta, kappa, blocks):
        c = self.b - self.H @ theta
        parts = []
        for i in blocks:
            sl = self.slices[i]
            g = -c[sl]
            if self.weights[i]:
                g = g + kappa * self.weights[i] * theta[sl] / np.linalg.norm(theta[sl])
            parts.append(g)
        return np.concatenate(parts)

    def _newton(self, theta, kappa, scale):
        for _ in range(60):
            blocks = self._free(theta)
            if not blocks:
                return theta
            idx = np.concatenate([np.arange(self.slices[i].start, self.slices[i].stop) for i in blocks])
            F = self._stationarity(theta, kappa, blocks)
            fn = np.linalg.norm(F)
            if fn <= 1e-14 * scale:
                return theta
            try:
                step = np.linalg.solve(self.jacobian(theta, kappa, blocks), -F)
            except np.linalg.LinAlgError:
                return theta
            t = 1.0
            for _ls in range(40):
                trial = theta.copy()
                trial[idx] += t * step
                if all(np.any(trial[self.slices[i]]) for i in blocks):
                    if np.linalg.norm(self._stationarity(trial, kappa, blocks)) < fn:
                        theta = trial
                        break
                t *= 0.5
            else:
                # the step drives a penalized block through zero: release it
                pen = [i for i in blocks if self.weights[i]]
                if not pen:
                    return theta
                theta[self.slices[min(pen, key=lambda i: np.linalg.norm(theta[self.slices[i]]))]] = 0.0
        return theta

    def jacobian(self, theta, kappa, blocks):
        idx = np.concatenate([np.arange(self.slices[i].start, self.slices[i].stop) for i in blocks])
        J = self.H[np.ix_(idx, idx)].copy()
        off = 0
        for i in blocks:
            x = theta[self.slices[i]]
            k = len(x)
            if self.weights[i]:
                nrm = np.linalg.norm(x)
                s = x / nrm
                J[off : off + k, off : off + k] += (
                    kappa * self.weights[i] * (np.eye(k) - np.outer(s, s)) / nrm
                )
            off += k
        return J

    def direction(self, theta, kappa):
        """``d theta / d kappa`` with the current support held fixed."""
        blocks = self._free(theta)
        out = np.zeros_like(theta)
        if not blocks:
            return out
        idx = np.concatenate([np.arange(self.slices[i].start, self.slices[i].stop) for i in blocks])
        s = []
        for i in blocks:
            x = theta[self.slices[i]]
            s.append(self.weights[i] * x / np.linalg.norm(x) if self.weights[i] else np.zeros_like(x))
        out[idx] = -np.linalg.solve(self.jacobian(theta, kappa, blocks), np.concatenate(s))
        return out


class _Path:
    def __init__(self, panel: TimeSeriesPanel, mask: SelectionMask | None):
        self.panel = panel
        self.mask = mask
        self.Z = regressor_rows(panel)
        T, dz = self.Z.shape
        self.T, self.dz, self.q = T, dz, panel.q
        self.d = panel.q * dz
        Gs = np.cumsum((self.Z[:, :, None] * self.Z[:, None, :])[::-1], axis=0)[::-1]
        self.B = group_correlations(panel, panel.Y, mask, Z=self.Z)
        full = np.arange(self.d)
        if mask is None or mask.is_full:
            free = full
        else:
            free = np.flatnonzero(mask.mask.ravel())
        self.coords = lambda p: full if p == 0 else free
        self.problem = _ActiveProblem(Gs, self.B, self.coords, panel.q)

    def dense(self, theta_act: NDArray[np.float64]) -> NDArray[np.float64]:
        out = np.zeros((self.T, self.d))
        for p, sl in zip(self.problem.groups, self.problem.slices):
            out[p, self.coords(p)] = theta_act[sl]
        return out

    def correlations(self, theta_act) -> tuple[NDArray, NDArray]:
        dense = self.dense(theta_act)
        resid = self.panel.Y - cumulative_fit(dense, self.Z, self.q)
        return group_correlations(self.panel, resid, self.mask, Z=self.Z), resid

    def dcorr(self, dtheta) -> NDArray:
        dense = self.dense(dtheta)
        dfit = cumulative_fit(dense, self.Z, self.q)
        return group_correlations(self.panel, -dfit, self.mask, Z=self.Z)


def _crossing(c, v, kappa):
    """Largest ``delta < 0`` with ``||c + delta v|| = kappa + delta`` per row."""
    cc = np.einsum("ij,ij->i", c, c)
    cv = np.einsum("ij,ij->i", c, v)
    vv = np.einsum("ij,ij->i", v, v)
    a = vv - 1.0
    bq = 2.0 * (cv - kappa)
    cq = cc - kappa * kappa
    out = np.full(len(c), -np.inf)
    with np.errstate(invalid="ignore", divide="ignore"):
        disc = bq * bq - 4 * a * cq
        ok = disc >= 0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        lin = np.abs(a) < 1e-14
        r1 = np.where(lin, -cq / bq, (-bq - sq) / (2 * a))
        r2 = np.where(lin, -cq / bq, (-bq + sq) / (2 * a))
    for r in (r1, r2):
        good = ok & np.isfinite(r) & (r < 0) & (r > -kappa)
        out = np.where(good & (r > out), r, out)
    # rows already at or above the boundary cross immediately
    out = np.where(cq >= 0, 0.0, out)
    return out


def _lasso_path(
    panel: TimeSeriesPanel,
    M: int,
    h_min: int,
    mask: SelectionMask | None,
    eligible: NDArray[np.bool_],
    penalize_baseline: bool,
    kkt_tol: float,
    keep_path: bool,
) -> FirstStepResult:
    T = panel.T
    path = _Path(panel, mask)
    prob = path.problem
    trimmed = {int(i) + 1 for i in np.flatnonzero(~eligible)}

    state = PathState([], {}, panel.Y.copy(), trimmed=trimmed)
    floor = ZERO_FLOOR * max(np.linalg.norm(panel.Y), 1e-300)
    thetas = []
    theta = np.zeros(0)

    def enter(p: int, kappa: float, weight: float = 1.0):
        nonlocal theta
        prob.add(p, weight)
        theta = np.concatenate([theta, np.zeros(prob.slices[-1].stop - prob.slices[-1].start)])
        state.active.append(p + 1)
        if p > 0:
            block = np.abs(np.arange(T) - p) < h_min
            block[p] = False
            state.excluded.update(int(i) + 1 for i in np.flatnonzero(block & eligible))
            eligible[block] = False
        eligible[p] = False
        if weight:
            state.lambda_trace.append(2.0 * kappa / T)

    def record():
        _, resid = path.correlations(theta)
        state.ssr_trace.append(float(np.sum(resid**2)))
        if keep_path:
            thetas.append(path.dense(theta))

    if penalize_baseline:
        norms0 = np.where(eligible, np.linalg.norm(path.B, axis=1), -np.inf)
        first = int(np.argmax(norms0))
        kappa = float(norms0[first])
        if kappa <= floor:
            raise PanelError("all group correlations vanish; nothing to fit")
        enter(first, kappa)
    else:
        enter(0, np.inf, weight=0.0)
        theta = prob.solve(1.0, theta)
        corr, _ = path.correlations(theta)
        norms = np.where(eligible, np.linalg.norm(corr, axis=1), -np.inf)
        p = int(np.argmax(norms))
        kappa = float(norms[p])
        if kappa > floor:
            theta = prob.solve(kappa, theta)
            record()
            enter(p, kappa)
        else:
            kappa = floor
    record()

    def n_breaks():
        return sum(1 for a in state.active if a != 1)

    while n_breaks() < M and len(state.active) < M + 1 and eligible.any() and kappa > floor:
        nxt = _next_knot(path, theta, kappa, eligible, floor)
        if nxt is None:
            break
        kappa, theta, p = nxt
        enter(p, kappa)
        record()

    dense = path.dense(theta)
    _, resid = path.correlations(theta)
    state.residual = resid
    state.theta = {g + 1: dense[g].copy() for g in prob.groups}
    report = kkt_verify(
        panel, dense, 2.0 * kappa / T, kkt_tol, mask,
        exclude=state.excluded | state.trimmed, penalize_baseline=penalize_baseline,
    )
    return FirstStepResult(
        candidates=BreakSet(sorted(a for a in state.active if a != 1), T),
        theta_hat=dense,
        lambda_trace=list(state.lambda_trace),
        kkt_report=report,
        state=state,
        h_min=h_min,
        entry_order=list(state.active),
        thetas=thetas,
    )


def _next_knot(path: _Path, theta, kappa, eligible, floor):
    """Locate the next entry knot below ``kappa``.

    Returns ``(kappa_next, theta_at_knot, group_position)`` or ``None`` when
    no eligible group reaches the boundary above the numerical floor.
    """
    prob = path.problem
    idx = np.flatnonzero(eligible)
    if idx.size == 0:
        return None

    def evaluate(k, th0):
        th = prob.solve(k, th0)
        corr, _ = path.correlations(th)
        ratio = np.linalg.norm(corr[idx], axis=1) / k
        return th, corr, ratio

    hi_k, hi_theta = kappa, theta
    corr, _ = path.correlations(theta)
    lo_k = None
    lo_theta = None
    for _ in range(200):
        # predictor from the upper end of the bracket
        dth = prob.direction(hi_theta, hi_k)
        v = path.dcorr(dth)
        cross = _crossing(corr[idx], v[idx], hi_k)
        delta = cross.max()
        if not np.isfinite(delta):
            k_pred = None
        else:
            k_pred = hi_k + delta
        if lo_k is not None and (k_pred is None or k_pred <= lo_k or k_pred >= hi_k):
            k_pred = 0.5 * (lo_k + hi_k)
        if k_pred is None:
            # no predicted crossing: probe towards zero
            k_pred = 0.5 * hi_k
        if k_pred <= floor:
            if lo_k is None:
                th, c2, ratio = evaluate(floor, hi_theta)
                if ratio.max() < 1.0:
                    return None
                lo_k, lo_theta = floor, th
                continue
            k_pred = 0.5 * (lo_k + hi_k)
        if k_pred >= hi_k:
            k_pred = hi_k * (1 - 1e-12)
        th, c2, ratio = evaluate(k_pred, hi_theta)
        rmax = ratio.max()
        if rmax <= 1.0 + 1e-10:
            hi_k, hi_theta, corr = k_pred, th, c2
            if rmax >= 1.0 - 1e-10:
                break
        else:
            lo_k, lo_theta = k_pred, th
        if lo_k is not None and (hi_k - lo_k) <= 1e-12 * hi_k:
            th, corr, ratio = evaluate(hi_k, hi_theta)
            hi_theta = th
            break
    ratio = np.linalg.norm(corr[idx], axis=1) / hi_k
    p = int(idx[np.argmax(ratio)])
    if ratio.max() < 1.0 - 1e-6:
        log.debug("knot search ended with ratio %.3g", ratio.max())
    return hi_k, hi_theta, p


def _split_scores(
    Zs: NDArray[np.float64], Ys: NDArray[np.float64], pos: NDArray[np.int_]
) -> NDArray[np.float64]:
    """SSR reduction from splitting one regime before each row in ``pos``.

    ``Zs`` (n x d_z) and ``Ys`` (n x q) are the rows of the regime.  The
    reduction equals ``c' S^{-1} c`` per equation, with ``c`` the suffix
    correlation of the regime residual and ``S`` the Schur complement of
    the suffix Gram in the regime Gram.  Splits leaving a singular piece
    score ``-inf``.
    """
    out = np.full(len(pos), -np.inf)
    if len(pos) == 0:
        return out
    G = Zs.T @ Zs
    try:
        coef = np.linalg.solve(G, Zs.T @ Ys)
    except np.linalg.LinAlgError:
        coef = np.linalg.lstsq(Zs, Ys, rcond=None)[0]
    R = Ys - Zs @ coef
    GR = np.cumsum((Zs[:, :, None] * Zs[:, None, :])[::-1], axis=0)[::-1][pos]
    C = np.cumsum((Zs[:, :, None] * R[:, None, :])[::-1], axis=0)[::-1][pos]
    try:
        S = GR - GR @ np.linalg.solve(G, GR)
    except np.linalg.LinAlgError:
        return out
    S = 0.5 * (S + np.swapaxes(S, 1, 2))
    ok = np.linalg.cond(S) < 1e12
    if ok.any():
        out[ok] = np.einsum("nke,nke->n", C[ok], np.linalg.solve(S[ok], C[ok]))
    return out


class _MaskedRefit:
    """Least squares over the active groups when only masked coordinates break."""

    def __init__(self, panel: TimeSeriesPanel, mask: SelectionMask):
        self.panel = panel
        self.mask = mask
        self.Z = regressor_rows(panel)
        T, dz = self.Z.shape
        self.q = panel.q
        self.Gs = np.cumsum((self.Z[:, :, None] * self.Z[:, None, :])[::-1], axis=0)[::-1]
        self.B = group_correlations(panel, panel.Y, mask, Z=self.Z)
        self.free = np.flatnonzero(mask.mask.ravel())
        self.problem = _ActiveProblem(self.Gs, self.B, self.coords, panel.q)

    def coords(self, p: int) -> NDArray[np.int_]:
        return np.arange(self.panel.d) if p == 0 else self.free

    def fit(self):
        prob = self.problem
        theta = np.linalg.solve(prob.H, prob.b)
        dense = np.zeros((self.panel.T, self.panel.d))
        for p, sl in zip(prob.groups, prob.slices):
            dense[p, self.coords(p)] = theta[sl]
        resid = self.panel.Y - cumulative_fit(dense, self.Z, self.q)
        return dense, resid

    def scores(self, resid, idx):
        prob = self.problem
        q, f = self.q, self.free
        corr = group_correlations(self.panel, resid, self.mask, Z=self.Z)[idx][:, f]
        eye = np.eye(q)
        K = np.einsum("ab,nij->naibj", eye, self.Gs[idx]).reshape(len(idx), self.panel.d, self.panel.d)
        K = K[:, f][:, :, f]
        V = []
        for p in prob.groups:
            Gm = np.where((idx > p)[:, None, None], self.Gs[idx], self.Gs[p][None])
            full = np.einsum("ab,nij->naibj", eye, Gm).reshape(len(idx), self.panel.d, self.panel.d)
            V.append(full[:, self.coords(p)][:, :, f])
        V = np.concatenate(V, axis=1)
        L = np.linalg.cholesky(prob.H)
        n, P, k = V.shape
        W = np.linalg.solve(L, V.transpose(1, 0, 2).reshape(P, n * k)).reshape(P, n, k)
        S = K - np.einsum("pni,pnj->nij", W, W)
        S = 0.5 * (S + np.swapaxes(S, 1, 2))
        out = np.full(n, -np.inf)
        ok = np.linalg.cond(S) < 1e12
        if ok.any():
            out[ok] = np.einsum("ni,ni->n", corr[ok], np.linalg.solve(S[ok], corr[ok][:, :, None])[:, :, 0])
        return out


def _refit_path(
    panel: TimeSeriesPanel,
    M: int,
    h_min: int,
    mask: SelectionMask | None,
    eligible: NDArray[np.bool_],
    keep_path: bool,
) -> FirstStepResult:
    T, q = panel.T, panel.q
    Z = regressor_rows(panel)
    Yt = panel.Y.T
    trimmed = {int(i) + 1 for i in np.flatnonzero(~eligible)}
    eligible = eligible.copy()
    eligible[0] = False
    state = PathState([1], {}, panel.Y.copy(), trimmed=trimmed)
    floor = ZERO_FLOOR * max(np.linalg.norm(panel.Y), 1e-300)
    masked = mask is not None and not mask.is_full
    thetas = []

    if masked:
        refit = _MaskedRefit(panel, mask)
        refit.problem.add(0, 0.0)
    # starts of the current regimes (0-based); scores cached per regime
    starts = [0]
    cache: dict[int, NDArray[np.float64]] = {}

    def regime_scores(a: int) -> NDArray[np.float64]:
        b = next((s for s in sorted(starts) if s > a), T)
        sc = np.full(T, -np.inf)
        pos = np.flatnonzero(eligible[a:b])
        sc[a + pos] = _split_scores(Z[a:b], Yt[a:b], pos)
        return sc

    def current_fit():
        if masked:
            return refit.fit()
        dense = np.zeros((T, panel.d))
        resid = np.empty_like(panel.Y)
        prev = np.zeros((q, panel.d_z))
        edges = sorted(starts) + [T]
        for a, b in zip(edges[:-1], edges[1:]):
            coef = np.linalg.lstsq(Z[a:b], Yt[a:b], rcond=None)[0].T
            dense[a] = (coef - prev).ravel()
            prev = coef
            resid[:, a:b] = panel.Y[:, a:b] - coef @ Z[a:b].T
        return dense, resid

    dense, resid = current_fit()
    state.ssr_trace.append(float(np.sum(resid**2)))
    if keep_path:
        thetas.append(dense)
    while len(state.active) < M + 1 and eligible.any():
        if masked:
            idx = np.flatnonzero(eligible)
            score = np.full(T, -np.inf)
            score[idx] = refit.scores(resid, idx)
        else:
            for a in starts:
                if a not in cache:
                    cache[a] = regime_scores(a)
            score = np.max([np.where(eligible, cache[a], -np.inf) for a in starts], axis=0)
        p = int(np.argmax(score))
        if not np.isfinite(score[p]) or np.sqrt(max(score[p], 0.0)) <= floor:
            break
        state.active.append(p + 1)
        state.lambda_trace.append(2.0 * np.sqrt(score[p]) / T)
        block = np.abs(np.arange(T) - p) < h_min
        block[p] = False
        state.excluded.update(int(i) + 1 for i in np.flatnonzero(block & eligible))
        eligible[block] = False
        eligible[p] = False
        if masked:
            refit.problem.add(p, 1.0)
        else:
            owner = max(s for s in starts if s < p)
            starts.append(p)
            cache.pop(owner, None)
            for s in list(cache):
                cache[s] = np.where(eligible, cache[s], -np.inf)
        dense, resid = current_fit()
        state.ssr_trace.append(float(np.sum(resid**2)))
        if keep_path:
            thetas.append(dense)

    state.residual = resid
    state.theta = {a: dense[a - 1].copy() for a in state.active}
    return FirstStepResult(
        candidates=BreakSet(sorted(a for a in state.active if a != 1), T),
        theta_hat=dense,
        lambda_trace=list(state.lambda_trace),
        kkt_report=None,
        state=state,
        h_min=h_min,
        entry_order=list(state.active),
        thetas=thetas,
    )


def group_lars_path(
    panel: TimeSeriesPanel,
    M: int,
    h_min: int | None = None,
    mask: SelectionMask | None = None,
    method: str = "refit",
    edge: int | None = None,
    penalize_baseline: bool = False,
    kkt_tol: float = 1e-6,
    keep_path: bool = False,
) -> FirstStepResult:
    """First-step break candidates from a group LARS path.

    Parameters
    ----------
    M : maximum number of break candidates.
    h_min : minimum distance between active groups, group 1 included;
        ``None`` means ``d + 1``.  Explicit values are used as given.
    mask : coefficients allowed to break.
    method : ``"refit"`` (default) moves the active groups all the way to
        their least squares fit after every entry and lets the group with
        the largest correlation, measured in the metric of its design
        orthogonalized against the active groups, enter next.  This is the
        SSR reduction of adding that break.  ``"lasso"`` traces the exact
        group LASSO path knot by knot and verifies the optimality
        conditions at the last knot.
    edge : minimum length of the last regime, default ``d_z + 1`` (one
        residual degree of freedom per equation).
    penalize_baseline : ``"lasso"`` only.  The default leaves group 1
        unpenalized so the path starts from the full-sample least squares
        fit; with the baseline penalized the early knots are spent
        shrinking the level of ``Y``.
    keep_path : store the dense group coefficients after every entry.

    Returns
    -------
    FirstStepResult
        ``kkt_report`` is ``None`` for ``"refit"``, whose iterates are least
        squares fits rather than penalized solutions.
    """
    validate_panel(panel)
    if mask is not None:
        mask.check(panel)
    if M < 1:
        raise ValueError("M must be at least 1")
    h_min = default_h_min(panel) if h_min is None else int(h_min)
    if h_min < 1:
        raise ValueError("h_min must be at least 1")
    T = panel.T
    if T < (M + 1) * h_min:
        raise PanelError(f"infeasible: T={T} < (M+1)*h_min = {(M + 1) * h_min}")
    edge = max(panel.d_z + 1 if edge is None else int(edge), 1)
    eligible = np.zeros(T, dtype=bool)
    eligible[0] = True
    # group 1 is active, so the distance rule fixes the front margin
    if T - edge >= h_min:
        eligible[h_min : T - edge + 1] = True
    if method == "refit":
        return _refit_path(panel, M, h_min, mask, eligible, keep_path)
    if method == "lasso":
        return _lasso_path(panel, M, h_min, mask, eligible, penalize_baseline, kkt_tol, keep_path)
    raise ValueError(f"unknown method {method!r}; use 'refit' or 'lasso'")
