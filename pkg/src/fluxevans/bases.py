"""Invariant subspaces of the limit matrices and their continuation.

split() produces orthonormal bases of the stable / unstable invariant
subspaces of a constant limit matrix via a sorted complex Schur form (no
diagonalizability assumed).  KatoTransport / kato_continue carry a chosen
basis continuously along a frequency path by a second-order discrete
integration of the projector ODE R' = P' P R, which is the unique
continuation with P R' = 0.  Eigenvalue groups are tracked by nearest
matching between consecutive samples, so the continued subspace stays the
"same" family even when eigenvalues wander across the imaginary axis
(as happens on contours encircling the origin).
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur, solve_sylvester
from scipy.optimize import linear_sum_assignment

from .errors import DiscontinuityError, SplittingError

GAP_TOL = 1e-10


@dataclass
class SubspaceSplit:
    side: str                 # '+' or '-'
    k_stable: int
    k_unstable: int
    stable_basis: np.ndarray
    unstable_basis: np.ndarray
    gap: float
    stable_eigs: np.ndarray
    unstable_eigs: np.ndarray


def split(limit_matrix, side="+", gap_tol=GAP_TOL):
    """Stable/unstable splitting of a constant coefficient matrix."""
    M = np.asarray(limit_matrix, dtype=complex)
    eigs = np.linalg.eigvals(M)
    scale = 1.0 + np.abs(eigs).max()
    gap = float(np.min(np.abs(eigs.real)))
    if gap < gap_tol * scale:
        raise SplittingError(
            f"spectral gap {gap:.3e} below tolerance; an eigenvalue sits on "
            "the imaginary axis (essential-spectrum boundary)")
    Ts, Zs, ks = schur(M, output="complex", sort=lambda mu: mu.real < 0)
    Tu, Zu, ku = schur(M, output="complex", sort=lambda mu: mu.real > 0)
    return SubspaceSplit(
        side=side, k_stable=int(ks), k_unstable=int(ku),
        stable_basis=Zs[:, :ks].copy(), unstable_basis=Zu[:, :ku].copy(),
        gap=gap,
        stable_eigs=np.diag(Ts)[:ks].copy(),
        unstable_eigs=np.diag(Tu)[:ku].copy())


def _group_projector(M, group):
    """Spectral projector of M onto the invariant subspace of the
    eigenvalue group (an array of complex values, matched by proximity).

    Also returns an orthonormal basis of the subspace and the matched
    eigenvalues in Schur order.
    """
    M = np.asarray(M, dtype=complex)
    N = M.shape[0]
    k = len(group)
    if k == 0:
        return np.zeros((N, N), dtype=complex), np.zeros((N, 0), complex), group
    if k == N:
        return np.eye(N, dtype=complex), np.eye(N, dtype=complex), group
    eigs = np.linalg.eigvals(M)
    # proximity membership: each eigenvalue belongs to the group if its
    # nearest matched partner does
    cost = np.abs(eigs[:, None] - np.asarray(group)[None, :])
    rows, cols = linear_sum_assignment(cost)
    chosen = set()
    for i, j in zip(rows, cols):
        chosen.add(i)
    sel_vals = eigs[sorted(chosen)]

    def member(mu):
        d_in = np.min(np.abs(mu - sel_vals))
        others = np.array([e for i, e in enumerate(eigs)
                           if i not in chosen])
        d_out = np.min(np.abs(mu - others)) if len(others) else np.inf
        return bool(d_in <= d_out)

    T, Z, sdim = schur(M, output="complex", sort=member)
    if sdim != k:
        raise DiscontinuityError(
            "eigenvalue-group continuation lost track of the subspace "
            f"dimension ({sdim} != {k})")
    T11 = T[:k, :k]
    T12 = T[:k, k:]
    T22 = T[k:, k:]
    # P = Z [[I, Y], [0, 0]] Z^H with T11 Y - Y T22 = T12
    Y = solve_sylvester(T11, -T22, T12)
    top = np.hstack([np.eye(k, dtype=complex), Y])
    P = Z[:, :k] @ top @ Z.conj().T
    return P, Z[:, :k].copy(), np.diag(T)[:k].copy()


def _interp_freq(f0, f1, t):
    from .formulations import Frequency
    lam = (1 - t) * f0.lam + t * f1.lam
    xi = tuple((1 - t) * a + t * b for a, b in zip(f0.xi, f1.xi))
    return Frequency(lam, xi)


@dataclass
class KatoBasis:
    path: list                # Frequency samples
    R: list                   # basis matrix per sample
    P: list                   # projector per sample
    side: str                 # '+' or '-'
    flavor: str               # 'stable' or 'unstable'
    groups: list              # tracked eigenvalue group per sample


def _kato_step(P0, Pm, P1, R):
    """One second-order step of R' = P' P R using the midpoint projector."""
    G = (P1 - P0) @ Pm
    return P1 @ (R + G @ R + 0.5 * G @ (G @ R))


class KatoTransport:
    """Continues a projector/basis pair along a parametrized matrix family.

    matrix_of: callable Frequency -> N x N limit matrix.
    """

    MAX_DEPTH = 24
    JUMP_TOL = 0.5   # max allowed ||P1 - P0|| per accepted substep

    def __init__(self, matrix_of, f0, flavor, side="+"):
        self.matrix_of = matrix_of
        self.flavor = flavor
        self.side = side
        M0 = matrix_of(f0)
        sp = split(M0, side=side)
        if flavor == "stable":
            group = sp.stable_eigs
            R0 = sp.stable_basis
        else:
            group = sp.unstable_eigs
            R0 = sp.unstable_basis
        P0, _, group = _group_projector(M0, group)
        self.freq = f0
        self.P = P0
        self.R = R0.astype(complex)
        self.group = group

    def advance(self, f1):
        """Transport the basis to frequency f1, bisecting as needed."""
        self._advance_segment(self.freq, f1, depth=0)
        self.freq = f1

    def _projector_at(self, f, group):
        M = self.matrix_of(f)
        P, _, g = _group_projector(M, group)
        return P, g

    def _advance_segment(self, f0, f1, depth):
        P1, g1 = self._projector_at(f1, self.group)
        if np.linalg.norm(P1 - self.P, 2) >= self.JUMP_TOL:
            if depth >= self.MAX_DEPTH:
                raise DiscontinuityError(
                    "projector jump persists after maximal bisection; "
                    f"possible eigenvalue crossing near lambda={f1.lam}")
            fm = _interp_freq(f0, f1, 0.5)
            self._advance_segment(f0, fm, depth + 1)
            self._advance_segment(fm, f1, depth + 1)
            return
        Pm, _ = self._projector_at(_interp_freq(f0, f1, 0.5), self.group)
        self.R = _kato_step(self.P, Pm, P1, self.R)
        self.P = P1
        self.group = g1


def kato_continue(field_builder, path, side, flavor):
    """Kato-transport a basis of the chosen limit subspace along a path.

    field_builder maps a Frequency to a CoefficientField; side selects the
    limit at -infinity ('-') or +infinity ('+'); flavor picks 'stable' or
    'unstable'.  Returns a KatoBasis sampled at the path frequencies.
    """
    idx = 0 if side == "-" else 1

    def matrix_of(f):
        return field_builder(f).limits[idx]

    tr = KatoTransport(matrix_of, path[0], flavor, side=side)
    Rs, Ps, gs = [tr.R.copy()], [tr.P.copy()], [tr.group.copy()]
    for f in path[1:]:
        tr.advance(f)
        Rs.append(tr.R.copy())
        Ps.append(tr.P.copy())
        gs.append(tr.group.copy())
    return KatoBasis(path=list(path), R=Rs, P=Ps, side=side, flavor=flavor,
                     groups=gs)


def glancing_model(r, xi_hat, lambda_hat, tau):
    """2x2 constant model of a glancing mode: [[0, 1], [delta, 0]]."""
    delta = glancing_delta(r, xi_hat, lambda_hat, tau)
    return np.array([[0.0, 1.0], [delta, 0.0]], dtype=complex)


def glancing_delta(r, xi_hat, lambda_hat, tau):
    """delta = lambda_hat - i tau(xi_hat) + r; eigenvalues are +-sqrt(delta)."""
    return complex(lambda_hat) - 1j * tau(xi_hat) + r
