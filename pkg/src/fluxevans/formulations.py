"""First-order coefficient matrices for every Evans-function formulation.

Each formulation rewrites the eigenvalue problem as W' = A(x1; lambda, xi) W
with phase blocks (f1, f2, u2) of sizes (r, n-r, n-r).  All variants share
the same linearized coefficient data (a CoeffPack sampled along the
profile) and differ only in how the blocks are combined; every variant is
affine in a single scale parameter (lambda for the 1D/fixed-frequency
variants, the radial scale rho for the sharp variants), which the
assemblers expose as a (C0, C1) pair with A = C0 + scale * C1.

Variants:
  integrated_1d    eliminates the translational zero (xi = 0)
  flux_1d          flux variable f = B11 U' - A1 U, keeps the zero
  balanced_flux_1d flux variable rescaled by lambda; equals integrated_1d
  flux_md          multi-dimensional flux system at fixed (lambda, xi)
  sharp_md         radially rescaled system at scale rho and a unit angle
  integrated_b21   integrated system allowing a lower-left viscosity block
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import HypothesisViolationError, ScalingUndefinedError

_TAIL_PAD = 10.0   # sampling offset beyond +-L used for the limit matrices


@dataclass(frozen=True)
class Frequency:
    """Spectral frequency (lambda, xi) with its radial scalings."""

    lam: complex
    xi: tuple = ()

    @classmethod
    def make(cls, lam, xi=()):
        return cls(complex(lam),
                   tuple(float(x) for x in np.atleast_1d(xi)))

    @property
    def xi_arr(self):
        return np.asarray(self.xi, dtype=float)

    @property
    def r(self):
        """Euclidean radius |(lambda, xi)| >= 0."""
        return float(np.sqrt(abs(self.lam) ** 2 + np.sum(self.xi_arr ** 2)))

    @property
    def r2(self):
        """Modified radial scale |xi| + lambda (complex, analytic in lambda)."""
        return complex(float(np.linalg.norm(self.xi_arr)) + self.lam)

    @property
    def angle(self):
        """Unit-sphere angle (lambda/r, xi/r); None at the origin."""
        r = self.r
        if r == 0.0:
            return None
        return (self.lam / r, tuple(self.xi_arr / r))

    def sharp(self, rho):
        """Rescaled angle (lambda/rho, xi/rho) for a given nonzero rho."""
        if rho == 0:
            raise ScalingUndefinedError("sharp angle undefined at rho = 0")
        return (self.lam / rho, tuple(self.xi_arr / rho))


@dataclass
class CoeffPack:
    """Linearized coefficients sampled at a batch of profile points.

    All arrays carry a leading batch axis.  A1 includes the viscosity
    derivative correction -dB11(., U') and Aj (j >= 2) the -dBj1(., U')
    correction; dBj1x holds the x1-derivative matrices (Bj1)'.
    """

    xs: np.ndarray
    U: np.ndarray
    dU: np.ndarray
    A0: np.ndarray
    A1: np.ndarray
    a: np.ndarray          # inverse of the (1,1) block of A1
    aA12: np.ndarray       # a @ A1_12
    binv: np.ndarray       # inverse of the lower-right block of B11
    Aj: dict               # j -> corrected Aj array, j = 2..d
    dBj1x: dict            # j -> (B^{j1})' array, j = 1..d
    bjk: dict              # (j, k) -> lower-right block of B^{jk}
    b21: np.ndarray = None     # lower-left block of B11 (b21 mode)
    db22x: np.ndarray = None   # (b22)' (b21 mode)
    db21x: np.ndarray = None   # (b21)' (b21 mode)


def _bilinear_correction(T, dU):
    """Matrix M with M[p, i] = sum_q T[p, q, i] dU_q."""
    return np.einsum("pqi,q->pi", T, dU)


def make_pack(model, profile, xs):
    """Sample the linearized coefficients of the profile at points xs."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    Us = profile.value(xs)
    dUs = profile.slope(xs)
    return _pack_from_states(model, xs, Us, dUs)


def _pack_from_states(model, xs, Us, dUs):
    m, n = Us.shape
    p = model.part
    A0 = np.empty((m, n, n))
    A1 = np.empty((m, n, n))
    Aj = {j: np.empty((m, n, n)) for j in range(2, model.d + 1)}
    dBj1x = {j: np.zeros((m, n, n)) for j in range(1, model.d + 1)}
    bjk = {jk: np.empty((m, p.q, p.q)) for jk in model.visc}
    need_b21 = model.b21_present
    b21 = np.empty((m, p.q, model.r)) if need_b21 else None
    db22x = np.zeros((m, p.q, p.q)) if need_b21 else None
    db21x = np.zeros((m, p.q, model.r)) if need_b21 else None

    for i in range(m):
        U, dU = Us[i], dUs[i]
        A0[i] = model.A(0, U)
        T11 = model.dB(1, 1, U) if (1, 1) in model.dvisc else None
        A1[i] = model.Atilde1(U)
        if T11 is not None:
            A1[i] -= _bilinear_correction(T11, dU)
            dBj1x[1][i] = np.einsum("pqi,i->pq", T11, dU)
            if need_b21:
                db22x[i] = dBj1x[1][i][p.s2, p.s2]
                db21x[i] = dBj1x[1][i][p.s2, p.s1]
        for j in range(2, model.d + 1):
            Aj[j][i] = model.A(j, U)
            if (j, 1) in model.dvisc:
                Tj1 = model.dB(j, 1, U)
                Aj[j][i] -= _bilinear_correction(Tj1, dU)
                dBj1x[j][i] = np.einsum("pqi,i->pq", Tj1, dU)
        for jk in model.visc:
            B = model.B(*jk, U)
            bjk[jk][i] = p.lower_right(B)
            if need_b21 and jk == (1, 1):
                b21[i] = p.lower_left(B)

    A1_11 = A1[:, p.s1, p.s1]
    if model.r > 0:
        dets = np.linalg.det(A1_11)
        bad = np.abs(dets) < 1e-12 * (1.0 + np.abs(A1_11).max())
        if np.any(bad):
            raise HypothesisViolationError(
                "A~1_11 singular at x1 = "
                f"{xs[np.argmax(bad)]:.4g}; (H1) fails on the profile")
    a = np.linalg.inv(A1_11)
    aA12 = a @ A1[:, p.s1, p.s2]
    b11 = bjk.get((1, 1))
    if b11 is None:
        raise HypothesisViolationError("model has no B^11 viscosity block")
    binv = np.linalg.inv(b11)
    return CoeffPack(xs=xs, U=Us, dU=dUs, A0=A0, A1=A1, a=a, aA12=aA12,
                     binv=binv, Aj=Aj, dBj1x=dBj1x, bjk=bjk,
                     b21=b21, db22x=db22x, db21x=db21x)


def linearized_coeffs(model, profile, x1):
    """Linearized coefficient matrices at a single point x1.

    Returns a dict with keys 'A0', 'A1' (derivative-corrected), 'Aj'
    (dict j -> matrix, j >= 2, corrected) and 'Bjk' (dict (j,k) -> full
    n x n viscosity matrix).
    """
    pack = make_pack(model, profile, [float(x1)])
    U = pack.U[0]
    return {
        "A0": pack.A0[0],
        "A1": pack.A1[0],
        "Aj": {j: pack.Aj[j][0] for j in pack.Aj},
        "Bjk": {jk: model.B(*jk, U) for jk in model.visc},
    }


# --- assemblers: pack -> (C0, C1) with A = C0 + scale * C1 ---

def _split3(pack, part):
    """Shared block shorthand used by every assembler."""
    A0_11, A0_12, A0_21, A0_22 = part.split(pack.A0)
    A1_11, A1_12, A1_21, A1_22 = part.split(pack.A1)
    return A0_11, A0_12, A0_21, A0_22, A1_21, A1_22


def _assemble_integrated(pack, part):
    A0_11, A0_12, A0_21, A0_22, A1_21, A1_22 = _split3(pack, part)
    a, aA12, binv = pack.a, pack.aA12, pack.binv
    m = pack.A0.shape[:1]
    C1 = part.assemble([
        [-A0_11 @ a, None, None],
        [-A0_21 @ a, None, None],
        [-binv @ A1_21 @ a, binv, None]], m)
    C0 = part.assemble([
        [None, None, A0_12 - A0_11 @ aA12],
        [None, None, A0_22 - A0_21 @ aA12],
        [None, None, binv @ (A1_22 - A1_21 @ aA12)]], m)
    return C0, C1


def _assemble_flux_1d(pack, part):
    A0_11, A0_12, A0_21, A0_22, A1_21, A1_22 = _split3(pack, part)
    a, aA12, binv = pack.a, pack.aA12, pack.binv
    m = pack.A0.shape[:1]
    C1 = part.assemble([
        [-A0_11 @ a, None, A0_12 - A0_11 @ aA12],
        [-A0_21 @ a, None, A0_22 - A0_21 @ aA12],
        [None, None, None]], m)
    C0 = part.assemble([
        [None, None, None],
        [None, None, None],
        [-binv @ A1_21 @ a, binv, binv @ (A1_22 - A1_21 @ aA12)]], m)
    return C0, C1


def _xi_pieces(pack, part, xi):
    """Transverse combinations: At = sum xi_j (Aj + (Bj1)'), b_xi, b_xixi."""
    n = pack.A0.shape[-1]
    m = pack.A0.shape[0]
    # xi may be complex in the modified-balanced scaling (xi / r2)
    dt = complex if np.iscomplexobj(np.asarray(xi)) else float
    At = np.zeros((m, n, n), dtype=dt)
    b_xi = np.zeros((m, part.q, part.q), dtype=dt)
    b_xixi = np.zeros((m, part.q, part.q), dtype=dt)
    for j, xj in enumerate(xi, start=2):
        if xj == 0.0:
            continue
        At += xj * (pack.Aj[j] + pack.dBj1x[j])
        if (j, 1) in pack.bjk:
            b_xi += xj * pack.bjk[(j, 1)]
        if (1, j) in pack.bjk:
            b_xi += xj * pack.bjk[(1, j)]
        for k, xk in enumerate(xi, start=2):
            if xk != 0.0 and (j, k) in pack.bjk:
                b_xixi += xj * xk * pack.bjk[(j, k)]
    return At, b_xi, b_xixi


def _assemble_flux_md(pack, part, xi):
    """Multi-D flux system; affine in lambda with xi fixed."""
    A0_11, A0_12, A0_21, A0_22, A1_21, A1_22 = _split3(pack, part)
    a, aA12, binv = pack.a, pack.aA12, pack.binv
    At, b_xi, b_xixi = _xi_pieces(pack, part, xi)
    At_11, At_12, At_21, At_22 = part.split(At)
    m = pack.A0.shape[:1]
    C1 = part.assemble([
        [-A0_11 @ a, None, A0_12 - A0_11 @ aA12],
        [-A0_21 @ a, None, A0_22 - A0_21 @ aA12],
        [None, None, None]], m)
    C0 = part.assemble([
        [-1j * At_11 @ a, None, -1j * At_11 @ aA12 + 1j * At_12],
        [-1j * At_21 @ a, None,
         -1j * At_21 @ aA12 + 1j * At_22 + b_xixi],
        [-binv @ A1_21 @ a, binv,
         binv @ (A1_22 - A1_21 @ aA12 - 1j * b_xi)]], m)
    return C0, C1


def _assemble_sharp(pack, part, lam_sharp, xi_sharp):
    """Radially rescaled system; affine in the scale rho, polynomial there."""
    A0_11, A0_12, A0_21, A0_22, A1_21, A1_22 = _split3(pack, part)
    a, aA12, binv = pack.a, pack.aA12, pack.binv
    At, b_xi, b_xixi = _xi_pieces(pack, part, np.asarray(xi_sharp))
    At_11, At_12, At_21, At_22 = part.split(At.astype(complex))
    ls = complex(lam_sharp)
    m = pack.A0.shape[:1]
    C1 = part.assemble([
        [-ls * A0_11 @ a - 1j * At_11 @ a, None, None],
        [-ls * A0_21 @ a - 1j * At_21 @ a, None, b_xixi],
        [-binv @ A1_21 @ a, binv, -1j * binv @ b_xi]], m)
    C0 = part.assemble([
        [None, None,
         -ls * (A0_11 @ aA12 - A0_12) - 1j * At_11 @ aA12 + 1j * At_12],
        [None, None,
         -ls * (A0_21 @ aA12 - A0_22) - 1j * At_21 @ aA12 + 1j * At_22],
        [None, None, binv @ (A1_22 - A1_21 @ aA12)]], m)
    return C0, C1


def _assemble_integrated_b21(pack, part):
    """Integrated system with a lower-left viscosity block (d = 1)."""
    A0_11, A0_12, A0_21, A0_22 = part.split(pack.A0)
    A1_11, A1_12, A1_21, A1_22 = part.split(pack.A1)
    b22inv = pack.binv                       # inverse of b22 block
    b21 = pack.b21
    # curly-B = A1_11 - A1_12 b22^{-1} b21, invertible under (H1')
    b22inv_b21 = b22inv @ b21
    curly = A1_11 - A1_12 @ b22inv_b21
    dets = np.linalg.det(curly)
    if curly.shape[-1] and np.any(
            np.abs(dets) < 1e-12 * (1.0 + np.abs(curly).max())):
        raise HypothesisViolationError(
            "reduced hyperbolic block singular; (H1') fails on the profile")
    Binv = np.linalg.inv(curly)
    # d/dx1 of b22^{-1} b21 via the product rule
    d_b22inv_b21 = -b22inv @ pack.db22x @ b22inv_b21 + b22inv @ pack.db21x
    M3 = -Binv @ A1_12
    N1c = b22inv_b21 @ Binv                  # N1 = lambda * N1c
    N3 = np.broadcast_to(np.eye(part.q), b22inv.shape) + b22inv_b21 @ Binv @ A1_12
    m = pack.A0.shape[:1]
    C1 = part.assemble([
        [-A0_11 @ Binv + A0_12 @ N1c, None, None],
        [-A0_21 @ Binv + A0_22 @ N1c, None, None],
        [-b22inv @ A1_21 @ Binv - d_b22inv_b21 @ Binv
         + b22inv @ A1_22 @ b22inv_b21 @ Binv,
         b22inv, None]], m)
    C0 = part.assemble([
        [None, None, A0_11 @ M3 + A0_12 @ N3],
        [None, None, A0_21 @ M3 + A0_22 @ N3],
        [None, None,
         b22inv @ (-A1_21 @ Binv @ A1_12 + A1_22
                   + A1_22 @ b22inv_b21 @ Binv @ A1_12)
         - d_b22inv_b21 @ Binv @ A1_12]], m)
    return C0, C1


@dataclass
class CoefficientField:
    """x1-dependent coefficient matrix of one formulation at one frequency.

    A(x1) = C0(x1) + scale * C1(x1); eval/sample evaluate it, pieces
    exposes the affine decomposition for batched contour sweeps.
    """

    variant: str
    model: object
    profile: object
    freq: Frequency
    scale: complex
    _assembler: callable = field(repr=False)

    @property
    def part(self):
        return self.model.part

    @property
    def N(self):
        return self.model.N

    def pieces(self, pack):
        """(C0, C1) arrays over the pack's batch of x1 points."""
        return self._assembler(pack, self.part)

    def sample(self, xs, pack=None):
        """Batched A(x1) over an array of points."""
        if pack is None:
            pack = make_pack(self.model, self.profile, xs)
        C0, C1 = self.pieces(pack)
        return C0 + self.scale * C1

    def eval(self, x1):
        return self.sample([float(x1)])[0]

    @cached_property
    def limits(self):
        """Constant limit matrices (A_minus, A_plus) at x1 -> -+infinity."""
        L = self.profile.L
        A = self.sample([-L - _TAIL_PAD, L + _TAIL_PAD])
        return A[0], A[1]


def build_integrated_1d(model, profile, lam):
    return CoefficientField("integrated_1d", model, profile,
                            Frequency(complex(lam)), complex(lam),
                            _assemble_integrated)


def build_flux_1d(model, profile, lam):
    return CoefficientField("flux_1d", model, profile,
                            Frequency(complex(lam)), complex(lam),
                            _assemble_flux_1d)


def build_balanced_flux_1d(model, profile, lam):
    if lam == 0:
        raise ScalingUndefinedError(
            "balanced flux variable divides by lambda; lambda = 0 invalid")
    # assembled through the radial template at scale lambda and unit angle,
    # so the entrywise agreement with integrated_1d is a checked identity
    # rather than shared code
    asm = lambda pack, part: _assemble_sharp(pack, part, 1.0, ())  # noqa: E731
    return CoefficientField("balanced_flux_1d", model, profile,
                            Frequency(complex(lam)), complex(lam), asm)


def build_flux_md(model, profile, freq):
    xi = freq.xi_arr
    asm = lambda pack, part, _xi=xi: _assemble_flux_md(pack, part, _xi)  # noqa: E731
    return CoefficientField("flux_md", model, profile, freq, freq.lam, asm)


def build_sharp_md(model, profile, rho, sharp_freq):
    lam_sharp, xi_sharp = sharp_freq
    # reconstruct the unscaled frequency; xi = rho * xi_sharp is real even
    # when rho and xi_sharp are separately complex (modified scaling)
    xi_rec = np.real(complex(rho) * np.asarray(xi_sharp, dtype=complex))
    freq = Frequency(complex(rho) * complex(lam_sharp),
                     tuple(float(x) for x in xi_rec))
    asm = lambda pack, part: _assemble_sharp(pack, part, lam_sharp, xi_sharp)  # noqa: E731
    return CoefficientField("sharp_md", model, profile, freq,
                            complex(rho), asm)


def build_integrated_b21(model, profile, lam):
    if not model.b21_present:
        raise HypothesisViolationError(
            "integrated_b21 variant requires a model with b21_present")
    return CoefficientField("integrated_b21", model, profile,
                            Frequency(complex(lam)), complex(lam),
                            _assemble_integrated_b21)


def dump_matrix(fieldobj, x1):
    """Text table of A(x1) with block separators, for regression baselines."""
    A = fieldobj.eval(x1)
    p = fieldobj.part
    cuts = [p.r, p.n]
    lines = [f"variant={fieldobj.variant}  x1={x1:g}  "
             f"lambda={fieldobj.freq.lam}  xi={fieldobj.freq.xi}"]
    for i in range(A.shape[0]):
        if i in cuts:
            lines.append("-" * 20)
        cells = []
        for j in range(A.shape[1]):
            if j in cuts:
                cells.append("|")
            cells.append(f"{A[i, j]:.6g}")
        lines.append("  ".join(cells))
    return "\n".join(lines)
