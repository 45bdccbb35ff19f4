"""System class: conservation laws with partially parabolic viscosity.

A SystemModel packages the fluxes f^j (j = 0..d, with f^0 the temporal
flux), their analytic Jacobians A^j, the viscosity matrices B^{jk}
(j, k = 1..d) and their U-derivatives, together with the shock speed s and
the block dimensions (n, r, d).  The viscosity matrices must have zero
first block row; the lower-left block must vanish too unless b21_present
is set (one-dimensional extended mode).

Structural checks (noncharacteristicity, parabolicity, Rankine-Hugoniot)
and the hyperbolic shock classification live here as free functions.
"""

from dataclasses import dataclass, field

import numpy as np

from .blocks import Partition
from .errors import CharacteristicShockError, DegenerateViscosityError

#: relative tolerance below which a characteristic speed counts as zero
CHARACTERISTIC_TOL = 1e-8


@dataclass(frozen=True)
class SystemModel:
    """Hyperbolic-parabolic conservation law in a co-moving frame."""

    n: int
    r: int
    d: int
    s: float
    flux: tuple          # flux[j](U) -> R^n, j = 0..d
    jac: tuple           # jac[j](U) -> n x n, analytic Jacobian of flux[j]
    visc: dict           # (j, k) -> callable U -> n x n, for j, k in 1..d
    dvisc: dict = field(default_factory=dict)
    # (j, k) -> callable U -> (n, n, n) tensor T with
    # T[p, q, i] = d B^{jk}_{pq} / d U_i ; missing keys mean zero.
    b21_present: bool = False

    def __post_init__(self):
        if not (0 <= self.r <= self.n):
            raise ValueError("need 0 <= r <= n")
        if self.d < 1:
            raise ValueError("need d >= 1")
        if len(self.flux) != self.d + 1 or len(self.jac) != self.d + 1:
            raise ValueError("need d+1 fluxes and Jacobians (f^0 .. f^d)")

    @property
    def part(self):
        return Partition(self.n, self.r)

    @property
    def N(self):
        return self.part.N

    # --- basic evaluations ---
    def f(self, j, U):
        return np.asarray(self.flux[j](np.asarray(U, dtype=float)), dtype=float)

    def A(self, j, U):
        return np.asarray(self.jac[j](np.asarray(U, dtype=float)), dtype=float)

    def B(self, j, k, U):
        fn = self.visc.get((j, k))
        if fn is None:
            return np.zeros((self.n, self.n))
        return np.asarray(fn(np.asarray(U, dtype=float)), dtype=float)

    def dB(self, j, k, U):
        """Derivative tensor of B^{jk} at U; zeros when not supplied."""
        fn = self.dvisc.get((j, k))
        if fn is None:
            return np.zeros((self.n, self.n, self.n))
        return np.asarray(fn(np.asarray(U, dtype=float)), dtype=float)

    def ftilde1(self, U):
        """Moving-frame normal flux f^1 - s f^0."""
        return self.f(1, U) - self.s * self.f(0, U)

    def Atilde1(self, U):
        """Jacobian of the moving-frame normal flux, A^1 - s A^0."""
        return self.A(1, U) - self.s * self.A(0, U)

    def char_speeds(self, U):
        """Eigenvalues of (A^0)^{-1}(A^1 - s A^0): shock-frame speeds."""
        M = np.linalg.solve(self.A(0, U), self.Atilde1(U))
        return np.linalg.eigvals(M)


@dataclass(frozen=True)
class ShockClassification:
    i_plus: int
    i_minus: int

    @property
    def i(self):
        return self.i_plus + self.i_minus

    def o(self, n):
        return 2 * n - self.i

    def compressivity(self, n):
        return self.i - self.o(n)

    kind: str = ""


def check_h1(model, state):
    """Noncharacteristicity determinant of the hyperbolic block.

    Returns det(A^1_11 - s A^0_11) at the given state (1.0 for r = 0 by the
    empty-determinant convention).  In b21_present mode the determinant of
    A^1_11 - A^1_12 (b22^11)^{-1} b21^11 - s A^0_11 is returned instead.
    """
    p = model.part
    if model.r == 0:
        return 1.0
    A1 = model.A(1, state)
    A0 = model.A(0, state)
    M = A1[p.s1, p.s1] - model.s * A0[p.s1, p.s1]
    if model.b21_present:
        B11 = model.B(1, 1, state)
        b22 = p.lower_right(B11)
        b21 = p.lower_left(B11)
        if abs(np.linalg.det(b22)) < 1e-14 * (1.0 + np.abs(b22).max()):
            raise DegenerateViscosityError(
                "b22 block of B^11 is singular; (H1') determinant undefined")
        M = M - A1[p.s1, p.s2] @ np.linalg.solve(b22, b21)
    return float(np.real(np.linalg.det(M)))


def _unit_directions(d, samples):
    """Deterministic unit-direction sample in R^d (Fibonacci-style for d=3)."""
    if d == 1:
        return np.array([[1.0]])
    if d == 2:
        th = np.pi * np.arange(samples) / samples
        return np.column_stack([np.cos(th), np.sin(th)])
    if d == 3:
        k = np.arange(samples)
        z = 1.0 - (2.0 * k + 1.0) / samples
        phi = np.pi * (3.0 - np.sqrt(5.0)) * k
        rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    raise ValueError("direction sampling implemented for d <= 3")


def check_h2(model, state, samples=64):
    """Parabolicity certificate.

    Minimum over sampled unit directions eta of the smallest real part of
    the spectrum of sum_jk eta_j eta_k b^{jk}(state).  A positive return
    certifies (H2) on the sample set with theta equal to the return value.
    """
    p = model.part
    worst = np.inf
    for eta in _unit_directions(model.d, samples):
        b = np.zeros((p.q, p.q))
        for j in range(1, model.d + 1):
            for k in range(1, model.d + 1):
                b += eta[j - 1] * eta[k - 1] * p.lower_right(model.B(j, k, state))
        worst = min(worst, float(np.min(np.real(np.linalg.eigvals(b)))))
    return worst


def check_rh(model, U_minus, U_plus):
    """Max-norm Rankine-Hugoniot residual of the moving-frame flux."""
    return float(np.max(np.abs(model.ftilde1(U_plus) - model.ftilde1(U_minus))))


def classify(model, U_minus, U_plus):
    """Hyperbolic classification (Lax / undercompressive / overcompressive).

    Counts characteristics incoming to the shock: positive shock-frame
    speeds at the left state, negative ones at the right state.
    """
    counts = {}
    for label, U in (("minus", U_minus), ("plus", U_plus)):
        speeds = np.real(model.char_speeds(U))
        scale = 1.0 + np.max(np.abs(speeds))
        bad = np.abs(speeds) < CHARACTERISTIC_TOL * scale
        if np.any(bad):
            raise CharacteristicShockError(
                f"characteristic speed {speeds[bad][0]:.3e} at U_{label} is "
                "within tolerance of zero (characteristic end state)")
        counts[label] = speeds
    i_minus = int(np.sum(counts["minus"] > 0))
    i_plus = int(np.sum(counts["plus"] < 0))
    i = i_minus + i_plus
    if i == model.n + 1:
        kind = "Lax"
    elif i <= model.n:
        kind = "undercompressive"
    else:
        kind = "overcompressive"
    return ShockClassification(i_plus=i_plus, i_minus=i_minus, kind=kind)
