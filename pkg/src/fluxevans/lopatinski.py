"""Inviscid stability determinant and the low-frequency Evans limit.

The inviscid (first-order) system linearized at a constant end state admits
normal modes e^(lambda t + i xi.x~ + mu x1); the admissible spatial rates mu
are eigenvalues of the symbol matrix

    G(U, omega) = -(A1 - s A0)^{-1} (lam_hat A0 + i sum_j xi_hat_j Aj),

with omega = (lam_hat, xi_hat) a unit frequency direction.  The stability
determinant pairs the modes decaying to the right of the shock, the modes
decaying to the left, and the frequency-weighted jump of the conserved
quantities across the shock.  fit_low_frequency estimates the constant
linking this determinant to the balanced Evans function as the frequency
radius r -> 0, using frames continued in angle and radius so that the
per-angle estimates are comparable.
"""

from dataclasses import dataclass, field

import numpy as np

from .bases import KatoTransport, split
from .errors import FitError, GlancingError, HypothesisViolationError
from .formulations import Frequency

GLANCING_COND_TOL = 1e6
DELTA_ZERO_TOL = 1e-12


def _unit_angle(angle):
    """Normalize (lam_hat, xi_hat) to the unit sphere."""
    f = angle if isinstance(angle, Frequency) else Frequency.make(*angle)
    nrm = np.sqrt(abs(f.lam) ** 2 + sum(x ** 2 for x in f.xi))
    if nrm == 0:
        raise ValueError("zero frequency direction")
    return Frequency(f.lam / nrm, tuple(x / nrm for x in f.xi))


def symbol_matrix(model, U, s, angle):
    """Spatial-rate pencil matrix G(U, omega) of the inviscid system."""
    f = angle if isinstance(angle, Frequency) else Frequency.make(*angle)
    A1s = model.A(1, U) - s * model.A(0, U)
    rhs = f.lam * model.A(0, U).astype(complex)
    for j, xij in enumerate(f.xi, start=2):
        rhs = rhs + 1j * xij * model.A(j, U)
    try:
        return -np.linalg.solve(A1s, rhs)
    except np.linalg.LinAlgError:
        raise HypothesisViolationError(
            "first-order flux Jacobian is characteristic at the end state")


def _check_glancing(G):
    """Reject directions where the pencil is (nearly) defective."""
    _, V = np.linalg.eig(G)
    cond = np.linalg.cond(V)
    if cond > GLANCING_COND_TOL:
        raise GlancingError(
            f"near-defective symbol (eigenvector condition {cond:.2e}); "
            "the low-frequency expansion has a square-root singularity here")


def jump_vector(model, U_minus, U_plus, angle):
    """Frequency-weighted jump lam_hat [f0] + i sum xi_hat_j [fj]."""
    f = angle if isinstance(angle, Frequency) else Frequency.make(*angle)
    g = f.lam * (model.f(0, U_minus) - model.f(0, U_plus)).astype(complex)
    for j, xij in enumerate(f.xi, start=2):
        g = g + 1j * xij * (model.f(j, U_minus) - model.f(j, U_plus))
    return g


def lopatinski_det(model, U_minus, U_plus, s, angle):
    """Inviscid stability determinant at one unit frequency direction.

    Columns: modes growing to the left at the minus state, modes decaying
    to the right at the plus state, and the jump vector.  The overall
    normalization depends on the basis choice; only zeros and ratios
    across continuously chosen bases are meaningful.
    """
    omega = _unit_angle(angle)
    if omega.lam.real < 0:
        raise ValueError("direction must satisfy Re lam_hat >= 0")
    if model.n == 1:
        # scalar case: no interior modes, just the weighted jump
        return complex(jump_vector(model, U_minus, U_plus, omega)[0])
    Gm = symbol_matrix(model, U_minus, s, omega)
    Gp = symbol_matrix(model, U_plus, s, omega)
    _check_glancing(Gm)
    _check_glancing(Gp)
    sp_m = split(Gm, side="-")
    sp_p = split(Gp, side="+")
    # the linearized jump condition pairs first-flux traces of the decaying
    # modes with the frequency-weighted jump, so mode columns carry the
    # moving-frame flux Jacobian of their end state
    Rm = model.Atilde1(U_minus) @ sp_m.unstable_basis
    Rp = model.Atilde1(U_plus) @ sp_p.stable_basis
    g = jump_vector(model, U_minus, U_plus, omega)
    n = model.n
    if Rm.shape[1] + Rp.shape[1] + 1 != n:
        raise HypothesisViolationError(
            "incoming-mode count plus jump column does not fill the state "
            f"space ({Rm.shape[1]} + {Rp.shape[1]} + 1 != {n})")
    return complex(np.linalg.det(np.column_stack([Rm, Rp, g])))


def _delta_chain(model, U_minus, U_plus, s, angles):
    """Determinants and mode frames at a chain of angles.

    The first angle seeds orthonormal frames of the incoming-mode
    subspaces; subsequent angles reuse the transported frames, making
    both the determinants and the frames comparable across the chain.
    Returns (determinants, minus-side frames, plus-side frames).
    """
    omegas = [_unit_angle(a) for a in angles]
    for om in omegas:
        _check_glancing(symbol_matrix(model, U_minus, s, om))
        _check_glancing(symbol_matrix(model, U_plus, s, om))
    tr_m = KatoTransport(lambda f: symbol_matrix(model, U_minus, s, f),
                         omegas[0], "unstable", side="-")
    tr_p = KatoTransport(lambda f: symbol_matrix(model, U_plus, s, f),
                         omegas[0], "stable", side="+")
    n = model.n
    if tr_m.R.shape[1] + tr_p.R.shape[1] + 1 != n:
        raise HypothesisViolationError(
            "incoming-mode count plus jump column does not fill the state "
            f"space ({tr_m.R.shape[1]} + {tr_p.R.shape[1]} + 1 != {n})")
    A1m = model.Atilde1(U_minus)
    A1p = model.Atilde1(U_plus)
    dets, Vm, Vp = [], [], []
    for i, om in enumerate(omegas):
        if i > 0:
            tr_m.advance(om)
            tr_p.advance(om)
        g = jump_vector(model, U_minus, U_plus, om)
        dets.append(complex(np.linalg.det(
            np.column_stack([A1m @ tr_m.R, A1p @ tr_p.R, g]))))
        Vm.append(tr_m.R.copy())
        Vp.append(tr_p.R.copy())
    return dets, Vm, Vp


@dataclass
class LowFrequencyFit:
    angles: list                  # unit Frequency directions
    radii: list                   # strictly decreasing r values
    delta_values: list            # inviscid determinant per angle
    gamma_estimates: list         # extrapolated D_bf / Delta per angle
    spread: float                 # max relative deviation from the mean
    flagged: list = field(default_factory=list)   # angles with Delta ~ 0
    evans_values: list = field(default_factory=list)  # per angle, per radius

    def to_text(self):
        lines = ["# angle_index  Re(lam_hat)  Im(lam_hat)  |xi_hat|  "
                 "Re(Delta)  Im(Delta)  Re(gamma)  Im(gamma)"]
        for i, om in enumerate(self.angles):
            d = self.delta_values[i]
            g = self.gamma_estimates[i]
            gs = ("skipped" if g is None
                  else f"{g.real: .9e} {g.imag: .9e}")
            xin = np.sqrt(sum(x ** 2 for x in om.xi))
            lines.append(f"{i:3d}  {om.lam.real: .6f}  {om.lam.imag: .6f}  "
                         f"{xin: .6f}  {d.real: .9e}  {d.imag: .9e}  {gs}")
        lines.append(f"# spread = {self.spread:.6e}")
        if self.flagged:
            lines.append(f"# flagged (|Delta| ~ 0): {self.flagged}")
        return "\n".join(lines)


def _extrapolate(radii, values):
    """Iterated-Richardson limit of values(r) as r -> 0.

    One Richardson pass per adjacent radius pair kills the linear term;
    a second pass over the pair results kills the quadratic one, so three
    radii give the quadratic-through-the-points intercept.  The difference
    of the two first-pass results serves as a convergence estimate.
    """
    rs = np.asarray(radii, dtype=float)
    vs = np.asarray(values, dtype=complex)
    if len(rs) < 2:
        return vs[0], np.inf
    first = []
    for i in range(len(rs) - 1):
        r0, r1 = rs[i], rs[i + 1]
        first.append((r0 * vs[i + 1] - r1 * vs[i]) / (r0 - r1))
    if len(first) == 1:
        return first[0], abs(first[0] - vs[-1])
    # the pair result carries a residual -d r_i r_{i+1} from the quadratic
    # term, so the second pass extrapolates in the pair products
    second = []
    for i in range(len(first) - 1):
        p0, p1 = rs[i] * rs[i + 1], rs[i + 1] * rs[i + 2]
        second.append((p0 * first[i + 1] - p1 * first[i]) / (p0 - p1))
    est = second[-1]
    err = abs(first[-1] - first[-2])
    return est, err


def _fast_reference_modes(model, profile):
    """Zero-frequency fast modes of the flux system at each end state.

    At zero frequency the flux rows of the coefficient matrix vanish, so
    eigenvectors for nonzero rates have zero flux component (0, v); these
    directions are independent of the frequency angle and serve as the
    angle-independent part of the balanced initial frames.  Returns, per
    side, the (stable-fast, unstable-fast) eigenvector matrices.
    """
    from .evans import field_builder
    fld0 = field_builder(model, profile, "flux_md")(
        Frequency(0.0, tuple(0.0 for _ in range(model.d - 1))))
    out = {}
    for side, idx in (("-", 0), ("+", 1)):
        M = fld0.limits[idx]
        mus, V = np.linalg.eig(M)
        fast = np.abs(mus) > 1e-8 * (1.0 + np.abs(mus).max())
        st = fast & (mus.real < 0)
        un = fast & (mus.real > 0)
        out[side] = (V[:, st], V[:, un])
    return out


def _aligned_frame(model, A_lim, r, V_inv, v_fast, flavor, U_state):
    """Initial frame of the balanced system aligned with the proof's bases.

    Fast columns: angle-independent zero-frequency modes (0, v), projected
    onto the fast stable/unstable invariant subspace of the balanced limit
    matrix.  Slow columns: lifts (-A1~ V, 0) of the inviscid eigenframe V
    (the same frame entering the inviscid determinant), projected onto the
    slow invariant subspace.  Returns (frame, eigenvalue group).
    """
    from .bases import _group_projector
    n, N = model.n, model.N
    mus = np.linalg.eigvals(A_lim)
    order = np.argsort(np.abs(mus))
    slow, fast = mus[order[:n]], mus[order[n:]]
    sgn = -1.0 if flavor == "stable" else 1.0
    slow_g = slow[sgn * slow.real > 0]
    fast_g = fast[sgn * fast.real > 0]
    if len(slow_g) != V_inv.shape[1] or len(fast_g) != v_fast.shape[1]:
        raise HypothesisViolationError(
            "slow/fast mode counts of the balanced limit matrix do not "
            f"match the inviscid and zero-frequency counts at r={r:g} "
            f"({len(slow_g)} vs {V_inv.shape[1]}, "
            f"{len(fast_g)} vs {v_fast.shape[1]})")
    cols = []
    if len(fast_g):
        P_f, _, fast_g = _group_projector(A_lim, fast_g)
        cols.append(P_f @ v_fast)
    if len(slow_g):
        A1t = model.Atilde1(U_state)
        lift = np.zeros((N, V_inv.shape[1]), dtype=complex)
        lift[:n] = -A1t @ V_inv
        P_s, _, slow_g = _group_projector(A_lim, slow_g)
        cols.append(P_s @ lift)
    R = np.column_stack(cols)
    return R, np.concatenate([fast_g, slow_g])


def _aligned_evans_values(model, profile, omegas, radii, Vm, Vp):
    """Balanced Evans values over angles x radii with proof-aligned frames.

    The frequency angle enters the initial data only through the shared
    inviscid frames Vm/Vp, so the r -> 0 limits divided by the inviscid
    determinants built from the same frames are comparable across angles.
    """
    from .evans import evaluate_many, field_builder
    builder = field_builder(model, profile, "bf")
    fast = _fast_reference_modes(model, profile)
    fields, bp, bm, slots = [], [], [], []
    for k, om in enumerate(omegas):
        for j, r in enumerate(radii):
            fld = builder(Frequency(r * om.lam,
                                    tuple(r * x for x in om.xi)))
            Rp, gp = _aligned_frame(model, fld.limits[1], r, Vp[k],
                                    fast["+"][0], "stable",
                                    profile.U_plus)
            Rm, gm = _aligned_frame(model, fld.limits[0], r, Vm[k],
                                    fast["-"][1], "unstable",
                                    profile.U_minus)
            fields.append(fld)
            bp.append((Rp, gp))
            bm.append((Rm, gm))
            slots.append((k, j))
    ev = evaluate_many(fields, bp, bm)
    ref = ev[0].log_scale
    out = [[None] * len(radii) for _ in omegas]
    for (k, j), s in zip(slots, ev):
        out[k][j] = s.value * np.exp(s.log_scale - ref)
    return out


def fit_low_frequency(model, profile, angles, radii, evans_eval=None):
    """Estimate the angle-independent constant linking the balanced Evans
    function to the inviscid determinant as the frequency radius r -> 0.

    angles: a chain of unit directions (lam_hat, xi_hat), Re lam_hat >= 0,
    ordered so consecutive angles are close (frames are continued along
    the chain).  radii: strictly decreasing r samples inside the resolved
    low-frequency regime.  evans_eval optionally replaces the built-in
    balanced Evans sampler with a callable f(angle, r, delta) -> complex
    (delta being the fit's own inviscid determinant at that angle), which
    is used for pipeline validation against planted data.
    """
    radii = [float(r) for r in radii]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    omegas = [_unit_angle(a) for a in angles]
    for om in omegas:
        if om.lam.real < 0:
            raise ValueError("directions must satisfy Re lam_hat >= 0")

    U_minus, U_plus = profile.U_minus, profile.U_plus
    deltas, Vm, Vp = _delta_chain(model, U_minus, U_plus, model.s, omegas)

    if evans_eval is None:
        values = _aligned_evans_values(model, profile, omegas, radii, Vm, Vp)
    else:
        values = [[complex(evans_eval(om, r, deltas[k])) for r in radii]
                  for k, om in enumerate(omegas)]

    gammas, flagged = [], []
    scale = max(abs(d) for d in deltas) + 1.0
    for k, om in enumerate(omegas):
        if abs(deltas[k]) < DELTA_ZERO_TOL * scale:
            flagged.append(k)
            gammas.append(None)
            continue
        limit, err = _extrapolate(radii, values[k])
        if abs(limit) == 0 or err > 0.8 * abs(limit):
            raise FitError(
                "low-frequency extrapolation did not converge at angle "
                f"index {k} (estimate {limit:.3e}, error {err:.3e})")
        gammas.append(limit / deltas[k])

    good = [g for g in gammas if g is not None]
    if good:
        mean = np.mean(good)
        spread = (max(abs(g - mean) for g in good) / abs(mean)
                  if abs(mean) > 0 else np.inf)
    else:
        spread = np.inf
    return LowFrequencyFit(angles=omegas, radii=radii, delta_values=deltas,
                           gamma_estimates=gammas, spread=float(spread),
                           flagged=flagged, evans_values=values)
