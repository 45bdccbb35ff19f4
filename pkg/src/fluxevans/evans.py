"""Evans-function evaluation and argument-principle winding counts.

The Evans function is the determinant, at a matching point, of a frame of
solutions decaying as x1 -> +infinity joined with a frame growing as
x1 -> -infinity (equivalently decaying backward).  Stiffness is controlled
by (i) subtracting the mean of the relevant limit eigenvalue group from
each side's system (a complex gauge) and (ii) QR re-orthonormalization at
fixed x1 intervals, accumulating the determinant corrections as a real
log-modulus plus a unit complex phase.  The imaginary part of the gauge
contributes a phase that is known in closed form; it is folded back into
the value and additionally reported unwrapped as phase_ramp, which lets
winding counts de-alias the rapid but analytically known phase rotation
coming from oscillatory decay rates at complex frequencies.  The reported
sample satisfies  D_true = value * exp(log_scale)  with log_scale real and
value carrying all phase information.

Two integrators are provided: an adaptive one (evaluate) for one-off
values, and a deterministic fixed-step batch integrator (evaluate_many)
that marches thousands of frequencies at once for dense contours and
finite-difference studies.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .bases import SubspaceSplit, kato_continue, split
from .errors import (
    AccuracyError, AngleRequiredError, ConfigError, ResolutionError,
    SplittingError, ZeroOnContourError,
)
from .formulations import (
    Frequency, build_balanced_flux_1d, build_flux_1d, build_flux_md,
    build_integrated_1d, build_integrated_b21, build_sharp_md, make_pack,
)

ODE_RTOL = 1e-9
ODE_ATOL = 1e-11
ORTHO_INTERVAL = 2.0     # x1 distance between QR re-orthonormalizations
COND_TOL = 1e-13


@dataclass
class EvansSample:
    freq: Frequency
    variant: str
    value: complex
    log_scale: float
    conditioning: float
    phase_ramp: float = 0.0   # unwrapped gauge phase already included in value

    @property
    def ill_conditioned(self):
        return self.conditioning < COND_TOL


@dataclass
class ContourResult:
    contour: list
    samples: list
    winding: int
    refinement_depth: int


# --- variant registry -------------------------------------------------------

def field_builder(model, profile, variant):
    """Map a variant name to a Frequency -> CoefficientField builder."""
    if variant == "integrated_1d":
        return lambda f: build_integrated_1d(model, profile, f.lam)
    if variant == "flux_1d":
        return lambda f: build_flux_1d(model, profile, f.lam)
    if variant == "balanced_flux_1d":
        return lambda f: build_balanced_flux_1d(model, profile, f.lam)
    if variant == "flux_md":
        return lambda f: build_flux_md(model, profile, f)
    if variant == "integrated_b21":
        return lambda f: build_integrated_b21(model, profile, f.lam)
    if variant in ("bf", "balanced_md"):
        def _bf(f):
            r = f.r
            if r == 0.0:
                raise AngleRequiredError(
                    "balanced scaling at the origin needs a direction")
            return build_sharp_md(model, profile, r, f.sharp(r))
        return _bf
    if variant in ("mbf", "modified_balanced_md"):
        def _mbf(f):
            if f.lam.real < 0:
                raise ConfigError(
                    "modified balanced scaling requires Re lambda >= 0")
            r2 = f.r2
            if r2 == 0:
                raise AngleRequiredError(
                    "modified balanced scaling undefined at lambda = xi = 0")
            return build_sharp_md(model, profile, r2, f.sharp(r2))
        return _mbf
    raise ConfigError(f"unknown variant {variant!r}")


# --- initializing data ------------------------------------------------------

def _side_init(obj, flavor):
    """Extract (basis, eigenvalue group) for one side.

    Accepts a SubspaceSplit (uses the requested flavor) or an explicit
    (basis, eigenvalues) pair, e.g. from Kato continuation.
    """
    if isinstance(obj, SubspaceSplit):
        if flavor == "stable":
            return obj.stable_basis, obj.stable_eigs
        return obj.unstable_basis, obj.unstable_eigs
    R, eigs = obj
    return np.asarray(R, dtype=complex), np.asarray(eigs, dtype=complex)


def default_splits(field):
    """Stable-at-+inf and unstable-at--inf splittings of a field's limits."""
    Am, Ap = field.limits
    return split(Ap, side="+"), split(Am, side="-")


# --- adaptive single evaluation --------------------------------------------

def _field_interp(field, n_points=4001):
    """Cubic-spline interpolant of A(x1) over [-L, L] (fast to evaluate)."""
    L = field.profile.L
    xs = np.linspace(-L, L, n_points)
    pack = make_pack(field.model, field.profile, xs)
    C0, C1 = field.pieces(pack)
    S = CubicSpline(xs, C0 + field.scale * C1, axis=0)

    def A(x):
        return S(np.clip(x, -L, L))
    return A


def _integrate_side(Afun, R0, gamma, x0, x_match, N):
    """Adaptively integrate W' = (A - gamma I) W with periodic QR.

    Returns (W at x_match, accumulated log|det|, accumulated unit phase).
    """
    k = R0.shape[1]
    W = R0.astype(complex)
    log_acc = 0.0
    phase_acc = 1.0 + 0.0j
    n_legs = max(1, int(np.ceil(abs(x_match - x0) / ORTHO_INTERVAL)))
    xs = np.linspace(x0, x_match, n_legs + 1)
    I = np.eye(N)

    def rhs(x, w):
        return ((Afun(x) - gamma * I) @ w.reshape(N, k)).ravel()

    for a, b in zip(xs[:-1], xs[1:]):
        sol = solve_ivp(rhs, (a, b), W.ravel(), method="DOP853",
                        rtol=ODE_RTOL, atol=ODE_ATOL)
        if not sol.success:
            raise AccuracyError(
                f"subspace integration failed on [{a:g}, {b:g}]")
        W = sol.y[:, -1].reshape(N, k)
        if b != x_match:
            Q, T = np.linalg.qr(W)
            d = np.diagonal(T)
            log_acc += float(np.sum(np.log(np.abs(d))))
            phase_acc *= complex(np.prod(d / np.abs(d)))
            W = Q
    return W, log_acc, phase_acc


def evaluate(field, split_plus, split_minus, x_match=0.0):
    """Evans determinant of one coefficient field at one frequency.

    split_plus / split_minus are SubspaceSplit objects or (basis,
    eigenvalues) pairs for the subspace decaying at +infinity and the one
    growing at -infinity respectively.
    """
    N = field.N
    Rp, eig_p = _side_init(split_plus, "stable")
    Rm, eig_m = _side_init(split_minus, "unstable")
    if Rp.shape[1] + Rm.shape[1] != N:
        raise SplittingError(
            "inconsistent splitting: subspace dimensions "
            f"{Rp.shape[1]} + {Rm.shape[1]} != {N}")
    L = field.profile.L
    Afun = _field_interp(field)
    gam_p = complex(np.mean(eig_p)) if len(eig_p) else 0.0
    gam_m = complex(np.mean(eig_m)) if len(eig_m) else 0.0
    Wp, log_p, ph_p = _integrate_side(Afun, Rp, gam_p, L, x_match, N)
    Wm, log_m, ph_m = _integrate_side(Afun, Rm, gam_m, -L, x_match, N)
    M = np.hstack([Wp, Wm])
    svals = np.linalg.svd(M, compute_uv=False)
    gauge = (Rp.shape[1] * gam_p * (x_match - L)
             + Rm.shape[1] * gam_m * (x_match + L))
    ramp = float(gauge.imag)
    value = complex(np.linalg.det(M) * ph_p * ph_m * np.exp(1j * ramp))
    log_scale = log_p + log_m + float(gauge.real)
    return EvansSample(freq=field.freq, variant=field.variant,
                       value=value, log_scale=float(log_scale),
                       conditioning=float(svals[-1]), phase_ramp=ramp)


def evaluate_bf(model, profile, freq, splits=None):
    """Balanced Evans function D_bf at radial scale r = |(lambda, xi)|."""
    fld = field_builder(model, profile, "bf")(freq)
    sp, sm = splits if splits is not None else default_splits(fld)
    return evaluate(fld, sp, sm)


def evaluate_mbf(model, profile, freq, splits=None):
    """Modified balanced Evans function D_mbf at scale r2 = |xi| + lambda."""
    fld = field_builder(model, profile, "mbf")(freq)
    sp, sm = splits if splits is not None else default_splits(fld)
    return evaluate(fld, sp, sm)


# --- deterministic batch evaluation ----------------------------------------

_SHARED_PIECES = {"integrated_1d", "flux_1d", "balanced_flux_1d",
                  "flux_md", "integrated_b21"}


def _pieces_shared(fields):
    """True when all fields produce identical (C0, C1) pieces."""
    v = fields[0].variant
    if v not in _SHARED_PIECES:
        return False
    if any(f.variant != v for f in fields):
        return False
    xi0 = fields[0].freq.xi
    return all(f.freq.xi == xi0 for f in fields)


def evaluate_many(fields, bases_plus, bases_minus, x_match=0.0,
                  step=0.05, ortho_steps=40, chunk=64):
    """Fixed-step RK4 Evans evaluation of many frequencies at once.

    fields share one model/profile; bases_plus[i] / bases_minus[i] are
    (basis, eigenvalue group) pairs per field.  Returns a list of
    EvansSample.  Deterministic (no adaptive stepping), so differences
    between nearby frequencies are smooth — suitable for dense contours
    and finite-difference work.
    """
    model = fields[0].model
    profile = fields[0].profile
    N = model.N
    L = profile.L
    F = len(fields)

    sides = {}
    for side_name, x0 in (("plus", L), ("minus", -L)):
        ns = max(1, int(np.ceil(abs(x_match - x0) / step)))
        xs = np.linspace(x0, x_match, 2 * ns + 1)   # includes RK midpoints
        pack = make_pack(model, profile, xs)
        sides[side_name] = (ns, (x_match - x0) / ns, pack)

    shared = _pieces_shared(fields)
    shared_pieces = {}
    if shared:
        for name, (_, _, pack) in sides.items():
            shared_pieces[name] = fields[0].pieces(pack)

    out_value = np.empty(F, dtype=complex)
    out_log = np.empty(F, dtype=float)
    out_cond = np.empty(F, dtype=float)
    out_ramp = np.empty(F, dtype=float)

    for lo in range(0, F, chunk):
        hi = min(lo + chunk, F)
        idx = range(lo, hi)
        Fc = hi - lo
        W_sides = {}
        log_c = np.zeros(Fc)
        phase_c = np.ones(Fc, dtype=complex)
        gauge_c = np.zeros(Fc, dtype=complex)
        for side_name, bases in (("plus", bases_plus), ("minus", bases_minus)):
            ns, h, pack = sides[side_name]
            if shared:
                C0, C1 = shared_pieces[side_name]
                scales = np.array([fields[i].scale for i in idx])
                A_all = C0[None] + scales[:, None, None, None] * C1[None]
            else:
                A_all = np.stack([
                    (lambda c: c[0] + fields[i].scale * c[1])(
                        fields[i].pieces(pack)) for i in idx])
            Rs, gammas = [], []
            for i in idx:
                R, eigs = _side_init(bases[i],
                                     "stable" if side_name == "plus"
                                     else "unstable")
                Rs.append(R)
                gammas.append(complex(np.mean(eigs)) if len(eigs) else 0.0)
            k = Rs[0].shape[1]
            W = np.stack(Rs).astype(complex)
            gam = np.array(gammas, dtype=complex)
            A_all = A_all - gam[:, None, None, None] * np.eye(N)
            x0 = L if side_name == "plus" else -L
            gauge_c += k * gam * (x_match - x0)
            for j in range(ns):
                A1 = A_all[:, 2 * j]
                Am = A_all[:, 2 * j + 1]
                A2 = A_all[:, 2 * j + 2]
                k1 = A1 @ W
                k2 = Am @ (W + 0.5 * h * k1)
                k3 = Am @ (W + 0.5 * h * k2)
                k4 = A2 @ (W + h * k3)
                W = W + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                if (j + 1) % ortho_steps == 0 and j + 1 < ns:
                    Q, T = np.linalg.qr(W)
                    d = np.diagonal(T, axis1=-2, axis2=-1)
                    log_c += np.sum(np.log(np.abs(d)), axis=-1)
                    phase_c *= np.prod(d / np.abs(d), axis=-1)
                    W = Q
            W_sides[side_name] = W
        M = np.concatenate([W_sides["plus"], W_sides["minus"]], axis=-1)
        ramp_c = gauge_c.imag
        out_value[lo:hi] = np.linalg.det(M) * phase_c * np.exp(1j * ramp_c)
        out_log[lo:hi] = log_c + gauge_c.real
        out_cond[lo:hi] = np.linalg.svd(M, compute_uv=False)[:, -1]
        out_ramp[lo:hi] = ramp_c

    return [EvansSample(freq=f.freq, variant=f.variant,
                        value=complex(out_value[i]),
                        log_scale=float(out_log[i]),
                        conditioning=float(out_cond[i]),
                        phase_ramp=float(out_ramp[i]))
            for i, f in enumerate(fields)]


# --- winding ----------------------------------------------------------------

def circle_contour(center, radius, m, xi=()):
    """m-sample closed circular contour in lambda at fixed xi."""
    thetas = 2.0 * np.pi * np.arange(m) / m
    return [Frequency(complex(center + radius * np.exp(1j * t)),
                      tuple(xi)) for t in thetas]


def _refine(contour, bad_segments):
    out = []
    m = len(contour)
    bad = set(bad_segments)
    for i, f in enumerate(contour):
        out.append(f)
        if i in bad:
            g = contour[(i + 1) % m]
            out.append(Frequency((f.lam + g.lam) / 2.0,
                                 tuple((a + b) / 2.0
                                       for a, b in zip(f.xi, g.xi))))
    return out


def winding(model, profile, variant, contour, opts=None):
    """Argument-principle winding number of D over a closed contour.

    contour is an ordered list of Frequency samples traversed once
    (closure segment last -> first implied).  Adaptively bisects segments
    until all consecutive phase increments are below pi/2.
    """
    opts = dict(opts or {})
    max_depth = int(opts.get("max_depth", 14))
    step = float(opts.get("step", 0.05))
    ortho_steps = int(opts.get("ortho_steps", 40))
    cond_tol = float(opts.get("cond_tol", COND_TOL))
    builder = field_builder(model, profile, variant)

    samples = list(contour)
    depth = 0
    while True:
        kb_p = kato_continue(builder, samples, "+", "stable")
        kb_m = kato_continue(builder, samples, "-", "unstable")
        fields = [builder(f) for f in samples]
        bases_p = list(zip(kb_p.R, kb_p.groups))
        bases_m = list(zip(kb_m.R, kb_m.groups))
        ev = evaluate_many(fields, bases_p, bases_m,
                           step=step, ortho_steps=ortho_steps)
        vals = np.array([s.value for s in ev])
        if np.any(vals == 0):
            raise ZeroOnContourError("exact zero of D on the contour")
        # De-alias the raw phase increments against the known gauge phase
        # ramp: the residual (value with the analytic ramp divided out)
        # rotates slowly, so it is the quantity that must stay under pi/2.
        ramps = np.array([s.phase_ramp for s in ev])
        dramp = np.roll(ramps, -1) - ramps
        raw = np.angle(np.roll(vals, -1) / vals)
        resid = (raw - dramp + np.pi) % (2.0 * np.pi) - np.pi
        incs = dramp + resid
        bad = np.where(np.abs(resid) >= np.pi / 2)[0]
        if len(bad) == 0:
            worst = min(s.conditioning for s in ev)
            if worst < cond_tol:
                raise ZeroOnContourError(
                    f"ill-conditioned sample (sigma_min = {worst:.2e}) "
                    "persists on the contour")
            total = float(np.sum(incs))
            w = int(np.rint(total / (2.0 * np.pi)))
            if abs(total / (2.0 * np.pi) - w) > 1e-6:
                raise ResolutionError(
                    "discretized phase sum is not an integer multiple "
                    f"of 2 pi (got {total / (2 * np.pi):.6f})")
            return ContourResult(contour=samples, samples=ev,
                                 winding=w, refinement_depth=depth)
        depth += 1
        if depth > max_depth:
            f_bad = samples[bad[0]]
            raise ResolutionError(
                "contour refinement exceeded maximum depth; offending "
                f"segment starts at lambda = {f_bad.lam}")
        samples = _refine(samples, bad)
