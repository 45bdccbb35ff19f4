"""Registry of built-in systems with analytic Jacobians and default shocks.

Available names: burgers, isentropic_lagrangian_1d, isentropic_eulerian_2d,
glancing_model.  The glancing entry is a 2x2 constant-coefficient fixture
(no conservation-law model attached); everything else is a full
SystemModel with a default shock satisfying Rankine-Hugoniot to roundoff.
"""

from dataclasses import dataclass, field

import numpy as np

from .model import SystemModel


@dataclass(frozen=True)
class SystemSpec:
    name: str
    model: SystemModel          # None for the glancing fixture
    default_shock: tuple        # (U_minus, U_plus, s); None for glancing
    params: dict = field(default_factory=dict)


def _burgers(params):
    u_minus = params.get("u_minus", 1.0)
    u_plus = params.get("u_plus", -1.0)
    b = params.get("b", 1.0)
    s = (u_minus + u_plus) / 2.0   # RH speed for the quadratic flux
    model = SystemModel(
        n=1, r=0, d=1, s=s,
        flux=(lambda U: U, lambda U: 0.5 * U * U),
        jac=(lambda U: np.ones((1, 1)), lambda U: U.reshape(1, 1)),
        visc={(1, 1): lambda U: np.array([[b]])},
    )
    return SystemSpec(
        name="burgers", model=model,
        default_shock=(np.array([u_minus]), np.array([u_plus]), s),
        params={"u_minus": u_minus, "u_plus": u_plus, "b": b})


def _lagrangian(params):
    gamma = params.get("gamma", 5.0 / 3.0)
    a = params.get("a", 1.0)
    v_minus = params.get("v_minus", 1.0)
    v_plus = params.get("v_plus", 0.5)
    u_minus = params.get("u_minus", 0.0)

    def pres(v):
        return a * v ** (-gamma)

    def dpres(v):
        return -a * gamma * v ** (-gamma - 1.0)

    # RH for the p-system: s^2 = [p]/(v_- - v_+), 1-shock takes s < 0
    s = -np.sqrt((pres(v_plus) - pres(v_minus)) / (v_minus - v_plus))
    u_plus = u_minus + s * (v_minus - v_plus)

    def f0(U):
        return U.copy()

    def f1(U):
        v, u = U
        return np.array([-u, pres(v)])

    def A1(U):
        v, u = U
        return np.array([[0.0, -1.0], [dpres(v), 0.0]])

    def B11(U):
        v, u = U
        return np.array([[0.0, 0.0], [0.0, 1.0 / v]])

    def dB11(U):
        v, u = U
        T = np.zeros((2, 2, 2))
        T[1, 1, 0] = -1.0 / v ** 2
        return T

    model = SystemModel(
        n=2, r=1, d=1, s=s,
        flux=(f0, f1),
        jac=(lambda U: np.eye(2), A1),
        visc={(1, 1): B11},
        dvisc={(1, 1): dB11},
    )
    return SystemSpec(
        name="isentropic_lagrangian_1d", model=model,
        default_shock=(np.array([v_minus, u_minus]),
                       np.array([v_plus, u_plus]), s),
        params={"gamma": gamma, "a": a, "v_minus": v_minus,
                "v_plus": v_plus, "u_minus": u_minus, "u_plus": u_plus})


def _eulerian_2d(params):
    """Isentropic Navier-Stokes in two space dimensions.

    State U = (rho, u1, u2); the conserved quantities are the components of
    f^0(U) = (rho, rho u1, rho u2).  Mass equation inviscid (r = 1),
    Newtonian viscosity mu = 1 with bulk coefficient eta = -2 mu / 3.
    """
    gamma = params.get("gamma", 5.0 / 3.0)
    a = params.get("a", 1.0)
    mu = params.get("mu", 1.0)
    eta = params.get("eta", -2.0 * mu / 3.0)
    rho_minus = params.get("rho_minus", 1.0)
    rho_plus = params.get("rho_plus", 2.0)
    u_minus = params.get("u_minus", 0.0)

    def pres(rho):
        return a * rho ** gamma

    def dpres(rho):
        return a * gamma * rho ** (gamma - 1.0)

    # RH with mass flux m through the shock; 1-shock convention m > 0
    m = np.sqrt((pres(rho_plus) - pres(rho_minus))
                / (1.0 / rho_minus - 1.0 / rho_plus))
    s = u_minus - m / rho_minus
    u_plus = s + m / rho_plus

    def f0(U):
        rho, u1, u2 = U
        return np.array([rho, rho * u1, rho * u2])

    def A0(U):
        rho, u1, u2 = U
        return np.array([[1.0, 0.0, 0.0],
                         [u1, rho, 0.0],
                         [u2, 0.0, rho]])

    def f1(U):
        rho, u1, u2 = U
        return np.array([rho * u1, rho * u1 * u1 + pres(rho), rho * u1 * u2])

    def A1(U):
        rho, u1, u2 = U
        return np.array([[u1, rho, 0.0],
                         [u1 * u1 + dpres(rho), 2.0 * rho * u1, 0.0],
                         [u1 * u2, rho * u2, rho * u1]])

    def f2(U):
        rho, u1, u2 = U
        return np.array([rho * u2, rho * u1 * u2, rho * u2 * u2 + pres(rho)])

    def A2(U):
        rho, u1, u2 = U
        return np.array([[u2, 0.0, rho],
                         [u1 * u2, rho * u2, rho * u1],
                         [u2 * u2 + dpres(rho), 0.0, 2.0 * rho * u2]])

    def _emb(b):
        B = np.zeros((3, 3))
        B[1:, 1:] = b
        return B

    B11 = _emb(np.diag([2.0 * mu + eta, mu]))
    B12 = _emb(np.array([[0.0, eta], [mu, 0.0]]))
    B21 = _emb(np.array([[0.0, mu], [eta, 0.0]]))
    B22 = _emb(np.diag([mu, 2.0 * mu + eta]))

    model = SystemModel(
        n=3, r=1, d=2, s=s,
        flux=(f0, f1, f2),
        jac=(A0, A1, A2),
        visc={(1, 1): lambda U: B11, (1, 2): lambda U: B12,
              (2, 1): lambda U: B21, (2, 2): lambda U: B22},
    )
    return SystemSpec(
        name="isentropic_eulerian_2d", model=model,
        default_shock=(np.array([rho_minus, u_minus, 0.0]),
                       np.array([rho_plus, u_plus, 0.0]), s),
        params={"gamma": gamma, "a": a, "mu": mu, "eta": eta,
                "rho_minus": rho_minus, "rho_plus": rho_plus,
                "u_minus": u_minus, "u_plus": u_plus, "m": m})


def _lagrangian_rotated(params):
    """Gas dynamics under a constant change of unknowns creating b21 != 0.

    With U = T V, T lower-triangular unit, the transformed system has
    fluxes f^j(TV), Jacobians A^j(TV) T and viscosity B(TV) T, whose B^11
    picks up a nonzero lower-left block.  The spectrum of the linearized
    operator is invariant under the change of unknowns, so the Evans zero
    set must match the untransformed system's.
    """
    alpha = params.get("alpha", 0.5)
    base = _lagrangian(params)
    bm = base.model
    T = np.array([[1.0, 0.0], [alpha, 1.0]])
    Tinv = np.linalg.inv(T)

    def dB11(V):
        Tb = bm.dvisc[(1, 1)](T @ V)
        # chain rule in both the matrix argument and the column action
        return np.einsum("pqi,qm,in->pmn", Tb, T, T)

    model = SystemModel(
        n=2, r=1, d=1, s=bm.s,
        flux=(lambda V: bm.f(0, T @ V), lambda V: bm.f(1, T @ V)),
        jac=(lambda V: bm.A(0, T @ V) @ T, lambda V: bm.A(1, T @ V) @ T),
        visc={(1, 1): lambda V: bm.B(1, 1, T @ V) @ T},
        dvisc={(1, 1): dB11},
        b21_present=True,
    )
    U_minus, U_plus, s = base.default_shock
    return SystemSpec(
        name="lagrangian_rotated", model=model,
        default_shock=(Tinv @ U_minus, Tinv @ U_plus, s),
        params={**base.params, "alpha": alpha})


def _glancing(params):
    tau = params.get("tau", lambda xi_hat: xi_hat)
    return SystemSpec(name="glancing_model", model=None,
                      default_shock=None, params={"tau": tau})


_REGISTRY = {
    "burgers": _burgers,
    "isentropic_lagrangian_1d": _lagrangian,
    "isentropic_eulerian_2d": _eulerian_2d,
    "lagrangian_rotated": _lagrangian_rotated,
    "glancing_model": _glancing,
}


def names():
    return sorted(_REGISTRY)


def get(name, **params):
    """Build a registered SystemSpec, optionally overriding named parameters."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown system {name!r}; known: {', '.join(names())}")
    return factory(params)
