"""Adaptive propagation of the matrix Schrödinger equation dU/dt = -i H(theta,t) U.

The stepper is an explicit Dormand-Prince 5(4) embedded pair with PI step-size
control and first-same-as-last stage reuse.  The ODE state is the propagator,
optionally augmented with one forward-sensitivity block per parameter; the
local error norm is an RMS over all real components of the augmented state.
Integration restarts at envelope discontinuities and at requested checkpoint
times, so neither ever sits inside a step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = (
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
# difference between the 5th- and embedded 4th-order weights
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
# The controller aims below the requested tolerance so that the defect
# accumulated over a whole program stays within the 10*rtol unitarity budget.
_TOL_MARGIN = 6.0


class StepLimitExceededError(RuntimeError):
    """The stepper used up its attempt budget before reaching t1."""


class NonFiniteStateError(RuntimeError):
    """NaN or Inf appeared in the integration state."""


@dataclass
class OdeConfig:
    """Solver knobs shared by all propagation entry points.

    ``initial_step`` of 0 lets the controller pick its own first step.
    ``renormalize_unitary`` projects the final propagator back onto the
    unitary manifold (polar decomposition); leave it off when the result
    feeds gradient formulas, since the projection is not differentiated.
    """

    rtol: float = 1e-8
    atol_ode: float = 1e-8
    max_steps: int = 100_000
    initial_step: float = 0.0
    renormalize_unitary: bool = False

    def __post_init__(self):
        if self.rtol <= 0 or self.atol_ode <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass
class PropagatorResult:
    U: np.ndarray
    sensitivities: list | None
    steps_accepted: int
    steps_rejected: int
    checkpoint_times: np.ndarray | None = None
    checkpoint_unitaries: list | None = None


def _polar_unitary(u: np.ndarray) -> np.ndarray:
    """Closest unitary to u: u times (u^dag u)^(-1/2)."""
    w, v = np.linalg.eigh(u.conj().T @ u)
    return u @ (v * (w ** -0.5)) @ v.conj().T


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray,
                atol: float, rtol: float) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    ratio = np.abs(err) / scale
    # RMS over the real components; each complex entry carries two of them
    return float(np.sqrt(0.5 * np.mean(ratio * ratio)))


def _integrate(ham, theta, t0, t1, cfg, with_sens, t_eval):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (ham.n_params,):
        raise ValueError(f"expected {ham.n_params} parameters, got shape {theta.shape}")
    if not t1 > t0:
        raise ValueError("need t1 > t0")

    dim = ham.dim
    n_blocks = 1 + (ham.n_params if with_sens else 0)
    y = np.zeros((n_blocks, dim, dim), dtype=complex)
    y[0] = np.eye(dim)

    drives = ham.drives
    drift = ham.drift_matrix
    slot_rows = [term.slots + 1 for term in drives]

    def rhs(t, state):
        h = drift
        for term in drives:
            h = h + term.value_fn(theta[term.slots], t) * term.gen_matrix
        out = h @ state
        out *= -1j
        if with_sens:
            u = state[0]
            for term, rows in zip(drives, slot_rows):
                g = np.asarray(term.grad_fn(theta[term.slots], t), dtype=float)
                gu = term.gen_matrix @ u
                out[rows] -= (1j * g)[:, None, None] * gu
        return out

    # Segment the window at envelope discontinuities and checkpoint times.
    span = t1 - t0
    tiny = 1e-12 * max(span, 1.0)
    breaks = ham.discontinuities()
    breaks = breaks[(breaks > t0 + tiny) & (breaks < t1 - tiny)]
    eval_times = None
    if t_eval is not None:
        eval_times = np.unique(np.asarray(t_eval, dtype=float))
        if eval_times.size and (eval_times[0] < t0 - tiny or eval_times[-1] > t1 + tiny):
            raise ValueError("checkpoint time outside the integration window")
    pieces = [np.array([t0, t1]), breaks]
    if eval_times is not None:
        pieces.append(eval_times)
    points = np.unique(np.concatenate(pieces))
    checkpoints = {}
    if eval_times is not None and eval_times.size:
        if eval_times[0] <= t0 + tiny:
            checkpoints[eval_times[0]] = np.eye(dim, dtype=complex)

    accepted = 0
    rejected = 0
    hstep = cfg.initial_step if cfg.initial_step > 0 else 0.01 * span
    err_prev = 1.0
    atol_eff = cfg.atol_ode / _TOL_MARGIN
    rtol_eff = cfg.rtol / _TOL_MARGIN

    for a, b in zip(points[:-1], points[1:]):
        t = a
        k1 = rhs(t, y)
        while t < b - tiny:
            hstep = min(hstep, b - t)
            if accepted + rejected >= cfg.max_steps:
                raise StepLimitExceededError(
                    f"no convergence within {cfg.max_steps} step attempts"
                )
            k = [k1, None, None, None, None, None, None]
            for i in range(1, 6):
                yi = y.copy()
                for m, a_im in enumerate(_A[i - 1]):
                    if a_im != 0.0:
                        yi += (hstep * a_im) * k[m]
                k[i] = rhs(t + _C[i] * hstep, yi)
            y_new = y.copy()
            for m, b_m in enumerate(_A[5]):
                if b_m != 0.0:
                    y_new += (hstep * b_m) * k[m]
            k[6] = rhs(t + hstep, y_new)
            err = np.zeros_like(y)
            for m, e_m in enumerate(_E):
                if e_m != 0.0:
                    err += (hstep * e_m) * k[m]
            norm = _error_norm(err, y, y_new, atol_eff, rtol_eff)

            if not np.isfinite(norm):
                rejected += 1
                hstep *= _MIN_FACTOR
                if hstep < tiny:
                    raise NonFiniteStateError("non-finite state at vanishing step size")
                continue
            if norm <= 1.0:
                t += hstep
                y = y_new
                k1 = k[6]  # first-same-as-last
                accepted += 1
                norm = max(norm, 1e-16)
                factor = _SAFETY * norm ** -0.14 * err_prev ** 0.08
                hstep *= min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
                err_prev = norm
            else:
                rejected += 1
                hstep *= min(1.0, max(_MIN_FACTOR, _SAFETY * norm ** -0.2))
        if eval_times is not None and np.any(eval_times == b):
            checkpoints[b] = y[0].copy()

    if not np.isfinite(y.view(np.float64)).all():
        raise NonFiniteStateError("non-finite entries in the final state")

    u_final = y[0].copy()
    if cfg.renormalize_unitary:
        u_final = _polar_unitary(u_final)
    sens = [y[1 + j].copy() for j in range(ham.n_params)] if with_sens else None

    ck_times = None
    ck_unitaries = None
    if eval_times is not None:
        ck_times = eval_times
        ck_unitaries = []
        for tc in eval_times:
            if tc in checkpoints:
                ck_unitaries.append(checkpoints[tc])
            elif tc >= t1 - tiny:
                ck_unitaries.append(u_final.copy())
            else:
                raise RuntimeError(f"checkpoint {tc} was not visited")
    return PropagatorResult(
        U=u_final,
        sensitivities=sens,
        steps_accepted=accepted,
        steps_rejected=rejected,
        checkpoint_times=ck_times,
        checkpoint_unitaries=ck_unitaries,
    )


def evolve(ham, theta, t0: float, t1: float, cfg: OdeConfig | None = None,
           t_eval=None) -> PropagatorResult:
    """Propagator U(t1, t0) of dU/dt = -i H(theta, t) U, U(t0) = I.

    When ``t_eval`` is given, the listed interior times become integration
    breakpoints and the partial propagators U(t, t0) are returned in
    ``checkpoint_unitaries`` (sorted by time).

    Raises:
        StepLimitExceededError: more than cfg.max_steps attempted steps.
        NonFiniteStateError: NaN or Inf in the state.
    """
    return _integrate(ham, theta, t0, t1, cfg or OdeConfig(), False, t_eval)


def evolve_with_sensitivity(ham, theta, t0: float, t1: float,
                            cfg: OdeConfig | None = None) -> PropagatorResult:
    """U(t1, t0) together with dU/d(theta_j) for every parameter slot.

    The sensitivity blocks obey dS_j/dt = -i (dH/dtheta_j) U - i H S_j with
    S_j(t0) = 0, integrated jointly with U so the error control sees the
    full augmented state.
    """
    return _integrate(ham, theta, t0, t1, cfg or OdeConfig(), True, None)


def gradient_quadrature_oracle(ham, theta, t0: float, t1: float, j: int,
                               n_nodes: int, cfg: OdeConfig | None = None) -> np.ndarray:
    """Independent check of dU/d(theta_j) via the integral representation.

    The derivative of the propagator equals
    -i * integral over tau of U(t1, tau) dH/dtheta_j(tau) U(tau, t0).
    This routine applies two-point Gauss-Legendre quadrature on ``n_nodes``
    equal panels, computing U(tau, t0) from checkpointed forward evolution
    and U(t1, tau) by unitary composition.  It shares no code path with the
    sensitivity equations, which is the point.
    """
    if n_nodes < 2:
        raise ValueError("need at least two quadrature panels")
    cfg = cfg or OdeConfig()
    edges = np.linspace(t0, t1, n_nodes + 1)
    half = np.diff(edges) / 2.0
    mids = (edges[:-1] + edges[1:]) / 2.0
    offset = half / np.sqrt(3.0)
    taus = np.concatenate([mids - offset, mids + offset])
    weights = np.concatenate([half, half])
    order = np.argsort(taus)
    taus = taus[order]
    weights = weights[order]

    res = evolve(ham, theta, t0, t1, cfg, t_eval=taus)
    u_total = res.U
    total = np.zeros((ham.dim, ham.dim), dtype=complex)
    for tau, w, u_left_part in zip(taus, weights, res.checkpoint_unitaries):
        dh = ham.evaluate_param_derivative(theta, tau, j)
        u_right = u_left_part                     # U(tau, t0)
        u_left = u_total @ u_left_part.conj().T   # U(t1, tau)
        total += w * (u_left @ dh @ u_right)
    return -1j * total
