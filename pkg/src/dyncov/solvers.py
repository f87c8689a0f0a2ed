"""Exact solvers for the two convex subproblems behind the online policies,
plus distribution-aware baseline optimizers.

``waterfill_penalized`` maximizes  log det(I + H Q H^H) - z_over_v * tr(Q)
over PSD Q with tr(Q) <= cap, by eigen-domain water-filling with an exact
sorted sweep for the trace multiplier.  ``psd_cap_project`` is the
Frobenius-nearest PSD matrix under a trace cap, by eigenvalue
soft-thresholding with the analogous sweep.  Both are closed-form up to
one Hermitian eigendecomposition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import DiscreteChannel
from .linalg import (
    ConvergenceError,
    as_matrix,
    capacity,
    capacity_gradient,
    frobenius,
    herm_eig,
    require_hermitian,
    symmetrize,
    trace_real,
)

_SIGMA_FLOOR = 1e-14  # eigen-modes at or below this carry no power


@dataclass(frozen=True)
class WaterfillResult:
    """Penalized water-filling solution.

    ``theta`` is the eigen-domain power loading aligned with ``sigma``
    (the channel Gram eigenvalues, order as produced); ``mu`` is the
    multiplier of the trace cap; ``q = u^H diag(theta) u``.
    """

    q: np.ndarray
    mu: float
    theta: np.ndarray
    sigma: np.ndarray
    u: np.ndarray

    def objective(self, z_over_v: float) -> float:
        theta = self.theta
        sigma = self.sigma
        return float(np.log1p(theta * sigma).sum() - z_over_v * theta.sum())


def _loading(sigma: np.ndarray, level: float) -> np.ndarray:
    """theta_i = max(0, level - 1/sigma_i), zero on null modes."""
    theta = np.zeros_like(sigma)
    pos = sigma > _SIGMA_FLOOR
    theta[pos] = np.maximum(0.0, level - 1.0 / sigma[pos])
    return theta


def waterfill_penalized(h_tilde, z_over_v: float, cap: float) -> WaterfillResult:
    """Maximize log det(I + H Q H^H) - z_over_v * tr(Q) s.t. Q PSD, tr(Q) <= cap.

    Eigendecompose H^H H, test the zero-multiplier water level first, and
    otherwise sweep the eigenvalues in decreasing order for the unique
    multiplier that makes the loading sum to the cap.
    """
    if z_over_v < 0:
        raise ValueError("z_over_v must be nonnegative")
    if not cap > 0:
        raise ValueError("cap must be positive")
    h = as_matrix(h_tilde)
    gram = symmetrize(h.conj().T @ h)  # exact-arithmetic Hermitian; absorb round-off
    eig = herm_eig(gram)
    sigma = np.maximum(eig.sigma, 0.0)  # Gram eigenvalues; clip round-off

    # zero-multiplier test: water level 1/(z/v), infinite when z = 0
    if z_over_v > 0.0:
        theta0 = _loading(sigma, 1.0 / z_over_v)
        if theta0.sum() <= cap:
            q = eig.compose(theta0)
            return WaterfillResult(q=q, mu=0.0, theta=theta0, sigma=sigma, u=eig.u)

    order = np.argsort(-sigma, kind="stable")
    positive = [int(i) for i in order if sigma[i] > _SIGMA_FLOOR]
    if not positive:
        # null channel: no mode can carry power
        theta = np.zeros_like(sigma)
        return WaterfillResult(
            q=eig.compose(theta), mu=0.0, theta=theta, sigma=sigma, u=eig.u
        )

    s_i = 0.0
    n_pos = len(positive)
    for rank, idx in enumerate(positive, start=1):
        s_i += 1.0 / sigma[idx]
        mu = rank / (s_i + cap) - z_over_v
        if mu < 0.0:
            continue
        level = 1.0 / (mu + z_over_v)
        if not level - 1.0 / sigma[idx] > 0.0:
            continue
        if rank < n_pos:
            nxt = positive[rank]
            if level - 1.0 / sigma[nxt] > 0.0:
                continue
        # loading on the accepted active set; algebraically equal to
        # level - 1/sigma_j but free of the large-intermediate cancellation,
        # so the active loadings sum to the cap at machine precision
        active = np.array(positive[:rank])
        s_act = sigma[active]
        pair = (s_act[:, None] - s_act[None, :]) / (s_act[:, None] * s_act[None, :])
        theta = np.zeros_like(sigma)
        theta[active] = np.maximum(0.0, (cap + pair.sum(axis=1)) / rank)
        q = eig.compose(theta)
        return WaterfillResult(q=q, mu=float(mu), theta=theta, sigma=sigma, u=eig.u)

    raise ConvergenceError(
        "water-filling sweep exhausted without acceptance; "
        "this contradicts the KKT structure of the problem"
    )


def psd_cap_project(x, cap: float) -> np.ndarray:
    """Frobenius projection of a Hermitian matrix onto {Q PSD, tr(Q) <= cap}.

    Eigenvalue soft-thresholding: drop negative eigenvalues if that already
    meets the cap, otherwise shift the sorted eigenvalues down by the exact
    multiplier from the sweep.
    """
    if not cap > 0:
        raise ValueError("cap must be positive")
    xm = require_hermitian(x, "projection input")
    eig = herm_eig(xm)
    sigma = eig.sigma

    clipped = np.maximum(sigma, 0.0)
    if clipped.sum() <= cap:
        return eig.compose(clipped)

    desc_idx = np.argsort(-sigma, kind="stable")
    desc = sigma[desc_idx]
    n = len(desc)
    s_i = 0.0
    for i in range(1, n + 1):
        s_i += desc[i - 1]
        mu = (s_i - cap) / i
        if mu < 0.0:
            continue
        if not desc[i - 1] - mu > 0.0:
            continue
        if i < n and desc[i] - mu > 0.0:
            continue
        # same cancellation-free active-set form as the water-filling sweep
        active = desc_idx[:i]
        s_act = sigma[active]
        theta = np.zeros_like(sigma)
        theta[active] = np.maximum(
            0.0, (cap + (s_act[:, None] - s_act[None, :]).sum(axis=1)) / i
        )
        return eig.compose(theta)

    raise ConvergenceError(
        "projection sweep exhausted without acceptance; "
        "this contradicts the KKT structure of the problem"
    )


@dataclass(frozen=True)
class CdiPolicy:
    """Per-state covariance table for a discrete channel, with the long-term
    power multiplier it was solved at and the average utility it attains."""

    states: tuple[np.ndarray, ...]
    probs: np.ndarray
    covariances: tuple[np.ndarray, ...]
    lam: float
    r_opt: float

    def lookup(self, h) -> np.ndarray:
        """Covariance of the stored state nearest to h in Frobenius distance."""
        hm = as_matrix(h)
        dists = [frobenius(hm - s) for s in self.states]
        return self.covariances[int(np.argmin(dists))]

    def average_power(self) -> float:
        return float(sum(p * trace_real(q) for p, q in zip(self.probs, self.covariances)))


def _policy_at(model: DiscreteChannel, lam: float, p: float) -> tuple[tuple[np.ndarray, ...], float]:
    covs = tuple(waterfill_penalized(s, lam, p).q for s in model.states)
    power = float(sum(pr * trace_real(q) for pr, q in zip(model.probs, covs)))
    return covs, power


def cdi_optimal_policy(
    model: DiscreteChannel, p_bar: float, p: float, tol: float = 1e-6
) -> CdiPolicy:
    """Distribution-aware optimum for a discrete channel with per-state
    adaptation: average power <= p_bar, per-slot power <= p.

    Lagrangian decomposition: at multiplier lam each state solves a
    penalized water-filling with cap p; lam is bisected until the average
    power lands in [p_bar - tol, p_bar] (or lam = 0 is already feasible).
    Average power is monotone non-increasing in lam.
    """
    if not isinstance(model, DiscreteChannel):
        raise TypeError("cdi_optimal_policy needs a discrete channel model")
    if not (p >= p_bar > 0):
        raise ValueError("need p >= p_bar > 0")

    covs, power = _policy_at(model, 0.0, p)
    if power <= p_bar:
        lam = 0.0
    else:
        hi = max(frobenius(s) for s in model.states) ** 2
        covs_hi, power_hi = _policy_at(model, hi, p)
        expansions = 0
        while power_hi > p_bar:
            hi *= 2.0
            expansions += 1
            if expansions > 60:
                raise ConvergenceError(
                    "could not bracket the long-term power multiplier"
                )
            covs_hi, power_hi = _policy_at(model, hi, p)
        lo = 0.0
        lam, covs, power = hi, covs_hi, power_hi
        for _ in range(200):
            if p_bar - tol <= power <= p_bar:
                break
            mid = 0.5 * (lo + hi)
            covs_mid, power_mid = _policy_at(model, mid, p)
            if power_mid > p_bar:
                lo = mid
            else:
                hi, lam, covs, power = mid, mid, covs_mid, power_mid
        else:
            raise ConvergenceError(
                f"long-term power bisection did not reach tolerance {tol}"
            )

    r_opt = float(
        sum(pr * capacity(s, q) for pr, s, q in zip(model.probs, model.states, covs))
    )
    return CdiPolicy(
        states=model.states, probs=model.probs, covariances=covs, lam=lam, r_opt=r_opt
    )


@dataclass(frozen=True)
class ConstantCovariance:
    """Best fixed covariance for a discrete channel (no per-state adaptation)."""

    q: np.ndarray
    per_state_utility: np.ndarray
    r_opt: float
    converged: bool
    iterations: int


def ergodic_constant_covariance(
    model: DiscreteChannel,
    p_bar: float,
    step: float = 0.05,
    tol: float = 1e-9,
    iter_cap: int = 100_000,
) -> ConstantCovariance:
    """Maximize the probability-weighted capacity over {Q PSD, tr(Q) <= p_bar}
    by projected gradient ascent from Q = 0.

    Stops when consecutive iterates are within tol in Frobenius norm; if the
    iteration cap is hit first the best iterate is returned flagged
    non-converged.
    """
    if not isinstance(model, DiscreteChannel):
        raise TypeError("ergodic_constant_covariance needs a discrete channel model")
    if not p_bar > 0:
        raise ValueError("p_bar must be positive")

    n_t = model.n_t
    q = np.zeros((n_t, n_t), dtype=np.complex128)
    converged = False
    iterations = 0
    for iterations in range(1, iter_cap + 1):
        grad = sum(
            pr * capacity_gradient(s, q) for pr, s in zip(model.probs, model.states)
        )
        q_next = psd_cap_project(q + step * grad, p_bar)
        delta = frobenius(q_next - q)
        q = q_next
        if delta <= tol:
            converged = True
            break

    per_state = np.array([capacity(s, q) for s in model.states])
    r_opt = float((model.probs * per_state).sum())
    return ConstantCovariance(
        q=q, per_state_utility=per_state, r_opt=r_opt, converged=converged,
        iterations=iterations,
    )


def empirical_policy(samples, p_bar: float, p: float, mode: str):
    """Policy from an observed sample of channel realizations.

    Builds the uniform discrete model over the samples; mode "with-csit"
    solves the per-state optimum (usable via ``lookup``), mode "no-csit"
    the best constant covariance.
    """
    samples = [as_matrix(s) for s in samples]
    if not samples:
        raise ValueError("empirical policy needs at least one sample")
    model = DiscreteChannel(
        states=tuple(samples), probs=np.full(len(samples), 1.0 / len(samples))
    )
    if mode == "with-csit":
        return cdi_optimal_policy(model, p_bar, p)
    if mode == "no-csit":
        return ergodic_constant_covariance(model, p_bar)
    raise ValueError(f"unknown mode {mode!r}; expected 'with-csit' or 'no-csit'")
