"""Exact first/second moment propagation for linear closed loops.

Every policy handled by this package makes the joint state affine in x0::

    x_{t+1} = (A - B K_t) x_t + B v_t,    u_t = -K_t x_t + v_t

with K_t = 0 for open-loop play and v_t = 0 for linear feedback. Expected
quadratic losses therefore only need the mean and covariance of x_t.
"""

import numpy as np


def propagate(A, B, gains, offsets, mean, cov):
    """Return ``(means, covs)`` of x_t for t = 0..T, shapes (T+1, n), (T+1, n, n)."""
    T = gains.shape[0]
    n = A.shape[0]
    means = np.empty((T + 1, n))
    covs = np.empty((T + 1, n, n))
    means[0] = mean
    covs[0] = cov
    for t in range(T):
        F = A - B @ gains[t]
        means[t + 1] = F @ means[t] + B @ offsets[t]
        covs[t + 1] = F @ covs[t] @ F.T
    return means, covs


def quadratic_losses(means, covs, gains, offsets, Q, R, lin, d):
    """Expected losses for a batch of cost sets.

    ``Q`` is (P, T+1, n, n), ``R`` is (P, T, N, N), ``lin`` is (P, T, N); one
    loss is returned per leading index P.
    """
    dev = means - d
    state = np.einsum("ptij,tji->p", Q, covs) + np.einsum("ti,ptij,tj->p", dev, Q, dev)
    u_mean = offsets - np.einsum("tin,tn->ti", gains, means[:-1])
    u_cov = gains @ covs[:-1] @ np.transpose(gains, (0, 2, 1))
    action = (
        np.einsum("ptij,tji->p", R, u_cov)
        + np.einsum("ti,ptij,tj->p", u_mean, R, u_mean)
        + np.einsum("pti,ti->p", lin, u_mean)
    )
    return state + action


def feedback_gradient(A, B, gains, mean, cov, Q, R, lin, d, moments=None):
    """Gradient of one expected loss w.r.t. every full gain matrix K_t.

    Pure linear feedback (no open-loop offsets). Uses the backward adjoint
    recursion on the second-moment matrix S_t = E[x_t x_t^T] and the mean.
    ``moments`` may carry an already computed ``propagate`` result.
    Returns an array shaped like ``gains`` (T, N, n).
    """
    T = gains.shape[0]
    if moments is None:
        moments = propagate(A, B, gains, np.zeros(gains.shape[:2]), mean, cov)
    means, covs = moments
    seconds = covs + np.einsum("ti,tj->tij", means, means)
    P = Q[T].copy()
    p = -2.0 * Q[T] @ d[T]
    grad = np.empty_like(gains)
    for t in range(T - 1, -1, -1):
        K = gains[t]
        F = A - B @ K
        grad[t] = 2.0 * (R[t] @ K - B.T @ P @ F) @ seconds[t] - np.outer(lin[t] + B.T @ p, means[t])
        P_next = Q[t] + K.T @ R[t] @ K + F.T @ P @ F
        p = -2.0 * Q[t] @ d[t] - K.T @ lin[t] + F.T @ p
        P = 0.5 * (P_next + P_next.T)
    return grad


def open_loop_gradient(A, B, offsets, mean, Q, R, lin, d):
    """Gradient of one expected loss w.r.t. the open-loop actions v_t, shape (T, N)."""
    T = offsets.shape[0]
    means = np.empty((T + 1, A.shape[0]))
    means[0] = mean
    for t in range(T):
        means[t + 1] = A @ means[t] + B @ offsets[t]
    costate = 2.0 * Q[T] @ (means[T] - d[T])
    grad = np.empty_like(offsets)
    for t in range(T - 1, -1, -1):
        grad[t] = 2.0 * R[t] @ offsets[t] + lin[t] + B.T @ costate
        costate = 2.0 * Q[t] @ (means[t] - d[t]) + A.T @ costate
    return grad
