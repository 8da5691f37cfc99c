"""Closed-form expectations for Gaussian linear regression federations.

With ``x ~ N(0, I_d)`` and noise variance ``mu_e``, ordinary least squares on
``m`` samples has expected excess test MSE ``mu_e d / (m - d - 1)`` for
``m > d + 1``.  The marginal-contribution value of every client in an
``n``-client federation of ``t`` samples each then telescopes to
``(m0 - mse(n t)) / n``; truncating to coalitions of at most ``k`` clients
gives ``(m0 - mse(k t)) / n``.
"""

from __future__ import annotations


def expected_mse(samples: int, d: int, noise_var: float) -> float:
    if samples <= d + 1:
        raise ValueError(f"expected MSE is finite only for more than d + 1 = {d + 1} samples")
    return noise_var * d / (samples - d - 1)


def expected_value(n: int, t: int, d: int, noise_var: float, m0: float) -> float:
    return (m0 - expected_mse(n * t, d, noise_var)) / n


def expected_truncated_value(n: int, k: int, t: int, d: int, noise_var: float, m0: float) -> float:
    return (m0 - expected_mse(k * t, d, noise_var)) / n


def ipss_error_bound(n: int, k_star: int, t: int, d: int) -> float:
    """Upper bound on the relative gap between expected truncated and full values.

    ``(n - k*) t / ((k* t - d - 1)(n t - d - 2))``, which is
    ``O((n - k*) / (k* n t))`` for fixed ``d``.
    """
    if k_star * t <= d + 1:
        raise ValueError("bound needs k* t > d + 1")
    return (n - k_star) * t / ((k_star * t - d - 1) * (n * t - d - 2))
