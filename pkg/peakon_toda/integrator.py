"""
PI-Controlled Dormand-Prince 8(5,3)

scipy's DOP853 with the elementary step-size controller replaced by a
proportional-integral one, and with counters for accepted and rejected
steps. Dense output is inherited unchanged.
"""

import logging

import numpy as np
from scipy.integrate import DOP853
from scipy.integrate._ivp.rk import MAX_FACTOR, MIN_FACTOR, SAFETY, rk_step

logger = logging.getLogger(__name__)


class PIControlledDOP853(DOP853):
    """DOP853 with PI step control.

    The new step is h * SAFETY * err^(-beta1) * err_prev^(beta2) with
    beta1 = 0.7/k and beta2 = 0.4/k, where k = 8 is the order of the
    embedded error estimate plus one.

    Attributes:
        n_accepted: Accepted steps so far
        n_rejected: Rejected trial steps so far
    """

    def __init__(self, fun, t0, y0, t_bound, **kwargs):
        super().__init__(fun, t0, y0, t_bound, **kwargs)
        k = self.error_estimator_order + 1
        self.beta1 = 0.7 / k
        self.beta2 = 0.4 / k
        self.error_norm_previous = 1e-4
        self.n_accepted = 0
        self.n_rejected = 0

    def _pi_factor(self, error_norm: float) -> float:
        if error_norm == 0.0:
            return MAX_FACTOR
        factor = SAFETY * error_norm ** -self.beta1 * self.error_norm_previous ** self.beta2
        return min(MAX_FACTOR, max(MIN_FACTOR, factor))

    def _step_impl(self):
        t = self.t
        y = self.y

        min_step = 10 * np.abs(np.nextafter(t, self.direction * np.inf) - t)
        h_abs = min(max(self.h_abs, min_step), self.max_step)

        step_rejected = False
        while True:
            if h_abs < min_step:
                return False, self.TOO_SMALL_STEP
            h = h_abs * self.direction
            t_new = t + h
            if self.direction * (t_new - self.t_bound) > 0:
                t_new = self.t_bound
            h = t_new - t
            h_abs = np.abs(h)

            y_new, f_new = rk_step(self.fun, t, y, self.f, h, self.A, self.B, self.C, self.K)
            scale = self.atol + np.maximum(np.abs(y), np.abs(y_new)) * self.rtol
            error_norm = self._estimate_error_norm(self.K, h, scale)

            if error_norm < 1:
                factor = self._pi_factor(error_norm)
                if step_rejected:
                    factor = min(1.0, factor)
                h_abs *= factor
                self.error_norm_previous = max(error_norm, 1e-4)
                break

            # rejected: plain I-control with the usual floor
            h_abs *= max(MIN_FACTOR, SAFETY * error_norm ** self.error_exponent)
            step_rejected = True
            self.n_rejected += 1

        self.n_accepted += 1
        self.h_previous = h
        self.y_old = y
        self.t = t_new
        self.y = y_new
        self.h_abs = h_abs
        self.f = f_new
        return True, None
