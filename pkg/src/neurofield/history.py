"""Time-history storage with interpolation for delayed evaluations.

A :class:`HistoryBuffer` is a sliding ring of (t, value, derivative)
samples covering at least the delay horizon behind the newest sample.
Queries interpolate (cubic Hermite by default, using the stored
derivatives; linear as a cross-check mode) and are exact at sample times.
Queries outside the stored span raise -- the buffer never extrapolates.
"""

from __future__ import annotations

import numpy as np

from .errors import HistoryRangeError, ParameterError

INTERP_KINDS = ("cubic_hermite", "linear")


class HistoryBuffer:
    """Ring of time-stamped field samples with interpolating queries."""

    def __init__(self, shape, horizon: float, interp: str = "cubic_hermite"):
        if interp not in INTERP_KINDS:
            raise ParameterError(f"unknown interpolation {interp!r}; expected {INTERP_KINDS}")
        if horizon < 0:
            raise ParameterError("horizon must be nonnegative")
        self.shape = tuple(shape)
        self.horizon = float(horizon)
        self.interp = interp
        self._cap = 256
        self._t = np.empty(self._cap)
        self._v = np.empty((self._cap, *self.shape))
        # one-sided derivatives: _d is the left slope at each node, _dr the
        # right slope (they differ only at derivative kinks, e.g. the
        # initial time of a delayed system)
        self._d = np.empty((self._cap, *self.shape))
        self._dr = np.empty((self._cap, *self.shape))
        self._n = 0

    # -- storage ---------------------------------------------------------

    def push(self, t: float, value: np.ndarray, deriv: np.ndarray = None) -> None:
        """Append a sample; times must be strictly increasing."""
        value = np.asarray(value, dtype=float)
        if value.shape != self.shape:
            raise ParameterError(f"sample shape {value.shape} != buffer shape {self.shape}")
        if self._n and t <= self._t[self._n - 1]:
            raise ParameterError(
                f"history times must be strictly increasing: {t} after {self._t[self._n - 1]}"
            )
        if deriv is None:
            if self.interp == "cubic_hermite":
                raise ParameterError("cubic Hermite history needs a derivative per sample")
            deriv = np.zeros(self.shape)
        if self._n == self._cap:
            self._compact()
        i = self._n
        self._t[i] = t
        self._v[i] = value
        self._d[i] = np.asarray(deriv, dtype=float)
        self._dr[i] = self._d[i]
        self._n += 1

    def set_right_deriv_last(self, deriv: np.ndarray) -> None:
        """Override the right-sided slope of the newest sample (kink node)."""
        if self._n == 0:
            raise HistoryRangeError("history buffer is empty")
        self._dr[self._n - 1] = np.asarray(deriv, dtype=float)

    def _compact(self) -> None:
        """Drop samples older than the horizon (plus slack); grow if needed."""
        latest = self._t[self._n - 1]
        keep_from = np.searchsorted(self._t[: self._n], latest - self.horizon * 1.5 - 1e-12)
        keep_from = max(0, min(keep_from, self._n - 2))
        kept = self._n - keep_from
        if kept > self._cap // 2:
            self._cap *= 2
            for name in ("_t", "_v", "_d", "_dr"):
                old = getattr(self, name)
                new = np.empty((self._cap, *old.shape[1:]))
                new[:kept] = old[keep_from : self._n]
                setattr(self, name, new)
        else:
            for name in ("_t", "_v", "_d", "_dr"):
                arr = getattr(self, name)
                arr[:kept] = arr[keep_from : self._n]
        self._n = kept

    @property
    def earliest(self) -> float:
        if self._n == 0:
            raise HistoryRangeError("history buffer is empty")
        return float(self._t[0])

    @property
    def latest(self) -> float:
        if self._n == 0:
            raise HistoryRangeError("history buffer is empty")
        return float(self._t[self._n - 1])

    def __len__(self) -> int:
        return self._n

    # -- queries ---------------------------------------------------------

    def value_at(self, t: float) -> np.ndarray:
        """Interpolated value at time ``t``; exact at stored sample times."""
        n = self._n
        if n == 0:
            raise HistoryRangeError("history buffer is empty")
        times = self._t[:n]
        lo, hi = times[0], times[n - 1]
        span = max(hi - lo, 1.0)
        snap = 1e-9 * span
        if t < lo - snap or t > hi + snap:
            raise HistoryRangeError(
                f"query at t={t} outside stored history [{lo}, {hi}] (no extrapolation)"
            )
        k = int(np.searchsorted(times, t, side="right")) - 1
        k = min(max(k, 0), n - 2) if n >= 2 else 0
        # exact at sample times
        if abs(t - times[k]) <= snap:
            return self._v[k].copy()
        if n >= 2 and abs(t - times[k + 1]) <= snap:
            return self._v[k + 1].copy()
        if n == 1:
            raise HistoryRangeError("single-sample history can only be queried at its time")
        t0, t1 = times[k], times[k + 1]
        h = t1 - t0
        s = (t - t0) / h
        y0, y1 = self._v[k], self._v[k + 1]
        if self.interp == "linear":
            return (1.0 - s) * y0 + s * y1
        d0, d1 = self._dr[k], self._d[k + 1]
        s2 = s * s
        s3 = s2 * s
        h00 = 2.0 * s3 - 3.0 * s2 + 1.0
        h10 = s3 - 2.0 * s2 + s
        h01 = -2.0 * s3 + 3.0 * s2
        h11 = s3 - s2
        return h00 * y0 + (h * h10) * d0 + h01 * y1 + (h * h11) * d1

    def window(self, t0: float, t1: float):
        """Stored (times, values) with t0 <= t <= t1 (snap-tolerant)."""
        n = self._n
        times = self._t[:n]
        span = max(times[n - 1] - times[0], 1.0) if n else 1.0
        snap = 1e-9 * span
        i0 = int(np.searchsorted(times, t0 - snap, side="left"))
        i1 = int(np.searchsorted(times, t1 + snap, side="right"))
        return times[i0:i1].copy(), self._v[i0:i1].copy()

    def tail(self):
        """All stored samples (times, values, derivs), e.g. for snapshots."""
        n = self._n
        return self._t[:n].copy(), self._v[:n].copy(), self._d[:n].copy()

    def tail_full(self):
        """Like :meth:`tail` but including the right-sided derivatives."""
        n = self._n
        return (
            self._t[:n].copy(),
            self._v[:n].copy(),
            self._d[:n].copy(),
            self._dr[:n].copy(),
        )


def history_query(buffer: HistoryBuffer, t_query: float, delay: float = 0.0, point=None):
    """Value at ``t_query - delay``; optionally a single grid point's row."""
    val = buffer.value_at(t_query - delay)
    return val if point is None else val[point]


class ConstantHistory:
    """History that is the same field at every time (initial-condition style)."""

    def __init__(self, value: np.ndarray):
        self.value = np.asarray(value, dtype=float)

    def value_at(self, t: float) -> np.ndarray:
        return self.value.copy()

    def derivative_at(self, t: float) -> np.ndarray:
        return np.zeros_like(self.value)


class CallableHistory:
    """Wrap ``f(t) -> field`` (and optionally its time derivative).

    Without an explicit derivative, slopes come from central differences;
    fine for prefilling integration buffers.
    """

    def __init__(self, fn, dfn=None, fd_step: float = 1e-6):
        self.fn = fn
        self.dfn = dfn
        self.fd_step = fd_step

    def value_at(self, t: float) -> np.ndarray:
        return np.asarray(self.fn(t), dtype=float)

    def derivative_at(self, t: float) -> np.ndarray:
        if self.dfn is not None:
            return np.asarray(self.dfn(t), dtype=float)
        h = self.fd_step
        return (self.value_at(t + h) - self.value_at(t - h)) / (2.0 * h)
