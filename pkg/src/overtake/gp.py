"""Opponent behaviour regression over the ego racing line's ``s`` coordinate.

Observations are binned every ``bin_width`` metres, averaged per bin, and two
exact GPs are fitted on the bin means: lateral offset ``d(s)`` with a
Matern-5/2 kernel and longitudinal speed ``v_s(s)`` with an RBF kernel.
Both kernels act on the chordal distance between points of a circle with
circumference ``lap_length``, which keeps them positive definite while making
predictions periodic across the start/finish seam.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import cho_solve, cholesky

BIN_WIDTH = 0.1
MIN_COVERAGE = 0.6
LENGTH_SCALES = (0.5, 1.0, 2.0, 4.0, 8.0)
NOISE_RATIOS = (1e-6, 1e-4, 1e-2, 1e-1, 1.0)
JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
TABLE_STEP = 0.05
MIN_SIGNAL_VAR = 1e-8


class GPFitError(RuntimeError):
    """Not enough data, or the kernel matrix could not be factorized."""


@dataclass(frozen=True)
class OpponentObservation:
    s: float
    d: float
    v_s: float
    timestamp: float = 0.0


@dataclass
class BinnedData:
    """Per-bin running statistics (Welford) of ``s``, ``d`` and ``v_s``."""

    bin_width: float
    lap_length: float
    count: np.ndarray
    mean_s: np.ndarray
    mean_d: np.ndarray
    mean_vs: np.ndarray
    m2_d: np.ndarray
    m2_vs: np.ndarray

    @property
    def n_bins(self) -> int:
        return len(self.count)

    @property
    def coverage(self) -> float:
        return float(np.count_nonzero(self.count)) / self.n_bins

    def var_d(self) -> np.ndarray:
        return np.where(self.count > 1, self.m2_d / np.maximum(self.count - 1, 1), 0.0)

    def var_vs(self) -> np.ndarray:
        return np.where(self.count > 1, self.m2_vs / np.maximum(self.count - 1, 1), 0.0)

    def add(self, obs: OpponentObservation) -> None:
        s = obs.s % self.lap_length
        k = min(int(math.floor(s / self.bin_width)), self.n_bins - 1)
        self.count[k] += 1
        n = self.count[k]
        self.mean_s[k] += (s - self.mean_s[k]) / n
        delta = obs.d - self.mean_d[k]
        self.mean_d[k] += delta / n
        self.m2_d[k] += delta * (obs.d - self.mean_d[k])
        delta = obs.v_s - self.mean_vs[k]
        self.mean_vs[k] += delta / n
        self.m2_vs[k] += delta * (obs.v_s - self.mean_vs[k])


def bin_index(s: float, bin_width: float = BIN_WIDTH) -> int:
    return int(math.floor(s / bin_width))


def empty_bins(lap_length: float, bin_width: float = BIN_WIDTH) -> BinnedData:
    if bin_width <= 0.0:
        raise ValueError("bin width must be positive")
    n = int(math.ceil(lap_length / bin_width))
    z = lambda: np.zeros(n)  # noqa: E731
    return BinnedData(bin_width, lap_length, np.zeros(n, dtype=int), z(), z(), z(), z(), z())


def bin_observations(obs: Iterable[OpponentObservation], bin_width: float = BIN_WIDTH, lap_length: float = 0.0) -> BinnedData:
    """Assign every observation to bin ``floor(s / bin_width)``."""
    obs = list(obs)
    if not obs:
        raise ValueError("no observations to bin")
    binned = empty_bins(lap_length, bin_width)
    for o in obs:
        binned.add(o)
    return binned


# -- kernels -----------------------------------------------------------------

def chordal_distance(a: np.ndarray, b: np.ndarray, lap_length: float) -> np.ndarray:
    """Euclidean distance between points ``a`` and ``b`` placed on a circle of circumference ``lap_length``."""
    diff = np.subtract.outer(np.asarray(a, float), np.asarray(b, float))
    return (lap_length / math.pi) * np.abs(np.sin(math.pi * diff / lap_length))


def matern52(r: np.ndarray, length_scale: float) -> np.ndarray:
    z = math.sqrt(5.0) * r / length_scale
    return (1.0 + z + z * z / 3.0) * np.exp(-z)


def rbf(r: np.ndarray, length_scale: float) -> np.ndarray:
    return np.exp(-0.5 * (r / length_scale) ** 2)


KERNELS = {"matern52": matern52, "rbf": rbf}


@dataclass
class PeriodicGP:
    """Exact GP regression with a constant mean and a periodic stationary kernel."""

    kernel: str
    lap_length: float
    length_scale: float
    signal_var: float
    noise_var: float
    x: np.ndarray
    y: np.ndarray
    mean: float
    jitter: float = 0.0
    _chol: np.ndarray = field(default=None, repr=False)
    _alpha: np.ndarray = field(default=None, repr=False)
    _table: list = field(default=None, repr=False)

    def __post_init__(self):
        if self._chol is None:
            self._factorize()
        self._build_table()

    def _corr(self, a, b) -> np.ndarray:
        return KERNELS[self.kernel](chordal_distance(a, b, self.lap_length), self.length_scale)

    def _factorize(self) -> None:
        c = self._corr(self.x, self.x)
        ratio = self.noise_var / self.signal_var
        chol = _cholesky_with_jitter(c + ratio * np.eye(len(self.x)))
        if chol is None:
            raise GPFitError("kernel matrix is not positive definite even after jitter")
        self._chol, self.jitter = chol
        self._alpha = cho_solve((self._chol, True), self.y - self.mean) / self.signal_var

    def predict(self, s, latent: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation at ``s``.

        The standard deviation includes observation noise unless ``latent``.
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        k_star = self.signal_var * self._corr(s, self.x)
        mu = self.mean + k_star @ self._alpha
        v = cho_solve((self._chol, True), k_star.T) / self.signal_var
        var = self.signal_var - np.einsum("ij,ji->i", k_star, v)
        var = np.maximum(var, 0.0)
        if not latent:
            var = var + self.noise_var
        return mu, np.sqrt(var)

    def _build_table(self) -> None:
        n = int(math.ceil(self.lap_length / TABLE_STEP))
        grid = np.arange(n) * (self.lap_length / n)
        k_star = self.signal_var * self._corr(grid, self.x)
        mu = self.mean + k_star @ self._alpha
        self._table = mu.tolist()
        self._table_step = self.lap_length / n

    def mean_fast(self, s: float) -> float:
        """Posterior mean by linear interpolation of a precomputed table."""
        u = (s % self.lap_length) / self._table_step
        k = int(u)
        n = len(self._table)
        if k >= n:
            k = n - 1
        w = u - k
        return (1.0 - w) * self._table[k] + w * self._table[(k + 1) % n]

    def log_marginal_likelihood(self) -> float:
        n = len(self.x)
        r = self.y - self.mean
        quad = float(r @ self._alpha)
        logdet = 2.0 * float(np.sum(np.log(np.diag(self._chol)))) + n * math.log(self.signal_var)
        return -0.5 * quad - 0.5 * logdet - 0.5 * n * math.log(2.0 * math.pi)

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel, "lap_length": self.lap_length, "length_scale": self.length_scale,
            "signal_var": self.signal_var, "noise_var": self.noise_var, "mean": self.mean,
            "x": self.x.tolist(), "y": self.y.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PeriodicGP":
        return cls(data["kernel"], data["lap_length"], data["length_scale"], data["signal_var"], data["noise_var"],
                   np.asarray(data["x"], float), np.asarray(data["y"], float), data["mean"])


def _cholesky_with_jitter(a: np.ndarray):
    scale = float(np.mean(np.diag(a)))
    for jitter in JITTERS:
        try:
            return cholesky(a + jitter * scale * np.eye(len(a)), lower=True, check_finite=False), jitter
        except np.linalg.LinAlgError:
            continue
    return None


def fit_periodic_gp(x: np.ndarray, y: np.ndarray, kernel: str, lap_length: float,
                    length_scales: Sequence[float] = LENGTH_SCALES,
                    noise_ratios: Sequence[float] = NOISE_RATIOS) -> PeriodicGP:
    """Grid search over (length scale, noise/signal ratio); signal variance is profiled out."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n = len(x)
    mean = float(np.mean(y))
    r = y - mean
    best = None
    for ell in length_scales:
        corr = KERNELS[kernel](chordal_distance(x, x, lap_length), ell)
        for ratio in noise_ratios:
            got = _cholesky_with_jitter(corr + ratio * np.eye(n))
            if got is None:
                continue
            chol, _ = got
            a = cho_solve((chol, True), r)
            sig = max(float(r @ a) / n, MIN_SIGNAL_VAR)
            logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
            lml = -0.5 * float(r @ a) / sig - 0.5 * (logdet + n * math.log(sig))
            if best is None or lml > best[0]:
                best = (lml, ell, ratio, sig)
    if best is None:
        raise GPFitError("no hyperparameter setting gave a positive definite kernel")
    _, ell, ratio, sig = best
    return PeriodicGP(kernel, lap_length, ell, sig, ratio * sig, x, y, mean)


@dataclass
class OpponentTrajectoryGP:
    """Fitted lateral-offset and speed models of one opponent."""

    gp_d: PeriodicGP
    gp_vs: PeriodicGP
    lap_length: float
    bin_width: float = BIN_WIDTH

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps({"lap_length": self.lap_length, "bin_width": self.bin_width,
                           "gp_d": self.gp_d.to_dict(), "gp_vs": self.gp_vs.to_dict()}, indent=1)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, text_or_path) -> "OpponentTrajectoryGP":
        p = Path(text_or_path) if not str(text_or_path).lstrip().startswith("{") else None
        data = json.loads(p.read_text() if p else text_or_path)
        return cls(PeriodicGP.from_dict(data["gp_d"]), PeriodicGP.from_dict(data["gp_vs"]),
                   data["lap_length"], data["bin_width"])


def fit(binned: BinnedData, min_coverage: float = MIN_COVERAGE) -> OpponentTrajectoryGP:
    """Fit both GPs on the non-empty bins.

    Raises
    ------
    GPFitError
        If fewer than ``min_coverage`` of the bins hold an observation.
    """
    if binned.coverage < min_coverage:
        raise GPFitError(f"lap coverage {binned.coverage:.0%} is below the required {min_coverage:.0%}")
    mask = binned.count > 0
    x = binned.mean_s[mask]
    gp_d = fit_periodic_gp(x, binned.mean_d[mask], "matern52", binned.lap_length)
    gp_vs = fit_periodic_gp(x, binned.mean_vs[mask], "rbf", binned.lap_length)
    return OpponentTrajectoryGP(gp_d, gp_vs, binned.lap_length, binned.bin_width)


def predict_d(gp: OpponentTrajectoryGP, s, latent: bool = False):
    mu, sd = gp.gp_d.predict(s, latent=latent)
    return (float(mu[0]), float(sd[0])) if np.ndim(s) == 0 else (mu, sd)


def predict_vs(gp: OpponentTrajectoryGP, s, latent: bool = False):
    mu, sd = gp.gp_vs.predict(s, latent=latent)
    return (float(mu[0]), float(sd[0])) if np.ndim(s) == 0 else (mu, sd)


def sample_vs(gp: OpponentTrajectoryGP, s: float, rng: np.random.Generator) -> float:
    """One draw from the speed posterior at ``s`` (stochastic alternative to the mean)."""
    mu, sd = predict_vs(gp, s, latent=True)
    return float(rng.normal(mu, sd))


def consistency_check(gp: OpponentTrajectoryGP, obs: OpponentObservation, k_sigma: float = 2.0) -> bool:
    """True when the observation lies inside ``k_sigma`` standard deviations in both d and v_s."""
    mu_d, sd_d = predict_d(gp, obs.s)
    mu_v, sd_v = predict_vs(gp, obs.s)
    tol = 1.0 + 1e-12  # closed bound, robust to rounding of mean + k * std
    return abs(obs.d - mu_d) <= k_sigma * sd_d * tol and abs(obs.v_s - mu_v) <= k_sigma * sd_v * tol
