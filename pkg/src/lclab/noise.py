"""Monte Carlo simulator of attention-noise accumulation.

Scalar attention streams (query, key, value per position) are perturbed
by Gaussian noise on keys and values, and the variance of the induced
hidden-state error is estimated as a function of sequence position t.

Three interpretations of the error model are simulated side by side,
because a per-term softmax over a single scalar is the constant 1 while
differentiating an attention weight with respect to its key implies a
joint softmax -- the two readings genuinely diverge, and the simulator's
job is to quantify each rather than silently pick one:

* per_term       h_t = sum_{i<=t} (v_i + eps_v_i); each term carries
                 softmax weight 1, so key noise vanishes and the error
                 variance is exactly t * sigma^2.
* first_order    clean h_t plus the linearized noise terms
                 sum_i (a_ti eps_v_i + (da_ti/dk_i) v_i eps_k_i), with
                 a from a joint softmax over i <= t for query t and the
                 Jacobian a_ti (1 - a_ti) q_t / sqrt(d_k) in closed form.
* full_attention exact noisy-vs-clean attention with a joint softmax.

Noise goes on keys and values only, never queries.

Determinism: each trial draws from its own Philox stream keyed by
mix(seed, trial); the draw order per trial is q, k, v, eps_k, eps_v,
each t_max doubles. Results are therefore independent of any execution
schedule, and shared across interpretations.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, InputError
from .harness import ols_fit
from .model.rng import splitmix64_mix

INTERPRETATIONS = ("per_term", "first_order", "full_attention")
NOISE_TARGETS = ("both", "value_only", "key_only")
CSV_HEADER = "interpretation,t,variance,ci_halfwidth"
_Z95 = 1.959963984540054


@dataclass(frozen=True)
class NoiseSimConfig:
    t_max: int
    sigma: float
    d_k: int = 1
    trials: int = 1000
    interpretation: str = "per_term"
    seed: int = 0
    vector_scale: Optional[float] = None  # q,k,v std; default 1/sqrt(d_k)
    t_points: Optional[tuple] = None  # default: all t (per_term) or log grid
    noise_targets: str = "both"
    force_uniform: bool = False  # all q.k equal -> uniform attention weights

    def __post_init__(self):
        if self.t_max < 2:
            raise ConfigurationError("t_max must be >= 2")
        if self.sigma < 0:
            raise ConfigurationError("sigma must be >= 0")
        if self.d_k < 1:
            raise ConfigurationError("d_k must be >= 1")
        if self.trials < 100:
            raise ConfigurationError("trials must be >= 100 for variance estimates")
        if self.interpretation not in INTERPRETATIONS:
            raise ConfigurationError(
                f"interpretation must be one of {INTERPRETATIONS}"
            )
        if self.noise_targets not in NOISE_TARGETS:
            raise ConfigurationError(f"noise_targets must be one of {NOISE_TARGETS}")
        if self.t_points is not None:
            pts = tuple(int(t) for t in self.t_points)
            if any(t < 1 or t > self.t_max for t in pts):
                raise ConfigurationError("t_points must lie in [1, t_max]")
            if list(pts) != sorted(set(pts)):
                raise ConfigurationError("t_points must be strictly increasing")
            object.__setattr__(self, "t_points", pts)

    @property
    def scale(self) -> float:
        return self.vector_scale if self.vector_scale is not None else self.d_k**-0.5

    def resolved_t_points(self) -> np.ndarray:
        if self.t_points is not None:
            return np.asarray(self.t_points, dtype=np.int64)
        if self.interpretation == "per_term":
            return np.arange(1, self.t_max + 1, dtype=np.int64)
        return log_t_grid(self.t_max)


def log_t_grid(t_max: int, n: int = 32) -> np.ndarray:
    """Roughly geometric grid of integer positions, always ending at t_max."""
    pts = np.unique(np.round(np.geomspace(1, t_max, n)).astype(np.int64))
    return pts


@dataclass
class NoiseCurve:
    interpretation: str
    t: np.ndarray
    variance: np.ndarray
    ci_halfwidth: np.ndarray

    def __post_init__(self):
        if len(self.t) != len(self.variance) or len(self.t) != len(self.ci_halfwidth):
            raise InputError("curve arrays must have equal lengths")


def _draw_streams(config: NoiseSimConfig) -> dict[str, np.ndarray]:
    """All per-trial streams as (trials, t_max) float64 matrices."""
    t, n = config.t_max, config.trials
    out = {k: np.empty((n, t)) for k in ("q", "k", "v", "eps_k", "eps_v")}
    for trial in range(n):
        key = splitmix64_mix((config.seed & (2**64 - 1)) ^ (trial + 1))
        gen = np.random.Generator(np.random.Philox(key=key))
        for name in ("q", "k", "v", "eps_k", "eps_v"):
            out[name][trial] = gen.standard_normal(t)
    s = config.scale
    for name in ("q", "k", "v"):
        out[name] *= s
    sig = config.sigma
    out["eps_k"] *= sig
    out["eps_v"] *= sig
    if config.noise_targets == "value_only":
        out["eps_k"][:] = 0.0
    elif config.noise_targets == "key_only":
        out["eps_v"][:] = 0.0
    return out


def _softmax_rows(x: np.ndarray) -> np.ndarray:
    m = x.max(axis=1, keepdims=True)
    e = np.exp(x - m)
    return e / e.sum(axis=1, keepdims=True)


def simulate(config: NoiseSimConfig) -> NoiseCurve:
    """Sample variance of the hidden-state error at each t across trials."""
    t_points = config.resolved_t_points()
    streams = _draw_streams(config)
    rsqrt_dk = config.d_k**-0.5
    n = config.trials

    if config.interpretation == "per_term":
        err_all = np.cumsum(streams["eps_v"], axis=1)
        err = err_all[:, t_points - 1]
    else:
        err = np.empty((n, len(t_points)))
        for col, t in enumerate(t_points):
            k = streams["k"][:, :t]
            v = streams["v"][:, :t]
            eps_k = streams["eps_k"][:, :t]
            eps_v = streams["eps_v"][:, :t]
            q_t = streams["q"][:, t - 1 : t]
            if config.force_uniform:
                scores = np.zeros((n, t))
            else:
                scores = q_t * k * rsqrt_dk
            a = _softmax_rows(scores)
            if config.interpretation == "first_order":
                jac = a * (1.0 - a) * (q_t * rsqrt_dk)
                err[:, col] = np.sum(a * eps_v + jac * v * eps_k, axis=1)
            else:  # full_attention
                if config.force_uniform:
                    noisy_scores = np.zeros((n, t))
                else:
                    noisy_scores = q_t * (k + eps_k) * rsqrt_dk
                a_noisy = _softmax_rows(noisy_scores)
                err[:, col] = np.sum(a_noisy * (v + eps_v), axis=1) - np.sum(
                    a * v, axis=1
                )

    variance = err.var(axis=0, ddof=1)
    ci = _Z95 * variance * np.sqrt(2.0 / (n - 1))
    return NoiseCurve(
        interpretation=config.interpretation,
        t=t_points,
        variance=variance,
        ci_halfwidth=ci,
    )


def fit_linear(curve: NoiseCurve) -> tuple[float, float, float]:
    """OLS of variance against t: (slope, intercept, r^2)."""
    return ols_fit(curve.t.astype(np.float64), curve.variance)


def compare_interpretations(config: NoiseSimConfig) -> dict:
    """Run all interpretations on shared seeds; per-interpretation fits."""
    t_points = tuple(int(t) for t in log_t_grid(config.t_max))
    report = {}
    for interp in INTERPRETATIONS:
        cfg = NoiseSimConfig(
            t_max=config.t_max,
            sigma=config.sigma,
            d_k=config.d_k,
            trials=config.trials,
            interpretation=interp,
            seed=config.seed,
            vector_scale=config.vector_scale,
            t_points=t_points,
            noise_targets=config.noise_targets,
            force_uniform=config.force_uniform,
        )
        curve = simulate(cfg)
        slope, intercept, r2 = fit_linear(curve)
        report[interp] = {
            "curve": curve,
            "slope": slope,
            "intercept": intercept,
            "r2": r2,
        }
    return report


def curves_to_csv(curves: Sequence[NoiseCurve]) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for c in curves:
        for t, var, ci in zip(c.t, c.variance, c.ci_halfwidth):
            buf.write(f"{c.interpretation},{int(t)},{float(var)!r},{float(ci)!r}\n")
    return buf.getvalue()


def curves_from_csv(text: str) -> list[NoiseCurve]:
    lines = text.split("\n")
    if not lines or lines[0] != CSV_HEADER:
        raise InputError(f"bad noise CSV header: {lines[0] if lines else ''!r}")
    rows: dict[str, list] = {}
    for line in lines[1:]:
        if not line:
            continue
        interp, t, var, ci = line.split(",")
        rows.setdefault(interp, []).append((int(t), float(var), float(ci)))
    curves = []
    for interp, vals in rows.items():
        arr = np.asarray(vals)
        curves.append(
            NoiseCurve(interp, arr[:, 0].astype(np.int64), arr[:, 1], arr[:, 2])
        )
    return curves
