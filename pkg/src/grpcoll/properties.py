"""Monte Carlo verification of the two statistical guarantees of scaled
Gaussian projection: unbiased dot products / squared distances with bounded
variance, and the per-element reconstruction error of the worst-case attack.
"""

from __future__ import annotations

import numpy as np

from .attack import predicted_variance

_BATCH = 512


def _unit_pair(d: int, seed: int):
    rng = np.random.Generator(np.random.PCG64(seed))
    x1 = rng.standard_normal(d)
    x2 = rng.standard_normal(d)
    return x1 / np.linalg.norm(x1), x2 / np.linalg.norm(x2)


def dot_distance_check(
    k: int = 10,
    d: int = 20,
    trials: int = 100_000,
    seed: int = 12345,
    se_mult: float = 5.0,
    var_margin: float = 0.1,
) -> dict:
    """Unbiasedness and variance bounds of y1.y2 and ||y1-y2||^2 over fresh
    scaled keys, for fixed unit-norm inputs."""
    x1, x2 = _unit_pair(d, seed)
    rng = np.random.Generator(np.random.PCG64(seed + 1))
    dots = np.empty(trials)
    dists = np.empty(trials)
    done = 0
    while done < trials:
        b = min(_BATCH, trials - done)
        r = rng.standard_normal((b, k, d))
        y1 = np.einsum("bkd,d->bk", r, x1) / np.sqrt(k)
        y2 = np.einsum("bkd,d->bk", r, x2) / np.sqrt(k)
        dots[done : done + b] = np.einsum("bk,bk->b", y1, y2)
        dists[done : done + b] = np.sum((y1 - y2) ** 2, axis=1)
        done += b

    def summary(samples, target, var_bound):
        mean = float(samples.mean())
        var = float(samples.var(ddof=1))
        se = float(np.sqrt(var / trials))
        return {
            "mean": mean,
            "target": target,
            "stderr": se,
            "bias_ok": abs(mean - target) <= se_mult * se,
            "variance": var,
            "variance_bound": var_bound * (1.0 + var_margin),
            "variance_ok": var <= var_bound * (1.0 + var_margin),
        }

    dot = summary(dots, float(x1 @ x2), 2.0 / k)
    dist = summary(dists, float(np.sum((x1 - x2) ** 2)), 32.0 / k)
    return {
        "k": k,
        "d": d,
        "trials": trials,
        "dot": dot,
        "distance": dist,
        "ok": dot["bias_ok"] and dot["variance_ok"] and dist["bias_ok"] and dist["variance_ok"],
    }


def reconstruction_check(
    d: int = 10,
    k: int = 5,
    trials: int = 100_000,
    seed: int = 54321,
    se_mult: float = 5.0,
    rel_tol: float = 0.05,
    x: np.ndarray | None = None,
) -> dict:
    """Ensemble reconstruction estimator: per-element unbiasedness within
    se_mult standard errors and variance within rel_tol of the analytic
    (2/k) x_i^2 + (1/k) sum_{j != i} x_j^2."""
    rng = np.random.Generator(np.random.PCG64(seed))
    if x is None:
        x = rng.standard_normal(d)
    x = np.asarray(x, dtype=np.float64)
    d = x.size

    count = 0
    mean = np.zeros(d)
    m2 = np.zeros(d)
    while count < trials:
        b = min(_BATCH, trials - count)
        r = rng.standard_normal((b, k, d))
        rx = np.einsum("bkd,d->bk", r, x)
        est = np.einsum("bkd,bk->bd", r, rx) / k
        b_mean = est.mean(axis=0)
        b_m2 = ((est - b_mean) ** 2).sum(axis=0)
        delta = b_mean - mean
        total = count + b
        mean = mean + delta * b / total
        m2 = m2 + b_m2 + delta**2 * count * b / total
        count = total

    var = m2 / (count - 1)
    predicted = predicted_variance(x, k)
    stderr = np.sqrt(var / trials)
    bias_ok = np.abs(mean - x) <= se_mult * stderr
    meaningful = predicted >= 1e-12
    rel_err = np.where(meaningful, np.abs(var - predicted) / np.where(meaningful, predicted, 1.0), 0.0)
    var_ok = rel_err <= rel_tol
    return {
        "d": int(d),
        "k": k,
        "trials": trials,
        "mean": mean,
        "empirical_variance": var,
        "predicted_variance": predicted,
        "max_rel_var_err": float(rel_err.max()),
        "bias_ok": bool(bias_ok.all()),
        "variance_ok": bool(var_ok.all()),
        "ok": bool(bias_ok.all() and var_ok.all()),
    }
