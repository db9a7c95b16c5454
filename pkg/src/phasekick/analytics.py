"""Closed-form predictions for kickback statistics, with sampling oracles.

Serial kickbacks: an error anywhere on the register stalls every later
kickback, so the number k of accumulated kickbacks is truncated-geometric,

    P(k) = p (1-p)^k  for k < N,   P(N) = (1-p)^N,

giving  E(2 theta k) = 2 theta ((1-p)/p - (1-p)^(N+1)/p),  bounded by
2 theta (1-p)/p no matter how large N grows. Parallel kickbacks are
independent per operator, so k is Binomial(N, 1-p) and the mean stays
linear: 2 theta (1-p) N.

Two printed forms of the parallel second-order quantities circulate; both
are exposed behind flags and the discrepancies are settled by the oracles
in this module:

- variance: the binomial identity gives Var(2 theta k) = 4 theta^2 N p (1-p)
  ("binomial", default); a "linear-theta" form theta p (1-p) N is retained
  for comparison only.
- dampening exponent: the Gaussian characteristic function forces
  exp(-(2 theta)^2 sigma^2 / 2) ("squared", default); a "plain" form
  exp(-sigma^2 2 theta / 2) is retained for comparison only.

The one-qubit special case has no off-plane eigenvectors: an error flips
between the two plane eigenvectors, so serial kickbacks follow a persistent
random walk and parallel kickbacks drift as 2 theta (1-2p) N.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb, cos, exp, pi, sin, sqrt

import numpy as np


# -- serial kickbacks --------------------------------------------------------


def serial_expected_kickback(n_operators: int, p: float, theta: float) -> float:
    """Expected total kickback angle of a serial chain of n_operators."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    if p == 0.0:
        return 2.0 * theta * n_operators
    q = 1.0 - p
    return 2.0 * theta * (q / p - q ** (n_operators + 1) / p)


def n_eff(p: float, family: str, n_operators: int | None = None) -> float:
    """Effective number of operators contributing kickback under noise."""
    if family == "serial":
        if p <= 0.0:
            raise ValueError("serial effective count is unbounded at p = 0")
        return (1.0 - p) / p
    if family == "parallel":
        if n_operators is None:
            raise ValueError("parallel effective count needs n_operators")
        return (1.0 - p) * n_operators
    raise ValueError(f"unknown family {family!r}")


def serial_lowdepth_p1(n_operators: int, p: float, theta: float) -> float:
    """Exact outcome-1 probability of the serial kickback circuit: the
    truncated-geometric expectation of sin^2(k theta)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    q = 1.0 - p
    total = sum(p * q ** k * sin(k * theta) ** 2 for k in range(n_operators))
    total += q ** n_operators * sin(n_operators * theta) ** 2
    return total


def serial_lowdepth_p1_continuous(n_operators: int, p: float, theta: float) -> float:
    """Large-N continuous approximation: the truncated exponential
    expectation of sin^2(theta t) with rate -ln(1-p), which matches the
    geometric weights at integer t. Secondary to the exact finite sum."""
    if p <= 0.0:
        return sin(n_operators * theta) ** 2
    if p >= 1.0:
        return 0.0
    lam = -np.log1p(-p)
    w = 2.0 * theta
    t = float(n_operators)
    # integral_0^T lam e^{-lam t} (1 - cos(wt))/2 dt + e^{-lam T} sin^2(theta T)
    i_cos = (lam - exp(-lam * t) * (lam * cos(w * t) - w * sin(w * t))) / (lam * lam + w * w)
    integral = 0.5 * (1.0 - exp(-lam * t)) - 0.5 * lam * i_cos
    return integral + exp(-lam * t) * sin(theta * t) ** 2


# -- parallel kickbacks ------------------------------------------------------


def parallel_moments(n_operators: int, p: float, theta: float,
                     variance_form: str = "binomial") -> tuple[float, float]:
    """(mean, variance) of the total parallel kickback angle 2 theta k,
    k ~ Binomial(n_operators, 1-p)."""
    mean = 2.0 * theta * (1.0 - p) * n_operators
    if variance_form == "binomial":
        var = (2.0 * theta) ** 2 * n_operators * p * (1.0 - p)
    elif variance_form == "linear-theta":
        var = theta * p * (1.0 - p) * n_operators
    else:
        raise ValueError(f"unknown variance form {variance_form!r}")
    return mean, var


def dampened_p1(n_operators: int, p: float, theta: float,
                exponent_form: str = "squared") -> float:
    """Normal-approximation outcome-1 probability for parallel kickbacks:
    1/2 - exp(-(2 theta)^2 sigma^2/2) cos(2 theta mu) / 2 with
    mu = N(1-p), sigma^2 = N p (1-p)."""
    mu = n_operators * (1.0 - p)
    sigma2 = n_operators * p * (1.0 - p)
    if exponent_form == "squared":
        damp = exp(-((2.0 * theta) ** 2) * sigma2 / 2.0)
    elif exponent_form == "plain":
        damp = exp(-sigma2 * 2.0 * theta / 2.0)
    else:
        raise ValueError(f"unknown exponent form {exponent_form!r}")
    return 0.5 - 0.5 * damp * cos(2.0 * theta * mu)


def exact_parallel_p1(n_operators: int, p: float, theta: float) -> float:
    """Exact binomial expectation of sin^2(k theta); the oracle the normal
    approximation is judged against."""
    q = 1.0 - p
    return sum(comb(n_operators, k) * q ** k * p ** (n_operators - k)
               * sin(k * theta) ** 2 for k in range(n_operators + 1))


@dataclass
class KickbackForecast:
    n_operators: int
    p: float
    theta: float
    mean_angle: float
    variance_angle: float
    n_effective: float
    p1: float
    mu: float
    sigma: float


def forecast(n_operators: int, p: float, theta: float, family: str) -> KickbackForecast:
    if family == "serial":
        mean = serial_expected_kickback(n_operators, p, theta)
        neff = (1.0 - p) / p if p > 0 else float(n_operators)
        p1 = serial_lowdepth_p1(n_operators, p, theta)
        var = float("nan")
    elif family == "parallel":
        mean, var = parallel_moments(n_operators, p, theta)
        neff = n_eff(p, "parallel", n_operators)
        p1 = dampened_p1(n_operators, p, theta)
    else:
        raise ValueError(f"unknown family {family!r}")
    mu = n_operators * (1.0 - p)
    sigma = sqrt(n_operators * p * (1.0 - p))
    return KickbackForecast(n_operators, p, theta, mean, var, neff, p1, mu, sigma)


# -- one-qubit special case --------------------------------------------------


@dataclass
class WalkForecast:
    n_steps: int
    p: float
    d: float         # plain random walk mean distance
    d_tilde: float   # persistent walk mean distance
    n_tilde: float   # effective step count of the rescaled walk
    drift_1q: float  # parallel one-qubit mean kickback angle


def walk_forecast(n_steps: int, p: float, theta: float = 0.0) -> WalkForecast:
    """Persistent-walk distances and the one-qubit parallel drift.

    The distance formula is an asymptotic: it needs 1/p < n_steps to be
    meaningful. p = 0.5 reduces the persistent walk to the plain one.
    """
    if p <= 0.0:
        raise ValueError("flip probability must be positive")
    d = sqrt(2.0 * n_steps / pi)
    d_tilde = sqrt((1.0 / p - 1.0) * 2.0 * n_steps / pi)
    return WalkForecast(n_steps, p, d, d_tilde, p * (1.0 - p) * n_steps,
                        2.0 * theta * (1.0 - 2.0 * p) * n_steps)


# -- sampling oracles --------------------------------------------------------


def mc_serial_kickback(n_operators: int, p: float, theta: float,
                       samples: int, rng: np.random.Generator) -> float:
    """Mean total angle over the truncated geometric distribution."""
    if p == 0.0:
        return 2.0 * theta * n_operators
    k = np.minimum(rng.geometric(p, size=samples) - 1, n_operators)
    return float(np.mean(2.0 * theta * k))


def mc_parallel_kickback(n_operators: int, p: float, theta: float,
                         samples: int, rng: np.random.Generator
                         ) -> tuple[float, float]:
    """(mean, variance) of the parallel kickback angle over binomial draws."""
    k = rng.binomial(n_operators, 1.0 - p, size=samples)
    angles = 2.0 * theta * k
    return float(np.mean(angles)), float(np.var(angles))


def mc_parallel_p1(n_operators: int, p: float, theta: float,
                   samples: int, rng: np.random.Generator) -> float:
    k = rng.binomial(n_operators, 1.0 - p, size=samples)
    return float(np.mean(np.sin(theta * k) ** 2))


def mc_serial_p1(n_operators: int, p: float, theta: float,
                 samples: int, rng: np.random.Generator) -> float:
    if p == 0.0:
        return sin(n_operators * theta) ** 2
    k = np.minimum(rng.geometric(p, size=samples) - 1, n_operators)
    return float(np.mean(np.sin(theta * k) ** 2))


def mc_persistent_walk(n_steps: int, p: float, runs: int,
                       rng: np.random.Generator, chunk: int = 2000) -> float:
    """Mean absolute end distance of the persistent walk: first step +1,
    each later step flips direction with probability p."""
    total = 0.0
    done = 0
    while done < runs:
        m = min(chunk, runs - done)
        flips = rng.random((m, n_steps - 1)) < p
        parity = np.cumsum(flips, axis=1) & 1
        directions = np.empty((m, n_steps), dtype=np.int64)
        directions[:, 0] = 1
        directions[:, 1:] = 1 - 2 * parity
        total += float(np.sum(np.abs(directions.sum(axis=1))))
        done += m
    return total / runs
