"""Closed-form bounds with explicit constants and per-point numeric certificates.

Every ``check_*`` function returns a :class:`Certificate` whose orientation is
fixed: ``margin = rhs - lhs`` and the check passes when ``margin >= -tol``.
For lower-bound statements (reverse Chernoff, mean absolute deviation) the
guaranteed quantity is placed on the right so the same rule applies.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import rel_entr

from .config import CERT_TOL
from .exact import binomial_table, exact_mad, mgf_shifted_bernoulli

__all__ = [
    "Certificate", "DomainError", "check_subgamma_mgf", "subgamma_rhs",
    "bernstein_mgf_bound", "divergences", "check_kl_upper",
    "check_reverse_chernoff", "check_bk_mad", "check_okamoto_lower_tail",
    "maximal_subgaussian_bound", "maximal_subgamma_bound", "theorem_upper",
    "lower_bound_S", "epsilon_fine", "baseline_bounds",
    "certificates_to_jsonl", "certificates_to_csv",
]

THEOREM_MIN_N = 21  # smallest integer >= e^3


class DomainError(ValueError):
    """Inputs outside the region where an inequality is claimed."""


@dataclass(frozen=True)
class Certificate:
    name: str
    inputs: dict
    lhs: float
    rhs: float
    margin: float
    tol: float
    passed: bool
    detail: dict = field(default_factory=dict)

    @property
    def rel_margin(self) -> float:
        """Margin relative to the larger side; meaningful when both sides are tiny."""
        scale = max(abs(self.lhs), abs(self.rhs))
        return self.margin / scale if scale > 0 else 0.0

    def to_dict(self) -> dict:
        return {"name": self.name, "inputs": dict(self.inputs), "lhs": self.lhs,
                "rhs": self.rhs, "margin": self.margin, "tol": self.tol,
                "pass": self.passed, **({"detail": dict(self.detail)} if self.detail else {})}


def _certify(name, inputs, lhs, rhs, tol=CERT_TOL, detail=None):
    lhs = float(lhs)
    rhs = float(rhs)
    margin = rhs - lhs
    return Certificate(name, inputs, lhs, rhs, margin, tol, bool(margin >= -tol), detail or {})


# -- sub-gamma MGF -------------------------------------------------------------

def subgamma_rhs(q: float, s: float, t: float) -> float:
    ratio = math.log(1.0 / s) / math.log(1.0 / q)
    return math.exp(q * t * t / (2.0 * (1.0 - t * ratio)))


def check_subgamma_mgf(q: float, s: float, t: float, tol: float = CERT_TOL) -> Certificate:
    """``E exp(t(X - s)) <= exp(q t^2 / (2[1 - t log(1/s)/log(1/q)]))``, X ~ Bernoulli(q)."""
    s_max = math.exp(-3.0)
    if not (0.0 < q <= s <= s_max * (1.0 + 1e-15)):
        raise DomainError(f"need 0 < q <= s <= e^-3, got q={q}, s={s}")
    t_max = math.log(1.0 / q) / math.log(1.0 / s)
    if not 0.0 <= t < t_max:
        raise DomainError(f"need 0 <= t < {t_max}, got t={t}")
    return _certify("subgamma_mgf", {"q": q, "s": s, "t": t},
                    mgf_shifted_bernoulli(q, s, t), subgamma_rhs(q, s, t), tol)


def bernstein_mgf_bound(q: float, t: float) -> float:
    """Classical Bernstein: ``E exp(t(X - q)) <= exp(q(1-q) t^2 / (2(1 - t/3)))`` for 0 <= t < 3."""
    if not 0.0 <= t < 3.0:
        raise DomainError("Bernstein bound needs 0 <= t < 3")
    return math.exp(q * (1.0 - q) * t * t / (2.0 * (1.0 - t / 3.0)))


# -- divergences and the KL upper bound ------------------------------------------

def divergences(a: float, b: float) -> tuple[float, float]:
    """Bernoulli KL divergence ``D(a||b)`` and chi-square divergence."""
    if not 0.0 < b < 1.0:
        raise DomainError("divergences need b in (0, 1)")
    if not 0.0 <= a <= 1.0:
        raise DomainError("divergences need a in [0, 1]")
    kl = float(rel_entr(a, b) + rel_entr(1.0 - a, 1.0 - b))
    d = a - b
    chi2 = d * d / b + d * d / (1.0 - b)
    return max(kl, 0.0), chi2


def check_kl_upper(q: float, eps: float, tol: float = CERT_TOL) -> Certificate:
    """``D(q + eps || q) <= 2 min(eps log(1/q), eps^2 / q)``."""
    if not 0.0 < q <= 0.5:
        raise DomainError("need q in (0, 1/2]")
    if not 0.0 <= eps <= 1.0 - q:
        raise DomainError("need eps in [0, 1 - q]")
    lhs = divergences(min(1.0, q + eps), q)[0]
    rhs = 2.0 * min(eps * math.log(1.0 / q), eps * eps / q)
    return _certify("kl_upper", {"q": q, "eps": eps}, lhs, rhs, tol)


# -- binomial tail and deviation checks --------------------------------------------

def _ceil_robust(x: float) -> int:
    # (1 + eps) q n is often an integer up to rounding; do not step past it
    return int(math.ceil(x - 1e-9 * max(1.0, abs(x))))


def check_reverse_chernoff(n: int, q: float, eps: float, tol: float = CERT_TOL) -> Certificate:
    """``P(X >= (1 + eps) q n) >= exp(-9 eps^2 q n)`` for X ~ Bin(n, q)."""
    if not (0.0 < eps <= 0.5 and 0.0 < q <= 0.5):
        raise DomainError("need 0 < eps, q <= 1/2")
    if eps * eps * q * n < 3.0 - 1e-12:
        raise DomainError(f"need eps^2 q n >= 3, got {eps * eps * q * n}")
    k = _ceil_robust((1.0 + eps) * q * n)
    tail = binomial_table(n, q).upper_tail(k)
    return _certify("reverse_chernoff", {"n": n, "q": q, "eps": eps},
                    math.exp(-9.0 * eps * eps * q * n), tail, tol, {"threshold": k})


def check_bk_mad(n: int, q: float, tol: float = CERT_TOL) -> Certificate:
    """``E|X - nq| >= sqrt(n q (1 - q) / 2) >= sqrt(n q) / 2`` for X ~ Bin(n, q)."""
    if n < 2:
        raise DomainError("need n >= 2")
    if not (1.0 / n - 1e-15 <= q <= 0.5):
        raise DomainError("need q in [1/n, 1/2]")
    primary = math.sqrt(n * q * (1.0 - q) / 2.0)
    secondary = 0.5 * math.sqrt(n * q)
    return _certify("bk_mad", {"n": n, "q": q}, max(primary, secondary), exact_mad(n, q), tol,
                    {"primary": primary, "secondary": secondary})


def check_okamoto_lower_tail(n: int, q: float, t: float, tol: float = CERT_TOL) -> Certificate:
    """``P(p_hat <= q - t) <= exp(-n t^2 / (2 q (1 - q)))``.

    The bound is used for means in (0, 1/2]; above roughly 0.68 it can fail,
    which the certificate reports rather than hides.
    """
    if not 0.0 < q < 1.0:
        raise DomainError("need q in (0, 1)")
    if t < 0:
        raise DomainError("need t >= 0")
    x = n * (q - t)
    k = int(math.floor(x + 1e-9 * max(1.0, abs(x))))
    lhs = binomial_table(n, q).lower_tail(k) if k >= 0 else 0.0
    rhs = math.exp(-n * t * t / (2.0 * q * (1.0 - q)))
    return _certify("okamoto_lower_tail", {"n": n, "q": q, "t": t}, lhs, rhs, tol, {"threshold": k})


# -- maximal inequalities and theorem bounds -------------------------------------

def _log_index(m):
    return np.log(np.arange(2, m + 2, dtype=np.float64))


def maximal_subgaussian_bound(sigma2) -> float:
    """``4 sqrt(sup_i sigma_i^2 log(i + 1))`` with i starting at 1."""
    s = np.asarray(sigma2, dtype=np.float64).ravel()
    if s.size == 0 or np.any(s <= 0):
        raise DomainError("variance proxies must be positive")
    return 4.0 * math.sqrt(float(np.max(s * _log_index(s.size))))


def maximal_subgamma_bound(v, a) -> float:
    """``12 sup_i sqrt(v_i log(i+1)) + 16 sup_i a_i log(i+1)``."""
    v = np.asarray(v, dtype=np.float64).ravel()
    a = np.asarray(a, dtype=np.float64).ravel()
    if v.shape != a.shape:
        raise DomainError("v and a must have equal lengths")
    if v.size == 0 or np.any(v <= 0) or np.any(a < 0):
        raise DomainError("need v > 0 and a >= 0")
    lg = _log_index(v.size)
    return 12.0 * math.sqrt(float(np.max(v * lg))) + 16.0 * float(np.max(a * lg))


def theorem_upper(S: float, T: float, n: int) -> float:
    """Finite-sample upper bound on Delta_n with the proof's own constants."""
    if n < THEOREM_MIN_N:
        raise DomainError(f"bound stated for n >= {THEOREM_MIN_N}")
    if S < 0 or not T > 0:
        raise DomainError("need S >= 0 and T > 0")
    if T >= 0.5:
        return 28.0 * (math.sqrt(S / n) + T * math.log(n) / n) + 1.0 / n
    return 16.0 * (math.sqrt(S / n) + T / n)


def lower_bound_S(pvec, n: int) -> float:
    """``(1/180) max sqrt(p(j) log(j+1) / n)`` over j with ``n p(j) >= 20 log(j+1)``."""
    p = np.asarray(pvec, dtype=np.float64).ravel()
    if n < 2:
        raise DomainError("need n >= 2")
    if np.any(np.diff(p) > 0):
        raise DomainError("pvec must be nonincreasing")
    lg = _log_index(p.size)
    ok = n * p >= 20.0 * lg
    if not np.any(ok):
        return 0.0
    return float(np.max(np.sqrt(p[ok] * lg[ok] / n))) / 180.0


def epsilon_fine(p, j: int, n: int) -> float:
    """``max(log(j+1) / (n log(1/p(j))), sqrt(p(j) log(j+1) / n))``."""
    if j < 1 or n < 1:
        raise DomainError("need j, n >= 1")
    pj = float(p(j)) if callable(p) else float(p)
    lg = math.log(j + 1.0)
    return max(lg / (n * math.log(1.0 / pj)), math.sqrt(pj * lg / n))


def baseline_bounds(d: int, n: int, eps: float) -> tuple[float, float, float]:
    """Union-bound Hoeffding tail, McDiarmid tail, and the distribution-free rate.

    The last is ``2 sqrt(log(d+1)/n)``: sub-Gaussian proxies 1/(4n) fed into
    the inhomogeneous maximal inequality.
    """
    if d < 1 or n < 1 or eps < 0:
        raise DomainError("need d, n >= 1 and eps >= 0")
    tail = math.exp(-2.0 * n * eps * eps)
    return 2.0 * d * tail, tail, 2.0 * math.sqrt(math.log(d + 1.0) / n)


# -- serialization ----------------------------------------------------------------

def certificates_to_jsonl(certs) -> str:
    return "".join(json.dumps(c.to_dict(), sort_keys=True) + "\n" for c in certs)


def certificates_to_csv(certs) -> str:
    certs = list(certs)
    keys = sorted({k for c in certs for k in c.inputs})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", *keys, "lhs", "rhs", "margin", "pass"])
    for c in certs:
        w.writerow([c.name, *(repr(c.inputs.get(k, "")) if k in c.inputs else "" for k in keys),
                    repr(c.lhs), repr(c.rhs), repr(c.margin), str(c.passed).lower()])
    return buf.getvalue()
