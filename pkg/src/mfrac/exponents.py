"""Exponent bookkeeping: ``(n, m, k, p_1..p_m, q, alpha)`` and the derived ``p``."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError

_EQ_TOL = 1e-12


def conjugate(r):
    """Hoelder conjugate ``r' = r / (r - 1)``; ``inf`` for ``r = 1``."""
    if r == 1:
        return math.inf
    return r / (r - 1.0)


@dataclass(frozen=True)
class ExponentConfig:
    """Exponents of a multilinear inequality.

    ``alpha`` is a single order or, for the strong operators, one order per
    factor (``len(alpha) == k``).  ``p`` is derived from ``1/p = sum 1/p_i``.
    """

    n: int
    m: int
    p_list: tuple
    q: float
    alpha: object = 0.0
    k: int = 1

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.k < 1:
            raise ParameterError("n, m, k must be positive integers")
        p_list = tuple(float(x) for x in self.p_list)
        if len(p_list) != self.m:
            raise ParameterError(f"need {self.m} exponents p_i, got {len(p_list)}")
        if any(not x >= 1 for x in p_list) or any(math.isinf(x) for x in p_list):
            raise ParameterError("each p_i must satisfy 1 <= p_i < inf")
        if not self.q > 0:
            raise ParameterError("q must be positive")
        alpha = self.alpha
        if isinstance(alpha, (list, tuple)):
            alpha = tuple(float(a) for a in alpha)
            if len(alpha) == 1 and self.k > 1:
                alpha = alpha * self.k
            if len(alpha) != self.k:
                raise ParameterError(f"need {self.k} orders alpha_s, got {len(alpha)}")
        else:
            alpha = (float(alpha),) * self.k
        for a in alpha:
            if not 0 <= a < self.m * self.n:
                raise ParameterError(f"order {a} outside [0, mn) = [0, {self.m * self.n})")
        object.__setattr__(self, "p_list", p_list)
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "alpha", alpha)

    @property
    def alphas(self):
        return self.alpha

    @property
    def a(self):
        """The single order when ``k = 1`` (or all orders agree)."""
        if len(set(self.alpha)) != 1:
            raise ParameterError("orders differ between factors")
        return self.alpha[0]

    @property
    def p(self):
        return 1.0 / sum(1.0 / x for x in self.p_list)

    @property
    def conjugates(self):
        return tuple(conjugate(x) for x in self.p_list)

    def gap(self, s=0):
        """``alpha_s/n + 1/q - 1/p``, the power of ``|Q|`` in the two-weight condition."""
        return self.alpha[s] / self.n + 1.0 / self.q - 1.0 / self.p

    @property
    def e(self):
        return self.gap(0)

    def sobolev_balanced(self, s=0):
        """Whether ``1/q = 1/p - alpha/n``."""
        return abs(1.0 / self.q - (1.0 / self.p - self.alpha[s] / self.n)) <= _EQ_TOL

    def replace(self, **kw):
        d = dict(n=self.n, m=self.m, p_list=self.p_list, q=self.q, alpha=self.alpha, k=self.k)
        d.update(kw)
        return ExponentConfig(**d)

    # theorem hypotheses -------------------------------------------------

    def violations(self, theorem):
        """Hypotheses of ``theorem`` that these exponents fail (empty when all hold)."""
        p, q, m, n = self.p, self.q, self.m, self.n
        bad = []

        def need(ok, text):
            if not ok:
                bad.append(text)

        strict_p = all(x > 1 for x in self.p_list)
        pos_alpha = all(0 < a < m * n for a in self.alpha)
        if theorem == "A":
            need(strict_p, "1 < p_i")
        elif theorem in ("B", "3.3"):
            need(strict_p, "1 < p_i")
            need(pos_alpha, "0 < alpha < mn")
            need(self.sobolev_balanced(), "1/q = 1/p - alpha/n")
            need(p < q, "p < q")
            if theorem == "B":
                need(1.0 / m < p < n / self.alpha[0], "1/m < p < n/alpha")
        elif theorem == "C":
            need(strict_p, "1 < p_i")
            need(pos_alpha, "0 < alpha < mn")
            need(1.0 / m < p <= q, "1/m < p <= q")
        elif theorem == "D":
            need(1.0 / m < p <= q, "1/m < p <= q")
        elif theorem == "E":
            need(strict_p, "1 < p_i")
            need(1.0 / m < p <= q, "1/m < p <= q")
        elif theorem == "F":
            need(strict_p, "1 < p_i")
            need(pos_alpha, "0 < alpha < mn")
            need(self.alpha[0] < n / p, "alpha < n/p")
            need(p < q, "p < q")
        elif theorem in ("3.1", "3.2"):
            need(strict_p, "1 < p_i")
            need(p < q, "p < q")
            need(pos_alpha, "0 < alpha < mn")
        elif theorem in ("3.4", "3.5", "3.6", "3.8"):
            need(strict_p, "1 < p_i")
            need(p < q, "p < q")
            need(pos_alpha, "0 < alpha_s < mn")
            if theorem != "3.5":
                need(self.k >= 2, "k >= 2")
        elif theorem == "3.7":
            need(strict_p, "1 < p_i")
            need(p < q, "p < q")
            need(pos_alpha, "0 < alpha < mn")
            need(len(set(self.alpha)) == 1, "equal orders in every factor")
            need(self.sobolev_balanced(), "1/q = 1/p - alpha/n")
        else:
            raise ParameterError(f"unknown theorem id {theorem!r}")
        return bad

    def to_dict(self):
        return {"n": self.n, "m": self.m, "k": self.k, "p": list(self.p_list),
                "q": self.q, "alpha": list(self.alpha), "p_total": self.p}

    @classmethod
    def from_dict(cls, d):
        alpha = d.get("alpha", 0.0)
        return cls(int(d.get("n", 1)), int(d.get("m", len(d["p"]))), tuple(d["p"]),
                   float(d["q"]), alpha, int(d.get("k", 1)))
