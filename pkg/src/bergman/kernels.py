"""Hand-coded closed-form Bergman kernel evaluators.

Every evaluator takes the unconjugated second point and conjugates it
internally, so ``K(p, q)`` computes K(p; q-bar): holomorphic in p,
anti-holomorphic in q.  Formulas are written against the generic scalar
helpers, so the same code path evaluates plain complex numbers, numpy
arrays (vectorised panels) and jets (derivative extraction).
"""

from __future__ import annotations

import cmath
from math import factorial, pi

import numpy as np

from .domains import (KIND_ELLIPSOID, KIND_POLYDISK, BaseDomain, DomainSpec,
                      LiftStep)
from .jets import (MAX_JET_ORDER, Jet, NonFiniteError, aconj, aexp, apow,
                   fresh_tag)


def _all_finite(v) -> bool:
    if isinstance(v, Jet):
        return all(_all_finite(c) for c in v.coeffs.values())
    if isinstance(v, np.ndarray):
        return bool(np.all(np.isfinite(v)))
    return cmath.isfinite(complex(v))


class Kernel:
    """Kernel evaluator contract.

    ``arity`` records the coordinate layout (n star, m passive, w blocks);
    lifts use it to align their weights.  ``domain`` is the DomainSpec the
    evaluator reproduces on, when known.
    """

    def __init__(self, fn, n: int, m: int = 0, w_dims=(), domain: DomainSpec | None = None,
                 name: str = "kernel"):
        self.fn = fn
        self.n = int(n)
        self.m = int(m)
        self.w_dims = tuple(int(k) for k in w_dims)
        self.domain = domain
        self.name = name

    @property
    def arity(self):
        return (self.n, self.m, self.w_dims)

    @property
    def dim(self) -> int:
        return self.n + self.m + sum(self.w_dims)

    def star_indices(self) -> list:
        idx = list(range(self.n))
        start = self.n + self.m
        for k in self.w_dims:
            idx.extend(range(start, start + k))
            start += k
        return idx

    def __call__(self, p, q, q_conjugated: bool = False):
        p = tuple(p)
        q = tuple(q)
        if len(p) != self.dim or len(q) != self.dim:
            raise ValueError(f"{self.name}: expected {self.dim} coordinates")
        cq = q if q_conjugated else tuple(aconj(c) for c in q)
        try:
            val = self.fn(p, cq)
        except (ZeroDivisionError, OverflowError) as e:
            raise NonFiniteError(f"{self.name} overflowed: {e}") from None
        if not _all_finite(val):
            raise NonFiniteError(f"{self.name} overflowed (value not finite)")
        return val

    def diagonal(self, p) -> float:
        """K(p; p-bar); real and positive on the interior."""
        v = self(p, p)
        return float(np.real(v)) if isinstance(v, np.ndarray) else complex(v).real

    def with_arity(self, n: int, m: int, w_dims=()) -> "Kernel":
        k = Kernel(self.fn, n, m, w_dims, domain=self.domain, name=self.name)
        if k.dim != self.dim:
            raise ValueError("arity change must preserve the dimension")
        return k

    def scaled(self, factor: float) -> "Kernel":
        """Pointwise multiple (test probe for reproducing-property drift)."""
        return Kernel(lambda p, cq: factor * self.fn(p, cq), self.n, self.m,
                      self.w_dims, domain=self.domain, name=f"{factor}*{self.name}")

    def __repr__(self):  # pragma: no cover
        return f"Kernel({self.name}, arity={self.arity})"


def _dot(ps, cqs):
    s = 0.0
    for a, b in zip(ps, cqs):
        s = s + a * b
    return s


# ---------------------------------------------------------------------------
# closed forms


def ball_spec(dim: int, n_star: int | None = None) -> DomainSpec:
    n = dim if n_star is None else n_star
    return DomainSpec(BaseDomain(KIND_ELLIPSOID, n, dim - n, (1.0,) * dim))


def kernel_ball(dim: int, n_star: int | None = None) -> Kernel:
    """Unit-ball kernel dim!/pi^dim * (1 - <z,zeta>)^-(dim+1)."""
    if dim < 1:
        raise ValueError("ball dimension must be at least 1")
    c = factorial(dim) / pi ** dim
    e = -(dim + 1)

    def fn(p, cq):
        return c * apow(1.0 - _dot(p, cq), e)

    n = dim if n_star is None else n_star
    return Kernel(fn, n=n, m=dim - n, domain=ball_spec(dim, n_star),
                  name=f"ball{dim}")


def egg_spec(n: int, p: float, m: int = 1) -> DomainSpec:
    """Domain ||z||^{2p} + ||w||^2 < 1 with z in C^n, w in C^m.

    For n = 1 the base carries the exponent p itself (so the defining
    function is |z|^{2p}/(1-||w||^2) - 1); for n > 1 the base is the unit
    ball and the lift weights are 1/p.
    """
    if n == 1:
        base = BaseDomain(KIND_ELLIPSOID, 1, 0, (float(p),))
    else:
        base = BaseDomain(KIND_ELLIPSOID, n, 0, (1.0,) * n)
    return DomainSpec(base, (LiftStep("U", (1.0 / p,) * n, m),))


def kernel_egg_inflated(n: int, m: int, p: float) -> Kernel:
    """Kernel on ||z||^{2p} + ||w||^2 < 1: the scalar-w formula with the
    (m-1)-fold derivative in t = <w,eta> taken by a jet in t."""
    if n < 1 or m < 1 or p <= 0:
        raise ValueError("need n >= 1, m >= 1, p > 0")
    if m - 1 > MAX_JET_ORDER:
        raise ValueError(f"inflation order {m - 1} beyond jet support")
    pref = factorial(n) / (pi ** (m + n) * p)
    ip = 1.0 / p

    def core(t, s):
        u = apow(1.0 - t, ip)
        num = (n + p) * u + (1.0 - p) * s
        return num * apow(1.0 - t, -(2.0 - ip)) * apow(u - s, -(n + 2))

    def fn(pt, cq):
        s = _dot(pt[:n], cq[:n])
        t = _dot(pt[n:], cq[n:])
        if m == 1:
            return pref * core(t, s)
        tj = Jet.variable(t, 0, order=m - 1, nvars=1, tag=fresh_tag())
        jet = core(tj, s)
        if not isinstance(jet, Jet) or jet.tag != tj.tag:
            raise NonFiniteError("inflation jet collapsed unexpectedly")
        return pref * jet.derivative((m - 1,))

    return Kernel(fn, n=n, m=0, w_dims=(m,), domain=egg_spec(n, p, m),
                  name=f"egg(n={n},m={m},p={p})")


def kernel_egg(n: int, p: float) -> Kernel:
    """Kernel on ||z||^{2p} + |w|^2 < 1 (scalar w)."""
    return kernel_egg_inflated(n, 1, p)


def ball_disk_lift_spec(n: int, m: int) -> DomainSpec:
    return DomainSpec(BaseDomain(KIND_ELLIPSOID, n, m, (1.0,) * (n + m)),
                      (LiftStep("U", (1.0,) * n, 1),))


def kernel_ball_disk_lift(n: int, m: int) -> Kernel:
    """Kernel on the unit-weight disk-fibered lift of the ball B^{n+m}:
    {|w| < 1, ||z||^2 + ||z'||^2 + |w|^2 < 1 + |w|^2 ||z'||^2}."""
    if n < 1 or m < 0:
        raise ValueError("need n >= 1, m >= 0")
    c = factorial(m + n) / pi ** (m + n + 1)
    e = -(m + n + 2)

    def fn(pt, cq):
        sz = _dot(pt[:n], cq[:n])
        sp = _dot(pt[n:n + m], cq[n:n + m])
        t = pt[-1] * cq[-1]
        den = 1.0 - t - sz - sp + t * sp
        num = apow(1.0 - t, m) * ((n + 1) - (n + 1) * sp + m * sz * apow(1.0 - t, -1))
        return c * num * apow(den, e)

    return Kernel(fn, n=n, m=m, w_dims=(1,), domain=ball_disk_lift_spec(n, m),
                  name=f"ball_disk_lift(n={n},m={m})")


def ball_exp_lift_spec(n: int, m: int, gamma) -> DomainSpec:
    return DomainSpec(BaseDomain(KIND_ELLIPSOID, n, m, (1.0,) * (n + m)),
                      (LiftStep("V", tuple(gamma), 1),))


def kernel_ball_exp_lift(n: int, m: int, gamma) -> Kernel:
    """Kernel on sum_j e^{gamma_j |w|^2} |z_j|^2 + ||z'||^2 < 1."""
    gamma = tuple(float(g) for g in gamma)
    if len(gamma) != n:
        raise ValueError("need one weight per star coordinate")
    c = factorial(m + n) / pi ** (m + n + 1)
    G = sum(gamma)

    def fn(pt, cq):
        t = pt[-1] * cq[-1]
        sp = _dot(pt[n:n + m], cq[n:n + m])
        rho = 1.0 - sp
        cross = 0.0
        for j, g in enumerate(gamma):
            zz = pt[j] * cq[j]
            eg = aexp(g * t)
            rho = rho - eg * zz
            cross = cross + g * eg * zz
        return c * aexp(G * t) * (G * apow(rho, -(m + n + 1))
                                  + (m + n + 1) * cross * apow(rho, -(m + n + 2)))

    return Kernel(fn, n=n, m=m, w_dims=(1,), domain=ball_exp_lift_spec(n, m, gamma),
                  name=f"ball_exp_lift(n={n},m={m},gamma={gamma})")


def chain_stage_spec(stage: int, p: float = 2.0, p2: float = 1.5, p3: float = 2.5) -> DomainSpec:
    """The iterated-lift chain of domains starting from the unit disk.

    stage 1: |z1|^2 < 1
    stage 2: |z1|^{2p} + |z2|^2 < 1
    stage 3: |z1|^{2p} + e^{|z3|^2} |z2|^2 < 1
    stage 4: |z1|^{2p} + exp(|z3|^2/(1-|z4|^2)^{p2}) |z2|^2 < 1, |z4| < 1
    stage 5: stage 4 with |z1|^{2p}/(1-|z5|^2)^{p3}, |z5| < 1
    stage 6: stage 5 with |z5|^2 replaced by e^{|z6|^2} |z5|^2
    """
    base = BaseDomain(KIND_ELLIPSOID, 1, 0, (float(p),))
    steps = [
        LiftStep("U", (1.0 / p,), 1),
        LiftStep("V", (0.0, 1.0), 1),
        LiftStep("U", (0.0, 0.0, p2), 1),
        LiftStep("U", (p3 / p, 0.0, 0.0, 0.0), 1),
        LiftStep("V", (0.0, 0.0, 0.0, 0.0, 1.0), 1),
    ]
    if not 1 <= stage <= 6:
        raise ValueError("stage must be 1..6")
    return DomainSpec(base, tuple(steps[: stage - 1]))


def kernel_chain_stage3(p: float = 2.0) -> Kernel:
    """Three-term kernel on |z1|^{2p} + e^{|z3|^2} |z2|^2 < 1."""
    if p <= 0:
        raise ValueError("p must be positive")
    ip = 1.0 / p

    def fn(pt, cq):
        s = pt[0] * cq[0]               # z1 zeta1-bar
        ew = aexp(pt[2] * cq[2])        # e^{z3 zeta3-bar}
        x = ew * (pt[1] * cq[1])        # e^{...} z2 zeta2-bar
        u = apow(1.0 - x, ip)
        d3 = apow(u - s, -3)
        t1 = ((1.0 + p) * u + (1.0 - p) * s) * apow(1.0 - x, -(2.0 - ip)) * d3
        t2 = ((p - 1.0) * x * ((2.0 + 2.0 * ip) * u - (2.0 - ip) * s)
              * apow(1.0 - x, -(3.0 - ip)) * d3)
        t3 = (3.0 * ip * x * ((1.0 + p) * u + (1.0 - p) * s)
              * apow(1.0 - x, -(3.0 - 2.0 * ip)) * apow(u - s, -4))
        return ew / (pi ** 3 * p) * (t1 + t2 + t3)

    return Kernel(fn, n=1, m=0, w_dims=(1, 1), domain=chain_stage_spec(3, p),
                  name=f"chain_stage3(p={p})")


def polydisk_spec(dim: int) -> DomainSpec:
    return DomainSpec(BaseDomain(KIND_POLYDISK, dim, 0))


def kernel_polydisk(dim: int) -> Kernel:
    c = 1.0 / pi ** dim

    def fn(p, cq):
        out = c
        for a, b in zip(p, cq):
            out = out * apow(1.0 - a * b, -2)
        return out

    return Kernel(fn, n=dim, m=0, domain=polydisk_spec(dim), name=f"polydisk{dim}")


def kernel_product(a: Kernel, b: Kernel) -> Kernel:
    """Kernel on the Cartesian product domain: the pointwise product."""
    da = a.dim

    def fn(p, cq):
        return a.fn(p[:da], cq[:da]) * b.fn(p[da:], cq[da:])

    domain = None
    if (a.domain is not None and b.domain is not None
            and not a.domain.lifts and not b.domain.lifts):
        parts = []
        for k in (a.domain, b.domain):
            if k.base.kind == KIND_POLYDISK or k.base.dim == 1:
                parts.append(k.base.dim)
            else:
                parts = None
                break
        if parts is not None:
            domain = polydisk_spec(sum(parts))
    return Kernel(fn, n=a.dim + b.dim, m=0, domain=domain,
                  name=f"({a.name})x({b.name})")


# ---------------------------------------------------------------------------
# recognition: DomainSpec -> hand-coded closed form, when one exists


def closed_form_for(spec: DomainSpec) -> Kernel | None:
    """Return the hand-coded kernel for specs whose kernel has a hand-coded closed form."""
    b = spec.base
    if not spec.lifts:
        if b.kind == KIND_POLYDISK:
            k = kernel_polydisk(b.dim)
            return k.with_arity(b.n_star, b.m_passive)
        non_unit = [(j, p) for j, p in enumerate(b.exponents) if p != 1.0]
        if not non_unit:
            return kernel_ball(b.dim, b.n_star)
        if b.dim == 1:
            # any exponent describes the same set, the unit disk
            k = kernel_ball(1)
            return Kernel(k.fn, b.n_star, b.m_passive, domain=spec, name=k.name)
        if len(non_unit) == 1 and non_unit[0][0] == 0:
            k = kernel_egg_inflated(1, b.dim - 1, non_unit[0][1])
            return Kernel(k.fn, b.n_star, b.m_passive, domain=spec, name=k.name)
        return None
    if len(spec.lifts) == 1 and b.kind == KIND_ELLIPSOID:
        step = spec.lifts[0]
        ball_base = all(p == 1.0 for p in b.exponents)
        if step.kind == "V" and step.w_dim == 1 and ball_base:
            return kernel_ball_exp_lift(b.n_star, b.m_passive, step.weights)
        if step.kind == "U":
            if ball_base and all(w == 1.0 for w in step.weights) and step.w_dim == 1:
                return kernel_ball_disk_lift(b.n_star, b.m_passive)
            uniform = len(set(step.weights)) == 1 and step.weights[0] > 0
            if ball_base and b.m_passive == 0 and uniform:
                return kernel_egg_inflated(b.n_star, step.w_dim,
                                               1.0 / step.weights[0])
            if (b.dim == 1 and uniform and b.exponents[0] == 1.0 / step.weights[0]):
                k = kernel_egg_inflated(1, step.w_dim, b.exponents[0])
                return Kernel(k.fn, k.n, k.m, k.w_dims, domain=spec, name=k.name)
    if len(spec.lifts) == 2 and b.kind == KIND_ELLIPSOID and b.dim == 1:
        s1, s2 = spec.lifts
        if (s1.kind == "U" and s1.w_dim == 1 and s2.kind == "V" and s2.w_dim == 1
                and s2.weights == (0.0, 1.0) and s1.weights[0] > 0
                and b.exponents[0] == 1.0 / s1.weights[0]):
            return kernel_chain_stage3(b.exponents[0])
    return None
