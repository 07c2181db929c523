"""Independent ground truth for kernel evaluators.

Monomials form a complete orthogonal system on every constructible domain
(they are all complete Reinhardt), so the kernel is the monomial series
with squared-norm denominators.  Norms are computed by polar reduction to
the shadow (each coordinate contributes pi and a radial factor) and honest
quadrature of the reduced integrals; the weighted-simplex blocks coming
from disk-fibered lift steps are integrated numerically, never through the
rising-factorial identity those lifts are proved with.  (Weighted phi
systems for non-Reinhardt bases are not needed here and are not modelled.)

The reproducing-property integral is done in polar form as well: trapezoid
(FFT-binned) angular quadrature, which is spectrally exact for the kernel's
truncated angular spectrum, times nested Gauss-Legendre radial quadrature
over the shadow; stratified Monte Carlo covers higher dimensions.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .domains import (DEFAULT_W_RADIUS, DomainSpec, SpecError, box_radii,
                      contains, sample_interior, shadow_contains)
from .jets import compensated_sum, pochhammer

DEFAULT_QUAD_W_RADIUS = 4.5


class IntegrationError(RuntimeError):
    """Quadrature or Monte Carlo failed to reach a usable estimate."""


class ConvergenceError(RuntimeError):
    """Series shells stopped decaying (point too close to the boundary)."""


# ---------------------------------------------------------------------------
# 1-d building blocks


@lru_cache(maxsize=16)
def _de_rule(level: int):
    """tanh-sinh nodes/weights on (0, 1); returns (u, 1-u, w).

    The 1-u column is computed stably so endpoint-weighted integrands
    (1-u)^s u^c lose no precision.
    """
    h = 0.5 ** level
    tmax = 3.8
    t = np.arange(-tmax, tmax + h / 2, h)
    x = 0.5 * math.pi * np.sinh(t)
    u = 1.0 / (1.0 + np.exp(-2.0 * x))
    um1 = 1.0 / (1.0 + np.exp(2.0 * x))
    w = h * math.pi * np.cosh(t) * u * um1
    keep = (u > 0.0) & (um1 > 0.0) & (w > 1e-300)
    return u[keep], um1[keep], w[keep]


def _de_integrate(f, rel_tol: float = 1e-11, max_level: int = 8):
    """Adaptive tanh-sinh integral of f over (0,1); f(u, 1-u) vectorised."""
    prev = None
    for level in range(3, max_level + 1):
        u, um1, w = _de_rule(level)
        val = float(np.sum(w * f(u, um1)))
        if prev is not None:
            err = abs(val - prev)
            if err <= rel_tol * max(abs(val), 1e-300):
                return val, err
        prev = val
    return val, abs(val - prev) if prev is not None else abs(val)


@lru_cache(maxsize=64)
def _gl_rule(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def adaptive_gl(f, lo: float, hi: float, rel_tol: float = 1e-9,
                n0: int = 16, max_nodes: int = 1 << 14):
    """Gauss-Legendre integral of a vectorised f on [lo, hi] with node
    doubling until the last refinement moves the value below rel_tol."""
    span = hi - lo
    prev = None
    n = n0
    while True:
        x, w = _gl_rule(n)
        val = span * float(np.sum(w * f(lo + span * x)))
        if prev is not None and abs(val - prev) <= rel_tol * max(abs(val), 1e-300):
            return val, abs(val - prev)
        if 2 * n > max_nodes:
            return val, abs(val - prev) if prev is not None else abs(val)
        prev = val
        n *= 2


# ---------------------------------------------------------------------------
# weighted simplex blocks


def _fast_pow(base, e: float):
    if e == 0.0:
        return None                      # multiplicative identity
    if e == 1.0:
        return base
    if e == 2.0:
        return base * base
    if e == 3.0:
        return base * base * base
    return base ** e


def _simplex_nested(s: float, cs, level: int) -> float:
    """Nested tanh-sinh evaluation of the weighted simplex integral
    int_{sum r_j < 1, r >= 0} (1 - sum r)^s prod r_j^{c_j} dr."""
    u, um1, w = _de_rule(level)

    def rec(j, budgets):
        if j == len(cs):
            out = _fast_pow(budgets, s)
            return np.ones_like(budgets) if out is None else out
        rest = rec(j + 1, budgets[..., None] * um1)
        rc = _fast_pow(budgets[..., None] * u, cs[j])
        term = w * rest if rc is None else w * rc * rest
        return budgets * np.sum(term, axis=-1)

    return float(rec(0, np.asarray(1.0)))


def simplex_weighted_integral(s: float, c, rel_tol: float = 1e-10):
    """Quadrature value of int_{B^k_+} (1-sum r)^s r^c dV with an error
    estimate.  Fully nested for k <= 3; k = 4 peels one coordinate with the
    exact scaling substitution r_j -> (1-r_k) t_j first.  Cached: norm
    tables reuse the same factor integrals across monomials."""
    return _simplex_weighted_cached(float(s), tuple(float(x) for x in c),
                                    float(rel_tol))


@lru_cache(maxsize=65536)
def _simplex_weighted_cached(s: float, c, rel_tol: float):
    k = len(c)
    if k == 0:
        return 1.0, 0.0
    if any(x <= -1.0 for x in c):
        raise IntegrationError("non-integrable radial exponent")
    if s < 0:
        raise IntegrationError("negative simplex weight exponent")
    if k <= 3:
        # tensor size grows like nodes^k: cap the refinement for k = 3
        # (level 5 reaches machine precision on every block family here)
        top = 8 if k <= 2 else 6
        prev = None
        for level in range(4, top):
            val = _simplex_nested(s, c, level)
            if prev is not None and abs(val - prev) <= rel_tol * max(abs(val), 1e-300):
                return val, abs(val - prev)
            prev = val
        return val, abs(val - prev)
    if k > 4:
        raise IntegrationError("weighted simplex supported up to dimension 4")
    inner, ie = simplex_weighted_integral(s, c[:-1], rel_tol)
    # outer factor: int_0^1 r^{c_k} (1-r)^{s + sum_{j<k}(c_j+1)} dr
    e = s + sum(x + 1.0 for x in c[:-1])
    outer, oe = _de_integrate(lambda u, um1: u ** c[-1] * um1 ** e)
    val = inner * outer
    return val, abs(val) * (ie / max(abs(inner), 1e-300) + oe / max(abs(outer), 1e-300))


def dirichlet_identity_check(s: float, c, k: int):
    """Both sides of the weighted-simplex moment identity: the quadrature
    value and the closed form pi^k * prod c_j! / (1+s)_{(sum c)+k}."""
    c = tuple(int(x) for x in c)
    if len(c) != k:
        raise ValueError("need one exponent per coordinate")
    if k < 1 or k > 4:
        raise ValueError("k must be 1..4")
    quad, _ = simplex_weighted_integral(float(s), c)
    quad *= math.pi ** k
    closed = math.pi ** k
    for cj in c:
        closed *= math.factorial(cj)
    closed /= pochhammer(1.0 + s, sum(c) + k)
    return quad, closed


# ---------------------------------------------------------------------------
# monomial norms


@dataclass(frozen=True)
class NormEntry:
    value: float
    error: float
    method: str


@lru_cache(maxsize=65536)
def _monomial_1d(a: float):
    return adaptive_gl(lambda u: u ** a, 0.0, 1.0)


def _base_shadow_integral(spec: DomainSpec, a, rel_tol: float = 1e-10,
                          mc_samples: int = 10 ** 6, seed: int = 0):
    """int over the base shadow of prod x^{a_j} dx (no pi factors)."""
    base = spec.base
    if base.kind == "Polydisk":
        val, err = 1.0, 0.0
        for aj in a:
            v, e = _monomial_1d(float(aj))
            err = abs(val * v) * (err / max(abs(val), 1e-300) + e / max(abs(v), 1e-300))
            val *= v
        return val, err, "quadrature"
    if base.dim <= 3:
        cs = tuple((aj + 1.0) / pj - 1.0 for aj, pj in zip(a, base.exponents))
        val, err = simplex_weighted_integral(0.0, cs, rel_tol)
        scale = 1.0
        for pj in base.exponents:
            scale /= pj
        return scale * val, scale * err, "quadrature"
    val, err = _stratified_mc_shadow(spec.truncated(0), a, mc_samples, seed)
    return val, err, "monte-carlo"


def _stratified_mc_shadow(spec: DomainSpec, a, samples: int, seed: int):
    """Stratified MC estimate of the shadow moment integral; strata are
    equal slabs of the first shadow coordinate."""
    dim = spec.dim
    caps = np.array([r * r for r in box_radii(spec, DEFAULT_W_RADIUS)])
    strata = 8
    per = max(1, samples // strata)
    total = 0.0
    var = 0.0
    for sidx in range(strata):
        rng = np.random.Generator(np.random.Philox(key=np.uint64(seed),
                                                   counter=(sidx + 1) * (1 << 70)))
        x = rng.uniform(0.0, 1.0, size=(per, dim)) * caps
        x[:, 0] = caps[0] * (sidx + rng.uniform(0.0, 1.0, size=per)) / strata
        inside = shadow_contains(spec, x)
        f = np.prod(x ** np.asarray(a, dtype=float), axis=1) * inside
        slab_vol = float(np.prod(caps)) / strata
        total += slab_vol * float(np.mean(f))
        var += (slab_vol ** 2) * float(np.var(f)) / per
    return total, math.sqrt(var)


def monomial_norm_full(spec: DomainSpec, idx, rel_tol: float = 1e-10) -> NormEntry:
    """Squared L2 norm of the monomial with exponent vector idx, with an
    error estimate and the method tag."""
    idx = tuple(int(i) for i in idx)
    if len(idx) != spec.dim:
        raise SpecError("monomial index arity mismatch")
    if any(i < 0 for i in idx):
        raise SpecError("monomial exponents must be nonnegative")
    value = math.pi ** spec.dim
    rel_err = 0.0
    method = "quadrature"
    for i in range(len(spec.lifts) - 1, -1, -1):
        step = spec.lifts[i]
        stars = spec.star_indices(i)
        c = tuple(idx[j] for j in range(spec.w_slice(i).start, spec.w_slice(i).stop))
        s = sum(wt * (idx[j] + 1.0) for j, wt in zip(stars, step.weights))
        if step.kind == "U":
            f, fe = simplex_weighted_integral(s, c, rel_tol)
            value *= f
            rel_err += fe / max(abs(f), 1e-300)
        else:
            if s <= 0.0:
                raise IntegrationError("plane-fibered block is not integrable")
            # Gaussian radial moments: int_0^inf e^{-s r} r^c dr = c!/s^{c+1}
            for cj in c:
                value *= math.factorial(cj) / s ** (cj + 1)
    a = idx[: spec.base.dim]
    f, fe, method = _base_shadow_integral(spec, a, rel_tol)
    value *= f
    rel_err += fe / max(abs(f), 1e-300)
    if value <= 0.0 or not math.isfinite(value):
        raise IntegrationError(f"norm integral collapsed for index {idx}")
    if method == "monte-carlo" and rel_err > 0.1:
        raise IntegrationError(
            f"Monte Carlo variance above tolerance for index {idx} "
            f"(relative standard error {rel_err:.2e})")
    return NormEntry(value=value, error=abs(value) * rel_err, method=method)


def monomial_norm(spec: DomainSpec, idx) -> float:
    return monomial_norm_full(spec, idx).value


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


class NormTable:
    """Monomial squared norms for one spec, lexicographically assembled."""

    def __init__(self, spec: DomainSpec | None, entries: dict):
        self.spec = spec
        self.entries = entries

    @classmethod
    def build(cls, spec: DomainSpec, degree_cap: int) -> "NormTable":
        entries = {}
        for deg in range(degree_cap + 1):
            for idx in _compositions(deg, spec.dim):
                entries[idx] = monomial_norm_full(spec, idx)
        return cls(spec, entries)

    def norm(self, idx) -> float:
        return self.entries[tuple(idx)].value

    def degree_cap(self) -> int:
        return max(sum(i) for i in self.entries)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f)
            w.writerow(["index", "value", "error", "method"])
            for idx in sorted(self.entries):
                e = self.entries[idx]
                w.writerow([" ".join(str(i) for i in idx),
                            f"{e.value:.17g}", f"{e.error:.17g}", e.method])

    @classmethod
    def from_csv(cls, path, spec: DomainSpec | None = None) -> "NormTable":
        entries = {}
        with open(path, "r", encoding="utf-8", newline="") as f:
            r = csv.reader(f)
            header = next(r)
            if header != ["index", "value", "error", "method"]:
                raise SpecError("unrecognized norm table header")
            for row in r:
                idx = tuple(int(t) for t in row[0].split())
                entries[idx] = NormEntry(float(row[1]), float(row[2]), row[3])
        return cls(spec, entries)


@lru_cache(maxsize=64)
def get_norm_table(spec: DomainSpec, degree_cap: int) -> NormTable:
    return NormTable.build(spec, degree_cap)


# ---------------------------------------------------------------------------
# monomial series evaluation


@dataclass
class SeriesValue:
    value: complex
    tail_bound: float
    cap_used: int
    shells: list

    def __complex__(self):
        return complex(self.value)


def series_kernel(spec: DomainSpec, p, q, degree_cap: int,
                  table: NormTable | None = None,
                  shell_tol: float = 1e-9) -> SeriesValue:
    """Kernel value as the monomial series sum (p q-bar)^a / ||.||^2.

    Shells are grouped by total degree and accumulated with compensated
    summation; the reported tail bound extrapolates the last two shells
    geometrically.  Points whose shells stop decaying raise
    ConvergenceError.
    """
    p = tuple(complex(c) for c in p)
    q = tuple(complex(c) for c in q)
    if len(p) != spec.dim or len(q) != spec.dim:
        raise SpecError("point arity mismatch")
    if degree_cap < 0:
        raise SpecError("degree cap must be nonnegative")
    if table is None:
        table = get_norm_table(spec, degree_cap)
    zq = [pj * qj.conjugate() for pj, qj in zip(p, q)]
    pows = [[1.0 + 0j] for _ in zq]
    for j, b in enumerate(zq):
        for _ in range(degree_cap):
            pows[j].append(pows[j][-1] * b)
    shells = []
    running = 0j
    cap_used = degree_cap
    for deg in range(degree_cap + 1):
        terms = []
        for idx in _compositions(deg, spec.dim):
            t = 1.0 + 0j
            for j, e in enumerate(idx):
                t *= pows[j][e]
            terms.append(t / table.norm(idx))
        shell = compensated_sum(terms)
        shells.append(shell)
        running += shell
        if deg >= 2 and abs(shells[-1]) < shell_tol * abs(running) \
                and abs(shells[-2]) < shell_tol * abs(running):
            cap_used = deg
            break
    mags = [abs(s) for s in shells]
    tail = 0.0
    if len(mags) >= 2 and mags[-1] > 0.0:
        ratio = mags[-1] / mags[-2] if mags[-2] > 0.0 else math.inf
        if ratio < 1.0:
            tail = mags[-1] * ratio / (1.0 - ratio)
        elif mags[-1] > shell_tol * max(abs(running), 1e-300):
            raise ConvergenceError(
                "series shells are not decaying; point too close to the boundary")
        else:
            tail = mags[-1]
    value = compensated_sum(shells)
    return SeriesValue(value=value, tail_bound=tail, cap_used=cap_used,
                       shells=shells)


# ---------------------------------------------------------------------------
# reproducing-property integral


def _radial_order(spec: DomainSpec):
    """Integration order for nested radial bounds: w blocks, then passive,
    then star coordinates (bounds of later coordinates shrink first)."""
    base = spec.base
    order = list(range(base.dim, spec.dim))
    order += list(range(base.n_star, base.dim))
    order += list(range(base.n_star))
    return order


def _nested_bounds(spec: DomainSpec, order, filled: np.ndarray, j: int,
                   cap: float) -> np.ndarray:
    """Largest admissible squared modulus of coordinate order[j], given the
    squared moduli filled for order[:j] and zeros elsewhere (valid because
    every domain here is a lower set in the shadow)."""
    n = len(filled)
    lo = np.zeros(n)
    hi = np.full(n, cap)
    coord = order[j]
    x = np.zeros((n, spec.dim))
    x[:, [order[i] for i in range(j)]] = filled[:, :j] if j else 0.0
    for _ in range(52):
        mid = 0.5 * (lo + hi)
        x[:, coord] = mid
        inside = shadow_contains(spec, x)
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return lo


def reproducing_integral(K, spec: DomainSpec, indices, p,
                         n_rad: int = 14, n_rad_check: int = 10,
                         n_ang: int = 24, w_radius: float = DEFAULT_QUAD_W_RADIUS,
                         chunk: int = 256):
    """Deterministic polar-quadrature values of int K(p; q-bar) q^idx dV(q)
    for every index in ``indices``; returns ({idx: value}, {idx: err}).

    Radial: nested Gauss-Legendre over the shadow with bisected bounds
    (plane-fibered w coordinates get a logarithmic map for their Gaussian
    decay).  Angular: trapezoid rule, binned with an FFT; exact for the
    kernel's angular spectrum below the grid size, with aliasing controlled
    by series decay.  The error estimate combines a coarser radial pass
    with the half-grid angular bins.  Supported up to 3 coordinates.
    """
    d = spec.dim
    if d > 3:
        raise IntegrationError("polar quadrature supported up to 3 coordinates")
    if n_ang % 4:
        raise ValueError("angular grid size must be a multiple of 4")
    indices = [tuple(int(i) for i in idx) for idx in indices]
    if any(len(idx) != d for idx in indices):
        raise SpecError("index arity mismatch")
    if max((max(idx) for idx in indices), default=0) >= n_ang // 4:
        raise IntegrationError("angular grid too coarse for the requested index")
    full, full_half = _polar_pass(K, spec, indices, p, n_rad, n_ang,
                                  w_radius, chunk)
    check, _ = _polar_pass(K, spec, indices, p, n_rad_check, n_ang,
                           w_radius, chunk)
    errs = {idx: abs(full[idx] - check[idx]) + abs(full[idx] - full_half[idx])
            for idx in indices}
    return full, errs


def _polar_pass(K, spec, indices, p, n_rad, n_ang, w_radius, chunk):
    order = _radial_order(spec)
    caps = [r * r for r in box_radii(spec, w_radius)]
    gx, gw = _gl_rule(n_rad)
    d = spec.dim
    # tensor radial grid (squared moduli) with nested bounds; unbounded
    # plane-fibered coordinates bisect to the truncation cap (the Gaussian
    # weight leaves a tail below 1e-6 of scale at the default radius)
    filled = np.zeros((1, 0))
    weights = np.ones(1)
    for j in range(d):
        b = _nested_bounds(spec, order, filled, j, caps[order[j]])
        x = b[:, None] * gx
        w = b[:, None] * gw
        filled = np.concatenate(
            [np.repeat(filled, n_rad, axis=0), x.reshape(-1, 1)], axis=1)
        weights = (weights[:, None] * w).reshape(-1)
    radii = np.sqrt(filled)            # (N, d) in integration order
    # dA = (1/2) dx dtheta per coordinate; the angular mean contributes 2*pi
    weights = weights * math.pi ** d
    theta = 2.0 * math.pi * np.arange(n_ang) / n_ang
    phase = np.exp(1j * theta)
    inv = np.empty(d, dtype=int)
    for pos, coord in enumerate(order):
        inv[coord] = pos
    totals = {idx: 0j for idx in indices}
    totals_half = {idx: 0j for idx in indices}
    pt = tuple(complex(c) for c in p)
    axes = tuple(range(1, d + 1))
    half = (slice(None),) + (slice(None, None, 2),) * d
    for start in range(0, len(radii), chunk):
        rr = radii[start:start + chunk]
        ww = weights[start:start + chunk]
        B = len(rr)
        qs = []
        for coord in range(d):
            ph = phase.reshape([1] * (1 + coord) + [n_ang] + [1] * (d - 1 - coord))
            qs.append(rr[:, inv[coord]].reshape([B] + [1] * d) * ph)
        kv = K(pt, tuple(qs))
        kv = np.broadcast_to(kv, [B] + [n_ang] * d)
        bins = np.fft.ifftn(kv, axes=axes)
        bins_half = np.fft.ifftn(kv[half], axes=axes)
        for idx in indices:
            mono = np.ones(B)
            for coord, e in enumerate(idx):
                if e:
                    mono = mono * rr[:, inv[coord]] ** e
            wm = ww * mono
            totals[idx] += complex(np.sum(wm * bins[(slice(None),) + idx]))
            totals_half[idx] += complex(np.sum(wm * bins_half[(slice(None),) + idx]))
    return totals, totals_half


def stratified_mc_reproducing(K, spec: DomainSpec, idx, p, samples: int = 10 ** 6,
                              seed: int = 11, w_radius: float = 3.5):
    """Stratified Monte Carlo value of the reproducing integral with its
    standard error: strata are equal batches of the Philox stream over the
    first coordinate's slab decomposition."""
    idx = tuple(int(i) for i in idx)
    res = sample_interior(spec, samples, seed=seed, w_radius=w_radius,
                          max_draws=10 ** 8)
    pts = res.points
    vol = res.volume_estimate
    q = [pts[:, j] for j in range(spec.dim)]
    kv = np.asarray(K(tuple(complex(c) for c in p), tuple(q)))
    mono = np.ones(len(pts), dtype=complex)
    for j, e in enumerate(idx):
        if e:
            mono *= pts[:, j] ** e
    f = kv * mono
    mean = complex(np.mean(f))
    sigma = float(np.std(f)) / math.sqrt(len(pts))
    return vol * mean, vol * sigma


def reproducing_check(K, spec: DomainSpec, idx, p, method: str = "auto",
                      **kwargs) -> float:
    """Relative residual |int K(p; q-bar) q^idx dV - p^idx| /
    max(|p^idx|, 1e-6)."""
    idx = tuple(int(i) for i in idx)
    p = tuple(complex(c) for c in p)
    if not contains(spec, p):
        raise SpecError("reproducing check needs an interior point")
    if method == "auto":
        method = "quadrature" if spec.dim <= 3 else "mc"
    if method == "quadrature":
        vals, _ = reproducing_integral(K, spec, [idx], p, **kwargs)
        integral = vals[idx]
    elif method == "mc":
        integral, _ = stratified_mc_reproducing(K, spec, idx, p, **kwargs)
    else:
        raise ValueError(f"unknown method {method!r}")
    target = 1.0 + 0j
    for pj, e in zip(p, idx):
        target *= pj ** e
    return abs(integral - target) / max(abs(target), 1e-6)
