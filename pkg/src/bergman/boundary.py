"""Boundary stratification, admissible approach paths and weighted limits.

The boundary of a single U-step domain splits into four parts: smooth
strongly pseudoconvex points (S1), smooth points with degenerate star
gradient (S2), and the two ||w|| = 1 faces, off (S3) or on (S4) the base
boundary.  Weighted diagonal kernel values converge along admissible paths
with the stratum's weight:

  S2: (-r)^(n+m+1)      S3: (1-|w|^2)^(2+sum(alpha))      S4: their product

and for a single V-step domain at a degenerate-gradient point the weight is
(-rho)^(n+m+1) with rho the composed defining function.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .domains import DomainSpec, SpecError, contains, defining_function
from .jets import NonFiniteError


class BoundaryError(ValueError):
    """Point/stratum/weight combination the probes cannot honor."""


class Stratum(enum.Enum):
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    S4 = "S4"


def _single_lift(spec: DomainSpec, kinds=("U",)):
    if len(spec.lifts) != 1 or spec.lifts[0].kind not in kinds or spec.lifts[0].w_dim != 1:
        raise BoundaryError("boundary probes need a single scalar-w lift")
    return spec.lifts[0]


def _base_r_at(spec: DomainSpec, z_sq, zp_sq) -> float:
    base = spec.base
    if base.kind != "GeneralizedComplexEllipsoid":
        raise BoundaryError("boundary probes need an ellipsoid base")
    r = -1.0
    for x, p in zip(list(z_sq) + list(zp_sq), base.exponents):
        r += x ** p
    return r


def star_gradient(spec: DomainSpec, p, step: float = 1e-6) -> np.ndarray:
    """Numeric Wirtinger gradient of the defining function in the star
    coordinates, d r / d z_j = (d_x - i d_y)/2."""
    p = list(complex(c) for c in p)
    grad = []
    for j in spec.star_indices():
        vals = []
        for dz in (step, -step, 1j * step, -1j * step):
            q = list(p)
            q[j] = q[j] + dz
            vals.append(defining_function(spec, q))
        dx = (vals[0] - vals[1]) / (2 * step)
        dy = (vals[2] - vals[3]) / (2 * step)
        grad.append(0.5 * (dx - 1j * dy))
    return np.array(grad)


def stratify_point(spec: DomainSpec, p, boundary_tol: float = 1e-10,
                   grad_tol: float = 1e-8) -> Stratum:
    """Classify a boundary point of a single U-step domain."""
    _single_lift(spec)
    p = tuple(complex(c) for c in p)
    if len(p) != spec.dim:
        raise SpecError("point arity mismatch")
    z, zp, (w,) = spec.split(p)
    aw = abs(w[0])
    if abs(aw - 1.0) <= 1e-8:
        if any(abs(c) > 1e-8 for c in z):
            raise BoundaryError("|w| = 1 boundary points require z = 0")
        r0 = _base_r_at(spec, [0.0] * len(z), [abs(c) ** 2 for c in zp])
        if r0 < -boundary_tol:
            return Stratum.S3
        if r0 <= boundary_tol:
            return Stratum.S4
        raise BoundaryError("point lies outside the domain closure")
    if aw > 1.0:
        raise BoundaryError("point lies outside the domain closure")
    r = defining_function(spec, p)
    if abs(r) > boundary_tol:
        raise BoundaryError(f"point is not on the boundary (r = {r:.3e})")
    g = star_gradient(spec, p)
    return Stratum.S2 if float(np.linalg.norm(g)) < grad_tol else Stratum.S1


# ---------------------------------------------------------------------------
# approach regions and default paths


def _region_w2(spec: DomainSpec, q_exp: float):
    step = spec.lifts[0]
    base = spec.base

    def ok(p) -> bool:
        z, zp, (w,) = spec.split(p)
        dw = 1.0 - abs(w[0]) ** 2
        X = [abs(c) ** 2 / dw ** a for c, a in zip(z, step.weights)]
        r = _base_r_at(spec, X, [abs(c) ** 2 for c in zp])
        lhs = 0.0
        for j, (c, xj) in enumerate(zip(z, X)):
            rj = base.exponents[j] * xj ** (base.exponents[j] - 1.0) if xj > 0 \
                else (base.exponents[j] if base.exponents[j] == 1.0 else 0.0)
            lhs += (abs(c) ** 2 * rj) ** q_exp
        return lhs < -r

    return ok


def _region_w3(spec: DomainSpec, p_exps):
    def ok(p) -> bool:
        z, _, (w,) = spec.split(p)
        dw = 1.0 - abs(w[0]) ** 2
        if dw <= 0.0:
            return False
        return all(abs(c) ** 2 / dw ** pj < 1.0 for c, pj in zip(z, p_exps))

    return ok


def _region_ws_v(spec: DomainSpec, s_exps):
    step = spec.lifts[0]

    def ok(p) -> bool:
        z, zp, (w,) = spec.split(p)
        t = abs(w[0]) ** 2
        lhs = sum(math.exp(g * t) * abs(c) ** (2.0 * s)
                  for c, g, s in zip(z, step.weights, s_exps))
        lhs += sum(abs(c) ** 2 for c in zp)
        return lhs < 1.0

    return ok


@dataclass
class ApproachPath:
    """One-parameter family t -> point approaching a boundary target inside
    a declared admissible region; every sample is membership-checked."""

    spec: DomainSpec
    target: tuple
    stratum: Stratum
    point_fn: object
    region_fn: object
    params: dict = field(default_factory=dict)
    levels: int = 12

    def grid(self):
        return [2.0 ** (-k) for k in range(1, self.levels + 1)]

    def point(self, t: float) -> tuple:
        p = tuple(complex(c) for c in self.point_fn(t))
        if not contains(self.spec, p):
            raise BoundaryError(f"path left the domain at t = {t}")
        if not self.region_fn(p):
            raise BoundaryError(f"path left the approach region at t = {t}")
        return p

    def validate(self) -> "ApproachPath":
        tgt = np.array(self.target, dtype=complex)
        d_prev = None
        for t in self.grid():
            p = np.array(self.point(t), dtype=complex)
            d = float(np.linalg.norm(p - tgt))
            if d_prev is not None and d > d_prev + 1e-12:
                raise BoundaryError("path does not approach the target")
            d_prev = d
        return self


def default_path(spec: DomainSpec, target, stratum: Stratum,
                 params: dict | None = None, levels: int = 12) -> ApproachPath:
    """Documented default approach path for the given stratum.

    U-step domains: S2 shrinks the star block like t^2 at fixed w, S3 sends
    |w|^2 to 1 like 1-t with |z_j| = t^(1+p_j/2), S4 combines both.  For a
    V-step domain pass S2: the path approaches the degenerate-gradient
    point (0, z0', w0) inside the exhaustion region with exponents s_j.
    """
    params = dict(params or {})
    target = tuple(complex(c) for c in target)
    step = _single_lift(spec, kinds=("U", "V"))
    z0, zp0, (w0,) = spec.split(target)
    n = len(z0)
    direction = params.get("direction", tuple(1.0 / math.sqrt(n) for _ in range(n)))
    if step.kind == "V":
        if stratum != Stratum.S2:
            raise BoundaryError("V-step probes classify their targets as S2 "
                                "(degenerate star gradient)")
        s_exps = params.setdefault("s", tuple(0.5 for _ in range(n)))
        scale = params.setdefault("z_scale", 0.25)

        def point_fn(t):
            z = [scale * d * t ** (1.0 / s) for d, s in zip(direction, s_exps)]
            zp = [(1.0 - t / 2.0) * c for c in zp0]
            return tuple(z) + tuple(zp) + (w0[0],)

        return ApproachPath(spec, target, stratum, point_fn,
                            _region_ws_v(spec, s_exps), params, levels).validate()

    if stratum == Stratum.S2:
        q_exp = params.setdefault("q", 0.5)
        alphas = step.weights
        aw2 = abs(w0[0]) ** 2

        def point_fn(t):
            z = [t * t * d * (1.0 - aw2) ** (a / 2.0)
                 for d, a in zip(direction, alphas)]
            zp = [(1.0 - t / 2.0) * c for c in zp0]
            return tuple(z) + tuple(zp) + (w0[0],)

        return ApproachPath(spec, target, stratum, point_fn,
                            _region_w2(spec, q_exp), params, levels).validate()

    if stratum in (Stratum.S3, Stratum.S4):
        p_exps = params.setdefault("p", tuple(2.0 * a for a in step.weights))
        if any(pj <= a for pj, a in zip(p_exps, step.weights)):
            raise BoundaryError("region exponents must exceed the lift weights")
        phase = w0[0] / abs(w0[0])
        scale = params.setdefault("z_scale", 0.5)
        shrink = stratum == Stratum.S4

        def point_fn(t):
            z = [scale * d * t * t ** (pj / 2.0)
                 for d, pj in zip(direction, p_exps)]
            zp = [((1.0 - t / 2.0) if shrink else 1.0) * c for c in zp0]
            w = math.sqrt(1.0 - t) * phase
            return tuple(z) + tuple(zp) + (w,)

        region = _region_w3(spec, p_exps)
        if stratum == Stratum.S4:
            w2 = _region_w2(spec, params.setdefault("q", 0.5))
            w3 = region
            region = lambda p: w2(p) and w3(p)
        return ApproachPath(spec, target, stratum, point_fn, region,
                            params, levels).validate()

    raise BoundaryError("S1 points are smooth strongly pseudoconvex; no "
                        "weighted probe is defined there")


# ---------------------------------------------------------------------------
# weighted limits


WEIGHT_NAMES = ("r", "w", "product", "rho")

STRATUM_WEIGHT = {Stratum.S2: "r", Stratum.S3: "w", Stratum.S4: "product"}


def make_weight(spec: DomainSpec, name: str):
    """Named weight factory; exponents derive from the spec layout."""
    n = spec.base.n_star
    m = spec.base.m_passive
    if name in ("r", "rho"):
        e = n + m + 1

        def weight(p):
            return (-defining_function(spec, p)) ** e

        return weight
    if name == "w":
        step = _single_lift(spec)
        e = 2.0 + sum(step.weights)

        def weight(p):
            _, _, (w,) = spec.split(p)
            return (1.0 - abs(w[0]) ** 2) ** e

        return weight
    if name == "product":
        wr = make_weight(spec, "r")
        ww = make_weight(spec, "w")
        return lambda p: wr(p) * ww(p)
    raise BoundaryError(f"unknown weight {name!r} (choose from {WEIGHT_NAMES})")


def expected_weight(spec: DomainSpec, stratum: Stratum) -> str:
    if spec.lifts and spec.lifts[0].kind == "V":
        return "rho"
    return STRATUM_WEIGHT.get(stratum, "r")


@dataclass
class ProbeReport:
    ts: list
    kernel_values: list
    weighted: list
    extrapolated: list
    limit: float
    spread: float
    r_squared: float
    used_richardson: bool
    diverged: bool
    converged: bool
    predicted: float | None = None

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f)
            w.writerow(["k", "t", "kernel", "weighted", "extrapolated"])
            for k, (t, kv, wv, ev) in enumerate(
                    zip(self.ts, self.kernel_values, self.weighted,
                        self.extrapolated), start=1):
                w.writerow([k, f"{t:.17g}", f"{kv:.17g}", f"{wv:.17g}",
                            f"{ev:.17g}"])


def weighted_limit(K, path: ApproachPath, weight, spread_tol: float = 0.02) -> ProbeReport:
    """Diagonal kernel values times the weight along the path grid, with a
    Richardson-extrapolated limit (first-order model, least-squares order
    check; falls back to the last value when the order fit is poor)."""
    if isinstance(weight, str):
        weight = make_weight(path.spec, weight)
    ts, raw, wtd = [], [], []
    diverged = False
    for t in path.grid():
        p = path.point(t)
        try:
            kv = K.diagonal(p)
        except (NonFiniteError, OverflowError):
            diverged = True
            break
        ts.append(t)
        raw.append(kv)
        wtd.append(kv * weight(p))
    if len(wtd) < 3:
        raise BoundaryError("probe needs at least three usable levels")
    f = np.array(wtd)
    half = len(f) // 2
    if (abs(f[-1]) > 10.0 * max(abs(f[half]), 1e-300)
            and abs(f[-1]) > abs(f[-2]) > abs(f[-3])):
        diverged = True
    diffs = np.abs(np.diff(f))
    tarr = np.array(ts[:-1])
    mask = diffs > 1e-15 * np.max(np.abs(f))
    r2 = 1.0
    if mask.sum() >= 3:
        x = np.log(tarr[mask])
        y = np.log(diffs[mask])
        A = np.vstack([x, np.ones_like(x)]).T
        coef, res, _, _ = np.linalg.lstsq(A, y, rcond=None)
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - float(res[0]) / ss_tot if len(res) and ss_tot > 0 else 1.0
    used_rich = r2 >= 0.9
    extr = [f[0]] + list(2.0 * f[1:] - f[:-1])
    series = extr if used_rich else list(f)
    limit = float(series[-1])
    last = np.array(series[-3:], dtype=float)
    spread = float(np.max(np.abs(last - limit))) / max(abs(limit), 1e-300)
    return ProbeReport(ts=ts, kernel_values=raw, weighted=wtd,
                       extrapolated=[float(e) for e in extr], limit=limit,
                       spread=spread, r_squared=float(r2),
                       used_richardson=used_rich, diverged=diverged,
                       converged=(not diverged) and spread <= spread_tol)


def predicted_limit(spec: DomainSpec, target, stratum: Stratum) -> float | None:
    """Closed-form limit constants for the unit-weight ball-base families."""
    if len(spec.lifts) != 1 or spec.base.kind != "GeneralizedComplexEllipsoid":
        return None
    if any(p != 1.0 for p in spec.base.exponents):
        return None
    step = spec.lifts[0]
    n, m = spec.base.n_star, spec.base.m_passive
    z0, zp0, (w0,) = spec.split(tuple(complex(c) for c in target))
    aw2 = abs(w0[0]) ** 2
    if step.kind == "V":
        return (math.factorial(m + n) * math.exp(sum(step.weights) * aw2)
                * sum(step.weights) / math.pi ** (m + n + 1))
    if any(w != 1.0 for w in step.weights):
        return None
    c = math.factorial(m + n) * (n + 1) / math.pi ** (m + n + 1)
    if stratum == Stratum.S2:
        return c / (1.0 - aw2) ** (n + 2)
    if stratum == Stratum.S3:
        neg_r = 1.0 - sum(abs(x) ** 2 for x in zp0)
        return c / neg_r ** (n + m + 1)
    if stratum == Stratum.S4:
        return c
    return None


# ---------------------------------------------------------------------------
# Levi form probe


def levi_min_eigenvalue(spec: DomainSpec, p, step: float = 1e-4) -> float:
    """Smallest eigenvalue of the complex Hessian of the defining function
    restricted to the complex tangent space at a smooth boundary point.

    Second derivatives by central differences on the underlying real
    coordinates; the tangent-space restriction uses an orthonormal
    complement of the Wirtinger gradient.
    """
    p = tuple(complex(c) for c in p)
    d = spec.dim

    def r_at(x: np.ndarray) -> float:
        pt = [complex(x[2 * j], x[2 * j + 1]) for j in range(d)]
        return defining_function(spec, pt)

    x0 = np.empty(2 * d)
    for j, c in enumerate(p):
        x0[2 * j] = c.real
        x0[2 * j + 1] = c.imag
    grad = np.empty(d, dtype=complex)
    for j in range(d):
        ex = np.zeros(2 * d); ex[2 * j] = step
        ey = np.zeros(2 * d); ey[2 * j + 1] = step
        dx = (r_at(x0 + ex) - r_at(x0 - ex)) / (2 * step)
        dy = (r_at(x0 + ey) - r_at(x0 - ey)) / (2 * step)
        grad[j] = 0.5 * (dx - 1j * dy)
    if np.linalg.norm(grad) < 1e-8:
        raise BoundaryError("gradient vanishes; the tangent space is undefined")
    f0 = r_at(x0)
    hr = np.empty((2 * d, 2 * d))
    for a in range(2 * d):
        ea = np.zeros(2 * d); ea[a] = step
        hr[a, a] = (r_at(x0 + ea) - 2 * f0 + r_at(x0 - ea)) / step ** 2
        for b in range(a):
            eb = np.zeros(2 * d); eb[b] = step
            hr[a, b] = hr[b, a] = (
                r_at(x0 + ea + eb) - r_at(x0 + ea - eb)
                - r_at(x0 - ea + eb) + r_at(x0 - ea - eb)) / (4 * step ** 2)
    H = np.empty((d, d), dtype=complex)
    for j in range(d):
        for k in range(d):
            H[j, k] = 0.25 * ((hr[2 * j, 2 * k] + hr[2 * j + 1, 2 * k + 1])
                              + 1j * (hr[2 * j, 2 * k + 1] - hr[2 * j + 1, 2 * k]))
    H = 0.5 * (H + H.conj().T)
    g = grad.conj().reshape(-1, 1)
    qmat, _ = np.linalg.qr(np.concatenate([g, np.eye(d, dtype=complex)], axis=1))
    basis = qmat[:, 1:d]
    L = basis.conj().T @ H @ basis
    return float(np.min(np.linalg.eigvalsh(L)))
