"""Base domains and their disk/plane-fibered lifts.

A :class:`DomainSpec` is a base domain (generalized complex ellipsoid or
polydisk) plus an ordered stack of lift steps.  A U-step adjoins a block of
w coordinates with the designated "star" coordinates rescaled by
(1-||w||^2)^{weight/2} and the constraint ||w|| < 1; a V-step rescales them
by exp(weight*||w||^2/2) with w ranging over all of C^k.  After each step
the new w coordinates join the star set, so later steps may weight them.

All constructible domains are complete Reinhardt: membership depends only
on the vector of squared moduli (the "shadow"), and every coordinate may be
shrunk independently without leaving the domain.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

KIND_ELLIPSOID = "GeneralizedComplexEllipsoid"
KIND_POLYDISK = "Polydisk"

SAMPLE_BATCH = 1 << 16
DEFAULT_W_RADIUS = 3.0


class SpecError(ValueError):
    """Malformed domain description or mismatched point."""


class SingularEvaluationError(ArithmeticError):
    """Defining function evaluated where a U-step denominator vanishes."""


class SamplingError(RuntimeError):
    """Rejection sampling failed to find interior points."""


@dataclass(frozen=True)
class BaseDomain:
    kind: str
    n_star: int
    m_passive: int
    exponents: tuple = ()

    def __post_init__(self):
        if self.kind not in (KIND_ELLIPSOID, KIND_POLYDISK):
            raise SpecError(f"unknown base kind {self.kind!r}")
        if self.n_star < 0 or self.m_passive < 0 or self.dim < 1:
            raise SpecError("base domain needs at least one coordinate")
        object.__setattr__(self, "exponents", tuple(float(p) for p in self.exponents))
        if self.kind == KIND_ELLIPSOID:
            if len(self.exponents) != self.dim:
                raise SpecError("ellipsoid needs one exponent per coordinate")
            if any(p <= 0 for p in self.exponents):
                raise SpecError("ellipsoid exponents must be positive")
            for j in range(self.n_star, self.dim):
                if self.exponents[j] != 1.0:
                    raise SpecError("passive coordinates must carry exponent 1")
        elif self.exponents:
            raise SpecError("polydisk takes no exponents")

    @property
    def dim(self) -> int:
        return self.n_star + self.m_passive


@dataclass(frozen=True)
class LiftStep:
    kind: str
    weights: tuple
    w_dim: int = 1

    def __post_init__(self):
        if self.kind not in ("U", "V"):
            raise SpecError(f"lift kind must be 'U' or 'V', got {self.kind!r}")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if any(w < 0 for w in self.weights):
            raise SpecError("lift weights must be nonnegative")
        if not any(w > 0 for w in self.weights):
            raise SpecError("a lift needs at least one positive weight")
        if self.w_dim < 1:
            raise SpecError("lift w-block needs at least one coordinate")


@dataclass(frozen=True)
class DomainSpec:
    base: BaseDomain
    lifts: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "lifts", tuple(self.lifts))
        stars = self.base.n_star
        for i, step in enumerate(self.lifts):
            if not isinstance(step, LiftStep):
                raise SpecError("lifts must be LiftStep instances")
            if len(step.weights) != stars:
                raise SpecError(
                    f"lift {i} carries {len(step.weights)} weights but the "
                    f"star set has {stars} coordinates at that stage")
            stars += step.w_dim

    @property
    def dim(self) -> int:
        return self.base.dim + sum(s.w_dim for s in self.lifts)

    def w_slice(self, i: int) -> slice:
        """Column range of lift i's w block in the global layout."""
        start = self.base.dim + sum(s.w_dim for s in self.lifts[:i])
        return slice(start, start + self.lifts[i].w_dim)

    def star_indices(self, upto: int | None = None) -> list:
        """Global indices of the star coordinates before lift ``upto``
        (all lifts applied when omitted)."""
        if upto is None:
            upto = len(self.lifts)
        idx = list(range(self.base.n_star))
        for i in range(upto):
            sl = self.w_slice(i)
            idx.extend(range(sl.start, sl.stop))
        return idx

    def truncated(self, n_lifts: int) -> "DomainSpec":
        return DomainSpec(self.base, self.lifts[:n_lifts])

    def split(self, p):
        """Partition a point into (z, z', w-blocks)."""
        p = tuple(p)
        if len(p) != self.dim:
            raise SpecError(f"point has {len(p)} coordinates, spec has {self.dim}")
        z = p[: self.base.n_star]
        zp = p[self.base.n_star: self.base.dim]
        ws = [p[self.w_slice(i)] for i in range(len(self.lifts))]
        return z, zp, ws

    def v_w_indices(self) -> list:
        """Global indices of w coordinates introduced by V-steps (unbounded)."""
        out = []
        for i, step in enumerate(self.lifts):
            if step.kind == "V":
                sl = self.w_slice(i)
                out.extend(range(sl.start, sl.stop))
        return out


CPoint = tuple  # a point is a tuple of complex coordinates


# ---------------------------------------------------------------------------
# shadow (squared-modulus) geometry


def shadow_contains(spec: DomainSpec, X: np.ndarray) -> np.ndarray:
    """Vectorised membership of shadow points X (shape (N, dim), entries
    |coord|^2 >= 0).  Lifts unwind outermost-in."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.dim:
        raise SpecError("shadow dimension mismatch")
    ok = np.all(np.isfinite(X), axis=1) & np.all(X >= 0.0, axis=1)
    x = X.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(len(spec.lifts) - 1, -1, -1):
            step = spec.lifts[i]
            stars = spec.star_indices(i)
            t = x[:, spec.w_slice(i)].sum(axis=1)
            if step.kind == "U":
                ok &= t < 1.0
                safe = np.where(ok, 1.0 - t, 1.0)
                for j, a in zip(stars, step.weights):
                    if a:
                        x[:, j] = x[:, j] / safe ** a
            else:
                for j, a in zip(stars, step.weights):
                    if a:
                        x[:, j] = x[:, j] * np.exp(a * t)
        d = spec.base.dim
        if spec.base.kind == KIND_ELLIPSOID:
            s = np.zeros(len(x))
            for j, pj in enumerate(spec.base.exponents):
                s += x[:, j] ** pj
            ok &= s < 1.0
        else:
            ok &= np.all(x[:, :d] < 1.0, axis=1)
    return ok


def contains(spec: DomainSpec, p) -> bool:
    """Strict membership of a point in the open domain."""
    p = tuple(p)
    if len(p) != spec.dim:
        raise SpecError(f"point has {len(p)} coordinates, spec has {spec.dim}")
    X = np.array([[abs(complex(c)) ** 2 for c in p]])
    return bool(shadow_contains(spec, X)[0])


def shadow_defining(spec: DomainSpec, X: np.ndarray):
    """Vectorised defining function r on shadow points; r < 0 inside.

    Returns (r, valid):  rows where a U-step hits ||w|| >= 1 are marked
    invalid (the expression is singular there).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    x = X.copy()
    valid = np.ones(len(x), dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(len(spec.lifts) - 1, -1, -1):
            step = spec.lifts[i]
            stars = spec.star_indices(i)
            t = x[:, spec.w_slice(i)].sum(axis=1)
            if step.kind == "U":
                valid &= t < 1.0
                safe = np.where(valid, 1.0 - t, 1.0)
                for j, a in zip(stars, step.weights):
                    if a:
                        x[:, j] = x[:, j] / safe ** a
            else:
                for j, a in zip(stars, step.weights):
                    if a:
                        x[:, j] = x[:, j] * np.exp(a * t)
        d = spec.base.dim
        if spec.base.kind == KIND_ELLIPSOID:
            r = np.zeros(len(x))
            for j, pj in enumerate(spec.base.exponents):
                r += x[:, j] ** pj
            r -= 1.0
        else:
            r = np.max(x[:, :d], axis=1) - 1.0
    return r, valid


def defining_function(spec: DomainSpec, p) -> float:
    """Defining function r(p) with r < 0 inside; the composition of the
    base defining function with the lift substitutions."""
    p = tuple(p)
    if len(p) != spec.dim:
        raise SpecError(f"point has {len(p)} coordinates, spec has {spec.dim}")
    X = np.array([[abs(complex(c)) ** 2 for c in p]])
    r, valid = shadow_defining(spec, X)
    if not valid[0]:
        raise SingularEvaluationError("defining function singular: ||w|| >= 1 under a U-step")
    return float(r[0])


def slice_map(spec: DomainSpec, lift_index: int, p):
    """Biholomorphism from the slice of lift ``lift_index`` (its w fixed)
    onto the domain one lift down: applies f_alpha / g_gamma and drops the
    w block."""
    if not 0 <= lift_index < len(spec.lifts):
        raise SpecError("lift index out of range")
    sub = spec.truncated(lift_index + 1)
    p = tuple(complex(c) for c in p)
    if len(p) != sub.dim:
        raise SpecError(f"point has {len(p)} coordinates, slice expects {sub.dim}")
    step = spec.lifts[lift_index]
    sl = sub.w_slice(lift_index)
    t = sum(abs(c) ** 2 for c in p[sl])
    out = list(p[: sl.start])
    stars = sub.star_indices(lift_index)
    if step.kind == "U":
        if t >= 1.0:
            raise SingularEvaluationError("slice map needs ||w|| < 1 under a U-step")
        for j, a in zip(stars, step.weights):
            if a:
                out[j] = out[j] / (1.0 - t) ** (a / 2.0)
    else:
        for j, a in zip(stars, step.weights):
            if a:
                out[j] = out[j] * math.exp(a * t / 2.0)
    return tuple(out)


# ---------------------------------------------------------------------------
# sampling


@dataclass
class SampleResult:
    points: np.ndarray          # (count, dim) complex
    acceptance_ratio: float
    volume_estimate: float
    draws: int
    box_radii: tuple
    truncated_w: bool

    def __iter__(self):
        return iter(self.points)


def box_radii(spec: DomainSpec, w_radius: float = DEFAULT_W_RADIUS) -> tuple:
    """Per-coordinate bounding radii.  Every bounded coordinate of the
    family satisfies |c| < 1; V-step w coordinates are unbounded and get
    the truncation radius."""
    radii = [1.0] * spec.dim
    for j in spec.v_w_indices():
        radii[j] = float(w_radius)
    return tuple(radii)


def _batch_generator(seed: int, batch: int) -> np.random.Generator:
    # counter-based: disjoint counter ranges per batch reproduce the
    # serial stream under any sharding
    bitgen = np.random.Philox(key=np.uint64(seed), counter=batch * (1 << 70))
    return np.random.Generator(bitgen)


def sample_interior(spec: DomainSpec, count: int, seed: int = 0,
                    w_radius: float = DEFAULT_W_RADIUS,
                    box_radius: float | None = None,
                    max_draws: int = 10 ** 7) -> SampleResult:
    """Seed-deterministic rejection sampling from the bounding polydisk.

    Coordinates are drawn uniformly from the square [-R, R]^2 per complex
    coordinate.  ``box_radius`` overrides every radius (used for probe
    panels drawn well inside the domain).  The acceptance ratio times the
    box volume is an unbiased estimate of the domain volume (for V-lifted
    domains: of the w-truncated volume).
    """
    if count < 1:
        raise SpecError("sample count must be at least 1")
    radii = box_radii(spec, w_radius)
    if box_radius is not None:
        radii = tuple(min(r, float(box_radius)) for r in radii)
    rad = np.array(radii)
    accepted = []
    n_total = 0
    draws = 0
    batch = 0
    while n_total < count:
        rng = _batch_generator(seed, batch)
        batch += 1
        u = rng.uniform(-1.0, 1.0, size=(SAMPLE_BATCH, spec.dim, 2))
        pts = (u[:, :, 0] + 1j * u[:, :, 1]) * rad
        draws += SAMPLE_BATCH
        keep = shadow_contains(spec, np.abs(pts) ** 2)
        got = pts[keep]
        if len(got):
            accepted.append(got)
            n_total += len(got)
        if draws >= max_draws and n_total < max(1, draws * 1e-6):
            raise SamplingError(
                f"acceptance ratio below 1e-6 after {draws} draws")
        if draws >= max_draws and n_total < count:
            raise SamplingError(
                f"only {n_total}/{count} interior points after {draws} draws")
    pts = np.concatenate(accepted, axis=0)
    ratio = len(pts) / draws
    box_vol = float(np.prod((2.0 * rad) ** 2))
    return SampleResult(
        points=pts[:count],
        acceptance_ratio=ratio,
        volume_estimate=ratio * box_vol,
        draws=draws,
        box_radii=radii,
        truncated_w=bool(spec.v_w_indices()) and box_radius is None,
    )


def star_shape_check(spec, trials: int = 128, seed: int = 7) -> bool:
    """Sample interior points and random scalings |lambda_j| <= 1 of the
    star coordinates; True iff every scaled point stays inside.

    Accepts any object exposing ``dim``, ``star_indices()``, ``contains``
    and ``sample(count, seed)`` in place of a DomainSpec (test fixtures).
    """
    if trials < 1:
        raise SpecError("star_shape_check needs at least one trial")
    if isinstance(spec, DomainSpec):
        pts = sample_interior(spec, trials, seed).points
        member = lambda q: contains(spec, q)
        stars = spec.star_indices()
    else:
        pts = np.asarray(spec.sample(trials, seed))
        member = spec.contains
        stars = spec.star_indices()
    rng = _batch_generator(seed + 1, 0)
    u = rng.uniform(0.0, 1.0, size=(len(pts), len(stars)))
    th = rng.uniform(0.0, 2.0 * math.pi, size=(len(pts), len(stars)))
    lam = np.sqrt(u) * np.exp(1j * th)
    for i, p in enumerate(pts):
        q = np.array(p, dtype=complex)
        q[stars] *= lam[i]
        if not member(tuple(q)):
            return False
    return True


# ---------------------------------------------------------------------------
# JSON wire format


def spec_to_dict(spec: DomainSpec) -> dict:
    base = {"kind": spec.base.kind, "n_star": spec.base.n_star,
            "m_passive": spec.base.m_passive}
    if spec.base.kind == KIND_ELLIPSOID:
        base["exponents"] = list(spec.base.exponents)
    return {"base": base,
            "lifts": [{"kind": s.kind, "weights": list(s.weights), "w_dim": s.w_dim}
                      for s in spec.lifts]}


def _reject_unknown(d: dict, allowed: set, where: str):
    extra = set(d) - allowed
    if extra:
        raise SpecError(f"unknown field(s) {sorted(extra)} in {where}")


def spec_from_dict(data: dict) -> DomainSpec:
    if not isinstance(data, dict):
        raise SpecError("domain spec must be a JSON object")
    _reject_unknown(data, {"base", "lifts"}, "domain spec")
    if "base" not in data:
        raise SpecError("domain spec needs a 'base'")
    b = data["base"]
    _reject_unknown(b, {"kind", "exponents", "n_star", "m_passive"}, "base")
    try:
        base = BaseDomain(kind=b["kind"], n_star=int(b["n_star"]),
                          m_passive=int(b["m_passive"]),
                          exponents=tuple(b.get("exponents", ())))
    except KeyError as e:
        raise SpecError(f"base is missing field {e}") from None
    lifts = []
    for i, item in enumerate(data.get("lifts", [])):
        _reject_unknown(item, {"kind", "weights", "w_dim"}, f"lift {i}")
        try:
            lifts.append(LiftStep(kind=item["kind"], weights=tuple(item["weights"]),
                                  w_dim=int(item["w_dim"])))
        except KeyError as e:
            raise SpecError(f"lift {i} is missing field {e}") from None
    return DomainSpec(base, tuple(lifts))


def load_spec(path) -> DomainSpec:
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise SpecError(f"invalid JSON in {path}: {e}") from None
    return spec_from_dict(data)


def save_spec(spec: DomainSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(spec_to_dict(spec), f, indent=2, sort_keys=True)
        f.write("\n")
