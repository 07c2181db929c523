"""Command-line surface: evaluate kernels, run verification suites, probe
boundary limits, sample domains.  Deterministic: the same arguments and
seed produce byte-identical CSV output.

Exit codes: 0 all checks passed, 1 a verification failed, 2 input or
usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import catalog
from .boundary import (Stratum, WEIGHT_NAMES, BoundaryError, default_path,
                       expected_weight, levi_min_eigenvalue, predicted_limit,
                       weighted_limit)
from .domains import (SamplingError, SpecError, contains, load_spec,
                      sample_interior)
from .jets import NonFiniteError
from .kernels import closed_form_for
from .lifting import LiftError, compose_pipeline
from .oracle import (ConvergenceError, IntegrationError,
                     dirichlet_identity_check, get_norm_table,
                     reproducing_integral, series_kernel)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INPUT = 2

SUITES = ("symmetry", "reproducing", "series", "dirichlet",
          "lift-equivalence", "levi")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("BERGMAN_WORKERS", "1")))
    except ValueError:
        return 1


def _run_cases(cases, workers: int):
    """Evaluate independent case callables; results ordered by case index
    regardless of completion order."""
    if workers <= 1:
        return [fn() for fn in cases]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn) for fn in cases]
        return [f.result() for f in futures]


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


def _load_points(path, dim):
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    pairs = []
    for i, entry in enumerate(data):
        if isinstance(entry, dict):
            p = entry["p"]
            q = entry.get("q", p)
        else:
            p = q = entry
        p = tuple(complex(re, im) for re, im in p)
        q = tuple(complex(re, im) for re, im in q)
        if len(p) != dim or len(q) != dim:
            raise SpecError(f"point {i} has the wrong dimension")
        pairs.append((p, q))
    return pairs


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    spec = load_spec(args.spec)
    pairs = _load_points(args.points, spec.dim)
    modes = ("closed", "lifted", "series") if args.mode == "all" else (args.mode,)
    kernels = {}
    if "closed" in modes:
        k = closed_form_for(spec)
        if k is None:
            print("error: no hand-coded closed form matches this spec", file=sys.stderr)
            return EXIT_INPUT
        kernels["closed"] = k
    if "lifted" in modes:
        kernels["lifted"] = compose_pipeline(spec)
    table = get_norm_table(spec, args.cap) if "series" in modes else None

    header = ["i"]
    for mode in modes:
        header += [f"{mode}_re", f"{mode}_im"]
    if "series" in modes:
        header.append("series_tail")
    if len(modes) > 1:
        header += [f"delta_{modes[0]}_{m}" for m in modes[1:]]
    header.append("error")

    rows = []
    had_error = False
    for i, (p, q) in enumerate(pairs):
        vals = {}
        err = ""
        tail = None
        if not (contains(spec, p) and contains(spec, q)):
            err = "exterior"
        else:
            try:
                for mode in modes:
                    if mode == "series":
                        sv = series_kernel(spec, p, q, args.cap, table=table)
                        vals["series"] = complex(sv.value)
                        tail = sv.tail_bound
                    else:
                        vals[mode] = complex(kernels[mode](p, q))
            except (ConvergenceError, NonFiniteError, IntegrationError) as e:
                err = type(e).__name__
        row = [i]
        for mode in modes:
            v = vals.get(mode)
            row += ([_fmt(v.real), _fmt(v.imag)] if v is not None else ["", ""])
        if "series" in modes:
            row.append(_fmt(tail) if tail is not None else "")
        if len(modes) > 1:
            ref = vals.get(modes[0])
            for m in modes[1:]:
                v = vals.get(m)
                if ref is not None and v is not None:
                    row.append(_fmt(abs(v - ref) / max(abs(ref), 1e-300)))
                else:
                    row.append("")
        row.append(err)
        if err:
            had_error = True
        rows.append(row)
    if args.out:
        _write_csv(args.out, header, rows)
    else:
        w = csv.writer(sys.stdout)
        w.writerow(header)
        w.writerows(rows)
    return EXIT_INPUT if had_error else EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _dirichlet_grid():
    cs = {1: [(0,), (1,), (2,)], 2: [(0, 0), (1, 1), (2, 0)],
          3: [(0, 0, 0), (1, 0, 1)]}
    grid = [(s, k, c) for s in (0.5, 1.0, 1.7, 3.0)
            for k in (1, 2, 3) for c in cs[k]]
    return grid[:30]


def _suite_symmetry(tol, seed):
    cases = []
    for name, (spec, K) in catalog.closed_form_families().items():
        def case(name=name, spec=spec, K=K):
            worst = 0.0
            for p, q in catalog.interior_pairs(spec, 1000, seed, box_radius=0.6):
                a = complex(K(p, q))
                b = complex(K(q, p))
                worst = max(worst, abs(a.conjugate() - b) / max(abs(a), 1e-300))
            return {"case": name, "measured": worst, "tolerance": tol,
                    "passed": worst < tol}
        cases.append(case)
    return cases


def _suite_lift_equivalence(tol, seed):
    from .kernels import (kernel_ball, kernel_egg, kernel_ball_disk_lift,
                          kernel_ball_exp_lift)
    from .lifting import lift_U, lift_V
    fams = [
        ("egg", kernel_egg(1, 2.0),
         lambda: lift_U(kernel_ball(1), (0.5,), 1)),
        ("ball_disk_lift", kernel_ball_disk_lift(1, 1),
         lambda: lift_U(kernel_ball(2, n_star=1), (1.0,), 1)),
        ("ball_exp_lift", kernel_ball_exp_lift(1, 1, (1.0,)),
         lambda: lift_V(kernel_ball(2, n_star=1), (1.0,), 1)),
    ]
    cases = []
    for name, closed, build in fams:
        def case(name=name, closed=closed, build=build):
            lifted = build()
            worst = 0.0
            for p, q in catalog.interior_pairs(closed.domain, 200, seed,
                                               box_radius=0.6):
                a = complex(closed(p, q))
                b = complex(lifted(p, q))
                worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
            return {"case": name, "measured": worst, "tolerance": tol,
                    "passed": worst < tol}
        cases.append(case)
    return cases


def _suite_series(tol, seed):
    cases = []
    for name, (spec, K) in catalog.closed_form_families().items():
        def case(name=name, spec=spec, K=K):
            table = get_norm_table(spec, 30)
            worst = 0.0
            worst_tail = 0.0
            for p, q in catalog.interior_pairs(spec, 20, seed):
                sv = series_kernel(spec, p, q, 30, table=table)
                v = complex(K(p, q))
                worst = max(worst, abs(v - sv.value) / max(abs(v), 1e-300))
                worst_tail = max(worst_tail, sv.tail_bound)
            passed = worst < tol and worst_tail < 1e-4
            return {"case": name, "measured": worst, "tolerance": tol,
                    "passed": passed}
        cases.append(case)
    return cases


def _suite_dirichlet(tol, seed):
    cases = []
    for s, k, c in _dirichlet_grid():
        def case(s=s, k=k, c=c):
            quad, closed = dirichlet_identity_check(s, c, k)
            err = abs(quad - closed) / max(abs(closed), 1e-300)
            return {"case": f"s={s},k={k},c={c}", "measured": err,
                    "tolerance": tol, "passed": err < tol}
        cases.append(case)
    return cases


def _suite_reproducing(tol, seed):
    from .kernels import kernel_ball_disk_lift, kernel_ball_exp_lift
    fixtures = [
        ("ball_disk_lift", kernel_ball_disk_lift(1, 1)),
        ("ball_exp_lift", kernel_ball_exp_lift(1, 1, (1.0,))),
    ]
    idxs = [idx for d in range(3) for idx in _compositions3(d)]
    cases = []
    for name, K in fixtures:
        spec = K.domain
        points = catalog.interior_points(spec, 3, seed, box_radius=0.4)
        for p in points:
            def case(name=name, K=K, spec=spec, p=p):
                vals, _ = reproducing_integral(K, spec, idxs, p)
                worst = 0.0
                for idx in idxs:
                    target = 1.0 + 0j
                    for pj, e in zip(p, idx):
                        target *= complex(pj) ** e
                    res = abs(vals[idx] - target) / max(abs(target), 1e-6)
                    worst = max(worst, res)
                return {"case": f"{name}@{_fmt(abs(p[0]))}", "measured": worst,
                        "tolerance": tol, "passed": worst < tol}
            cases.append(case)
    return cases


def _compositions3(total):
    out = []
    for a in range(total + 1):
        for b in range(total - a + 1):
            out.append((a, b, total - a - b))
    return out


def _suite_levi(tol, seed):
    from .catalog import ball_spec, ball_disk_lift_spec, ball_exp_lift_spec

    def ball_case():
        v = levi_min_eigenvalue(ball_spec(2), (1.0, 0.0))
        err = abs(v - 1.0)
        return {"case": "ball2", "measured": err, "tolerance": 1e-4,
                "passed": err < 1e-4}

    def s1_case():
        spec = ball_disk_lift_spec(1, 1)
        z = math.sqrt((1 - 0.09) * (1 - 0.25))
        v = levi_min_eigenvalue(spec, (z, 0.5, 0.3))
        return {"case": "ball-disk-lift-S1", "measured": v, "tolerance": 0.0,
                "passed": v > 0.0}

    def weak_case():
        spec = ball_exp_lift_spec(1, 1, (1.0,))
        v = levi_min_eigenvalue(spec, (0.0, 1.0, 0.4))
        return {"case": "ball-exp-lift-weak", "measured": abs(v), "tolerance": 1e-6,
                "passed": abs(v) < 1e-6}

    return [ball_case, s1_case, weak_case]


_SUITE_BUILDERS = {
    "symmetry": (_suite_symmetry, 1e-13),
    "reproducing": (_suite_reproducing, 1e-3),
    "series": (_suite_series, 1e-3),
    "dirichlet": (_suite_dirichlet, 1e-8),
    "lift-equivalence": (_suite_lift_equivalence, 1e-10),
    "levi": (_suite_levi, 1e-6),
}


def cmd_verify(args) -> int:
    builder, default_tol = _SUITE_BUILDERS[args.suite]
    tol = args.tol if args.tol is not None else default_tol
    cases = builder(tol, args.seed)
    results = _run_cases(cases, args.workers)
    rows = []
    n_fail = 0
    for r in results:
        status = "PASS" if r["passed"] else "FAIL"
        if not r["passed"]:
            n_fail += 1
        print(f"{status} {args.suite} {r['case']} measured={_fmt(r['measured'])} "
              f"tolerance={_fmt(r['tolerance'])}")
        rows.append([args.suite, r["case"], _fmt(r["measured"]),
                     _fmt(r["tolerance"]), status])
    print(f"{args.suite}: {len(results) - n_fail}/{len(results)} passed")
    if args.out:
        _write_csv(args.out, ["suite", "case", "measured", "tolerance", "status"],
                   rows)
    return EXIT_VERIFY if n_fail else EXIT_OK


# ---------------------------------------------------------------------------
# boundary


def cmd_boundary(args) -> int:
    spec = load_spec(args.spec)
    target = tuple(complex(re, im) for re, im in json.loads(args.target))
    stratum = Stratum[args.stratum]
    want = expected_weight(spec, stratum)
    if args.weight != want:
        print(f"error: stratum {stratum.value} pairs with weight '{want}' "
              f"(S2 -> r, S3 -> w, S4 -> product, V-step -> rho)",
            file=sys.stderr)
        return EXIT_INPUT
    K = compose_pipeline(spec)
    path = default_path(spec, target, stratum, levels=args.levels)
    report = weighted_limit(K, path, args.weight)
    report.predicted = predicted_limit(spec, target, stratum)
    if args.out:
        report.to_csv(args.out)
    line = (f"limit={_fmt(report.limit)} spread={_fmt(report.spread)} "
            f"converged={report.converged}")
    if report.predicted is not None:
        rel = abs(report.limit - report.predicted) / abs(report.predicted)
        line += f" predicted={_fmt(report.predicted)} rel={_fmt(rel)}"
    print(line)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sample


def cmd_sample(args) -> int:
    spec = load_spec(args.spec)
    res = sample_interior(spec, args.count, seed=args.seed,
                          w_radius=args.w_radius, box_radius=args.box_radius)
    header = ["i"]
    for j in range(spec.dim):
        header += [f"c{j}_re", f"c{j}_im"]
    rows = []
    for i, pt in enumerate(res.points):
        row = [i]
        for c in pt:
            row += [_fmt(c.real), _fmt(c.imag)]
        rows.append(row)
    out = args.out
    if out:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(f"# acceptance_ratio={_fmt(res.acceptance_ratio)} "
                    f"volume_estimate={_fmt(res.volume_estimate)} "
                    f"draws={res.draws} truncated_w={res.truncated_w}\n")
            w = csv.writer(f)
            w.writerow(header)
            w.writerows(rows)
    print(f"accepted={len(res.points)} acceptance_ratio={_fmt(res.acceptance_ratio)} "
          f"volume_estimate={_fmt(res.volume_estimate)}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bergman",
        description="Bergman kernels on lifted Hartogs domains: evaluation, "
                    "verification, boundary probes, sampling.")
    sub = ap.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("eval", help="evaluate kernels at point pairs")
    pe.add_argument("--spec", required=True, help="domain spec JSON file")
    pe.add_argument("--points", required=True, help="points JSON file")
    pe.add_argument("--mode", default="all",
                    choices=("closed", "lifted", "series", "all"))
    pe.add_argument("--cap", type=int, default=40, help="series degree cap")
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--out", default=None, help="output CSV path")
    pe.set_defaults(fn=cmd_eval)

    pv = sub.add_parser("verify", help="run a verification suite")
    pv.add_argument("--suite", required=True, choices=SUITES)
    pv.add_argument("--seed", type=int, default=2024)
    pv.add_argument("--tol", type=float, default=None)
    pv.add_argument("--workers", type=int, default=_default_workers())
    pv.add_argument("--out", default=None)
    pv.set_defaults(fn=cmd_verify)

    pb = sub.add_parser("boundary", help="weighted boundary-limit probe")
    pb.add_argument("--spec", required=True)
    pb.add_argument("--target", required=True,
                    help='JSON [[re,im],...] boundary point')
    pb.add_argument("--stratum", required=True, choices=("S2", "S3", "S4"))
    pb.add_argument("--weight", required=True, choices=WEIGHT_NAMES)
    pb.add_argument("--levels", type=int, default=12)
    pb.add_argument("--out", default=None)
    pb.set_defaults(fn=cmd_boundary)

    ps = sub.add_parser("sample", help="rejection-sample interior points")
    ps.add_argument("--spec", required=True)
    ps.add_argument("--count", type=int, required=True)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--w-radius", type=float, default=3.0)
    ps.add_argument("--box-radius", type=float, default=None)
    ps.add_argument("--out", default=None)
    ps.set_defaults(fn=cmd_sample)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (SpecError, SamplingError, BoundaryError, LiftError,
            FileNotFoundError, json.JSONDecodeError, KeyError,
            ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
