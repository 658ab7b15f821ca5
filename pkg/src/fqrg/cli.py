"""Command-line interface: ``fqrg <command> ...``.

Exit codes: 0 success, 1 reproduction mismatch, 2 usage error, 3 the
pipeline produced nothing to report (no calculi, exterior data or metrics).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass
from importlib import resources
from typing import Iterator

import numpy as np

from . import __version__
from . import catalog as cat
from .algebra import Algebra, enumerate_unital_algebras
from .calculus import ZERO_EXTERIOR, Calculus, ExteriorData, enumerate_calculi, solve_exterior
from .connection import MODES, classify_connections, default_workers
from .f2_linalg import as_f2
from .geometry import curvature, enumerate_lifts, laplacian, ricci
from .metric import NotInvertible, QuantumMetric, quantum_dimension, quantum_metrics, try_invert_metric

SCHEMA = 1
EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_EMPTY = 0, 1, 2, 3


class EmptyPipeline(Exception):
    """Raised when a stage of the pipeline has no solutions."""


class UsageError(Exception):
    pass


# --- output ---------------------------------------------------------------------


class Output:
    """Collects result records, prints them and hashes exactly what was printed."""

    def __init__(self, as_json: bool, stream=None):
        self.as_json = as_json
        self.stream = stream or sys.stdout
        self.digest = hashlib.sha256()
        self.count = 0

    def _write(self, line: str) -> None:
        self.digest.update(line.encode() + b"\n")
        print(line, file=self.stream)

    def record(self, doc: dict, text: str) -> None:
        self.count += 1
        self._write(json.dumps({"schema": SCHEMA, **doc}, sort_keys=True) if self.as_json else text)

    def info(self, text: str) -> None:
        """Human-only lines; suppressed in JSON mode."""
        if not self.as_json:
            self._write(text)


def _data_hash() -> str:
    h = hashlib.sha256()
    root = resources.files("fqrg").joinpath("data")
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            h.update(entry.name.encode())
            h.update(entry.read_bytes())
    return h.hexdigest()


def write_manifest(path: str, argv: list[str], workers: int, wall: float, out: Output) -> None:
    doc = {
        "schema": SCHEMA,
        "command": argv,
        "inputs": {"fixtures_sha256": _data_hash()},
        "workers": workers,
        "wall_time_s": round(wall, 3),
        "results": out.count,
        "results_sha256": out.digest.hexdigest(),
        "version": __version__,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- pipeline stages ---------------------------------------------------------------


@dataclass
class Stage:
    """One calculus with one choice of top forms and one metric."""

    algebra: str
    calculus: str
    C: Calculus
    exterior: str
    E: ExteriorData
    metric: str | None = None
    g: QuantumMetric | None = None


def _algebra(alg_id: str) -> Algebra:
    try:
        fx = cat.load_fixture(alg_id)
    except cat.UnknownFixture:
        raise UsageError(f"unknown algebra {alg_id!r}; see `fqrg fixtures list --kind algebra`") from None
    if fx.kind != "algebra":
        raise UsageError(f"{alg_id!r} is not an algebra id")
    return cat.build_algebra(fx.id)


def _fixture_calculi(alg_id: str, m: int) -> dict[bytes, str]:
    out = {}
    for fid in cat.fixture_ids("calculus"):
        p = cat.load_fixture(fid).payload
        if p["algebra"] == alg_id and p["m"] == m:
            C = cat.build_calculus(fid)
            out.setdefault(C.a.tobytes() + C.d.tobytes(), fid)
    return out


def calculi_for(alg_id: str, m: int) -> list[tuple[str, Calculus]]:
    """Calculi of dimension m with their printed labels where known.

    With m = n - 1 only the universal calculus (w^i = dx^i) is produced.
    """
    A = _algebra(alg_id)
    try:
        found = enumerate_calculi(A, m, basis_is_dx=(m == A.n - 1))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    known = _fixture_calculi(alg_id, m)
    out = []
    for k, C in enumerate(found):
        label = known.get(C.a.tobytes() + C.d.tobytes(), f"{alg_id}.m{m}#{k}")
        out.append((label, C))
    return out


def exteriors_for(label: str, C: Calculus, choice: str) -> list[tuple[str, ExteriorData]]:
    """Top-form data for a calculus: the printed one when known, else every solution."""
    printed = [f for f in cat.fixture_ids("exterior") if cat.load_fixture(f).payload["calculus"] == label]
    if choice not in ("auto", "all"):
        fid = cat.normalize_id(choice)
        if fid not in printed:
            return []
        return [(fid, cat.build_exterior(fid))]
    if printed and choice == "auto":
        return [(f, cat.build_exterior(f)) for f in printed]
    sols = solve_exterior(C)
    if not sols:
        return [("zero", ZERO_EXTERIOR)]
    return [(f"{label}.eps#{k}", E) for k, E in enumerate(sols)]


def _printed_metrics(calculus: str) -> dict[bytes, str]:
    out = {}
    for fid in cat.fixture_ids("metric"):
        if cat.metric_calculus(fid) == calculus:
            out.setdefault(cat.metric_tensor(fid).tobytes(), fid)
    return out


def _family_metric(alg_id: str, beta: str) -> tuple[str, str]:
    fam = f"g_{alg_id}.family"
    try:
        p = cat.load_fixture(fam).payload
    except cat.UnknownFixture:
        raise UsageError(f"algebra {alg_id} has no printed metric family for beta=...") from None
    return p["calculus"], f"({beta})*({p['g']})"


def stages(alg_id: str, m: int, selector: str, exterior: str = "auto") -> Iterator[Stage]:
    """Expand an algebra, a dimension and a metric selector into pipeline stages.

    Selectors: ``all`` (every central invertible quantum symmetric metric),
    ``beta=<function>`` (a multiple of the printed family) or a metric id.
    Raises EmptyPipeline naming the first stage that came up empty.
    """
    _algebra(alg_id)
    if selector not in ("all",) and not selector.startswith("beta="):
        mid = cat.normalize_id(selector)
        try:
            fx = cat.load_fixture(mid)
        except cat.UnknownFixture:
            raise UsageError(f"unknown metric {selector!r}") from None
        if fx.kind != "metric":
            raise UsageError(f"{selector!r} is not a metric id")
        cid = cat.metric_calculus(mid)
        if cat.load_fixture(cid).payload["algebra"] != alg_id:
            raise UsageError(f"{mid} is a metric over {cat.load_fixture(cid).payload['algebra']}, not {alg_id}")
        C = cat.build_calculus(cid)
        if C.m != m:
            raise EmptyPipeline(f"{mid} lives on a calculus of dimension {C.m}")
        ext = cat.metric_exterior(mid)
        E = cat.build_exterior(ext) if ext else ZERO_EXTERIOR
        try:
            g = cat.build_metric(mid)
        except NotInvertible:
            raise EmptyPipeline(f"{mid} is not invertible") from None
        yield Stage(alg_id, cid, C, ext or "zero", E, mid, g)
        return
    calcs = calculi_for(alg_id, m)
    if not calcs:
        raise EmptyPipeline("no calculi")
    if selector.startswith("beta="):
        cid, expr = _family_metric(alg_id, selector[5:])
        calcs = [(label, C) for label, C in calcs if label == cid]
        if not calcs:
            raise EmptyPipeline(f"the metric family lives on {cid}, which has a different dimension")
    produced_ext = produced_metric = False
    for label, C in calcs:
        for elabel, E in exteriors_for(label, C, exterior):
            produced_ext = True
            printed = _printed_metrics(label)
            if selector.startswith("beta="):
                try:
                    T = cat.context(label).tensor(expr, 2)
                except Exception as exc:
                    raise UsageError(f"cannot evaluate {selector!r}: {exc}") from None
                try:
                    metrics = [try_invert_metric(C, T)]
                except NotInvertible:
                    metrics = []
            else:
                metrics = quantum_metrics(C, E)
            for k, g in enumerate(metrics):
                produced_metric = True
                mlabel = printed.get(as_f2(g.g).tobytes(), f"{label}.g#{k}")
                yield Stage(alg_id, label, C, elabel, E, mlabel, g)
    if not produced_ext:
        raise EmptyPipeline("no exterior data")
    if not produced_metric:
        raise EmptyPipeline("no quantum metrics")


def _gamma_text(gamma: np.ndarray, alg_id: str) -> list[str]:
    return [cat.format_tensor(gamma[i], alg_id) for i in range(gamma.shape[0])]


def _connection_labels(metric: str | None, conns) -> dict[int, str]:
    if not metric:
        return {}
    from .reproduce import connection_fixtures

    fixtures = connection_fixtures(metric)
    if not fixtures:
        return {}
    rep = cat.match_results(conns, fixtures)
    return dict(rep.pairs)


def _bits(gamma: np.ndarray) -> str:
    return "".join(str(int(b)) for b in as_f2(gamma).reshape(-1))


# --- commands ----------------------------------------------------------------------


def cmd_algebras(args, out: Output) -> int:
    try:
        algs = enumerate_unital_algebras(args.n, commutative=args.commutative)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for k, A in enumerate(algs):
        label = cat.label_algebra(A) if A.n <= 3 else None
        names = ["1"] + [f"e{i}" for i in range(1, A.n)]
        products = {}
        for i in range(1, A.n):
            for j in range(1, A.n):
                c = A.V[i, j]
                products[f"{names[i]}*{names[j]}"] = "+".join(names[t] for t in range(A.n) if c[t]) or "0"
        doc = {"index": k, "n": A.n, "label": label, "commutative": A.commutative, "products": products}
        text = f"{label or '-':6} " + (", ".join(f"{key}={v}" for key, v in products.items()) or "the field itself")
        out.record(doc, text)
    return EXIT_OK


def cmd_calculi(args, out: Output) -> int:
    calcs = calculi_for(args.algebra, args.m)
    if not calcs:
        raise EmptyPipeline("no calculi")
    for label, C in calcs:
        names = cat.load_fixture(args.algebra).payload["names"]
        rel = {}
        for i in range(C.m):
            w = "w" if C.m == 1 else f"w{i + 1}"
            for mu in range(1, C.n):
                rel[f"{w}*{names[mu]}"] = cat.format_tensor(C.a[i, mu], args.algebra)
        d = {names[mu]: cat.format_tensor(C.d[mu], args.algebra) for mu in range(1, C.n)}
        doc = {"algebra": args.algebra, "calculus": label, "m": C.m, "d": d, "relations": rel}
        text = f"{label}: " + ", ".join(f"d{k}={v}" for k, v in d.items()) + "; " + ", ".join(f"{k}={v}" for k, v in rel.items())
        out.record(doc, text)
    return EXIT_OK


def cmd_metrics(args, out: Output) -> int:
    for st in stages(args.algebra, args.m, "all", args.exterior):
        g = st.g
        doc = {
            "algebra": st.algebra,
            "calculus": st.calculus,
            "exterior": st.exterior,
            "metric": st.metric,
            "g": cat.format_tensor(g.g, st.algebra),
            "inverse": cat.format_tensor(np.moveaxis(g.ginv, -1, 0), st.algebra),
            "qdim": cat.format_element(quantum_dimension(g), st.algebra),
        }
        out.record(doc, f"{st.metric}: g = {doc['g']}   inverse {doc['inverse']}   qdim {doc['qdim']}")
    return EXIT_OK


def cmd_classify(args, out: Output) -> int:
    total = 0
    for st in stages(args.algebra, args.m, args.metric, args.exterior):
        res = classify_connections(st.C, st.E, st.g, args.mode, args.workers)
        labels = _connection_labels(st.metric, [c for c, _ in res])
        out.info(f"# {st.calculus} / {st.exterior} / {st.metric}: {len(res)} connections")
        for k, (conn, flags) in enumerate(res):
            flat = curvature(st.C, st.E, conn).flat
            nab = _gamma_text(conn.gamma, st.algebra)
            doc = {
                "algebra": st.algebra,
                "calculus": st.calculus,
                "exterior": st.exterior,
                "metric": st.metric,
                "index": k,
                "connection": labels.get(k),
                "nabla": nab,
                "gamma_bits": _bits(conn.gamma),
                "flags": flags.to_json(),
                "flat": flat,
            }
            forms = ["w"] if st.C.m == 1 else [f"w{i + 1}" for i in range(st.C.m)]
            text = f"{labels.get(k) or f'#{k}':14} " + "; ".join(f"nabla {w} = {e}" for w, e in zip(forms, nab))
            out.record(doc, text + ("   [flat]" if flat else ""))
        total += len(res)
    if not total:
        raise EmptyPipeline(f"no connections of kind {args.mode}")
    return EXIT_OK


def _lifts(st: Stage) -> list[tuple[str, np.ndarray]]:
    try:
        fx = cat.load_fixture(f"lift_{st.algebra}")
    except cat.UnknownFixture:
        fx = None
    if fx is not None and fx.payload["calculus"] == st.calculus and fx.payload.get("exterior") == st.exterior and "I0" in fx.payload:
        from .reproduce import lift_tensors

        return [("".join(map(str, gam)), I) for gam, I in lift_tensors(st.algebra).items()]
    return [(f"#{k}", L.I) for k, L in enumerate(enumerate_lifts(st.C, st.E))]


def cmd_geometry(args, out: Output) -> int:
    produced = 0
    for st in stages(args.algebra, args.m, args.metric, args.exterior):
        res = classify_connections(st.C, st.E, st.g, "qlc", args.workers)
        labels = _connection_labels(st.metric, [c for c, _ in res])
        lifts = _lifts(st) if args.lift != "none" else []
        if args.lift not in ("all", "none"):
            lifts = [(k, I) for k, I in lifts if k == args.lift]
            if not lifts:
                raise UsageError(f"no lift {args.lift!r}; gamma triples are written like 010")
        alg = st.algebra
        for k, (conn, _) in enumerate(res):
            label = labels.get(k) or f"#{k}"
            if args.connection and cat.normalize_id(args.connection) != label:
                continue
            produced += 1
            R = curvature(st.C, st.E, conn)
            lap = laplacian(st.C, st.g, conn)
            p = cat.load_fixture(alg).payload
            basis = p.get("display_basis", p["names"])
            ctx = cat._algebra_context(alg)
            delta = {b: cat.format_element(lap.apply(ctx.function(b)), alg) for b in basis}
            doc = {
                "metric": st.metric,
                "connection": label,
                "nabla": _gamma_text(conn.gamma, alg),
                "flat": R.flat,
                "curvature": [cat.format_tensor(R.rho[i].T, alg).replace("w", "Vol@w") for i in range(st.C.m)],
                "laplacian": delta,
                "laplacian_trace": lap.trace,
                "massive_modes": [cat.format_element(v.coeffs, alg) for v in lap.massive_eigenvectors],
                "lifts": [],
            }
            for key, I in lifts:
                r = ricci(st.C, st.E, st.g, conn, I)
                doc["lifts"].append({
                    "lift": key,
                    "ricci": cat.format_tensor(r.ricci, alg),
                    "scalar": cat.format_element(r.scalar, alg),
                    "einstein": cat.format_tensor(r.einstein, alg),
                    "ricci_quantum_symmetric": r.ricci_qsym,
                    "div_ricci_zero": r.div_ricci_zero,
                    "div_einstein_zero": r.div_eins_zero,
                })
            lines = [f"{st.metric} {label}" + ("  (flat)" if R.flat else "")]
            forms = ["w"] if st.C.m == 1 else [f"w{i + 1}" for i in range(st.C.m)]
            lines += [f"  R {w} = {c}" for w, c in zip(forms, doc["curvature"])] if not R.flat else []
            lines.append("  Laplacian: " + ", ".join(f"{b} -> {v}" for b, v in delta.items()))
            for L in doc["lifts"]:
                lines.append(f"  lift {L['lift']}: Ricci = {L['ricci']}; S = {L['scalar']}; Einstein = {L['einstein']}")
            out.record(doc, "\n".join(lines))
    if not produced:
        raise EmptyPipeline("no matching connections")
    return EXIT_OK


def cmd_reproduce(args, out: Output) -> int:
    from .reproduce import TARGETS, reproduce

    targets = list(TARGETS) if args.target == "all" else [args.target]
    for t in targets:
        if t not in TARGETS:
            raise UsageError(f"unknown target {t!r}; choose from: all, " + ", ".join(TARGETS))
    status = EXIT_OK
    for t in targets:
        rep = reproduce(t, args.workers)
        out.record(rep.to_json(), rep.render())
        if not rep.passed:
            status = EXIT_MISMATCH
    return status


def cmd_fixtures(args, out: Output) -> int:
    for fid in cat.fixture_ids(args.kind):
        fx = cat.load_fixture(fid)
        out.record({"id": fid, "kind": fx.kind, "cite": fx.cite, "errata": list(fx.errata)}, f"{fid:24} {fx.kind:14} {fx.cite}")
    return EXIT_OK


# --- argument parsing -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit JSON lines")
    common.add_argument("--workers", type=int, default=None, help="worker processes (default: $FQRG_WORKERS or 1)")
    common.add_argument("--manifest", metavar="PATH", help="write a run manifest with result hashes")

    p = argparse.ArgumentParser(prog="fqrg", description="Quantum Riemannian geometries over the field with two elements.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("algebras", parents=[common], help="unital algebras up to isomorphism")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--commutative", action="store_true", help="commutative algebras only")
    s.set_defaults(func=cmd_algebras)

    def pipeline(s, metric=True):
        s.add_argument("algebra", help="algebra id such as D or n2:A")
        s.add_argument("--m", type=int, required=True, help="calculus dimension")
        s.add_argument("--exterior", default="auto", help="exterior id, 'auto' (printed when known) or 'all'")
        if metric:
            s.add_argument("--metric", default="all", help="'all', 'beta=<function>' or a metric id such as g_F.1")

    s = sub.add_parser("calculi", parents=[common], help="left parallelisable calculi")
    s.add_argument("algebra")
    s.add_argument("--m", type=int, required=True)
    s.set_defaults(func=cmd_calculi)

    s = sub.add_parser("metrics", parents=[common], help="central invertible quantum symmetric metrics")
    pipeline(s, metric=False)
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("classify", parents=[common], help="connections for each metric")
    pipeline(s)
    s.add_argument("--mode", choices=MODES, default="qlc")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("geometry", parents=[common], help="curvature, Laplacian and Ricci for each QLC")
    pipeline(s)
    s.add_argument("--connection", help="restrict to one connection label")
    s.add_argument("--lift", default="all", help="'all', 'none' or a gamma triple such as 010")
    s.set_defaults(func=cmd_geometry)

    s = sub.add_parser("reproduce", parents=[common], help="recompute a published table and diff it")
    s.add_argument("target", help="table1..table15, connections-D/B/F, laplacians, lifts, calculi-F or all")
    s.set_defaults(func=cmd_reproduce)

    s = sub.add_parser("fixtures", parents=[common], help="golden fixtures")
    fsub = s.add_subparsers(dest="action", required=True)
    f = fsub.add_parser("list", parents=[common])
    f.add_argument("--kind")
    f.set_defaults(func=cmd_fixtures)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.workers is None:
        args.workers = default_workers()
    if args.workers < 1:
        parser.print_usage(sys.stderr)
        print("fqrg: error: --workers must be positive", file=sys.stderr)
        return EXIT_USAGE
    out = Output(args.json)
    start = time.perf_counter()
    try:
        code = args.func(args, out)
    except UsageError as exc:
        print(f"fqrg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EmptyPipeline as exc:
        print(f"fqrg: {exc}", file=sys.stderr)
        if args.json:
            print(json.dumps({"schema": SCHEMA, "empty": str(exc)}))
        code = EXIT_EMPTY
    if args.manifest:
        write_manifest(args.manifest, argv, args.workers, time.perf_counter() - start, out)
    return code


if __name__ == "__main__":
    sys.exit(main())
