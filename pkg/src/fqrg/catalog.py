"""Golden fixtures transcribed from the published classification.

Fixture documents live in ``fqrg/data`` as JSON, grouped by kind, with a
manifest mapping every id to its file and source location. Payloads store
expressions in the printed generator names (``x``, ``y``, ``z = 1 + x``,
``w1``, ``w2``); the builders here turn them into canonical tensors.

Misprints are kept verbatim in the payloads. ``errata.json`` lists each
correction together with the printed cells that contradict the misprint;
:func:`load_fixture` applies them unless asked not to.
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from ._expressions import Form, basis_forms, evaluate
from .algebra import Algebra, Element, algebra_from_products, invert_matrix_over
from .calculus import Calculus, ExteriorData
from .connection import Connection, NoSigma, solve_sigma
from .f2_linalg import as_f2, inverse, matmul
from .metric import QuantumMetric, try_invert_metric

__all__ = [
    "UnknownFixture",
    "Fixture",
    "MatchReport",
    "Context",
    "normalize_id",
    "fixture_ids",
    "load_fixture",
    "errata",
    "build_algebra",
    "build_calculus",
    "build_exterior",
    "build_metric",
    "metric_tensor",
    "build_connection",
    "printed_curvature",
    "context",
    "match_results",
    "format_element",
    "format_tensor",
    "label_algebra",
]

SCHEMA = 1


class UnknownFixture(KeyError):
    """No fixture has the requested id."""


@dataclass(frozen=True)
class Fixture:
    id: str
    kind: str
    cite: str
    payload: dict
    expectations: dict = field(default_factory=dict)
    errata: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "id": self.id,
            "kind": self.kind,
            "cite": self.cite,
            "payload": self.payload,
            "expectations": self.expectations,
            "errata": list(self.errata),
        }


# --- storage --------------------------------------------------------------


def _read(name: str) -> dict:
    text = resources.files("fqrg").joinpath("data", name).read_text(encoding="utf-8")
    doc = json.loads(text)
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"{name}: unsupported schema {doc.get('schema')!r}")
    return doc


@lru_cache(maxsize=None)
def _manifest() -> dict:
    return _read("manifest.json")["fixtures"]


@lru_cache(maxsize=None)
def _file(name: str) -> dict:
    return _read(name)["fixtures"]


@lru_cache(maxsize=None)
def errata() -> tuple[dict, ...]:
    """Every recorded misprint with its correction and witness."""
    return tuple(_read("errata.json")["errata"])


_NABLA = re.compile(r"^(?:\\nabla|∇|nabla)\s*_?")


def normalize_id(text: str) -> str:
    """Map printed spellings such as ``g_{F.2}`` or ``∇_{D.1.1}`` to fixture ids."""
    s = text.strip().replace("{", "").replace("}", "").replace(" ", "")
    prefix = ""
    if s.startswith("n2:"):
        prefix, s = "n2:", s[3:]
    m = _NABLA.match(s)
    if m:
        s = "nabla_" + s[m.end():]
    return prefix + s


def fixture_ids(kind: str | None = None) -> list[str]:
    man = _manifest()
    return [k for k, v in man.items() if kind is None or v["kind"] == kind]


def _set_path(doc, path: Sequence, value) -> None:
    for p in path[:-1]:
        doc = doc[p]
    doc[path[-1]] = value


def _get_path(doc, path: Sequence):
    for p in path:
        doc = doc[p]
    return doc


@lru_cache(maxsize=None)
def _load(fid: str, apply_errata: bool) -> Fixture:
    man = _manifest()
    if fid not in man:
        raise UnknownFixture(fid)
    entry = man[fid]
    payload = copy.deepcopy(_file(entry["file"])[fid])
    applied = []
    if apply_errata:
        for e in errata():
            if e["fixture"] != fid:
                continue
            if _get_path(payload, e["path"]) != e["printed"]:
                raise ValueError(f"erratum {e['id']} no longer matches its fixture")
            _set_path(payload, e["path"], e["corrected"])
            applied.append(e["id"])
    expectations = payload.pop("expect", {})
    return Fixture(fid, entry["kind"], entry["cite"], payload, expectations, tuple(applied))


def load_fixture(fid: str, apply_errata: bool = True) -> Fixture:
    """The fixture with this id (printed spellings accepted); raises UnknownFixture."""
    return _load(normalize_id(fid), apply_errata)


# --- expression plumbing ---------------------------------------------------


def _parse_sum(expr: str, names: Sequence[str]) -> list[int]:
    expr = expr.replace(" ", "")
    if expr == "0":
        return []
    out = []
    for term in expr.split("+"):
        if term not in names:
            raise ValueError(f"product table terms must be basis names, got {term!r}")
        out.append(names.index(term))
    return out


def as_coeffs(value, shape: tuple[int, ...]) -> np.ndarray:
    """Coefficients of an evaluated expression; bare integers become 0 or the unit."""
    if isinstance(value, Form):
        if value.coeffs.shape != shape:
            raise ValueError(f"expected shape {shape}, got {value.coeffs.shape}")
        return value.coeffs
    if isinstance(value, Element):
        return as_f2(value.coeffs).reshape(shape)
    out = np.zeros(shape, np.uint8)
    if int(value) & 1:
        if len(shape) != 1:
            raise ValueError("a nonzero constant is not a tensor")
        out[0] = 1
    return out


@dataclass(frozen=True, eq=False)
class Context:
    """Evaluation context: an algebra, optionally a calculus, and the printed names."""

    algebra_id: str
    algebra: Algebra
    calculus: Calculus | None
    names: dict

    def function(self, expr: str, **params) -> np.ndarray:
        return as_coeffs(evaluate(expr, {**self.names, **params}), (self.algebra.n,))

    def element(self, expr: str, **params) -> Element:
        return Element(self.algebra, self.function(expr, **params))

    def tensor(self, expr: str, rank: int, **params) -> np.ndarray:
        m = self.calculus.m if self.calculus is not None else 1
        shape = (self.algebra.n,) + (m,) * rank
        return as_coeffs(evaluate(expr, {**self.names, **params}), shape)

    def params(self, gamma: Sequence[int], prefix: str = "g") -> dict:
        return {f"{prefix}{k + 1}": int(v) for k, v in enumerate(gamma)}


def _form_names(A: Algebra, names: Sequence[str], aliases: dict, m: int, a) -> dict:
    ns: dict = {}
    for mu, nm in enumerate(names):
        if mu:
            ns[nm] = Form.function(A.basis(mu), a)
    forms = basis_forms(A, m, a)
    if m == 1:
        ns["w"] = forms[0]
    for i, f in enumerate(forms, 1):
        ns[f"w{i}"] = f
    ns["Vol"] = Form.function(A.one, a)
    for k, v in aliases.items():
        ns[k] = evaluate(v, ns)
    return ns


@lru_cache(maxsize=None)
def build_algebra(fid: str) -> Algebra:
    fx = load_fixture(fid)
    if fx.kind != "algebra":
        raise ValueError(f"{fid} is a {fx.kind} fixture")
    p = fx.payload
    names = p["names"]
    products = {}
    for key, rhs in p["products"].items():
        left, right = key.split("*")
        products[(names.index(left), names.index(right))] = _parse_sum(rhs, names)
    return algebra_from_products(p["n"], products, fx.id, tuple(names))


@lru_cache(maxsize=None)
def _algebra_context(fid: str) -> Context:
    p = load_fixture(fid).payload
    A = build_algebra(fid)
    return Context(fid, A, None, _form_names(A, p["names"], p["aliases"], 1, None))


@lru_cache(maxsize=None)
def build_calculus(fid: str) -> Calculus:
    fx = load_fixture(fid)
    if fx.kind != "calculus":
        raise ValueError(f"{fid} is a {fx.kind} fixture")
    p = fx.payload
    A = build_algebra(p["algebra"])
    names = load_fixture(p["algebra"]).payload["names"]
    m = p["m"]
    ns = _form_names(A, names, load_fixture(p["algebra"]).payload["aliases"], m, None)
    n = A.n
    shape = (n, m)
    d = np.zeros((n, n, m), np.uint8)
    for gen, expr in p["d"].items():
        d[names.index(gen)] = as_coeffs(evaluate(expr, ns), shape)
    a = np.zeros((m, n, n, m), np.uint8)
    for i in range(m):
        a[i, 0, 0, i] = 1
    for key, expr in p["a"].items():
        form, gen = key.split("*")
        i = 0 if form == "w" else int(form[1:]) - 1
        a[i, names.index(gen)] = as_coeffs(evaluate(expr, ns), shape)
    return Calculus(A, a, d, fx.id)


@lru_cache(maxsize=None)
def context(calculus_id: str) -> Context:
    """Names for expressions over a calculus: generators, aliases, w1.., Vol."""
    C = build_calculus(calculus_id)
    alg_id = load_fixture(calculus_id).payload["algebra"]
    p = load_fixture(alg_id).payload
    return Context(alg_id, C.algebra, C, _form_names(C.algebra, p["names"], p["aliases"], C.m, C.a))


@lru_cache(maxsize=None)
def build_exterior(fid: str) -> ExteriorData:
    p = load_fixture(fid).payload
    ctx = context(p["calculus"])
    m = ctx.calculus.m
    eps = np.zeros((m, m, ctx.algebra.n), np.uint8)
    for i in range(m):
        for j in range(m):
            eps[i, j] = ctx.function(p["eps"][i][j])
    tau = np.stack([ctx.function(t) for t in p["tau"]])
    return ExteriorData("free1d", eps, tau)


def _metric_payload(fid: str) -> dict:
    fx = load_fixture(fid)
    if fx.kind not in ("metric", "metric_family"):
        raise ValueError(f"{fid} is a {fx.kind} fixture")
    return fx.payload


@lru_cache(maxsize=None)
def metric_tensor(fid: str) -> np.ndarray:
    p = _metric_payload(fid)
    return context(p["calculus"]).tensor(p["g"], 2)


@lru_cache(maxsize=None)
def build_metric(fid: str) -> QuantumMetric:
    """The metric with its inverse; raises NotInvertible for the degenerate ones."""
    p = _metric_payload(fid)
    return try_invert_metric(build_calculus(p["calculus"]), metric_tensor(fid), label=fid)


def metric_calculus(fid: str) -> str:
    return _metric_payload(fid)["calculus"]


def metric_exterior(fid: str) -> str | None:
    return _metric_payload(fid).get("exterior")


def printed_gamma(fid: str, apply_errata: bool = True) -> np.ndarray:
    fx = load_fixture(fid, apply_errata)
    ctx = context(metric_calculus(fx.payload["metric"]))
    nab = fx.payload["nabla"]
    if isinstance(nab, str):
        nab = [nab]
    return np.stack([ctx.tensor(e, 2) for e in nab])


@lru_cache(maxsize=None)
def build_connection(fid: str) -> Connection:
    fx = load_fixture(fid)
    if fx.kind != "connection":
        raise ValueError(f"{fid} is a {fx.kind} fixture")
    C = build_calculus(metric_calculus(fx.payload["metric"]))
    gamma = printed_gamma(fid)
    try:
        sigma = solve_sigma(C, gamma)
    except NoSigma:
        sigma = None
    return Connection(gamma, sigma, fx.id)


def printed_curvature(fid: str) -> np.ndarray:
    """rho[i, j, beta] from the printed ``R w^i = ... Vol (x) w^j``."""
    fx = load_fixture(fid)
    ctx = context(metric_calculus(fx.payload["metric"]))
    return np.stack([ctx.tensor(e, 1).T for e in fx.payload["R"]])


# --- matching -------------------------------------------------------------


@dataclass(frozen=True)
class MatchReport:
    pairs: tuple[tuple[int, str], ...]
    unmatched_computed: tuple[int, ...]
    unmatched_fixtures: tuple[str, ...]

    @property
    def complete(self) -> bool:
        return not self.unmatched_computed and not self.unmatched_fixtures

    def label_of(self, index: int) -> str | None:
        for i, fid in self.pairs:
            if i == index:
                return fid
        return None

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "pairs": [list(p) for p in self.pairs],
            "unmatched_computed": list(self.unmatched_computed),
            "unmatched_fixtures": list(self.unmatched_fixtures),
        }


def _fixture_tensor(fid: str) -> np.ndarray:
    kind = load_fixture(fid).kind
    if kind == "connection":
        return printed_gamma(fid)
    if kind in ("metric", "metric_family"):
        return metric_tensor(fid)
    raise ValueError(f"cannot match against a {kind} fixture")


def _computed_tensor(obj) -> np.ndarray:
    if isinstance(obj, tuple):
        obj = obj[0]
    for attr in ("gamma", "g"):
        if hasattr(obj, attr):
            return as_f2(getattr(obj, attr))
    return as_f2(obj)


def match_results(computed: Iterable, fixtures: Iterable) -> MatchReport:
    """Pair computed connections or metrics with fixtures by exact tensor equality.

    Each side is used at most once; the first fixture with a given tensor
    wins and later duplicates stay unmatched.
    """
    computed = list(computed)
    ids = [f.id if isinstance(f, Fixture) else normalize_id(f) for f in fixtures]
    index: dict[bytes, int] = {}
    for i, obj in enumerate(computed):
        t = _computed_tensor(obj)
        index.setdefault(t.tobytes() + bytes(t.shape), i)
    pairs, used = [], set()
    for fid in ids:
        t = _fixture_tensor(fid)
        i = index.get(t.tobytes() + bytes(t.shape))
        if i is not None and i not in used:
            used.add(i)
            pairs.append((i, fid))
    matched = {f for _, f in pairs}
    return MatchReport(
        tuple(sorted(pairs)),
        tuple(i for i in range(len(computed)) if i not in used),
        tuple(f for f in ids if f not in matched),
    )


def label_algebra(A: Algebra) -> str | None:
    """Printed label of an algebra isomorphic to A, if any."""
    from .algebra import find_isomorphism

    for fid in fixture_ids("algebra"):
        B = build_algebra(fid)
        if B.n == A.n and B.commutative == A.commutative and find_isomorphism(A, B) is not None:
            return fid
    return None


# --- display ----------------------------------------------------------------


@lru_cache(maxsize=None)
def _display(alg_id: str) -> tuple[tuple[str, ...], np.ndarray]:
    p = load_fixture(alg_id).payload
    ctx = _algebra_context(alg_id)
    basis = tuple(p.get("display_basis", p["names"]))
    M = np.stack([ctx.function(b) for b in basis], axis=1)
    Minv = inverse(M)
    if Minv is None:
        raise ValueError(f"display basis of {alg_id} is not a basis")
    return basis, Minv


def format_element(coeffs, alg_id: str | None = None) -> str:
    """Printed-basis form of a function, e.g. ``1+z^2``; canonical x^mu without a label."""
    c = as_f2(coeffs).reshape(-1)
    if alg_id is None:
        names = ["1"] + [f"x{mu}" for mu in range(1, len(c))]
        terms = [names[mu] for mu in range(len(c)) if c[mu]]
    else:
        basis, Minv = _display(alg_id)
        v = matmul(Minv, c)
        terms = [basis[k] for k in range(len(basis)) if v[k]]
    return "+".join(terms) if terms else "0"


def format_tensor(T, alg_id: str | None = None, forms: str = "w") -> str:
    """Sum of ``(f)*w1@w2`` style terms for a tensor indexed [mu, i, j, ...]."""
    T = as_f2(T)
    m = T.shape[1] if T.ndim > 1 else 0
    out = []
    for idx in np.ndindex(*T.shape[1:]):
        f = T[(slice(None),) + idx]
        if not f.any():
            continue
        w = "@".join(forms if m == 1 else f"{forms}{i + 1}" for i in idx)
        coeff = format_element(f, alg_id)
        if coeff == "1":
            out.append(w)
        elif "+" in coeff:
            out.append(f"({coeff})*{w}")
        else:
            out.append(f"{coeff}*{w}")
    return "+".join(out) if out else "0"


def invert_function_matrix(alg_id: str, M: np.ndarray) -> np.ndarray | None:
    return invert_matrix_over(build_algebra(alg_id), M)
