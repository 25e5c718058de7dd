"""Bounded symbols: structured kinds, an expression grammar, Moebius shifts.

A SymbolSpec wraps a vectorized evaluation together with structure the
assemblers can exploit: polynomial symbols on the disk carry a coefficient
matrix over (w^a, conj(w)^b), which unlocks exact series assembly of their
Moebius-shifted Toeplitz matrices arbitrarily close to the boundary.

The CLI grammar accepts arithmetic over ``z`` (``z1..zn`` on balls), the
functions ``conj, abs2, re, im, exp, sin`` and numeric constants, e.g.
``"0.5*z + conj(z)"`` or ``"1 - abs2(z)"``.  Expressions built from
+, -, *, integer ** , conj and abs2 are recognized as polynomials.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .domains import DomainSpec, as_point, geodesic_symmetry, polar_radius
from .errors import SymbolParseError


@dataclass
class SymbolSpec:
    """A bounded symbol f: domain -> C with evaluation and metadata."""

    kind: str                    # poly | radial | indicator | callable | shifted_poly
    fn: Callable
    dom: DomainSpec
    bound: float = np.inf
    buc: Optional[bool] = None
    vmo: Optional[bool] = None
    label: str = ""
    poly: Optional[np.ndarray] = None    # c[a, b] over w^a conj(w)^b (disk)
    shift: Optional[np.ndarray] = None   # base point of a Moebius shift

    def __call__(self, pts):
        return np.asarray(self.fn(pts), dtype=np.complex128)

    @property
    def is_poly(self) -> bool:
        return self.poly is not None and self.shift is None

    @property
    def is_shifted_poly(self) -> bool:
        return self.poly is not None and self.shift is not None


def _poly_eval(coeffs, pts):
    w = pts[..., 0]
    out = np.zeros_like(w)
    for a in range(coeffs.shape[0]):
        for b in range(coeffs.shape[1]):
            c = coeffs[a, b]
            if c != 0:
                out = out + c * w ** a * np.conj(w) ** b
    return out


def _poly_bound(coeffs):
    # sup over the closed disk, estimated on a boundary-heavy polar grid
    t = np.concatenate([np.linspace(0, 0.95, 12), [0.99, 0.999, 1.0]])
    th = np.exp(2j * np.pi * np.arange(64) / 64)
    grid = (t[:, None] * th[None, :]).ravel()[:, None]
    return float(np.max(np.abs(_poly_eval(coeffs, grid))))


def poly_symbol(coeffs, dom: DomainSpec, label: str = "") -> SymbolSpec:
    """Polynomial in (w, conj w) on the disk from a coefficient matrix c[a,b]."""
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=np.complex128))
    if dom.kind != "disk":
        raise ValueError("structured polynomial symbols are disk-only")
    # polynomials extend continuously to the closed disk: BUC and VMO at the boundary
    return SymbolSpec("poly", lambda pts: _poly_eval(coeffs, as_point(dom, pts)),
                      dom, bound=_poly_bound(coeffs), buc=True, vmo=True,
                      label=label or "poly", poly=coeffs)


def radial_symbol(profile, dom: DomainSpec, bound: float, label: str = "",
                  vmo: Optional[bool] = None) -> SymbolSpec:
    """f(z) = profile(t1(z)) with t1 the polar radius."""
    def fn(pts):
        return np.asarray(profile(polar_radius(dom, as_point(dom, pts))),
                          dtype=np.complex128)
    return SymbolSpec("radial", fn, dom, bound=bound, buc=None, vmo=vmo,
                      label=label or "radial")


def indicator_symbol(predicate, dom: DomainSpec, label: str = "") -> SymbolSpec:
    def fn(pts):
        return predicate(as_point(dom, pts)).astype(np.complex128)
    return SymbolSpec("indicator", fn, dom, bound=1.0, buc=False,
                      label=label or "indicator")


def callable_symbol(fn, dom: DomainSpec, bound: float, label: str = "",
                    buc: Optional[bool] = None, vmo: Optional[bool] = None) -> SymbolSpec:
    return SymbolSpec("callable", lambda pts: fn(as_point(dom, pts)), dom,
                      bound=bound, buc=buc, vmo=vmo, label=label or "callable")


def constant_symbol(c, dom: DomainSpec) -> SymbolSpec:
    if dom.kind == "disk":
        return poly_symbol([[c]], dom, label=f"const({c})")
    return callable_symbol(
        lambda pts: np.full(pts.shape[:-1] if dom.kind != "matrix_ball" else pts.shape[:-2],
                            c, dtype=np.complex128),
        dom, bound=abs(c), label=f"const({c})", buc=True, vmo=True)


def compose_mobius(sym: SymbolSpec, z) -> SymbolSpec:
    """The shifted symbol f(phi_z(.)); keeps polynomial structure when present."""
    dom = sym.dom
    zpt = as_point(dom, z)

    def fn(pts):
        return sym(geodesic_symmetry(dom, zpt, as_point(dom, pts)))

    if sym.is_poly:
        return SymbolSpec("shifted_poly", fn, dom, bound=sym.bound, buc=sym.buc,
                          vmo=sym.vmo, label=f"{sym.label}o phi", poly=sym.poly,
                          shift=zpt)
    return SymbolSpec("callable", fn, dom, bound=sym.bound, buc=sym.buc,
                      vmo=sym.vmo, label=f"{sym.label}o phi")


def scale(sym: SymbolSpec, c) -> SymbolSpec:
    out = SymbolSpec(sym.kind, lambda pts: c * sym(pts), sym.dom,
                     bound=abs(c) * sym.bound, buc=sym.buc, vmo=sym.vmo,
                     label=f"{c}*{sym.label}",
                     poly=None if sym.poly is None else c * sym.poly,
                     shift=sym.shift)
    return out


# ---------------------------------------------------------------------------
# expression grammar
# ---------------------------------------------------------------------------

_FUNCS = {
    "conj": np.conj,
    "abs2": lambda v: v * np.conj(v),
    "re": lambda v: np.real(v) + 0j,
    "im": lambda v: np.imag(v) + 0j,
    "exp": np.exp,
    "sin": np.sin,
}

_POLY_FUNCS = ("conj", "abs2")  # these preserve polynomial structure


class _Poly2:
    """Tiny bivariate polynomial algebra over (w, conj w) for extraction."""

    __slots__ = ("c",)

    def __init__(self, c):
        self.c = np.atleast_2d(np.asarray(c, dtype=np.complex128))

    @staticmethod
    def const(v):
        return _Poly2([[v]])

    @staticmethod
    def var():
        return _Poly2([[0.0], [1.0]])

    def __add__(self, o):
        A = max(self.c.shape[0], o.c.shape[0])
        B = max(self.c.shape[1], o.c.shape[1])
        out = np.zeros((A, B), dtype=np.complex128)
        out[:self.c.shape[0], :self.c.shape[1]] += self.c
        out[:o.c.shape[0], :o.c.shape[1]] += o.c
        return _Poly2(out)

    def __neg__(self):
        return _Poly2(-self.c)

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        a1, b1 = self.c.shape
        a2, b2 = o.c.shape
        out = np.zeros((a1 + a2 - 1, b1 + b2 - 1), dtype=np.complex128)
        for i in range(a1):
            for j in range(b1):
                if self.c[i, j] != 0:
                    out[i:i + a2, j:j + b2] += self.c[i, j] * o.c
        return _Poly2(out)

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise SymbolParseError("** requires a non-negative integer exponent")
        out = _Poly2.const(1.0)
        for _ in range(k):
            out = out * self
        return out

    def conj(self):
        return _Poly2(np.conj(self.c).T)


class _NotPoly(Exception):
    pass


def _extract_poly(node):
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float, complex)):
            return _Poly2.const(node.value)
        raise SymbolParseError(f"bad constant {node.value!r}")
    if isinstance(node, ast.Name):
        if node.id == "z":
            return _Poly2.var()
        raise _NotPoly
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Add):
            return _extract_poly(node.left) + _extract_poly(node.right)
        if isinstance(node.op, ast.Sub):
            return _extract_poly(node.left) - _extract_poly(node.right)
        if isinstance(node.op, ast.Mult):
            return _extract_poly(node.left) * _extract_poly(node.right)
        if isinstance(node.op, ast.Pow):
            if isinstance(node.right, ast.Constant) and isinstance(node.right.value, int):
                return _extract_poly(node.left) ** node.right.value
            raise _NotPoly
        if isinstance(node.op, ast.Div):
            if isinstance(node.right, ast.Constant):
                return _extract_poly(node.left) * _Poly2.const(1.0 / node.right.value)
            raise _NotPoly
        raise _NotPoly
    if isinstance(node, ast.UnaryOp):
        if isinstance(node.op, ast.USub):
            return -_extract_poly(node.operand)
        if isinstance(node.op, ast.UAdd):
            return _extract_poly(node.operand)
        raise _NotPoly
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or len(node.args) != 1:
            raise _NotPoly
        if node.func.id == "conj":
            return _extract_poly(node.args[0]).conj()
        if node.func.id == "abs2":
            p = _extract_poly(node.args[0])
            return p * p.conj()
        raise _NotPoly
    raise _NotPoly


def _compile_eval(node, names):
    """Recursively compile the whitelisted AST into a vectorized closure."""
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float, complex)):
            v = complex(node.value)
            return lambda env: v
        raise SymbolParseError(f"bad constant {node.value!r}")
    if isinstance(node, ast.Name):
        if node.id not in names:
            raise SymbolParseError(f"unknown name {node.id!r}")
        key = node.id
        return lambda env: env[key]
    if isinstance(node, ast.BinOp):
        lf = _compile_eval(node.left, names)
        rf = _compile_eval(node.right, names)
        ops = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
               ast.Div: np.divide, ast.Pow: np.power}
        for t, op in ops.items():
            if isinstance(node.op, t):
                return lambda env, op=op: op(lf(env), rf(env))
        raise SymbolParseError(f"operator {type(node.op).__name__} not allowed")
    if isinstance(node, ast.UnaryOp):
        vf = _compile_eval(node.operand, names)
        if isinstance(node.op, ast.USub):
            return lambda env: -vf(env)
        if isinstance(node.op, ast.UAdd):
            return vf
        raise SymbolParseError("unary operator not allowed")
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
            raise SymbolParseError("only conj/abs2/re/im/exp/sin calls are allowed")
        if len(node.args) != 1 or node.keywords:
            raise SymbolParseError("functions take exactly one argument")
        g = _FUNCS[node.func.id]
        vf = _compile_eval(node.args[0], names)
        return lambda env: g(vf(env))
    raise SymbolParseError(f"syntax node {type(node).__name__} not allowed")


def parse_symbol(expr: str, dom: DomainSpec) -> SymbolSpec:
    """Parse the CLI expression grammar into a SymbolSpec."""
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as e:
        raise SymbolParseError(f"cannot parse {expr!r}: {e}") from None
    names = {"z"} if dom.n == 1 else {"z"} | {f"z{i+1}" for i in range(dom.n)}
    evaluator = _compile_eval(tree.body, names)

    if dom.kind == "disk":
        try:
            poly = _extract_poly(tree.body)
            sym = poly_symbol(poly.c, dom, label=expr)
            return sym
        except (_NotPoly, SymbolParseError):
            pass

    def fn(pts):
        pts = as_point(dom, pts)
        env = {"z": pts[..., 0] if dom.kind != "matrix_ball" else pts}
        if dom.n > 1 and dom.kind != "matrix_ball":
            for i in range(dom.n):
                env[f"z{i+1}"] = pts[..., i]
        vals = evaluator(env)
        return np.broadcast_to(np.asarray(vals, dtype=np.complex128),
                               pts.shape[:-1] if dom.kind != "matrix_ball"
                               else pts.shape[:-2]).copy()

    # sup-norm estimate on a sampled polar grid
    rng = np.random.default_rng(0)
    if dom.kind == "matrix_ball":
        from .domains import random_interior
        sample = random_interior(dom, rng, 512, tmax=0.999)
    else:
        dirs = rng.normal(size=(64, dom.n)) + 1j * rng.normal(size=(64, dom.n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = np.concatenate([np.linspace(0, 0.95, 10), [0.99, 0.999]])
        sample = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, dom.n)
    bound = float(np.max(np.abs(fn(sample))))
    return SymbolSpec("callable", fn, dom, bound=bound, label=expr)
