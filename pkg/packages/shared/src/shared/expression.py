"""Safe arithmetic expressions in x1, x2 for user-defined media and sources.

Expressions are parsed with :mod:`ast` and evaluated on numpy arrays. Only
numbers, the coordinates ``x1`` and ``x2``, the constant ``pi``, the binary
operators ``+ - * /``, unary signs, parentheses and a fixed set of functions
are accepted; anything else is rejected when the expression is compiled.
"""

import ast
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial
from numpy.typing import ArrayLike, NDArray


class ExpressionError(ValueError):
    """Raised when an expression uses syntax outside the supported grammar."""

    pass


@lru_cache(maxsize=1)
def _cutoff_antiderivative() -> tuple[Polynomial, float]:
    kernel = Polynomial.fromroots([0.0] * 4 + [1.0] * 4)
    primitive = kernel.integ(lbnd=0.0)
    return primitive, float(primitive(1.0))


def cutoff(t: ArrayLike, a: float = 0.1, b: float = 0.3) -> NDArray[np.float64]:
    """
    C^8 cutoff equal to 1 for t <= a and 0 for t >= b.

    On (a, b) the profile is ``1 - P(s)/P(1)`` with ``s = (t-a)/(b-a)``, where
    ``P`` is the antiderivative of ``s^4 (s-1)^4`` vanishing at 0. Values are
    clamped to [0, 1] so round-off never leaves the unit interval.
    """
    if not a < b:
        raise ExpressionError(f"cutoff needs a < b, got a={a}, b={b}")
    t_arr = np.asarray(t, dtype=float)
    primitive, total = _cutoff_antiderivative()
    s = (np.clip(t_arr, a, b) - a) / (b - a)
    inner = np.clip(1.0 - primitive(s) / total, 0.0, 1.0)
    return np.where(t_arr <= a, 1.0, np.where(t_arr >= b, 0.0, inner))


FUNCTIONS: dict[str, Callable[..., NDArray[np.generic]]] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "cutoff": cutoff,
}

# Number of positional arguments accepted by each function
ARITY: dict[str, tuple[int, ...]] = {
    "sin": (1,),
    "cos": (1,),
    "exp": (1,),
    "sqrt": (1,),
    "abs": (1,),
    "cutoff": (1, 3),
}

NAMES = ("x1", "x2", "pi")

_BINARY = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
}


def _validate(node: ast.AST, source: str) -> None:
    if isinstance(node, ast.Expression):
        _validate(node.body, source)
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, int | float):
            raise ExpressionError(f"unsupported literal {node.value!r} in {source!r}")
    elif isinstance(node, ast.Name):
        if node.id not in NAMES:
            raise ExpressionError(f"unknown name {node.id!r} in {source!r}")
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINARY:
            raise ExpressionError(
                f"unsupported operator {type(node.op).__name__} in {source!r}"
            )
        _validate(node.left, source)
        _validate(node.right, source)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, ast.UAdd | ast.USub):
            raise ExpressionError(
                f"unsupported unary operator {type(node.op).__name__} in {source!r}"
            )
        _validate(node.operand, source)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise ExpressionError(f"unsupported function call in {source!r}")
        if node.keywords or len(node.args) not in ARITY[node.func.id]:
            raise ExpressionError(
                f"{node.func.id}() takes {ARITY[node.func.id]} positional arguments"
            )
        for arg in node.args:
            _validate(arg, source)
    else:
        raise ExpressionError(
            f"unsupported syntax {type(node).__name__} in {source!r}"
        )


def _evaluate(node: ast.AST, env: dict[str, NDArray[np.float64] | float]) -> object:
    if isinstance(node, ast.Expression):
        return _evaluate(node.body, env)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return env[node.id]
    if isinstance(node, ast.BinOp):
        return _BINARY[type(node.op)](
            _evaluate(node.left, env), _evaluate(node.right, env)
        )
    if isinstance(node, ast.UnaryOp):
        value = _evaluate(node.operand, env)
        return np.negative(value) if isinstance(node.op, ast.USub) else value
    if isinstance(node, ast.Call):
        assert isinstance(node.func, ast.Name)
        args = [_evaluate(arg, env) for arg in node.args]
        return FUNCTIONS[node.func.id](*args)
    raise ExpressionError(f"unsupported syntax {type(node).__name__}")


@dataclass(frozen=True)
class Expression:
    """A compiled expression f(x1, x2) evaluated elementwise on arrays."""

    source: str
    tree: ast.Expression = field(repr=False, compare=False)

    def __call__(self, x1: ArrayLike, x2: ArrayLike) -> NDArray[np.float64]:
        x1_arr = np.asarray(x1, dtype=float)
        x2_arr = np.asarray(x2, dtype=float)
        shape = np.broadcast_shapes(x1_arr.shape, x2_arr.shape)
        env: dict[str, NDArray[np.float64] | float] = {
            "x1": x1_arr,
            "x2": x2_arr,
            "pi": float(np.pi),
        }
        with np.errstate(all="ignore"):
            value = np.asarray(_evaluate(self.tree, env), dtype=float)
        return np.array(np.broadcast_to(value, shape), dtype=float)


def compile_expression(source: str) -> Expression:
    """
    Parse and validate an expression in x1 and x2.

    Args:
        source: Expression text, e.g. ``"1 + 8*cutoff(sqrt(x1*x1 + (x2-0.5)*(x2-0.5)))"``

    Returns:
        Callable expression object

    Raises:
        ExpressionError: If the text is empty, not valid Python syntax, or uses
            anything outside the supported grammar
    """
    text = source.strip()
    if not text:
        raise ExpressionError("empty expression")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from exc
    _validate(tree, text)
    return Expression(source=text, tree=tree)
