"""Build library objects from JSON-style descriptions (used by the CLI and config files)."""
from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from . import dynamics as dyn
from .errors import BadParameter
from .exact_core import as_rational, format_rational, sqrt_oracle
from .measures import (
    ComputableMeasure,
    FiniteMeasure,
    atomic_mixture,
    bernoulli,
    lebesgue,
    piecewise_density,
    quadratic_atoms,
)
from .randomness import oscillating_point
from .spaces import CANTOR, INTERVAL, ApproxPoint, Space

NAMED_MEASURES = {
    "lebesgue": lebesgue,
    "fair-coin": lambda: bernoulli(Fraction(1, 2)),
    "piecewise": lambda: piecewise_density([0, Fraction(1, 2), 1], [Fraction(3, 2), Fraction(1, 2)]),
    "half-atom": lambda: atomic_mixture([(Fraction(1, 2), Fraction(1))], lebesgue(), Fraction(1, 2)),
    "quadratic": quadratic_atoms,
}


def _one_key(spec: dict, what: str):
    if not isinstance(spec, dict) or len(spec) != 1:
        raise BadParameter(f"{what} spec must be a name or a one-key object, got {spec!r}")
    return next(iter(spec.items()))


def measure_from_spec(spec: Any) -> ComputableMeasure:
    if isinstance(spec, str):
        if spec not in NAMED_MEASURES:
            raise BadParameter(f"unknown measure {spec!r}; known: {', '.join(sorted(NAMED_MEASURES))}")
        return NAMED_MEASURES[spec]()
    key, val = _one_key(spec, "measure")
    if key == "bernoulli":
        return bernoulli(as_rational(val))
    if key == "piecewise":
        return piecewise_density(val["breaks"], val["densities"])
    raise BadParameter(f"unknown measure kind {key!r}")


def finite_measure_from_spec(spec: Any, space: Space = INTERVAL) -> FiniteMeasure:
    """``{"space": ..., "atoms": [{"point": ..., "weight": "p/q"}]}`` or ``[[point, weight], ...]``."""
    if isinstance(spec, list):
        return FiniteMeasure.from_pairs(space, [(p if space is CANTOR else as_rational(p), as_rational(w))
                                                for p, w in spec])
    return FiniteMeasure.from_json(spec)


def system_from_spec(name: str, params: Optional[dict] = None) -> dyn.DynSystem:
    params = params or {}
    if name == "shift":
        return dyn.shift(as_rational(params.get("p", "1/2")))
    if name == "doubling":
        return dyn.doubling()
    if name == "manneville_pomeau":
        return dyn.manneville_pomeau(as_rational(params.get("s", 1)))
    if name == "rotation":
        theta = params.get("theta", "golden")
        return dyn.golden_rotation() if theta == "golden" else dyn.rotation(as_rational(theta))
    raise BadParameter(f"unknown system {name!r}")


def observable_from_spec(spec: Any) -> dyn.ObservableFn:
    if spec == "identity":
        return dyn.identity_observable()
    key, val = _one_key(spec, "observable")
    if key == "cylinder":
        return dyn.cylinder(val)
    if key == "interval":
        return dyn.dyadic_indicator(*val)
    if key == "step":
        return dyn.step_function(val["cuts"], val["values"])
    if key == "local":
        return dyn.local_function(int(val["L"]), val["values"])
    raise BadParameter(f"unknown observable kind {key!r}")


def point_from_spec(spec: Any, space: Space, seed: int = 0):
    """A point for the given space: exact word/rational where possible, else an ApproxPoint."""
    if isinstance(spec, str):
        if space is INTERVAL:
            return as_rational(spec)
        if set(spec) <= {"0", "1"}:
            return spec
        raise BadParameter(f"not a binary word: {spec!r}")
    key, val = _one_key(spec, "point")
    if key == "word":
        return ApproxPoint.from_word(val)
    if key == "periodic":
        return ApproxPoint.periodic(val)
    if key == "oscillating":
        return oscillating_point(int(val))
    if key == "pseudorandom":
        return dyn.pseudorandom_point(seed, int(val))
    if key == "rational":
        return as_rational(val)
    if key == "sqrt":
        return sqrt_oracle(as_rational(val))
    if key == "file":
        text = Path(val).read_text().strip()
        return point_from_spec(text, space, seed)
    raise BadParameter(f"unknown point kind {key!r}")


def rational_list(values) -> list:
    return [as_rational(v) for v in values]


def show(q) -> str:
    return format_rational(q)
