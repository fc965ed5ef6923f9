"""Separable analytic field specifications with exact derivatives.

A spec is a sum of terms, each a coefficient times one factor per space
axis and an optional time factor. Factors are constants, monomials,
sines/cosines or exponentials, so first and second derivatives are closed
form. Sampling a spec on a grid gives both nodal values and exact partial
derivatives; the ``Sampled*`` classes then propagate those derivatives
through sums, products and quotients, which is what lets manufactured
states be closed pointwise without any finite differencing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .fields import Grid, ScalarField, TensorField, VectorField

__all__ = [
    "AxisFactor",
    "Term",
    "AnalyticFieldSpec",
    "AnalyticVectorSpec",
    "AnalyticTensorSpec",
    "SampledScalar",
    "SampledVector",
    "SampledTensor",
]


@dataclass(frozen=True)
class AxisFactor:
    """One separable factor: const, poly, sin, cos or exp."""

    kind: str = "const"
    power: int = 0
    freq: float = 1.0
    phase: float = 0.0
    rate: float = 0.0

    def value(self, x):
        if self.kind == "const":
            return np.ones_like(np.asarray(x, dtype=np.float64))
        if self.kind == "poly":
            return np.asarray(x, dtype=np.float64) ** self.power
        if self.kind == "sin":
            return np.sin(self.freq * np.asarray(x) + self.phase)
        if self.kind == "cos":
            return np.cos(self.freq * np.asarray(x) + self.phase)
        if self.kind == "exp":
            return np.exp(self.rate * np.asarray(x))
        raise ValueError(f"unknown factor kind {self.kind!r}")

    def derivative(self) -> "AxisFactor":
        if self.kind == "const":
            return AxisFactor("poly", power=0)  # placeholder, scaled by 0 below
        if self.kind == "poly":
            return AxisFactor("poly", power=max(self.power - 1, 0))
        if self.kind == "sin":
            return AxisFactor("cos", freq=self.freq, phase=self.phase)
        if self.kind == "cos":
            return AxisFactor("sin", freq=self.freq, phase=self.phase)
        if self.kind == "exp":
            return AxisFactor("exp", rate=self.rate)
        raise ValueError(f"unknown factor kind {self.kind!r}")

    def derivative_scale(self) -> float:
        """Scalar multiplying the derivative factor."""
        if self.kind == "const":
            return 0.0
        if self.kind == "poly":
            return float(self.power)
        if self.kind == "sin":
            return self.freq
        if self.kind == "cos":
            return -self.freq
        if self.kind == "exp":
            return self.rate
        raise ValueError(f"unknown factor kind {self.kind!r}")

    def to_dict(self) -> dict:
        doc = {"kind": self.kind}
        if self.kind == "poly":
            doc["power"] = self.power
        elif self.kind in ("sin", "cos"):
            doc["freq"] = self.freq
            doc["phase"] = self.phase
        elif self.kind == "exp":
            doc["rate"] = self.rate
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "AxisFactor":
        return cls(
            kind=doc.get("kind", "const"),
            power=int(doc.get("power", 0)),
            freq=float(doc.get("freq", 1.0)),
            phase=float(doc.get("phase", 0.0)),
            rate=float(doc.get("rate", 0.0)),
        )


_CONST = AxisFactor("const")


@dataclass(frozen=True)
class Term:
    coefficient: float = 1.0
    x: AxisFactor = _CONST
    y: AxisFactor = _CONST
    z: AxisFactor = _CONST
    t: AxisFactor = _CONST

    def factors(self) -> tuple[AxisFactor, AxisFactor, AxisFactor]:
        return (self.x, self.y, self.z)

    def to_dict(self) -> dict:
        return {
            "coefficient": self.coefficient,
            "x": self.x.to_dict(),
            "y": self.y.to_dict(),
            "z": self.z.to_dict(),
            "t": self.t.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Term":
        return cls(
            coefficient=float(doc.get("coefficient", 1.0)),
            x=AxisFactor.from_dict(doc.get("x", {})),
            y=AxisFactor.from_dict(doc.get("y", {})),
            z=AxisFactor.from_dict(doc.get("z", {})),
            t=AxisFactor.from_dict(doc.get("t", {})),
        )


def _axis_values(factor: AxisFactor, coords: np.ndarray, order: int) -> tuple[np.ndarray, float]:
    scale = 1.0
    for _ in range(order):
        scale *= factor.derivative_scale()
        factor = factor.derivative()
    if scale == 0.0:
        return np.zeros_like(coords), 0.0
    return factor.value(coords), scale


@dataclass
class AnalyticFieldSpec:
    """Scalar analytic field: sum of separable space-time terms."""

    terms: list[Term] = field(default_factory=list)

    @classmethod
    def constant(cls, value: float) -> "AnalyticFieldSpec":
        return cls([Term(coefficient=float(value))])

    def scaled(self, factor: float) -> "AnalyticFieldSpec":
        from dataclasses import replace

        return AnalyticFieldSpec([replace(t, coefficient=t.coefficient * factor) for t in self.terms])

    def __add__(self, other: "AnalyticFieldSpec") -> "AnalyticFieldSpec":
        return AnalyticFieldSpec(list(self.terms) + list(other.terms))

    def _grid_eval(self, grid: Grid, t: float, orders: tuple[int, int, int], t_order: int) -> np.ndarray:
        xs, ys, zs = grid.axes()
        out = np.zeros(grid.shape)
        for term in self.terms:
            coeff = term.coefficient
            if t_order:
                tfac, tscale = _axis_values(term.t, np.asarray(float(t)), t_order)
                if tscale == 0.0:
                    continue
                coeff *= tscale * float(tfac)
            else:
                coeff *= float(term.t.value(np.asarray(float(t))))
            ax, sx = _axis_values(term.x, xs, orders[0])
            ay, sy = _axis_values(term.y, ys, orders[1])
            az, sz = _axis_values(term.z, zs, orders[2])
            for order, s in zip(orders, (sx, sy, sz)):
                if order:
                    coeff *= s
            if coeff == 0.0:
                continue
            out += coeff * ax[:, None, None] * ay[None, :, None] * az[None, None, :]
        return out

    def values(self, grid: Grid, t: float = 0.0) -> np.ndarray:
        return self._grid_eval(grid, t, (0, 0, 0), 0)

    def derivative(self, grid: Grid, t: float, axis: str, order: int = 1) -> np.ndarray:
        """Exact partial derivative sampled on the grid; axis in x, y, z, t."""
        if axis == "t":
            return self._grid_eval(grid, t, (0, 0, 0), order)
        orders = [0, 0, 0]
        orders["xyz".index(axis)] = order
        return self._grid_eval(grid, t, tuple(orders), 0)

    def field(self, grid: Grid, t: float = 0.0, unit: str = "") -> ScalarField:
        return ScalarField(grid, self.values(grid, t), unit)

    def sampled(self, grid: Grid, t: float = 0.0) -> "SampledScalar":
        return SampledScalar(
            self.values(grid, t),
            self.derivative(grid, t, "x"),
            self.derivative(grid, t, "y"),
            self.derivative(grid, t, "z"),
            self.derivative(grid, t, "t"),
        )

    def at_points(self, points: np.ndarray, t: float = 0.0) -> np.ndarray:
        """Evaluate at arbitrary coordinates, shape (..., 3)."""
        pts = np.asarray(points, dtype=np.float64)
        out = np.zeros(pts.shape[:-1])
        for term in self.terms:
            tv = float(term.t.value(np.asarray(float(t))))
            out += (
                term.coefficient
                * tv
                * term.x.value(pts[..., 0])
                * term.y.value(pts[..., 1])
                * term.z.value(pts[..., 2])
            )
        return out

    def to_dict(self) -> dict:
        return {"terms": [term.to_dict() for term in self.terms]}

    @classmethod
    def from_dict(cls, doc: dict) -> "AnalyticFieldSpec":
        return cls([Term.from_dict(t) for t in doc.get("terms", [])])


@dataclass
class AnalyticVectorSpec:
    components: tuple[AnalyticFieldSpec, AnalyticFieldSpec, AnalyticFieldSpec]

    @classmethod
    def zero(cls) -> "AnalyticVectorSpec":
        return cls((AnalyticFieldSpec(), AnalyticFieldSpec(), AnalyticFieldSpec()))

    @classmethod
    def constant(cls, vec) -> "AnalyticVectorSpec":
        return cls(tuple(AnalyticFieldSpec.constant(float(v)) for v in vec))

    def values(self, grid: Grid, t: float = 0.0) -> np.ndarray:
        return np.stack([c.values(grid, t) for c in self.components], axis=-1)

    def field(self, grid: Grid, t: float = 0.0, unit: str = "") -> VectorField:
        return VectorField(grid, self.values(grid, t), unit)

    def sampled(self, grid: Grid, t: float = 0.0) -> "SampledVector":
        return SampledVector([c.sampled(grid, t) for c in self.components])

    def at_points(self, points: np.ndarray, t: float = 0.0) -> np.ndarray:
        return np.stack([c.at_points(points, t) for c in self.components], axis=-1)

    def to_dict(self) -> dict:
        return {"components": [c.to_dict() for c in self.components]}

    @classmethod
    def from_dict(cls, doc: dict) -> "AnalyticVectorSpec":
        comps = [AnalyticFieldSpec.from_dict(c) for c in doc["components"]]
        if len(comps) != 3:
            raise ValueError("vector spec needs exactly 3 components")
        return cls(tuple(comps))


@dataclass
class AnalyticTensorSpec:
    components: tuple[tuple[AnalyticFieldSpec, ...], ...]

    @classmethod
    def zero(cls) -> "AnalyticTensorSpec":
        return cls(tuple(tuple(AnalyticFieldSpec() for _ in range(3)) for _ in range(3)))

    def values(self, grid: Grid, t: float = 0.0) -> np.ndarray:
        rows = [np.stack([c.values(grid, t) for c in row], axis=-1) for row in self.components]
        return np.stack(rows, axis=-2)

    def field(self, grid: Grid, t: float = 0.0, unit: str = "") -> TensorField:
        return TensorField(grid, self.values(grid, t), unit)

    def sampled(self, grid: Grid, t: float = 0.0) -> "SampledTensor":
        return SampledTensor([[c.sampled(grid, t) for c in row] for row in self.components])

    def to_dict(self) -> dict:
        return {"components": [[c.to_dict() for c in row] for row in self.components]}

    @classmethod
    def from_dict(cls, doc: dict) -> "AnalyticTensorSpec":
        rows = doc["components"]
        if len(rows) != 3 or any(len(r) != 3 for r in rows):
            raise ValueError("tensor spec needs a 3x3 component table")
        return cls(tuple(tuple(AnalyticFieldSpec.from_dict(c) for c in row) for row in rows))


class SampledScalar:
    """Scalar samples with exact first partials, closed under +,-,*,/."""

    __slots__ = ("value", "dx", "dy", "dz", "dt")

    def __init__(self, value, dx, dy, dz, dt):
        self.value = np.asarray(value, dtype=np.float64)
        self.dx = np.asarray(dx, dtype=np.float64)
        self.dy = np.asarray(dy, dtype=np.float64)
        self.dz = np.asarray(dz, dtype=np.float64)
        self.dt = np.asarray(dt, dtype=np.float64)

    @classmethod
    def const(cls, grid: Grid, value: float) -> "SampledScalar":
        z = np.zeros(grid.shape)
        return cls(np.full(grid.shape, float(value)), z, z, z, z)

    def parts(self):
        return (self.value, self.dx, self.dy, self.dz, self.dt)

    def __add__(self, other):
        other = _as_sampled(other, self)
        return SampledScalar(*(a + b for a, b in zip(self.parts(), other.parts())))

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_sampled(other, self)
        return SampledScalar(*(a - b for a, b in zip(self.parts(), other.parts())))

    def __rsub__(self, other):
        return _as_sampled(other, self) - self

    def __neg__(self):
        return SampledScalar(*(-a for a in self.parts()))

    def __mul__(self, other):
        if np.isscalar(other):
            return SampledScalar(*(a * other for a in self.parts()))
        return SampledScalar(
            self.value * other.value,
            self.dx * other.value + self.value * other.dx,
            self.dy * other.value + self.value * other.dy,
            self.dz * other.value + self.value * other.dz,
            self.dt * other.value + self.value * other.dt,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return self * (1.0 / other)
        inv2 = 1.0 / (other.value * other.value)
        return SampledScalar(
            self.value / other.value,
            (self.dx * other.value - self.value * other.dx) * inv2,
            (self.dy * other.value - self.value * other.dy) * inv2,
            (self.dz * other.value - self.value * other.dz) * inv2,
            (self.dt * other.value - self.value * other.dt) * inv2,
        )

    def grad(self) -> np.ndarray:
        return np.stack([self.dx, self.dy, self.dz], axis=-1)


def _as_sampled(value, like: SampledScalar) -> SampledScalar:
    if isinstance(value, SampledScalar):
        return value
    z = np.zeros_like(like.value)
    return SampledScalar(np.full_like(like.value, float(value)), z, z, z, z)


class SampledVector:
    """Three SampledScalar components with vector calculus helpers."""

    __slots__ = ("c",)

    def __init__(self, components: Sequence[SampledScalar]):
        if len(components) != 3:
            raise ValueError("need 3 components")
        self.c = list(components)

    @classmethod
    def const(cls, grid: Grid, vec) -> "SampledVector":
        return cls([SampledScalar.const(grid, float(v)) for v in vec])

    @property
    def value(self) -> np.ndarray:
        return np.stack([ci.value for ci in self.c], axis=-1)

    @property
    def dt(self) -> np.ndarray:
        return np.stack([ci.dt for ci in self.c], axis=-1)

    def __add__(self, other: "SampledVector") -> "SampledVector":
        return SampledVector([a + b for a, b in zip(self.c, other.c)])

    def __sub__(self, other: "SampledVector") -> "SampledVector":
        return SampledVector([a - b for a, b in zip(self.c, other.c)])

    def __neg__(self) -> "SampledVector":
        return SampledVector([-a for a in self.c])

    def scale(self, s) -> "SampledVector":
        return SampledVector([ci * s for ci in self.c])

    def dot(self, other: "SampledVector") -> SampledScalar:
        return self.c[0] * other.c[0] + self.c[1] * other.c[1] + self.c[2] * other.c[2]

    def grad(self) -> np.ndarray:
        """Exact gradient array, entry (i, j) holding d v_i / d x_j."""
        return np.stack([ci.grad() for ci in self.c], axis=-2)

    def div(self) -> np.ndarray:
        return self.c[0].dx + self.c[1].dy + self.c[2].dz

    def curl(self) -> np.ndarray:
        return np.stack(
            [
                self.c[2].dy - self.c[1].dz,
                self.c[0].dz - self.c[2].dx,
                self.c[1].dx - self.c[0].dy,
            ],
            axis=-1,
        )

    def outer(self, other: "SampledVector") -> "SampledTensor":
        return SampledTensor([[a * b for b in other.c] for a in self.c])


class SampledTensor:
    """3x3 table of SampledScalar entries."""

    __slots__ = ("c",)

    def __init__(self, components):
        self.c = [list(row) for row in components]
        if len(self.c) != 3 or any(len(r) != 3 for r in self.c):
            raise ValueError("need a 3x3 component table")

    @property
    def value(self) -> np.ndarray:
        rows = [np.stack([e.value for e in row], axis=-1) for row in self.c]
        return np.stack(rows, axis=-2)

    def __add__(self, other: "SampledTensor") -> "SampledTensor":
        return SampledTensor([[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.c, other.c)])

    def __sub__(self, other: "SampledTensor") -> "SampledTensor":
        return SampledTensor([[a - b for a, b in zip(ra, rb)] for ra, rb in zip(self.c, other.c)])

    def scale(self, s) -> "SampledTensor":
        return SampledTensor([[e * s for e in row] for row in self.c])

    def sym(self) -> "SampledTensor":
        return SampledTensor(
            [[(self.c[i][j] + self.c[j][i]) * 0.5 for j in range(3)] for i in range(3)]
        )

    def div(self) -> np.ndarray:
        """Divergence contracting the second index, entry i = d_j T_ij."""
        return np.stack(
            [row[0].dx + row[1].dy + row[2].dz for row in self.c],
            axis=-1,
        )


def cross_sampled(a: SampledVector) -> SampledTensor:
    """Sampled cross-product tensor: (a x) b = a x b for every b."""
    zero = a.c[0] * 0.0
    return SampledTensor(
        [
            [zero, -a.c[2], a.c[1]],
            [a.c[2], zero, -a.c[0]],
            [-a.c[1], a.c[0], zero],
        ]
    )
