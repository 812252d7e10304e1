"""Gross-Pitaevskii fields, the derived pair and classical functionals."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import (
    Grid,
    SampledFunction,
    make_grid,
    read_field_file,
    sobolev_norm,
    spectral_derivative,
)

DEFAULT_GRID = dict(length=40.0, n=1024, x0=-20.0)


class FieldError(ValueError):
    """A sampled field violates the boundary conditions."""


def default_grid() -> Grid:
    return make_grid(**DEFAULT_GRID)


@dataclass(eq=False)
class GPField:
    """A sampled field with ``|q| -> 1`` at both ends.

    ``boundary_kind`` is ``"flat"`` when both ends carry the same constant
    (plain periodic treatment) and ``"kink"`` otherwise (even extension).
    """

    samples: SampledFunction
    boundary_kind: str
    tol: float = 1e-8
    decay_defect: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_values(cls, grid: Grid, values, tol: float = 1e-8, check: bool = True):
        v = np.asarray(values, dtype=complex)
        if v.shape != (grid.n,):
            raise FieldError(f"expected {grid.n} samples, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise FieldError("non-finite samples")
        kind = "flat" if abs(v[0] - v[-1]) <= tol else "kink"
        samples = SampledFunction(grid, v, even=(kind == "kink"))
        defect = _edge_defect(samples)
        if check and defect > tol:
            raise FieldError(
                f"boundary decay violated: edge defect {defect:.2e} > {tol:.1e}"
            )
        return cls(samples, kind, tol, defect)

    @property
    def grid(self) -> Grid:
        return self.samples.grid

    @property
    def values(self) -> np.ndarray:
        return self.samples.values

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def end_values(self) -> tuple[complex, complex]:
        return complex(self.values[0]), complex(self.values[-1])

    def derivative(self, order: int = 1) -> np.ndarray:
        key = ("deriv", order)
        if key not in self._cache:
            self._cache[key] = spectral_derivative(self.samples, order).values
        return self._cache[key]

    def rotated(self, alpha: float) -> "GPField":
        return GPField.from_values(self.grid, np.exp(1j * alpha) * self.values, self.tol)

    def band_defect(self, fraction: float = 0.05) -> float:
        """Largest decay defect inside the outer ``fraction`` of the grid."""
        m = max(1, int(round(fraction * self.grid.n)))
        a = np.abs(np.abs(self.values) ** 2 - 1)
        b = np.abs(self.derivative())
        band = np.r_[0:m, self.grid.n - m : self.grid.n]
        return float(max(a[band].max(), b[band].max()))


def _edge_defect(samples: SampledFunction) -> float:
    v = samples.values
    d = spectral_derivative(samples).values
    a = np.abs(np.abs(v) ** 2 - 1)
    return float(max(a[0], a[-1], abs(d[0]), abs(d[-1])))


@dataclass(frozen=True)
class DerivedPair:
    """``a = |q|^2 - 1`` and ``b = q'``."""

    a: SampledFunction
    b: SampledFunction


def derived_pair(q: GPField) -> DerivedPair:
    a = np.abs(q.values) ** 2 - 1.0
    return DerivedPair(
        SampledFunction(q.grid, a), SampledFunction(q.grid, q.derivative())
    )


def energy_norm(q: GPField, s: float, tau: float = 2.0) -> float:
    """``E^s_tau``: the ``H^{s-1}_tau`` norm of the derived pair."""
    p = derived_pair(q)
    na = sobolev_norm(p.a, s - 1, tau)
    nb = sobolev_norm(p.b, s - 1, tau)
    return float(math.hypot(na, nb))


def smallness_surrogate(q: GPField, s: float, tau: float) -> float:
    """Sobolev majorant ``tau^(-1/2-s) E^s_tau`` used as smallness proxy."""
    return tau ** (-0.5 - s) * energy_norm(q, s, tau)


def mass_momentum(q: GPField, marginal: float = 1e-10) -> tuple[float, float]:
    """``M = int(|q|^2-1)`` and ``P = Im int q conj(q')``."""
    if q.decay_defect > marginal:
        warnings.warn(
            f"mass/momentum on a field with edge defect {q.decay_defect:.1e}",
            RuntimeWarning,
            stacklevel=2,
        )
    dx = q.grid.dx
    v = q.values
    mass = float(dx * np.sum(np.abs(v) ** 2 - 1))
    momentum = float(dx * np.sum(np.imag(v * np.conj(q.derivative()))))
    return mass, momentum


def ginzburg_landau(q: GPField) -> float:
    a = np.abs(q.values) ** 2 - 1
    b = q.derivative()
    return float(0.5 * q.grid.dx * np.sum(a**2 + np.abs(b) ** 2))


def hamiltonian_h3(q: GPField) -> float:
    v = q.values
    d1 = q.derivative(1)
    d2 = q.derivative(2)
    a = np.abs(v) ** 2 - 1
    dens = np.imag(d1 * np.conj(d2) + 3 * a * v * np.conj(d1))
    _, p = mass_momentum(q, marginal=np.inf)
    return float(q.grid.dx * np.sum(dens) - p)


def two_variation(v, append_zero: bool = False) -> float:
    """Supremum over increasing index chains of ``sqrt(sum |v_{t+1}-v_t|^2)``."""
    v = np.asarray(v)
    if append_zero:
        v = np.append(v, 0)
    n = len(v)
    if n > 2001:
        raise ValueError("two_variation is a diagnostic limited to 2000 samples")
    best = np.zeros(n)
    for j in range(1, n):
        best[j] = max(0.0, float(np.max(best[:j] + np.abs(v[j] - v[:j]) ** 2)))
    return float(np.sqrt(best.max())) if n else 0.0


# --- presets ---------------------------------------------------------------

def dark_soliton(x, phi: float, t: float = 0.0):
    """Travelling dark soliton with phase parameter ``phi``."""
    c, s = math.cos(phi), math.sin(phi)
    return 1j * s + c * np.tanh(c * (x - 2 * s * t))


def _preset_values(name: str, args: list[float], x: np.ndarray) -> np.ndarray:
    def need(k):
        if len(args) != k:
            raise ValueError(f"preset {name!r} takes {k} parameter(s), got {len(args)}")

    if name == "one":
        need(0)
        return np.ones_like(x, dtype=complex)
    if name == "black":
        need(0)
        return np.tanh(x).astype(complex)
    if name == "dark":
        need(1)
        return dark_soliton(x, args[0])
    if name == "bump":
        need(2)
        a, w = args
        return (1 + a * np.exp(-((x / w) ** 2))).astype(complex)
    if name == "kinkpair":
        need(1)
        d = args[0]
        return (np.tanh(x + d) * np.tanh(d - x)).astype(complex)
    if name == "pdark":
        need(3)
        phi, a, w = args
        return dark_soliton(x, phi) + a * np.exp(-((x / w) ** 2))
    if name == "kinkbump":
        need(1)
        return (-np.tanh(x) + args[0] / np.cosh(x) ** 2).astype(complex)
    raise ValueError(f"unknown preset {name!r}")


PRESET_NAMES = ("one", "black", "dark", "bump", "kinkpair", "pdark", "kinkbump")


def preset(spec: str, grid: Grid | None = None, tol: float = 1e-8) -> GPField:
    """Build a preset field from ``[-]name[:p1[:p2]][@shift]``.

    ``@shift`` translates the profile to ``x - shift``; a leading ``-``
    negates it.
    """
    grid = grid or default_grid()
    sign = -1.0 if spec.startswith("-") else 1.0
    body, _, shift = spec.lstrip("-").partition("@")
    name, *rest = body.split(":")
    try:
        args = [float(r) for r in rest]
        dx = float(shift) if shift else 0.0
    except ValueError as exc:
        raise ValueError(f"malformed preset {spec!r}") from exc
    vals = sign * _preset_values(name, args, grid.x - dx)
    return GPField.from_values(grid, vals, tol)


def load_field(spec: str, grid: Grid | None = None, tol: float = 1e-8) -> GPField:
    """Preset name or path to a field file."""
    path = Path(spec)
    if path.is_file():
        s = read_field_file(path)
        return GPField.from_values(s.grid, s.values, tol)
    return preset(spec, grid, tol)
