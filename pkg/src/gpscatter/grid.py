"""Uniform periodic grids, Fourier multipliers and Sobolev norms.

Fourier convention: the unitary transform
``f_hat(xi) = (2 pi)^(-1/2) * int f(x) exp(-i x xi) dx``. On a grid with
spacing ``dx`` and ``n`` samples the coefficient at wavenumber ``k_j`` is
approximated by ``dx / sqrt(2 pi) * exp(-i k_j x0) * FFT(f)_j`` and the
spectral spacing is ``2 pi / L``. Consequently

    sum_j w(k_j) |f_hat_j|^2 dxi = (dx / n) * sum_j w(k_j) |FFT(f)_j|^2 .

Functions whose two ends do not match (kinks such as ``tanh``) can be marked
``even=True``. Fourier multipliers are then applied to the half-sample even
extension ``[f, f[::-1]]`` on the doubled period, which removes the jump at
the periodic seam and keeps spectral accuracy for boundary-flat data.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

HEADER_RE = re.compile(
    r"^#\s*gpfield\s+v1\s+L=(?P<L>\S+)\s+n=(?P<n>\S+)\s+x0=(?P<x0>\S+)\s*$"
)


class GridError(ValueError):
    """Invalid grid parameters or incompatible sampled data."""


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``[x0, x0 + length)`` with ``n`` samples."""

    length: float
    n: int
    x0: float

    def __post_init__(self):
        if not (np.isfinite(self.length) and self.length > 0):
            raise GridError(f"length must be positive, got {self.length}")
        if int(self.n) != self.n or not _is_power_of_two(int(self.n)):
            raise GridError(f"n must be a power of two, got {self.n}")
        if self.n < 8:
            raise GridError(f"n must be at least 8, got {self.n}")
        if not np.isfinite(self.x0):
            raise GridError("x0 must be finite")

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Wavenumbers in FFT order; the Nyquist mode carries a positive sign."""
        k = 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        k[self.n // 2] = abs(k[self.n // 2])
        return k

    @property
    def dxi(self) -> float:
        return 2 * np.pi / self.length

    def doubled(self) -> "Grid":
        """Grid carrying the even extension (twice the period)."""
        return Grid(2 * self.length, 2 * self.n, self.x0)

    def contains(self, other: "Grid", rtol: float = 1e-12) -> bool:
        return (
            self.n == other.n
            and math.isclose(self.length, other.length, rel_tol=rtol)
            and math.isclose(self.x0, other.x0, rel_tol=rtol, abs_tol=rtol)
        )


def make_grid(length: float, n: int, x0: float) -> Grid:
    return Grid(float(length), int(n), float(x0))


@dataclass(frozen=True)
class SampledFunction:
    """Samples of a function on a grid.

    ``even`` selects the even extension for Fourier multipliers (see module
    docstring); otherwise the samples are treated as one period.
    """

    grid: Grid
    values: np.ndarray
    even: bool = False

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.grid.n,):
            raise GridError(
                f"expected {self.grid.n} samples, got shape {v.shape}"
            )
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.grid, np.asarray(values), self.even)

    def fourier(self) -> np.ndarray:
        """Unitary Fourier coefficients ``f_hat(k_j)`` in FFT order."""
        g = self.grid
        phase = np.exp(-1j * g.wavenumbers * g.x0)
        return g.dx / np.sqrt(2 * np.pi) * phase * np.fft.fft(self.values)

    @classmethod
    def from_fourier(cls, grid: Grid, coeffs, real: bool = False):
        phase = np.exp(1j * grid.wavenumbers * grid.x0)
        vals = np.fft.ifft(np.asarray(coeffs) * phase) * np.sqrt(2 * np.pi) / grid.dx
        return cls(grid, vals.real if real else vals)

    def integral(self) -> complex | float:
        """Trapezoid rule on the periodic grid."""
        return self.grid.dx * np.sum(self.values)


def extended_values(f: SampledFunction) -> tuple[np.ndarray, np.ndarray]:
    """Values and wavenumbers of the array multipliers act on."""
    if f.even:
        v = np.concatenate([f.values, f.values[::-1]])
        return v, f.grid.doubled().wavenumbers
    return f.values, f.grid.wavenumbers


def apply_multiplier(
    f: SampledFunction, symbol: Callable[[np.ndarray], np.ndarray]
) -> SampledFunction:
    """Apply the Fourier multiplier ``symbol(k)`` and keep realness if the
    symbol is Hermitian (caller's responsibility)."""
    v, k = extended_values(f)
    out = np.fft.ifft(np.fft.fft(v) * symbol(k))[: f.grid.n]
    if f.is_real:
        out = out.real
    return f.with_values(out)


def spectral_derivative(f: SampledFunction, order: int = 1) -> SampledFunction:
    if order < 1:
        raise ValueError("order must be >= 1")

    def symbol(k):
        m = (1j * k) ** order
        if order % 2:
            m[len(k) // 2] = 0.0
        return m

    return apply_multiplier(f, symbol)


def mollify(f: SampledFunction, eps: float) -> SampledFunction:
    """Convolution with a unit-mass Gaussian of width ``eps``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    return apply_multiplier(f, lambda k: np.exp(-0.5 * (eps * k) ** 2))


def translate(f: SampledFunction, delta: float) -> SampledFunction:
    """Samples of ``x -> f(x + delta)`` by band-limited interpolation."""
    return apply_multiplier(f, lambda k: _shift_symbol(k, delta))


def _shift_symbol(k, delta):
    m = np.exp(1j * k * delta)
    # the Nyquist mode is ambiguous under translation; use its real part
    m[len(k) // 2] = np.cos(k[len(k) // 2] * delta)
    return m


def node_values(f: SampledFunction, offsets: Sequence[float]) -> np.ndarray:
    """Array ``out[i, j] = f(x_j + offsets[i])`` from one forward transform."""
    v, k = extended_values(f)
    fv = np.fft.fft(v)
    n = f.grid.n
    out = np.empty((len(offsets), n), dtype=complex)
    for i, d in enumerate(offsets):
        out[i] = np.fft.ifft(fv * _shift_symbol(k, d))[:n]
    return out.real if f.is_real else out


def sobolev_norm(f: SampledFunction, s: float, tau: float) -> float:
    """``(int (tau^2 + xi^2)^s |f_hat|^2 dxi)^(1/2)`` with ``tau >= 2``."""
    if tau < 2:
        raise ValueError(f"tau must be >= 2, got {tau}")
    return weighted_norm(f, s, tau)


def weighted_norm(f: SampledFunction, s: float, tau: float) -> float:
    """As :func:`sobolev_norm` without the range check on ``tau`` (``tau > 0``)."""
    vals = np.asarray(f.values)
    if not np.all(np.isfinite(vals)):
        raise ValueError("non-finite samples")
    g = f.grid
    F = np.fft.fft(vals)
    w = (tau**2 + g.wavenumbers**2) ** s
    return float(np.sqrt(g.dx / g.n * np.sum(w * np.abs(F) ** 2)))


def sobolev_inner(f: SampledFunction, g: SampledFunction, s: float, tau: float = 1.0) -> complex:
    """``int (tau^2 + xi^2)^s f_hat conj(g_hat) dxi``."""
    grid = f.grid
    w = (tau**2 + grid.wavenumbers**2) ** s
    return complex(grid.dx / grid.n * np.sum(w * np.fft.fft(f.values) * np.conj(np.fft.fft(g.values))))


def l2_norm(f: SampledFunction) -> float:
    return float(np.sqrt(f.grid.dx * np.sum(np.abs(f.values) ** 2)))


def cumulative_integral(f: SampledFunction, origin: float | None = None) -> SampledFunction:
    """Spectral antiderivative ``F(x) = int_origin^x f``.

    The mean of ``f`` is integrated exactly as a linear term; the remainder is
    inverted in Fourier space. Suitable for data that is periodic-flat.
    """
    g = f.grid
    vals = np.asarray(f.values, dtype=complex)
    mean = vals.mean()
    k = g.wavenumbers
    F = np.fft.fft(vals - mean)
    inv = np.zeros_like(F)
    nz = k != 0
    inv[nz] = F[nz] / (1j * k[nz])
    inv[g.n // 2] = 0.0
    periodic = np.fft.ifft(inv)
    x = g.x
    if origin is None:
        origin = g.x0
    # value of the periodic part at the origin via the trigonometric sum
    p0 = np.sum(inv * np.exp(1j * k * (origin - g.x0))) / g.n
    out = periodic - p0 + mean * (x - origin)
    if f.is_real:
        out = out.real
    return f.with_values(out)


def boundary_defect(values: np.ndarray, grid: Grid) -> float:
    """Mismatch of the two ends; periodic treatment is clean when small."""
    return float(abs(values[0] - values[-1]))


def assert_boundary_flat(f: SampledFunction, tol: float = 1e-10) -> None:
    """Raise if ``f`` is not flat and matching at the periodic seam."""
    if f.even:
        d = spectral_derivative(f)
        defect = float(max(abs(d.values[0]), abs(d.values[-1])))
    else:
        defect = boundary_defect(f.values, f.grid)
    if defect > tol:
        raise GridError(f"field not boundary-flat: defect {defect:.3e} > {tol:.1e}")


def write_field_file(path, f: SampledFunction) -> None:
    g = f.grid
    vals = np.asarray(f.values, dtype=complex)
    lines = [f"# gpfield v1 L={g.length:.17g} n={g.n} x0={g.x0:.17g}"]
    for x, v in zip(g.x, vals):
        lines.append(f"{x:.17g} {v.real:.17g} {v.imag:.17g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_field_file(path) -> SampledFunction:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text:
        raise GridError(f"{path}: empty field file")
    m = HEADER_RE.match(text[0].strip())
    if m is None:
        raise GridError(f"{path}: bad header {text[0]!r}")
    try:
        length = float(m["L"])
        n = int(m["n"])
        x0 = float(m["x0"])
    except ValueError as exc:
        raise GridError(f"{path}: malformed header numbers") from exc
    rows = [ln.split() for ln in text[1:] if ln.strip() and not ln.startswith("#")]
    if len(rows) != n:
        raise GridError(f"{path}: header says n={n} but found {len(rows)} samples")
    data = np.array(rows, dtype=float)
    if data.shape[1] != 3:
        raise GridError(f"{path}: expected 3 columns per line")
    grid = make_grid(length, n, x0)
    return SampledFunction(grid, data[:, 1] + 1j * data[:, 2])
