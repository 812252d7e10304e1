"""Scattering data of the Zakharov-Shabat operator with nonzero background.

Spectral points live on the sheet ``lam^2 - z^2 = 1`` with ``Im z > 0`` and
``zeta = lam + z``. The renormalized transmission coefficient is obtained
from the bounded ODE

    w' = [[0, q2], [q3, 2iz + q4]] w,    w(-inf) = (1, 0),

as ``Tc^{-1} = exp(Phi) * w^1(+inf)``. Points on the cut (real ``z``) use the
unrenormalized Lax system instead, whose coefficients stay bounded there.
Both systems are integrated with a sixth-order Magnus scheme whose Gauss-node
coefficients come from band-limited interpolation of the samples.
"""
from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .field import GPField, mass_momentum
from .grid import SampledFunction, cumulative_integral, node_values

GAUSS3 = (0.5 - math.sqrt(15) / 10, 0.5, 0.5 + math.sqrt(15) / 10)


class ScatteringError(ArithmeticError):
    """Numerical failure while solving a Jost problem."""


# --- parallel map ------------------------------------------------------------

def thread_count(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("GPSCATTER_THREADS", "1") or 1)
    return max(1, int(threads))


def pmap(fn: Callable, items: Sequence, threads: int | None = None) -> list:
    """Ordered map; results do not depend on the thread count."""
    items = list(items)
    nt = thread_count(threads)
    if nt == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=nt) as ex:
        return list(ex.map(fn, items))


# --- Riemann surface ---------------------------------------------------------

@dataclass(frozen=True)
class SpectralPoint:
    lam: complex
    z: complex
    zeta: complex
    kind: str = "generic"
    tau: float | None = None
    xi: float | None = None
    sign: int = 1

    @property
    def on_cut(self) -> bool:
        return self.kind == "cut"

    @property
    def omega(self) -> float | None:
        """``Im zeta`` on the imaginary axis."""
        return self.zeta.imag if self.kind == "imag_axis" else None


def surface_point(
    lam: complex | None = None,
    imag_tau: float | None = None,
    cut: float | None = None,
    sign: int = 1,
) -> SpectralPoint:
    """Construct a point from exactly one of ``lam``, ``imag_tau``, ``cut``."""
    given = [v is not None for v in (lam, imag_tau, cut)]
    if sum(given) != 1:
        raise ValueError("give exactly one of lam, imag_tau, cut")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if imag_tau is not None:
        tau = float(imag_tau)
        if tau < 2:
            raise ValueError("imag_tau requires tau >= 2")
        sigma = math.sqrt(tau * tau / 4 - 1)
        lam_ = complex(0.0, sign * sigma)
        z = complex(0.0, tau / 2)
        return SpectralPoint(lam_, z, lam_ + z, "imag_axis", tau=tau, sign=sign)
    if cut is not None:
        xi = float(cut)
        z = complex(xi / 2, 0.0)
        lam_ = complex(sign * math.sqrt(xi * xi / 4 + 1), 0.0)
        return SpectralPoint(lam_, z, lam_ + z, "cut", xi=xi, sign=sign)
    lam_ = complex(lam)
    if lam_.imag == 0 and abs(lam_.real) >= 1:
        raise ValueError(f"lambda={lam_} lies on the cut")
    z = cmath.sqrt(lam_ * lam_ - 1)
    if z.imag < 0 or (z.imag == 0 and z.real < 0):
        z = -z
    return SpectralPoint(lam_, z, lam_ + z, "generic")


# --- coefficients ------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientFields:
    q1: SampledFunction
    q2: SampledFunction
    q3: SampledFunction
    q4: SampledFunction
    phase: SampledFunction
    min_denominator: float


def _coefficients(q, dq, zeta):
    """The four rational coefficient expressions at arbitrary samples."""
    mod2 = (q * np.conj(q)).real
    a = mod2 - 1
    den = mod2 - zeta * zeta
    q1 = (1j * zeta * a - np.conj(q) * dq) / den
    q2 = (1j * zeta * dq + a * q) / den
    q3 = (-1j * zeta * np.conj(dq) + a * np.conj(q)) / den
    q4 = (2j * zeta * a + q * np.conj(dq) - np.conj(q) * dq) / den
    return q1, q2, q3, q4, den


def coefficient_fields(q: GPField, pt: SpectralPoint) -> CoefficientFields:
    v = q.values
    q1, q2, q3, q4, den = _coefficients(v, q.derivative(), pt.zeta)
    mind = float(np.min(np.abs(den)))
    if pt.on_cut and mind < 1e-6:
        raise ScatteringError(
            f"coefficient denominator |q|^2 - zeta^2 nearly vanishes ({mind:.2e}) on the cut"
        )
    g = q.grid
    s4 = SampledFunction(g, q4)
    phase = cumulative_integral(s4, origin=0.0).values + 2j * pt.z * g.x
    return CoefficientFields(
        SampledFunction(g, q1),
        SampledFunction(g, q2),
        SampledFunction(g, q3),
        s4,
        SampledFunction(g, phase),
        mind,
    )


def phi_correction(q: GPField, pt: SpectralPoint) -> complex:
    """``Phi = -(i/2z) int a^2/den + (1/(2 z zeta)) int conj(q) q' a/den``."""
    if pt.z == 0:
        raise ValueError("Phi is undefined at z = 0")
    v = q.values
    dq = q.derivative()
    a = np.abs(v) ** 2 - 1
    den = np.abs(v) ** 2 - pt.zeta**2
    dx = q.grid.dx
    i1 = dx * np.sum(a * a / den)
    i2 = dx * np.sum(np.conj(v) * dq * a / den)
    return complex(-1j / (2 * pt.z) * i1 + i2 / (2 * pt.z * pt.zeta))


# --- node sampling -------------------------------------------------------------

def _offsets(m: int, rule: Sequence[float]) -> list[float]:
    return [(i + c) / m for i in range(m) for c in rule]


def _nodes(q: GPField, m: int, rule=GAUSS3, tag="gauss"):
    """Field and derivative at ``x_j + (i + c) dx / m`` flattened step-major."""
    key = ("nodes", tag, m)
    if key not in q._cache:
        dx = q.grid.dx
        offs = [o * dx for o in _offsets(m, rule)]
        r = len(rule)
        qn = node_values(q.samples, offs)
        dsf = SampledFunction(q.grid, q.derivative(), q.samples.even)
        dqn = node_values(dsf, offs)
        n = q.grid.n

        def arrange(arr):
            return arr.reshape(m, r, n).transpose(2, 0, 1).reshape(n * m, r)

        q._cache[key] = (arrange(qn), arrange(dqn))
    return q._cache[key]


def substeps(q: GPField, pt: SpectralPoint, theta: float = 0.8) -> int:
    """Uniform substep count from the stiffest scale in play."""
    v = q.values
    _, q2, q3, q4, _ = _coefficients(v, q.derivative(), pt.zeta)
    scale = max(
        abs(2 * pt.z),
        abs(pt.lam) + 1.0,
        float(np.max(np.abs(q2))),
        float(np.max(np.abs(q3))),
        float(np.max(np.abs(q4))),
    )
    return int(min(64, max(2, math.ceil(q.grid.dx * scale / theta))))


def substeps_lax(q: GPField, pt: SpectralPoint, theta: float = 0.1) -> int:
    """Substeps for the Lax system, whose entries grow like ``|lam| + |z|``."""
    scale = abs(pt.lam) + abs(pt.z) + float(np.max(np.abs(q.values)))
    return int(min(64, max(2, math.ceil(q.grid.dx * scale / theta))))


def min_denominator(q: GPField, pt: SpectralPoint) -> float:
    return float(np.min(np.abs(np.abs(q.values) ** 2 - pt.zeta**2)))


def choose_route(q: GPField, pt: SpectralPoint, floor: float = 0.5) -> str:
    """``"renormalized"`` unless ``|q|^2 - zeta^2`` gets small somewhere.

    Small denominators occur on the cut and at ``-i sigma`` for fields whose
    modulus dips (kinks); the Lax system has bounded coefficients there.
    """
    if pt.on_cut or min_denominator(q, pt) < floor:
        return "lax"
    return "renormalized"


@dataclass(frozen=True)
class JostResult:
    w_inf: complex
    w2_inf: complex
    steps: int
    substeps: int
    peak: float


def _run(nodes, h, y0):
    y, bad, peak = _kernels.magnus6(nodes, h, np.asarray(y0, dtype=complex))
    return y, bad, peak


def _w_matrices(q: GPField, pt: SpectralPoint, m: int) -> np.ndarray:
    qn, dqn = _nodes(q, m)
    _, q2, q3, q4, _ = _coefficients(qn, dqn, pt.zeta)
    mats = np.zeros(qn.shape + (2, 2), dtype=complex)
    mats[..., 0, 1] = q2
    mats[..., 1, 0] = q3
    mats[..., 1, 1] = 2j * pt.z + q4
    return mats


def jost_solve(q: GPField, pt: SpectralPoint, m: int | None = None) -> JostResult:
    """Integrate the renormalized system from the left end to the right end."""
    if pt.on_cut:
        mind = float(np.min(np.abs(np.abs(q.values) ** 2 - pt.zeta**2)))
        if mind < 1e-6:
            raise ScatteringError(
                f"renormalized system singular on the cut (min denominator {mind:.1e})"
            )
    m = m or substeps(q, pt)
    h = q.grid.dx / m
    y, bad, peak = _run(_w_matrices(q, pt, m), h, (1.0, 0.0))
    if bad >= 0:
        x = q.grid.x0 + bad * h
        raise ScatteringError(f"Jost solution overflow near x={x:.3f}")
    if not np.all(np.isfinite(y)):
        raise ScatteringError("non-finite Jost solution")
    return JostResult(complex(y[0]), complex(y[1]), q.grid.n * m, m, float(peak))


def lax_transmission(q: GPField, pt: SpectralPoint, m: int | None = None) -> complex:
    """Classical ``T^{-1}`` from the Lax system ``u' = [[-i lam, q], [conj q, i lam]] u``.

    Integrates ``v = exp(izx) u`` from the left end with the Jost data fixed
    by the local end phases and projects onto the decaying/oscillating
    eigenvectors at the right end.
    """
    if pt.z == 0:
        raise ValueError("z = 0 is a branch point")
    m = m or substeps_lax(q, pt)
    h = q.grid.dx / m
    qn, _ = _nodes(q, m)
    lam, z = pt.lam, pt.z
    mats = np.zeros(qn.shape + (2, 2), dtype=complex)
    mats[..., 0, 0] = -1j * lam + 1j * z
    mats[..., 0, 1] = qn
    mats[..., 1, 0] = np.conj(qn)
    mats[..., 1, 1] = 1j * lam + 1j * z
    cl, cr = q.end_values
    cl, cr = cl / abs(cl), cr / abs(cr)
    y0 = (1.0, 1j * (lam - z) * np.conj(cl))
    y, bad, _ = _run(mats, h, y0)
    if bad >= 0:
        raise ScatteringError(f"Lax solution overflow near x={q.grid.x0 + bad * h:.3f}")
    # v(x_R) with x_R the point reached after n full cells
    e1 = 1j * (lam - z) * np.conj(cr)
    e2 = 1j * (lam + z) * np.conj(cr)
    return complex((y[1] - e2 * y[0]) / (e1 - e2))


def _mp(q: GPField) -> tuple[float, float]:
    key = "mass_momentum"
    if key not in q._cache:
        q._cache[key] = mass_momentum(q, marginal=np.inf)
    return q._cache[key]


def renormalization(q: GPField, pt: SpectralPoint) -> complex:
    """``exp(iM/(2z) + iP/(2 z zeta))``: classical = factor * renormalized."""
    mass, mom = _mp(q)
    return cmath.exp(1j * mass / (2 * pt.z) + 1j * mom / (2 * pt.z * pt.zeta))


def log_transmission(
    q: GPField, pt: SpectralPoint, m: int | None = None, route: str = "auto"
) -> complex:
    """``ln Tc^{-1}``; the real part is free of branch ambiguity.

    ``route`` selects the renormalized system (``exp(Phi) w^1``), the Lax
    system with the mass/momentum phase removed, or ``"auto"``.
    """
    if route == "auto":
        route = choose_route(q, pt)
    if route == "lax":
        t = lax_transmission(q, pt, m) / renormalization(q, pt)
        return complex(cmath.log(t))
    if route != "renormalized":
        raise ValueError(f"unknown route {route!r}")
    res = jost_solve(q, pt, m)
    return phi_correction(q, pt) + cmath.log(res.w_inf)


def transmission(
    q: GPField, pt: SpectralPoint, m: int | None = None, route: str = "auto"
) -> complex:
    """Renormalized transmission coefficient ``Tc^{-1}``."""
    return complex(cmath.exp(log_transmission(q, pt, m, route)))


def transmission_classical(q: GPField, pt: SpectralPoint, m: int | None = None) -> complex:
    if pt.on_cut:
        return lax_transmission(q, pt, m)
    return renormalization(q, pt) * transmission(q, pt, m)


def log_transmission_classical(
    q: GPField, pt: SpectralPoint, m: int | None = None, route: str = "auto"
) -> complex:
    mass, mom = _mp(q)
    return log_transmission(q, pt, m, route) + 1j * mass / (2 * pt.z) + 1j * mom / (2 * pt.z * pt.zeta)


# --- bound states ------------------------------------------------------------

@dataclass(frozen=True)
class Eigenvalue:
    lam: float
    z: complex
    slope: float


@dataclass
class EigenSearch:
    eigenvalues: list
    unresolved: list
    max_imag_residue: float
    evaluations: int


def _real_transmission(q: GPField):
    """Real function on (-1, 1) vanishing exactly at the bound states.

    On the gap the classical coefficient satisfies ``T(lam) = conj(T(lam)) * c+/c-``
    so dividing by a square root of ``c+/c-`` makes it real.
    """
    cl, cr = q.end_values
    rot = cmath.sqrt((cr / abs(cr)) / (cl / abs(cl)))
    counter = {"n": 0, "imag": 0.0}

    def f(lam):
        counter["n"] += 1
        pt = surface_point(lam=complex(lam, 0.0))
        t = lax_transmission(q, pt) / rot
        counter["imag"] = max(counter["imag"], abs(t.imag) / max(1.0, abs(t)))
        return t.real

    return f, counter


def eigenvalues(
    q: GPField,
    grid_density: int = 200,
    delta: float = 1e-3,
    xtol: float = 1e-12,
    threads: int | None = None,
) -> EigenSearch:
    """Scan ``(-1 + delta, 1 - delta)`` for sign changes and refine each root."""
    f, counter = _real_transmission(q)
    # even count keeps lam = 0 off the scan grid
    npts = grid_density + (grid_density % 2)
    lams = np.linspace(-1 + delta, 1 - delta, npts)
    vals = np.array(pmap(f, lams, threads))
    found, unresolved = [], []
    for i in range(npts - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            root = lams[i]
        elif a * b < 0:
            root = brentq(f, lams[i], lams[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps)
        else:
            continue
        hstep = 1e-5
        slope = (f(root + hstep) - f(root - hstep)) / (2 * hstep)
        if abs(slope) < 1e-8:
            unresolved.append(float(root))
            continue
        found.append(Eigenvalue(float(root), complex(0.0, math.sqrt(1 - root * root)), float(slope)))
    # sign changes hidden in the excluded zones next to the branch points
    for probe, inner in ((-1 + 1e-9, vals[0]), (1 - 1e-9, vals[-1])):
        try:
            edge = f(probe)
        except (ScatteringError, ValueError, ZeroDivisionError):
            continue
        if edge * inner < 0:
            unresolved.append(float(probe))
    return EigenSearch(found, unresolved, counter["imag"], counter["n"])


# --- Neumann series oracle ---------------------------------------------------

@dataclass(frozen=True)
class NeumannResult:
    partial_sums: list
    increments: list
    tail: float
    phi: complex

    @property
    def limit(self) -> complex:
        return self.partial_sums[-1]


def neumann_series(
    q: GPField,
    pt: SpectralPoint,
    n_max: int = 6,
    m: int | None = None,
    threshold: float = 0.5,
) -> NeumannResult:
    """Partial sums ``1 + sum_{j<=J} T_2j`` of ``w^1(+inf)``.

    ``w_k`` solves ``w_k' = diag(0, 2iz + q4) w_k + [[0, q2], [q3, 0]] w_{k-1}``;
    odd orders vanish in the first component at ``+inf``. The hierarchy is
    integrated with classical RK4 on a fine uniform mesh.
    """
    from .field import smallness_surrogate

    if pt.tau is not None and smallness_surrogate(q, 1.0, max(pt.tau, 2.0)) > threshold:
        import warnings

        warnings.warn("field may be outside the Neumann-series regime", RuntimeWarning, stacklevel=2)
    if m is None:
        m = max(4, math.ceil(q.grid.dx * abs(2 * pt.z) / 0.05))
    h = q.grid.dx / m
    qn, dqn = _nodes(q, m, rule=(0.0, 0.5, 1.0), tag="rk4")
    _, q2, q3, q4, _ = _coefficients(qn, dqn, pt.zeta)
    w = _kernels.neumann_rk4(
        np.ascontiguousarray(q2), np.ascontiguousarray(q3), np.ascontiguousarray(2j * pt.z + q4), h, 2 * n_max
    )
    first = w[:, 0]
    incs = [complex(first[2 * j]) for j in range(1, n_max + 1)]
    sums, acc = [], complex(first[0])
    sums.append(acc)
    for d in incs:
        acc += d
        sums.append(acc)
    mags = [abs(d) for d in incs if d != 0]
    if len(mags) >= 3 and mags[-1] > mags[-2] > mags[-3] and mags[-1] > 1e-14:
        raise ScatteringError("Neumann series diverging: field too large for the smallness regime")
    return NeumannResult(sums, incs, abs(incs[-1]) if incs else 0.0, phi_correction(q, pt))


# --- scattering data ---------------------------------------------------------

@dataclass
class ScatteringData:
    cut: list = field(default_factory=list)          # (xi, Tc^{-1}(+), Tc^{-1}(-))
    imag_axis: list = field(default_factory=list)    # (tau, ln Tc^{-1}(i sigma))
    eigenvalues: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


def cut_samples(q: GPField, xis: Iterable[float], threads: int | None = None) -> list:
    """``(xi, Tc^{-1}(+sqrt(xi^2/4+1)), Tc^{-1}(-sqrt(...)))`` per ``xi``."""

    def one(xi):
        plus = transmission(q, surface_point(cut=xi, sign=1))
        minus = transmission(q, surface_point(cut=xi, sign=-1))
        return float(xi), plus, minus

    return pmap(one, list(xis), threads)


def scattering_data(
    q: GPField,
    taus: Iterable[float] = (),
    xis: Iterable[float] = (),
    eigen: bool = False,
    threads: int | None = None,
) -> ScatteringData:
    data = ScatteringData()
    data.cut = cut_samples(q, xis, threads)
    data.imag_axis = [
        (float(t), lt)
        for t, lt in zip(
            list(taus),
            pmap(lambda t: log_transmission(q, surface_point(imag_tau=t)), list(taus), threads),
        )
    ]
    if eigen:
        res = eigenvalues(q, threads=threads)
        data.eigenvalues = res.eigenvalues
        data.diagnostics["unresolved"] = res.unresolved
        data.diagnostics["eigen_imag_residue"] = res.max_imag_residue
    if data.cut:
        data.diagnostics["min_abs_cut"] = float(
            min(min(abs(p), abs(m_)) for _, p, m_ in data.cut)
        )
    return data
