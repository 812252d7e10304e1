"""Miura map between the real mKdV and KdV6 sides.

``u = M(q) - 1 = q' + q^2 - 1``. The inverse solves the Riccati equation
``v' = u + 1 - v^2`` for ``v = (ln phi)'`` with ``phi`` the decaying
solution of ``-phi'' + u phi + phi = 0``; the ground state itself is never
formed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .evolution import evolve_kdv6, evolve_mkdv
from .field import GPField
from .grid import SampledFunction, l2_norm, node_values, spectral_derivative

KINK_TOL = 1e-8
BLOWUP = 1e8


class MiuraError(ArithmeticError):
    """The Riccati inverse does not exist on the resolved scale."""


def as_real(q) -> SampledFunction:
    """Real samples of ``q``; ends that differ switch on the even extension."""
    samples = q.samples if isinstance(q, GPField) else q
    vals = np.asarray(samples.values)
    if np.iscomplexobj(vals):
        if np.max(np.abs(vals.imag)) > 1e-12 * max(1.0, float(np.max(np.abs(vals)))):
            raise ValueError("the Miura map needs real data")
        vals = vals.real
    even = samples.even or abs(vals[0] - vals[-1]) > KINK_TOL
    return SampledFunction(samples.grid, vals.astype(float), even)


def miura_map(q) -> SampledFunction:
    """Spectral ``q' + q^2 - 1``."""
    q = as_real(q)
    dq = spectral_derivative(q).values
    return SampledFunction(q.grid, dq + q.values**2 - 1.0)


@dataclass(frozen=True)
class MiuraPair:
    """Matching data on both sides; ``case`` is ``"A"`` or ``"B(lam)"``."""

    q: SampledFunction
    u: SampledFunction
    case: str = "A"

    def defect(self) -> float:
        return float(np.max(np.abs(miura_map(self.q).values - self.u.values)))


def case_b_pair(w: SampledFunction, lam: float) -> MiuraPair:
    """Forward map of ``q = w - lam tanh(lam x)``."""
    w = as_real(w)
    q = as_real(SampledFunction(w.grid, w.values - lam * np.tanh(lam * w.grid.x)))
    return MiuraPair(q, miura_map(q), f"B({lam:g})")


# --- Riccati inverse -----------------------------------------------------------------

@dataclass
class RiccatiSolve:
    v: SampledFunction
    residual: float
    substeps: int
    route: str
    diagnostics: dict = field(default_factory=dict)


def _half_nodes(u: SampledFunction, m: int) -> np.ndarray:
    n = u.grid.n
    offs = [j * u.grid.dx / (2 * m) for j in range(2 * m)]
    vals = node_values(u, offs)  # (2m, n)
    body = vals[:, : n - 1].T.reshape(-1)
    return np.ascontiguousarray(np.append(body, u.values[-1]).astype(float))


def _sweep(u: SampledFunction, m: int, backward: bool, start: float):
    uh = _half_nodes(u, m)
    v, bad = _kernels.riccati_rk4(uh, u.grid.dx / m, float(start), backward, BLOWUP)
    return v[::m], bad if bad < 0 else bad // m


def _riccati(u: SampledFunction, backward: bool, start: float, tol: float, m_max: int = 64):
    """Sweep with step doubling until two resolutions agree to ``tol``."""
    m = 2
    prev, bad = _sweep(u, m, backward, start)
    while m < m_max:
        m *= 2
        cur, bad = _sweep(u, m, backward, start)
        ok = np.isfinite(cur) & np.isfinite(prev)
        change = float(np.max(np.abs(cur[ok] - prev[ok]))) if ok.any() else math.inf
        prev = cur
        if change <= tol and bad < 0:
            break
    return prev, bad, m


def _residual(v: SampledFunction, u: SampledFunction) -> float:
    dv = spectral_derivative(v).values
    return float(np.max(np.abs(dv + v.values**2 - u.values - 1.0)))


def _spectral_failure(detail: str) -> MiuraError:
    return MiuraError(f"spectral condition violated (eigenvalue <= -1 suspected): {detail}")


def riccati_inverse(u, tol: float = 1e-7, step_tol: float = 1e-11) -> RiccatiSolve:
    """Solve ``v' + v^2 = u + 1`` with ``v -> -1`` on the right.

    The sweep from the right is stable while ``v < 0``. When the solution
    must turn to ``+1`` on the left (a bound state at the threshold) it is
    completed by the forward sweep from ``v = +1``, joined where both agree.
    """
    u = as_real(u)
    if u.even:
        raise ValueError("u must be flat at both ends")
    g = u.grid
    vb, bad_b, m = _riccati(u, True, -1.0, step_tol)
    info = dict(backward_blowup=None if bad_b < 0 else float(g.x[bad_b]))
    if bad_b < 0 and abs(vb[0] + 1.0) < 1e-6:
        v = vb
        route = "backward"
    else:
        vf, bad_f, m_f = _riccati(u, False, 1.0, step_tol)
        info["forward_blowup"] = None if bad_f < 0 else float(g.x[bad_f])
        m = max(m, m_f)
        both = np.isfinite(vb) & np.isfinite(vf)
        if not both.any():
            raise _spectral_failure("finite-x blow-up from both ends")
        gap = np.where(both, np.abs(vb - vf), np.inf)
        # join where the two sweeps are best conditioned: the sign change of v
        cand = np.nonzero(both & (gap < 1e-8))[0]
        if cand.size == 0:
            where = info["backward_blowup"]
            raise _spectral_failure(
                f"backward sweep blows up near x={where}" if where is not None else "no consistent join"
            )
        j = int(cand[np.argmin(np.abs(vb[cand]))])
        v = np.concatenate([vf[:j], vb[j:]])
        route = "spliced"
        info["join_x"] = float(g.x[j])
        info["join_gap"] = float(gap[j])
    vs = as_real(SampledFunction(g, v))
    res = _residual(vs, u)
    if not res <= tol:
        raise _spectral_failure(f"Riccati residual {res:.2e} > {tol:.1e}")
    return RiccatiSolve(vs, res, m, route, info)


def inverse_miura(u, tol: float = 1e-7) -> SampledFunction:
    """``v`` with ``v' + v^2 = u + 1`` and ``v -> -1`` on the right."""
    return riccati_inverse(u, tol).v


# --- linearization ------------------------------------------------------------------

def linearized_inverse(w0, f, order: int = 8) -> SampledFunction:
    """``(Tf)(x) = -int_x^inf exp(2 int_x^y (w0 - 1)) f(y) dy``.

    Right inverse of ``g -> g' + 2 (w0 - 1) g``. Cell integrals use Gauss
    nodes with band-limited values; cells are chained backward from the
    right end, where ``Tf`` vanishes.
    """
    w0, f = as_real(w0), as_real(f)
    grid = w0.grid
    dx = grid.dx
    c, wt = np.polynomial.legendre.leggauss(order)
    c, wt = 0.5 * (c + 1.0), 0.5 * wt
    offs = list(c * dx) + [ck * cm * dx for ck in c for cm in c]
    wn = node_values(w0, offs) - 1.0
    fn = node_values(f, list(c * dx))
    cell = 2 * dx * np.einsum("m,mj->j", wt, wn[:order])
    inner = wn[order:].reshape(order, order, grid.n)
    partial = 2 * dx * c[:, None] * np.einsum("m,kmj->kj", wt, inner)
    local = -dx * np.einsum("k,kj->j", wt, fn * np.exp(partial))
    growth = np.exp(cell)
    out = np.zeros(grid.n)
    for j in range(grid.n - 2, -1, -1):
        out[j] = growth[j] * out[j + 1] + local[j]
    return SampledFunction(grid, out, w0.even or f.even)


def linearized_operator(w0, g) -> SampledFunction:
    """``g' + 2 (w0 - 1) g``, the derivative of the Miura map at ``w0 - 1``."""
    w0, g = as_real(w0), as_real(g)
    return SampledFunction(g.grid, spectral_derivative(g).values + 2 * (w0.values - 1.0) * g.values)


# --- mKdV / KdV6 correspondence ---------------------------------------------------------

def mkdv_kdv_correspondence(
    q0,
    t_final: float,
    dt: float = 1e-3,
    snaps: int = 1,
    refine: bool = False,
) -> dict:
    """Evolve ``q0`` by mKdV and ``M(q0) - 1`` by KdV6 and compare ``M(q(t)) - 1`` with ``u(t)``."""
    q0r = as_real(q0)
    psi0 = GPField.from_values(q0r.grid, q0r.values.astype(complex), check=False)
    u0 = miura_map(q0r)

    def run(step):
        mk = evolve_mkdv(psi0, dt=step, t_final=t_final, snaps=snaps)
        kd = evolve_kdv6(u0, dt=step, t_final=t_final, snaps=snaps)
        mism = []
        for qs, us in zip(mk.states, kd.states):
            diff = miura_map(as_real(SampledFunction(qs.grid, qs.values.real))).values - us.values
            mism.append(float(l2_norm(SampledFunction(us.grid, diff))))
        imag = max(float(np.max(np.abs(s.values.imag))) for s in mk.states)
        return list(mk.times), mism, imag, kd.states[-1]

    times, mism, imag, u_end = run(dt)
    report = dict(
        times=[float(t) for t in times],
        mismatch=mism,
        max_mismatch=float(max(mism)),
        mkdv_imag_max=imag,
        dt=dt,
    )
    if refine:
        _, mism2, _, u_fine = run(dt / 2)
        report["refined_mismatch"] = mism2
        diff = SampledFunction(u_end.grid, u_end.values - u_fine.values)
        report["kdv_refinement_change"] = float(l2_norm(diff))
    return report
