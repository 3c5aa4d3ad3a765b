"""Scalar functionals, cumulative quantities, and inequality audits.

Instantaneous records follow a fixed CSV schema (``CSV_COLUMNS``). The
Sobolev quantities E, A, and the energy-audit norms use the derivative-sum
weight sum_{|alpha| <= m} xi^(2 alpha) (``multi_index_weight``): that is the
convention under which d/dt(E^2 + A) closes with the exact 1/2 coefficients
in front of the dissipation terms and |A| <= E^2/2 holds with constant
exactly 1/2. The anisotropic norm reported as ``xm`` uses the standard
multiplier H^m for its Sobolev part.

Wavenumber sums are calibrated to continuum integrals: with the forward
transform carrying 1/(n1 n2), the continuum Fourier transform of a box
field is l1*l2*fhat, the mode spacing is dxi_i = 2*pi/l_i, and so
integral |ghat| dxi ~ (2*pi)^2 * sum |fhat|. Weights singular on the
xi1 = 0 column or at xi = 0 exclude those modes; states are mean-free and
the excluded-column content is reported nowhere else, so all such norms
are lower bounds that converge as the box grows.
"""

from dataclasses import dataclass, fields as dataclass_fields
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    AuditInapplicableError,
    AuditResolutionError,
    ConfigError,
    DiagnosticIntegrityError,
    FitDomainError,
    IncompleteHistoryError,
)
from .modes import region_masks
from .propagator import DecayCurve
from .quadrature import refine_integral
from .spectral import (
    SpectralGrid,
    SpectralState,
    coeff_derivative,
    dealias,
    enforce_zero_mean,
    l2_norm,
    multi_index_weight,
    sobolev_norm,
    to_physical,
)

CSV_COLUMNS = (
    "t", "E", "A", "sup_d1v", "sup_B2", "xm",
    "l2_v1", "l2_v2", "l2_B1", "l2_B2",
    "e_residual", "cancel_residual",
    "mass_omega1", "mass_omega2", "mass_omega3",
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One sampling instant: the CSV schema plus the audit/cumulative extras."""

    t: float
    E: float
    A: float
    sup_d1v: float
    sup_B2: float
    xm: float
    l2_v1: float
    l2_v2: float
    l2_B1: float
    l2_B2: float
    e_residual: float
    cancel_residual: float
    mass_omega1: float
    mass_omega2: float
    mass_omega3: float
    # extras kept out of the CSV: squared derivative-sum Sobolev norms and
    # the anisotropic Fourier-Lebesgue integrands accumulated in time.
    hm_v_sq: float = 0.0
    hm_b_sq: float = 0.0
    hm1_d1b_sq: float = 0.0
    h_d1b2_l1: float = 0.0
    h_b2_l1: float = 0.0
    h_gradb2_l1: float = 0.0
    h_d1v_l1: float = 0.0
    h_v2_half_sq: float = 0.0
    h_v2_half_l1: float = 0.0

    def csv_row(self) -> list:
        return [format(getattr(self, c), ".17g") for c in CSV_COLUMNS]


@dataclass(frozen=True)
class CumulativeRecord:
    """Time-integrated quantities over [0, T]."""

    T: float
    G: float
    H: float
    sup_E: float
    dissipation_integral: float
    h_terms: tuple


@dataclass(frozen=True)
class EnergyAudit:
    """Per-sample sides of the m-th order energy inequality."""

    m: int
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    fd_error: float
    implied_C: float


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    rms_residual: float
    window: tuple


@dataclass(frozen=True)
class InterpolationAudit:
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.rhs > 0.0:
            return self.lhs / self.rhs
        return 0.0 if self.lhs == 0.0 else float("inf")


def _l1_calibration(grid: SpectralGrid) -> float:
    # integral over xi of |l1*l2*fhat| with cell (2pi/l1)(2pi/l2)
    return 4.0 * np.pi**2


def anisotropic_norm(state: SpectralState, m: int) -> float:
    """Weighted initial-data norm: H^m plus three anisotropic terms.

    Terms: || (sqrt|xi1|/|xi|) fhat ||_{L^2_{xi1} L^1_{xi2}} over all four
    components, and the L^1 norms of |(Bhat1, Bhat2)| against 1/|xi| and
    1/sqrt|xi1|. Modes where a weight is singular are excluded.
    """
    g = state.grid
    hm = np.sqrt(sum(sobolev_norm(g, state.u[c], m) ** 2 for c in range(4)))

    mag = np.sqrt(np.sum(np.abs(state.u) ** 2, axis=0))
    absxi = np.sqrt(g.xi_sq)
    absxi1 = np.broadcast_to(np.abs(g.xi1), g.shape)

    w = np.zeros(g.shape)
    nz = absxi > 0.0
    w[nz] = np.sqrt(absxi1[nz]) / absxi[nz]
    # L^1 in xi2 of the continuum transform l1*l2*fhat, then L^2 in xi1.
    inner = (g.l1 * g.l2) * np.sum(w * mag, axis=1) * g.dxi[1]
    t2 = float(np.sqrt(np.sum(inner**2) * g.dxi[0]))

    bmag = np.sqrt(np.abs(state.u[2]) ** 2 + np.abs(state.u[3]) ** 2)
    cal = _l1_calibration(g)
    winv = np.zeros(g.shape)
    winv[nz] = 1.0 / absxi[nz]
    t3 = float(cal * np.sum(winv * bmag))
    col = absxi1 > 0.0
    t4 = float(cal * np.sum(bmag[col] / np.sqrt(absxi1[col])))
    return float(hm + t2 + t3 + t4)


def _fourier_l1_terms(state: SpectralState):
    """The six integrands of the mediating quantity, at one instant."""
    g = state.grid
    cal = _l1_calibration(g)
    absxi1 = np.broadcast_to(np.abs(g.xi1), g.shape)
    absxi = np.sqrt(g.xi_sq)
    b2 = np.abs(state.u[3])
    vmag = np.sqrt(np.abs(state.u[0]) ** 2 + np.abs(state.u[1]) ** 2)
    v2 = np.abs(state.u[1])

    d1b2 = float(cal * np.sum(absxi1 * b2))
    b2l1 = float(cal * np.sum(b2))
    gradb2 = float(cal * np.sum(absxi * b2))
    d1v = float(cal * np.sum(absxi1 * vmag))

    col = np.abs(g.xi1[:, 0]) > 0.0
    inner = (g.l1 * g.l2) * np.sum(v2, axis=1) * g.dxi[1]  # L^1 in xi2
    half_sq = float(np.sum(inner[col] ** 2 / np.abs(g.xi1[col, 0])) * g.dxi[0])
    colmask = absxi1 > 0.0
    half_l1 = float(cal * np.sum(v2[colmask] / np.sqrt(absxi1[colmask])))
    return d1b2, b2l1, gradb2, d1v, half_sq, half_l1


def instantaneous(state: SpectralState, m: int, energy_residual: float = 0.0) -> DiagnosticsRecord:
    """Evaluate every per-instant functional of one state.

    Raises ``DiagnosticIntegrityError`` when |A| > E^2/2 beyond roundoff,
    or when the three region masses fail to recover the total L^2 mass.
    """
    if int(m) != m or m < 1:
        raise ConfigError(f"m must be a positive integer, got {m!r}")
    g = state.grid
    wm = multi_index_weight(g, m)
    wm1 = multi_index_weight(g, m - 1)
    absu2 = np.abs(state.u) ** 2

    hm_v_sq = float(g.area * np.sum(wm * (absu2[0] + absu2[1])))
    hm_b_sq = float(g.area * np.sum(wm * (absu2[2] + absu2[3])))
    e_sq = hm_v_sq + hm_b_sq
    E = float(np.sqrt(e_sq))

    cross = state.u[2] * np.conj(state.u[0]) + state.u[3] * np.conj(state.u[1])
    A = float(g.area * np.sum(wm1 * g.xi1 * np.imag(cross)))

    xi1sq = np.broadcast_to(g.xi1**2, g.shape)
    hm1_d1b_sq = float(g.area * np.sum(wm1 * xi1sq * (absu2[2] + absu2[3])))

    if abs(A) > 0.5 * e_sq * (1.0 + 1e-10) + 1e-300:
        raise DiagnosticIntegrityError(
            f"|A| = {abs(A):.6e} exceeds E^2/2 = {0.5 * e_sq:.6e}"
        )

    fields = to_physical(state)
    d1v1 = coeff_derivative(g, state.u[0], 1)
    d1v2 = coeff_derivative(g, state.u[1], 1)
    d1v_phys = np.real(np.fft.ifft2(np.stack([d1v1, d1v2]), axes=(-2, -1))) * (g.n1 * g.n2)
    sup_d1v = float(np.max(np.sqrt(d1v_phys[0] ** 2 + d1v_phys[1] ** 2)))
    sup_B2 = float(np.max(np.abs(fields[3])))

    # two independently differentiated routes of the same pairing; the sum
    # cancels analytically, so what remains measures accumulated roundoff
    d1B1 = coeff_derivative(g, state.u[2], 1)
    d1B2 = coeff_derivative(g, state.u[3], 1)
    i1 = g.area * np.sum(wm * np.real(d1B1 * np.conj(state.u[0]) + d1B2 * np.conj(state.u[1])))
    i2 = g.area * np.sum(wm * np.real(d1v1 * np.conj(state.u[2]) + d1v2 * np.conj(state.u[3])))
    cancel = float(abs(i1 + i2) / max(abs(i1), abs(i2), 1e-300))

    total = np.sum(absu2, axis=0)
    r1, r2, r3 = region_masks(np.broadcast_to(g.xi1, g.shape))
    m1 = float(g.area * np.sum(total[r1]))
    m2 = float(g.area * np.sum(total[r2]))
    m3 = float(g.area * np.sum(total[r3]))
    tot = float(g.area * np.sum(total))
    if abs((m1 + m2 + m3) - tot) > 1e-12 * max(tot, 1e-300):
        raise DiagnosticIntegrityError("region masses do not partition the L^2 mass")

    h = _fourier_l1_terms(state)
    return DiagnosticsRecord(
        t=float(state.time),
        E=E,
        A=A,
        sup_d1v=sup_d1v,
        sup_B2=sup_B2,
        xm=anisotropic_norm(state, m),
        l2_v1=l2_norm(g, state.u[0]),
        l2_v2=l2_norm(g, state.u[1]),
        l2_B1=l2_norm(g, state.u[2]),
        l2_B2=l2_norm(g, state.u[3]),
        e_residual=float(energy_residual),
        cancel_residual=cancel,
        mass_omega1=m1,
        mass_omega2=m2,
        mass_omega3=m3,
        hm_v_sq=hm_v_sq,
        hm_b_sq=hm_b_sq,
        hm1_d1b_sq=hm1_d1b_sq,
        h_d1b2_l1=h[0],
        h_b2_l1=h[1],
        h_gradb2_l1=h[2],
        h_d1v_l1=h[3],
        h_v2_half_sq=h[4],
        h_v2_half_l1=h[5],
    )


def _check_history(records: Sequence[DiagnosticsRecord], T: float):
    if not records:
        raise IncompleteHistoryError("empty history")
    times = np.array([r.t for r in records])
    if np.any(np.diff(times) <= 0.0):
        raise IncompleteHistoryError("history times must be strictly increasing")
    if times[0] > 1e-12:
        raise IncompleteHistoryError(f"history starts at t = {times[0]}, not 0")
    if T > times[-1] * (1.0 + 1e-12) + 1e-12:
        raise IncompleteHistoryError(f"history ends at {times[-1]}, before T = {T}")
    if len(times) > 2:
        steps = np.diff(times)
        med = float(np.median(steps))
        if np.max(steps) > 1.5 * med:
            raise IncompleteHistoryError("gap in history exceeds 1.5x the cadence")
    return times


def cumulative(records: Sequence[DiagnosticsRecord], T: Optional[float] = None) -> CumulativeRecord:
    """Trapezoid time integrals over the sampled history up to T.

    G^2 = sup_t E^2 + int (|v|_{H^m}^2 + |d1 B|_{H^{m-1}}^2) dt. The
    mediating quantity sums int ||.||^p dt of the six Fourier-Lebesgue
    integrands with their exponents p in (1, 2, 4/3, 1, 2, 4/3); the
    p-th root is deliberately not taken, matching how the summands enter
    the continuity argument.
    """
    if T is None:
        T = records[-1].t if records else 0.0
    times = _check_history(records, T)
    keep = times <= T * (1.0 + 1e-12) + 1e-12
    times = times[keep]
    recs = [r for r, k in zip(records, keep) if k]

    def integrate(vals, power=1.0):
        if len(times) == 1:
            return 0.0
        v = np.array(vals, dtype=float) ** power
        return float(np.trapezoid(v, times))

    sup_e = max(r.E for r in recs)
    diss = integrate([r.hm_v_sq + r.hm1_d1b_sq for r in recs])
    G = float(np.sqrt(sup_e**2 + diss))
    h_terms = (
        integrate([r.h_d1b2_l1 for r in recs], 1.0),
        integrate([r.h_b2_l1 for r in recs], 2.0),
        integrate([r.h_gradb2_l1 for r in recs], 4.0 / 3.0),
        integrate([r.h_d1v_l1 for r in recs], 1.0),
        integrate([r.h_v2_half_sq for r in recs], 1.0),  # inner norm already squared
        integrate([r.h_v2_half_l1 for r in recs], 4.0 / 3.0),
    )
    return CumulativeRecord(
        T=float(times[-1]),
        G=G,
        H=float(sum(h_terms)),
        sup_E=float(sup_e),
        dissipation_integral=diss,
        h_terms=h_terms,
    )


def em_inequality_audit(records: Sequence[DiagnosticsRecord], m: int) -> EnergyAudit:
    """Audit the order-m energy inequality along a sampled trajectory.

    lhs = d/dt(E^2 + A) + (1/2)|v|_{H^m}^2 + (1/2)|d1 B|_{H^{m-1}}^2 via
    centered differences (second-order one-sided at the ends); rhs is the
    cubic majorant without its constant. The time derivative's error is
    estimated by comparing stride-1 and stride-2 centered differences; if
    that estimate exceeds 10% of the lhs scale the cadence cannot support
    the audit and ``AuditResolutionError`` is raised.
    """
    if len(records) < 5:
        raise AuditResolutionError("need at least 5 samples for the derivative audit")
    times = np.array([r.t for r in records])
    steps = np.diff(times)
    h = float(np.mean(steps))
    if np.max(np.abs(steps - h)) > 1e-6 * h:
        raise AuditResolutionError("audit requires a uniform sampling cadence")

    y = np.array([r.E**2 + r.A for r in records])
    n = len(y)
    dy = np.empty(n)
    dy[1:-1] = (y[2:] - y[:-2]) / (2.0 * h)
    dy[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h)
    dy[-1] = (3.0 * y[-1] - 4.0 * y[-2] + y[-3]) / (2.0 * h)

    dy2 = (y[4:] - y[:-4]) / (4.0 * h)
    fd_err = float(np.max(np.abs(dy[2:-2] - dy2)) / 3.0) if n >= 5 else 0.0

    vsq = np.array([r.hm_v_sq for r in records])
    bsq = np.array([r.hm_b_sq for r in records])
    d1bsq = np.array([r.hm1_d1b_sq for r in records])
    E = np.array([r.E for r in records])
    lhs = dy + 0.5 * vsq + 0.5 * d1bsq
    rhs = (
        E * (vsq + d1bsq)
        + np.array([r.sup_d1v for r in records]) * bsq
        + np.array([r.sup_B2 for r in records]) * np.sqrt(d1bsq) * np.sqrt(bsq)
    )

    scale = max(float(np.max(np.abs(lhs))), 1e-9 * (1.0 + float(np.max(y))))
    if fd_err > 0.1 * scale:
        raise AuditResolutionError(
            f"finite-difference error {fd_err:.3e} exceeds 10% of lhs scale {scale:.3e}"
        )

    pos = np.maximum(lhs, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(pos == 0.0, 0.0, pos / np.where(rhs > 0.0, rhs, np.nan))
    ratios = np.where(np.isnan(ratios), np.where(pos > 0.0, np.inf, 0.0), ratios)
    return EnergyAudit(
        m=m, times=times, lhs=lhs, rhs=rhs, fd_error=fd_err,
        implied_C=float(np.max(ratios)) if n else 0.0,
    )


def interpolation_audit(f: Callable, p: float, q: float, d: int = 2,
                        radius: float = 60.0) -> InterpolationAudit:
    """Both sides of the weighted L^1 interpolation bound for a radial profile.

    ``f`` maps radius r >= 0 to a value (vectorized). lhs = |f|_{L^1(R^d)};
    rhs = the product of weighted L^2 norms with exponents q/(p+q), p/(p+q).
    The inner weighted norm diverges when the weight beats the radial
    volume factor at the origin and f(0) != 0; that case is rejected.
    """
    if p <= 0.0 or q <= 0.0:
        raise ConfigError("p and q must be positive")
    if d not in (1, 2, 3):
        raise ConfigError(f"d must be 1, 2, or 3, got {d}")
    sphere = {1: 2.0, 2: 2.0 * np.pi, 3: 4.0 * np.pi}[d]
    # the low-weight integrand is r^(2d-1-2q) |f|^2 near 0: divergent once q >= d
    if q >= d and abs(float(np.asarray(f(0.0)))) > 0.0:
        raise AuditInapplicableError(
            f"weighted norm with q = {q} diverges at the origin in d = {d}"
        )

    def absf(r):
        return np.abs(np.asarray(f(r), dtype=float))

    lhs = sphere * refine_integral(lambda r: absf(r) * r ** (d - 1), 0.0, radius)
    hi = sphere * refine_integral(
        lambda r: r ** (d + 2.0 * p) * absf(r) ** 2 * r ** (d - 1), 0.0, radius
    )
    lo = sphere * refine_integral(
        lambda r: r ** (d - 2.0 * q) * absf(r) ** 2 * r ** (d - 1), 0.0, radius
    )
    rhs = hi ** (0.5 * q / (p + q)) * lo ** (0.5 * p / (p + q))
    return InterpolationAudit(lhs=float(lhs), rhs=float(rhs))


def fourier_l1_audit(state: SpectralState, component: int = 3) -> InterpolationAudit:
    """Grid form of |ghat|_{L^1} <= C |d1 g|_{H^1}^(1/2) |g|_{H^1}^(1/2).

    The xi1 = 0 column carries no d1 content and is excluded from the
    left side; the audit therefore measures the inequality on the
    mean-free-in-x1 part of the component.
    """
    g = state.grid
    fhat = state.u[component]
    col = np.broadcast_to(np.abs(g.xi1) > 0.0, g.shape)
    lhs = _l1_calibration(g) * float(np.sum(np.abs(fhat[col])))
    d1 = coeff_derivative(g, fhat, 1)
    rhs = np.sqrt(sobolev_norm(g, d1, 1)) * np.sqrt(sobolev_norm(g, fhat, 1))
    return InterpolationAudit(lhs=lhs, rhs=float(rhs))


def fit_decay(curve: DecayCurve, window: tuple) -> DecayFit:
    """Least-squares slope of log(value) against log(1 + t) in a window."""
    t_lo, t_hi = float(window[0]), float(window[1])
    if not t_lo < t_hi:
        raise FitDomainError(f"empty window [{t_lo}, {t_hi}]")
    mask = (curve.times >= t_lo) & (curve.times <= t_hi)
    if int(np.sum(mask)) < 10:
        raise FitDomainError(
            f"window [{t_lo}, {t_hi}] holds {int(np.sum(mask))} samples; need >= 10"
        )
    vals = curve.values[mask]
    if np.any(vals <= 0.0):
        raise FitDomainError("curve values must be positive inside the fit window")
    x = np.log1p(curve.times[mask])
    y = np.log(vals)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return DecayFit(
        slope=float(slope),
        intercept=float(intercept),
        rms_residual=float(np.sqrt(np.mean(resid**2))),
        window=(t_lo, t_hi),
    )


def physical_l1_norm(state: SpectralState) -> float:
    """Riemann-sum L^1 norm of the pointwise 4-component magnitude."""
    fields = to_physical(state)
    mag = np.sqrt(np.sum(fields**2, axis=0))
    return float(np.sum(mag) * state.grid.cell_area)


def gaussian_divfree_family(grid: SpectralGrid, widths=(0.5, 1.0, 2.0, 4.0)):
    """Divergence-free Gaussian-envelope states, one per physical width."""
    states = []
    for w in widths:
        psi_v = np.exp(-0.5 * w**2 * grid.xi_sq)
        psi_b = np.exp(-0.25 * w**2 * grid.xi_sq)
        u = np.zeros((4, grid.n1, grid.n2), dtype=np.complex128)
        u[0] = 1j * grid.xi2 * psi_v
        u[1] = -1j * grid.xi1 * psi_v
        u[2] = 1j * grid.xi2 * psi_b
        u[3] = -1j * grid.xi1 * psi_b
        st = enforce_zero_mean(dealias(SpectralState(grid, u)))
        states.append(st)
    return states


def single_mode_state(grid: SpectralGrid, k1: int, k2: int, pair: str = "v") -> SpectralState:
    """Hermitian single-mode divergence-free state at integer mode (k1, k2)."""
    if (k1, k2) == (0, 0):
        raise ConfigError("single mode must not be the mean mode")
    if pair not in ("v", "B"):
        raise ConfigError(f"pair must be 'v' or 'B', got {pair!r}")
    i1 = int(np.where(grid.k1 == k1)[0][0])
    i2 = int(np.where(grid.k2 == k2)[0][0])
    j1 = int(np.where(grid.k1 == -k1)[0][0])
    j2 = int(np.where(grid.k2 == -k2)[0][0])
    xi1 = grid.xi1[i1, 0]
    xi2 = grid.xi2[0, i2]
    u = np.zeros((4, grid.n1, grid.n2), dtype=np.complex128)
    base = 0 if pair == "v" else 2
    u[base, i1, i2] = 1j * xi2
    u[base + 1, i1, i2] = -1j * xi1
    u[base, j1, j2] = np.conj(u[base, i1, i2])
    u[base + 1, j1, j2] = np.conj(u[base + 1, i1, i2])
    return SpectralState(grid, u)


def xm_embedding_scan(states: Sequence[SpectralState], m: int):
    """Max of |f|_{X^m} / (|f|_{H^m} + |f|_{L^1 proxy}) over a family.

    Returns (max ratio, per-state ratio list). The ratio's finiteness is
    the point of the scan; the denominator's L^1 part is a physical-grid
    Riemann sum.
    """
    ratios = []
    for st in states:
        g = st.grid
        xm = anisotropic_norm(st, m)
        hm = np.sqrt(sum(sobolev_norm(g, st.u[c], m) ** 2 for c in range(4)))
        denom = hm + physical_l1_norm(st)
        if denom <= 0.0:
            raise ConfigError("embedding scan needs nonzero states")
        ratios.append(float(xm / denom))
        if not np.isfinite(ratios[-1]):
            raise DiagnosticIntegrityError("embedding ratio is not finite")
    return max(ratios), ratios
