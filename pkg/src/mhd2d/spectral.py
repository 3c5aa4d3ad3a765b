"""Periodic-grid spectral substrate.

Transforms, Leray projection, spectral derivatives, 2/3 dealiasing, Sobolev
norms, divergence-free random states, and the binary snapshot format used by
the experiment runner.

Conventions fixed here and relied on everywhere else:

* Coefficient arrays are indexed ``[k1, k2]`` in numpy fft order; the forward
  transform carries the ``1/(n1*n2)`` factor, so a coefficient is the complex
  amplitude of ``exp(i xi . x)``.
* Differentiation along axis ``i`` multiplies coefficients by ``(i xi_i)``.
* With this normalization ``l1*l2 * sum |fhat|^2`` equals the physical-space
  integral of ``|f|^2`` (cell area times the sum of squares of samples).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SnapshotFormatError

SNAPSHOT_MAGIC = b"MHD2"
SNAPSHOT_VERSION = 1

COMPONENTS = ("v1", "v2", "B1", "B2")


@dataclass(frozen=True)
class SpectralGrid:
    """Rectangular periodic grid and its wavenumber bookkeeping.

    Parameters
    ----------
    n1, n2 : int
        Mode counts per axis. Must be even and at least 8 so the Nyquist
        mode ``-n_i/2`` appears exactly once and a 2/3 dealias band exists.
    l1, l2 : float
        Box side lengths. Wavenumber spacing along axis ``i`` is
        ``2*pi/l_i``.

    Derived arrays (filled in ``__post_init__``):

    k1, k2 : integer mode numbers in fft order.
    xi1, xi2 : physical wavenumbers, shaped ``(n1, 1)`` and ``(1, n2)`` so
        they broadcast against ``(n1, n2)`` coefficient arrays.
    xi_sq : ``|xi|^2`` on the full grid.
    dealias_mask : True where ``3*|k_i| < n_i`` on both axes, so products
        of two retained modes never alias back into the retained set.
    """

    n1: int
    n2: int
    l1: float
    l2: float
    k1: np.ndarray = field(init=False, repr=False, compare=False)
    k2: np.ndarray = field(init=False, repr=False, compare=False)
    xi1: np.ndarray = field(init=False, repr=False, compare=False)
    xi2: np.ndarray = field(init=False, repr=False, compare=False)
    xi_sq: np.ndarray = field(init=False, repr=False, compare=False)
    dealias_mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name, n in (("n1", self.n1), ("n2", self.n2)):
            if int(n) != n or n < 8 or n % 2 != 0:
                raise ConfigError(f"{name} must be an even integer >= 8, got {n!r}")
        for name, l in (("l1", self.l1), ("l2", self.l2)):
            if not (l > 0.0) or not np.isfinite(l):
                raise ConfigError(f"{name} must be positive and finite, got {l!r}")
        k1 = np.fft.fftfreq(self.n1, d=1.0 / self.n1).astype(np.int64)
        k2 = np.fft.fftfreq(self.n2, d=1.0 / self.n2).astype(np.int64)
        xi1 = (2.0 * np.pi / self.l1) * k1.astype(float)
        xi2 = (2.0 * np.pi / self.l2) * k2.astype(float)
        object.__setattr__(self, "k1", k1)
        object.__setattr__(self, "k2", k2)
        object.__setattr__(self, "xi1", xi1[:, None])
        object.__setattr__(self, "xi2", xi2[None, :])
        object.__setattr__(self, "xi_sq", self.xi1**2 + self.xi2**2)
        # strict cutoff: with 3|k| <= n and 3 | n, the extreme retained pair
        # (n/3, n/3) aliases exactly onto the retained mode -n/3
        keep1 = 3 * np.abs(k1) < self.n1
        keep2 = 3 * np.abs(k2) < self.n2
        object.__setattr__(self, "dealias_mask", keep1[:, None] & keep2[None, :])

    @property
    def shape(self):
        return (self.n1, self.n2)

    @property
    def area(self) -> float:
        return self.l1 * self.l2

    @property
    def cell_area(self) -> float:
        return self.l1 * self.l2 / (self.n1 * self.n2)

    @property
    def dx(self):
        """Grid spacings (dx1, dx2)."""
        return (self.l1 / self.n1, self.l2 / self.n2)

    @property
    def dxi(self):
        """Wavenumber spacings (dxi1, dxi2)."""
        return (2.0 * np.pi / self.l1, 2.0 * np.pi / self.l2)

    def x(self):
        """Physical collocation coordinates, broadcastable like xi1/xi2."""
        x1 = np.arange(self.n1) * (self.l1 / self.n1)
        x2 = np.arange(self.n2) * (self.l2 / self.n2)
        return x1[:, None], x2[None, :]


def make_grid(n1: int, n2: int, l1: float, l2: float) -> SpectralGrid:
    """Validated grid constructor."""
    return SpectralGrid(n1, n2, l1, l2)


@dataclass
class SpectralState:
    """Fourier coefficients of (v1, v2, B1, B2) at one instant.

    ``u`` has shape ``(4, n1, n2)`` complex, component order as in
    ``COMPONENTS``. Fields of a physically meaningful state are Hermitian
    symmetric, mean-free, and divergence-free in both the velocity and
    magnetic pairs; ``validate`` checks all three.
    """

    grid: SpectralGrid
    u: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.complex128)
        if self.u.shape != (4, self.grid.n1, self.grid.n2):
            raise ConfigError(
                f"state array must have shape (4, {self.grid.n1}, {self.grid.n2}), "
                f"got {self.u.shape}"
            )
        if self.time < 0.0:
            raise ConfigError(f"time must be nonnegative, got {self.time}")

    @classmethod
    def zeros(cls, grid: SpectralGrid, time: float = 0.0) -> "SpectralState":
        return cls(grid, np.zeros((4, grid.n1, grid.n2), dtype=np.complex128), time)

    def copy(self) -> "SpectralState":
        return SpectralState(self.grid, self.u.copy(), self.time)

    @property
    def v1(self):
        return self.u[0]

    @property
    def v2(self):
        return self.u[1]

    @property
    def B1(self):
        return self.u[2]

    @property
    def B2(self):
        return self.u[3]

    def validate(self, tol: float = 1e-12) -> None:
        """Assert Hermitian symmetry, zero mean, and zero divergence.

        Tolerances are relative to the coefficient scale; raises
        ``ConfigError`` on the first violated property.
        """
        g = self.grid
        scale = max(float(np.max(np.abs(self.u))), 1e-300)
        herm = hermitian_defect(g, self.u)
        if herm > tol * scale:
            raise ConfigError(f"state is not Hermitian symmetric: defect {herm:.3e}")
        mean = float(np.max(np.abs(self.u[:, 0, 0])))
        if mean > tol * scale:
            raise ConfigError(f"state has nonzero mean mode: {mean:.3e}")
        dv, dB = divergence_defect(g, self.u)
        if max(dv, dB) > tol * scale:
            raise ConfigError(
                f"state is not divergence free: |div v|={dv:.3e} |div B|={dB:.3e}"
            )


def to_physical(state: SpectralState) -> np.ndarray:
    """Return the four real fields on the collocation grid, shape (4, n1, n2)."""
    n = state.grid.n1 * state.grid.n2
    return np.real(np.fft.ifft2(state.u, axes=(-2, -1))) * n


def from_physical(grid: SpectralGrid, fields: np.ndarray, time: float = 0.0) -> SpectralState:
    """Forward transform of physical fields, shape (4, n1, n2)."""
    fields = np.asarray(fields, dtype=float)
    u = np.fft.fft2(fields, axes=(-2, -1)) / (grid.n1 * grid.n2)
    return SpectralState(grid, u, time)


def transform_roundtrip(state: SpectralState) -> SpectralState:
    """Inverse transform followed by forward transform.

    For Hermitian input this is the identity up to roundoff; used as the
    self-check of the transform normalization.
    """
    return from_physical(state.grid, to_physical(state), state.time)


def coeff_derivative(grid: SpectralGrid, f: np.ndarray, axis: int, order: int = 1) -> np.ndarray:
    """Multiply one coefficient array by (i xi_axis)^order.

    Odd orders zero the Nyquist mode of that axis (it has no sign-definite
    frequency, so an odd derivative of a real field must drop it).
    """
    if axis not in (1, 2):
        raise ConfigError(f"axis must be 1 or 2, got {axis}")
    if int(order) != order or order < 0:
        raise ConfigError(f"order must be a nonnegative integer, got {order!r}")
    xi = grid.xi1 if axis == 1 else grid.xi2
    out = f * (1j * xi) ** order
    if order % 2 == 1:
        if axis == 1:
            out[grid.k1 == -grid.n1 // 2, :] = 0.0
        else:
            out[:, grid.k2 == -grid.n2 // 2] = 0.0
    return out


def spectral_derivative(state: SpectralState, axis: int, order: int = 1) -> SpectralState:
    """Differentiate all four components of a state along one axis."""
    g = state.grid
    out = np.empty_like(state.u)
    for c in range(4):
        out[c] = coeff_derivative(g, state.u[c], axis, order)
    return SpectralState(g, out, state.time)


def dealias(state: SpectralState) -> SpectralState:
    """Zero all modes with 3*|k_i| > n_i on either axis (2/3 rule)."""
    return SpectralState(state.grid, state.u * state.grid.dealias_mask, state.time)


def _project_pair(grid: SpectralGrid, f1: np.ndarray, f2: np.ndarray):
    xisq = np.where(grid.xi_sq == 0.0, 1.0, grid.xi_sq)
    div = grid.xi1 * f1 + grid.xi2 * f2
    p1 = f1 - grid.xi1 * div / xisq
    p2 = f2 - grid.xi2 * div / xisq
    # The zero mode has no divergence content; leave it untouched.
    p1[0, 0] = f1[0, 0]
    p2[0, 0] = f2[0, 0]
    return p1, p2


def leray_project(state: SpectralState) -> SpectralState:
    """Apply the divergence-free projector to the v pair and the B pair."""
    g = state.grid
    out = np.empty_like(state.u)
    out[0], out[1] = _project_pair(g, state.u[0], state.u[1])
    out[2], out[3] = _project_pair(g, state.u[2], state.u[3])
    return SpectralState(g, out, state.time)


def enforce_zero_mean(state: SpectralState) -> SpectralState:
    out = state.u.copy()
    out[:, 0, 0] = 0.0
    return SpectralState(state.grid, out, state.time)


def l2_norm(grid: SpectralGrid, f: np.ndarray) -> float:
    """L2 norm of one component from its coefficients."""
    return float(np.sqrt(grid.area * np.sum(np.abs(f) ** 2)))


def sobolev_norm(grid: SpectralGrid, f: np.ndarray, m: int) -> float:
    """H^m norm with the multiplier (1 + |xi|^2)^(m/2).

    ``f`` is a single coefficient array. Monotone in m for m >= 0; at m = 0
    this is the L2 norm.
    """
    if int(m) != m or m < 0:
        raise ConfigError(f"m must be a nonnegative integer, got {m!r}")
    w = (1.0 + grid.xi_sq) ** m
    return float(np.sqrt(grid.area * np.sum(w * np.abs(f) ** 2)))


def multi_index_weight(grid: SpectralGrid, m: int) -> np.ndarray:
    """sum over |alpha| <= m of xi^(2*alpha), the derivative-sum H^m weight.

    This is the plain sum over multi-indices (no multinomial coefficients),
    the weight under which the sharp 1/2 constants of the energy audit hold.
    """
    if int(m) != m or m < 0:
        raise ConfigError(f"m must be a nonnegative integer, got {m!r}")
    w = np.zeros(grid.shape)
    for a in range(m + 1):
        for b in range(m + 1 - a):
            w += grid.xi1 ** (2 * a) * grid.xi2 ** (2 * b)
    return w


def hermitian_defect(grid: SpectralGrid, u: np.ndarray) -> float:
    """Max |u(-k) - conj(u(k))| over modes and components."""
    rev1 = (-np.arange(grid.n1)) % grid.n1
    rev2 = (-np.arange(grid.n2)) % grid.n2
    mirrored = np.conj(u[:, rev1[:, None], rev2[None, :]])
    return float(np.max(np.abs(u - mirrored)))


def divergence_defect(grid: SpectralGrid, u: np.ndarray):
    """Max |xi . vhat| and |xi . Bhat| over modes."""
    dv = np.max(np.abs(grid.xi1 * u[0] + grid.xi2 * u[1]))
    dB = np.max(np.abs(grid.xi1 * u[2] + grid.xi2 * u[3]))
    return float(dv), float(dB)


def random_div_free_state(
    grid: SpectralGrid, seed: int, amplitude: float = 1.0, time: float = 0.0
) -> SpectralState:
    """Seeded, Hermitian-by-construction, divergence-free random state.

    Both pairs come from stream functions: white noise is transformed,
    shaped by a Gaussian spectral envelope, and turned into a curl, so the
    divergence vanishes mode by mode. Deterministic for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    n = grid.n1 * grid.n2
    ximax = min(float(np.max(np.abs(grid.xi1))), float(np.max(np.abs(grid.xi2))))
    xic = max(ximax / 4.0, 1e-8)
    envelope = np.exp(-grid.xi_sq / (2.0 * xic**2))
    u = np.zeros((4, grid.n1, grid.n2), dtype=np.complex128)
    for pair in range(2):
        psi = np.fft.fft2(rng.standard_normal(grid.shape)) / n * envelope
        u[2 * pair] = 1j * grid.xi2 * psi
        u[2 * pair + 1] = -1j * grid.xi1 * psi
    state = SpectralState(grid, u, time)
    state = dealias(enforce_zero_mean(state))
    cur = max((l2_norm(grid, state.u[c]) for c in range(4)), default=0.0)
    if cur > 0.0:
        state.u *= amplitude / cur
    return state


def save_state(state: SpectralState, path) -> None:
    """Write the binary snapshot format.

    Layout: magic ``MHD2``, version u32 (little endian), then n1, n2, l1,
    l2, time as little-endian IEEE-754 doubles, then the four coefficient
    arrays row-major with re/im interleaved.
    """
    g = state.grid
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<I", SNAPSHOT_VERSION))
        fh.write(struct.pack("<5d", float(g.n1), float(g.n2), g.l1, g.l2, state.time))
        data = np.ascontiguousarray(state.u, dtype=np.complex128)
        fh.write(data.astype("<c16").tobytes())


def load_state(path) -> SpectralState:
    """Read a snapshot written by ``save_state``; validates magic and version."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SNAPSHOT_MAGIC:
            raise SnapshotFormatError(f"bad magic {magic!r}, expected {SNAPSHOT_MAGIC!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != SNAPSHOT_VERSION:
            raise SnapshotFormatError(f"unsupported snapshot version {version}")
        n1f, n2f, l1, l2, time = struct.unpack("<5d", fh.read(40))
        n1, n2 = int(n1f), int(n2f)
        if n1 != n1f or n2 != n2f:
            raise SnapshotFormatError(f"non-integer grid sizes {n1f}, {n2f}")
        grid = SpectralGrid(n1, n2, l1, l2)
        raw = fh.read(4 * n1 * n2 * 16)
        if len(raw) != 4 * n1 * n2 * 16:
            raise SnapshotFormatError("truncated snapshot payload")
        u = np.frombuffer(raw, dtype="<c16").reshape(4, n1, n2).astype(np.complex128)
        return SpectralState(grid, u, time)
