"""Dirichlet sine eigenbasis on a rectangle.

Fields are stored as complex coefficients with respect to the
L2-orthonormal eigenfunctions of the Dirichlet Laplacian on
``[0, Lx] x [0, Ly]``::

    phi_jk(x, y) = 2 / sqrt(Lx Ly) * sin(j pi x / Lx) * sin(k pi y / Ly)

with eigenvalues ``lam_jk = (j pi / Lx)**2 + (k pi / Ly)**2``.  Mode
``(j, k)`` lives at array index ``[j - 1, k - 1]`` (row-major over the
rectangular cut ``Mx x My``).

Two grids are used.  The *collocation grid* has ``Nx x Ny`` intervals
and is what :func:`to_grid` / :func:`to_coeffs` work on.  The *padded
quadrature grid* has ``2 (Mx + 1) x 2 (My + 1)`` intervals; on it the
interior rectangle rule integrates any product of four retained-mode
fields exactly, which is what the quartic potential and the cubic
nonlinearity need.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np


@lru_cache(maxsize=64)
def sine_matrix(n_intervals: int, n_modes: int) -> np.ndarray:
    """Matrix ``S[i-1, j-1] = sin(pi i j / n)`` for interior nodes ``i``.

    This is a partial type-I discrete sine transform realised as a dense
    product.  It is cached and returned read-only, so it is safe to share
    between threads.
    """
    i = np.arange(1, n_intervals)
    j = np.arange(1, n_modes + 1)
    S = np.sin(np.pi * np.outer(i, j) / n_intervals)
    S.setflags(write=False)
    return S


@dataclass(frozen=True)
class DomainSpec:
    """Rectangle, collocation grid and Galerkin mode cut.

    Immutable; derived tables (eigenvalues, transform matrices) are
    computed lazily and cached on the instance.
    """

    Lx: float
    Ly: float
    Nx: int
    Ny: int
    Mx: int
    My: int

    def __post_init__(self):
        if not (self.Lx > 0 and self.Ly > 0):
            raise ValueError("domain lengths must be positive")
        for name in ("Nx", "Ny", "Mx", "My"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.Mx >= self.Nx:
            raise ValueError("mode cut requires Mx<Nx")
        if self.My >= self.Ny:
            raise ValueError("mode cut requires My<Ny")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Mx, self.My)

    @property
    def grid_shape(self) -> tuple[int, int]:
        return (self.Nx - 1, self.Ny - 1)

    @property
    def area(self) -> float:
        return self.Lx * self.Ly

    @property
    def m(self) -> int:
        return self.Mx * self.My

    @cached_property
    def lam(self) -> np.ndarray:
        """Eigenvalue table of ``-Laplacian``, shape ``(Mx, My)``."""
        kx = (np.arange(1, self.Mx + 1) * np.pi / self.Lx) ** 2
        ky = (np.arange(1, self.My + 1) * np.pi / self.Ly) ** 2
        lam = kx[:, None] + ky[None, :]
        lam.setflags(write=False)
        return lam

    def eigenvalue(self, j: int, k: int) -> float:
        return float((j * np.pi / self.Lx) ** 2 + (k * np.pi / self.Ly) ** 2)

    @cached_property
    def padded_shape(self) -> tuple[int, int]:
        """Number of intervals of the dealiasing quadrature grid."""
        return (2 * (self.Mx + 1), 2 * (self.My + 1))

    @property
    def padded_weight(self) -> float:
        Px, Py = self.padded_shape
        return self.area / (Px * Py)

    @property
    def grid_weight(self) -> float:
        return self.area / (self.Nx * self.Ny)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Interior collocation nodes as an ``ij``-indexed meshgrid."""
        x = np.arange(1, self.Nx) * self.Lx / self.Nx
        y = np.arange(1, self.Ny) * self.Ly / self.Ny
        return np.meshgrid(x, y, indexing="ij")

    def padded_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        Px, Py = self.padded_shape
        x = np.arange(1, Px) * self.Lx / Px
        y = np.arange(1, Py) * self.Ly / Py
        return np.meshgrid(x, y, indexing="ij")

    def with_modes(self, Mx: int, My: int) -> "DomainSpec":
        """Same rectangle and collocation grid with a different mode cut."""
        return DomainSpec(self.Lx, self.Ly, self.Nx, self.Ny, Mx, My)

    # transforms on raw arrays; leading batch dimensions are allowed

    def synthesize(self, coeffs: np.ndarray, padded: bool = False) -> np.ndarray:
        nx, ny = self.padded_shape if padded else (self.Nx, self.Ny)
        Sx = sine_matrix(nx, self.Mx)
        Sy = sine_matrix(ny, self.My)
        return (2.0 / np.sqrt(self.area)) * (Sx @ coeffs @ Sy.T)

    def analyze(self, values: np.ndarray, padded: bool = False) -> np.ndarray:
        nx, ny = self.padded_shape if padded else (self.Nx, self.Ny)
        Sx = sine_matrix(nx, self.Mx)
        Sy = sine_matrix(ny, self.My)
        scale = 2.0 * np.sqrt(self.area) / (nx * ny)
        return scale * (Sx.T @ values @ Sy)


def build_domain(Lx: float, Ly: float, Nx: int, Ny: int, Mx: int, My: int) -> DomainSpec:
    """Validate the rectangle/grid/cut and precompute the eigenvalue table."""
    domain = DomainSpec(float(Lx), float(Ly), int(Nx), int(Ny), int(Mx), int(My))
    domain.lam  # noqa: B018 - warm the cache
    return domain


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients of a field in the retained sine modes."""

    domain: DomainSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.domain.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match mode cut {self.domain.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, domain: DomainSpec) -> "SpectralField":
        return cls(domain, np.zeros(domain.shape, dtype=complex))

    @classmethod
    def from_modes(cls, domain: DomainSpec, modes: dict) -> "SpectralField":
        """Build from a sparse ``{(j, k): value}`` mapping (1-based modes)."""
        c = np.zeros(domain.shape, dtype=complex)
        for (j, k), value in modes.items():
            if not (1 <= j <= domain.Mx and 1 <= k <= domain.My):
                raise ValueError(f"mode ({j}, {k}) outside the cut {domain.shape}")
            c[j - 1, k - 1] += value
        return cls(domain, c)

    def _check(self, other: "SpectralField"):
        if other.domain != self.domain:
            raise ValueError("fields live on different domains")

    def __add__(self, other):
        self._check(other)
        return SpectralField(self.domain, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return SpectralField(self.domain, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(self.domain, -self.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.domain, self.coeffs * scalar)

    __rmul__ = __mul__

    def resized(self, domain: DomainSpec) -> "SpectralField":
        """Zero-extend or truncate to another mode cut of the same rectangle."""
        c = np.zeros(domain.shape, dtype=complex)
        mx = min(domain.Mx, self.domain.Mx)
        my = min(domain.My, self.domain.My)
        c[:mx, :my] = self.coeffs[:mx, :my]
        return SpectralField(domain, c)


@dataclass(frozen=True, eq=False)
class GridField:
    """Values on the interior collocation nodes."""

    domain: DomainSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.domain.grid_shape:
            raise ValueError(f"grid shape {v.shape} does not match {self.domain.grid_shape}")
        object.__setattr__(self, "values", v)


def to_grid(f: SpectralField) -> GridField:
    """Evaluate the eigenfunction sum at the interior collocation nodes."""
    return GridField(f.domain, f.domain.synthesize(f.coeffs))


def to_coeffs(g: GridField, domain: DomainSpec | None = None) -> SpectralField:
    """Discrete L2 projection of grid values onto the retained modes.

    The rectangle-rule inner product on the interior nodes makes the
    discrete sines orthonormal, so modes above the cut are annihilated
    and ``to_coeffs(to_grid(f)) == f`` up to round-off.
    """
    domain = g.domain if domain is None else domain
    if domain.grid_shape != g.values.shape:
        raise ValueError("grid does not belong to this domain")
    return SpectralField(domain, domain.analyze(g.values))


def sobolev_norm(f: SpectralField, s: float) -> float:
    """Spectral ``H^s`` norm, ``(sum lam**s |c|**2) ** 0.5``.

    ``s = 0`` is the L2 norm, ``s = 1`` the energy norm ``||grad psi||``
    and ``s = -1`` the dual norm.
    """
    w = f.domain.lam ** s
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2)))


def apply_laplacian(f: SpectralField) -> SpectralField:
    """Return ``-Laplacian f`` (coefficients times eigenvalues)."""
    return SpectralField(f.domain, f.domain.lam * f.coeffs)


def random_field(domain: DomainSpec, rng: np.random.Generator, e_norm: float) -> SpectralField:
    """I.i.d. complex Gaussian coefficients rescaled to a given energy norm."""
    c = rng.standard_normal(domain.shape) + 1j * rng.standard_normal(domain.shape)
    f = SpectralField(domain, c)
    n = sobolev_norm(f, 1.0)
    return SpectralField(domain, c * (e_norm / n))
