"""P1 finite elements on triangle meshes: Laplace eigenpairs and heat content.

All inner products downstream use the uniform probability measure
``dmu = dLebesgue / |Omega|``; eigenfunctions returned by ``solve_modes``
are orthonormal in L2(mu).  With that normalization the spectral heat
kernel ``sum exp(-lambda_n t) psi_n(x) psi_n(y)`` equals ``|Omega|`` times
the Lebesgue heat kernel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import TriangleMesh

DIRICHLET = "dirichlet"
NEUMANN = "neumann"

# Refuse eigenvalues the mesh cannot resolve: lambda <= RESOLUTION_CAP / h^2.
RESOLUTION_CAP = 1.5


class FemError(RuntimeError):
    pass


class NonConvergenceError(FemError):
    def __init__(self, message, achieved_residual=None):
        super().__init__(message)
        self.achieved_residual = achieved_residual


@dataclass
class FemSystem:
    """Assembled stiffness/mass pair with the Dirichlet dof map.

    ``dof_map`` lists the mesh vertex index of each degree of freedom
    (all vertices for Neumann, interior vertices for Dirichlet).
    """

    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    dof_map: np.ndarray
    bc: str
    mesh: TriangleMesh
    mass_full: sp.csr_matrix

    @property
    def n_dofs(self) -> int:
        return len(self.dof_map)


@dataclass
class EigenBasis:
    """Ordered Laplace eigenpairs under a fixed boundary condition.

    ``psis`` holds one column per mode, defined on all mesh vertices
    (Dirichlet modes are extended by zero to the boundary), orthonormal
    in L2(mu) with ``dmu = dLeb / measure``.
    """

    bc: str
    lambdas: np.ndarray
    psis: np.ndarray
    mesh: TriangleMesh
    measure: float
    mesh_ref: str = ""

    @property
    def n_modes(self) -> int:
        return len(self.lambdas)

    def mean_coefficients(self) -> np.ndarray:
        """<psi_n, 1>_mu for every mode."""
        ones = np.ones(self.mesh.n_vertices)
        m = assemble(self.mesh, NEUMANN).mass_full
        return (m @ ones) @ self.psis / self.measure

    def resolution_cap(self) -> float:
        """Largest eigenvalue the mesh plausibly resolves (O(h^-2))."""
        h = np.sqrt(2.0 * np.median(self.mesh.triangle_areas()))
        return RESOLUTION_CAP / h**2

    def to_json(self) -> str:
        return json.dumps(
            {
                "bc": self.bc,
                "lambdas": self.lambdas.tolist(),
                "mesh_ref": self.mesh_ref,
                "measure": self.measure,
                "psis": self.psis.T.tolist(),
            }
        )


@dataclass
class HeatContent:
    """Solution of the heat equation started from 1, sampled at mesh vertices."""

    t: float
    values: np.ndarray


def assemble(mesh: TriangleMesh, bc: str) -> FemSystem:
    """Assemble P1 stiffness and consistent mass matrices.

    Dirichlet eliminates boundary vertices via ``dof_map``; Neumann is the
    natural condition and keeps every vertex.
    """
    if bc not in (DIRICHLET, NEUMANN):
        raise FemError(f"unknown boundary condition {bc!r}")
    tri = mesh.triangles
    p = mesh.vertices[tri]
    e0 = p[:, 2] - p[:, 1]
    e1 = p[:, 0] - p[:, 2]
    e2 = p[:, 1] - p[:, 0]
    areas = 0.5 * np.cross(e2, -e1)
    if np.any(areas <= 0):
        raise FemError("degenerate or negatively oriented triangle in mesh")

    # Local stiffness K_ab = (g_a . g_b) / (4A) with g_a the edge opposite vertex a.
    edges = np.stack([e0, e1, e2], axis=1)
    local_k = np.einsum("tak,tbk->tab", edges, edges) / (4.0 * areas)[:, None, None]
    local_m = (np.ones((3, 3)) + np.eye(3))[None, :, :] * (areas / 12.0)[:, None, None]

    rows = np.repeat(tri, 3, axis=1).reshape(-1)
    cols = np.tile(tri, (1, 3)).reshape(-1)
    n = mesh.n_vertices
    stiffness = sp.coo_matrix((local_k.reshape(-1), (rows, cols)), shape=(n, n)).tocsr()
    mass = sp.coo_matrix((local_m.reshape(-1), (rows, cols)), shape=(n, n)).tocsr()

    if bc == DIRICHLET:
        if not mesh.boundary_vertex_flags.any():
            raise FemError("Dirichlet condition requested but mesh has no boundary vertices")
        dof_map = np.flatnonzero(~mesh.boundary_vertex_flags)
        k_red = stiffness[dof_map][:, dof_map].tocsr()
        m_red = mass[dof_map][:, dof_map].tocsr()
        return FemSystem(k_red, m_red, dof_map, bc, mesh, mass)
    dof_map = np.arange(n)
    return FemSystem(stiffness, mass, dof_map, bc, mesh, mass)


def solve_modes(system: FemSystem, n_modes: int, tol: float = 1e-8, mesh_ref: str = "") -> EigenBasis:
    """Smallest ``n_modes`` generalized eigenpairs of ``K psi = lambda M psi``.

    Uses shift-invert Lanczos with a deterministic start vector, or a dense
    solver when a large fraction of the spectrum is requested.  Residuals
    ``|K psi - lambda M psi| <= tol * |M psi|`` are verified.
    """
    k_mat, m_mat = system.stiffness, system.mass
    n = system.n_dofs
    if n_modes < 1 or n_modes > n:
        raise FemError(f"n_modes={n_modes} out of range for {n} dofs")

    if n_modes > 0.3 * n or n < 400:
        lam, vec = scipy.linalg.eigh(k_mat.toarray(), m_mat.toarray(), subset_by_index=[0, n_modes - 1])
    else:
        sigma = 0.0 if system.bc == DIRICHLET else -1e-8
        v0 = np.full(n, 1.0 / np.sqrt(n))
        try:
            lam, vec = spla.eigsh(k_mat, k=n_modes, M=m_mat, sigma=sigma, which="LM", v0=v0)
        except spla.ArpackNoConvergence as exc:
            raise NonConvergenceError(f"eigensolver did not converge: {exc}") from exc

    order = np.argsort(lam)
    lam = lam[order]
    vec = vec[:, order]
    lam[np.abs(lam) < 1e-10] = np.abs(lam[np.abs(lam) < 1e-10])

    resid = _residuals(k_mat, m_mat, lam, vec)
    if resid.max() > tol:
        raise NonConvergenceError(
            f"eigenpair residual {resid.max():.3e} exceeds tol {tol:.1e}",
            achieved_residual=float(resid.max()),
        )

    measure = system.mesh.area()
    # eigh/eigsh return M-orthonormal vectors; rescale to L2(mu) and extend
    # by zero to eliminated boundary vertices.
    psis = np.zeros((system.mesh.n_vertices, n_modes))
    psis[system.dof_map] = vec * np.sqrt(measure)
    # Deterministic sign: largest-magnitude coefficient positive.
    flip = np.sign(psis[np.abs(psis).argmax(axis=0), np.arange(n_modes)])
    flip[flip == 0] = 1.0
    psis *= flip
    return EigenBasis(system.bc, lam, psis, system.mesh, measure, mesh_ref=mesh_ref)


def _residuals(k_mat, m_mat, lam, vec):
    kr = k_mat @ vec - m_mat @ vec * lam
    num = np.linalg.norm(kr, axis=0)
    den = np.linalg.norm(m_mat @ vec, axis=0) * np.maximum(1.0, np.abs(lam))
    return num / den


class TriangleLocator:
    """Uniform-grid point location for barycentric evaluation."""

    def __init__(self, mesh: TriangleMesh, cells_per_axis: int = 64):
        self.mesh = mesh
        pts = mesh.vertices[mesh.triangles]
        self.lo = mesh.vertices.min(axis=0)
        span = mesh.vertices.max(axis=0) - self.lo
        self.h = np.where(span > 0, span, 1.0) / cells_per_axis
        self.ncells = cells_per_axis
        self.bins: dict[tuple[int, int], list[int]] = {}
        tlo = np.floor((pts.min(axis=1) - self.lo) / self.h).astype(int)
        thi = np.floor((pts.max(axis=1) - self.lo) / self.h).astype(int)
        for t in range(mesh.n_triangles):
            for i in range(max(tlo[t, 0], 0), min(thi[t, 0], cells_per_axis - 1) + 1):
                for j in range(max(tlo[t, 1], 0), min(thi[t, 1], cells_per_axis - 1) + 1):
                    self.bins.setdefault((i, j), []).append(t)

    def locate(self, p: np.ndarray, tol: float = 1e-12) -> tuple[int, np.ndarray]:
        cell = tuple(np.clip(np.floor((p - self.lo) / self.h).astype(int), 0, self.ncells - 1))
        for t in self.bins.get(cell, ()):
            bary = _barycentric(self.mesh.vertices[self.mesh.triangles[t]], p)
            if bary.min() >= -tol:
                return t, np.clip(bary, 0.0, 1.0)
        # Fallback sweep (points on cell borders).
        verts = self.mesh.vertices[self.mesh.triangles]
        for t in range(self.mesh.n_triangles):
            bary = _barycentric(verts[t], p)
            if bary.min() >= -tol:
                return t, np.clip(bary, 0.0, 1.0)
        raise FemError(f"point {p} lies outside the mesh")


def _barycentric(tri_pts: np.ndarray, p: np.ndarray) -> np.ndarray:
    t = np.column_stack([tri_pts[1] - tri_pts[0], tri_pts[2] - tri_pts[0]])
    lam12 = np.linalg.solve(t, p - tri_pts[0])
    return np.array([1.0 - lam12.sum(), lam12[0], lam12[1]])


def eval_eigenfunction(basis: EigenBasis, n: int, p, locator: TriangleLocator | None = None) -> float:
    """Piecewise-linear interpolation of mode ``n`` at point ``p``."""
    if n >= basis.n_modes:
        raise FemError(f"mode {n} not computed (have {basis.n_modes})")
    loc = locator or TriangleLocator(basis.mesh)
    t, bary = loc.locate(np.asarray(p, dtype=float))
    return float(basis.psis[basis.mesh.triangles[t], n] @ bary)


def eval_modes_at(basis: EigenBasis, points: np.ndarray, locator: TriangleLocator | None = None) -> np.ndarray:
    """All mode values at many points, shape ``(n_points, n_modes)``."""
    loc = locator or TriangleLocator(basis.mesh)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty((len(pts), basis.n_modes))
    for i, p in enumerate(pts):
        t, bary = loc.locate(p)
        out[i] = bary @ basis.psis[basis.mesh.triangles[t]]
    return out


def heat_content(basis: EigenBasis, t: float, truncation: float = 1e-12) -> HeatContent:
    """Heat content ``w(x, t) = sum_n exp(-lambda_n t) psi_n(x) <psi_n, 1>_mu``.

    Terms with ``exp(-lambda_n t) |<psi_n, 1>| < truncation`` are dropped.
    """
    if t <= 0:
        raise FemError("heat content requires t > 0")
    coeff = basis.mean_coefficients()
    weights = np.exp(-basis.lambdas * t) * coeff
    keep = np.abs(weights) >= truncation
    return HeatContent(t=t, values=basis.psis[:, keep] @ weights[keep])


def richardson_pairs(coarse: np.ndarray, fine: np.ndarray, ratio: float = 4.0) -> np.ndarray:
    """Richardson extrapolation for an O(h^2) quantity across one refinement."""
    return (ratio * fine - coarse) / (ratio - 1.0)


def aitken(older: np.ndarray, mid: np.ndarray, newest: np.ndarray) -> np.ndarray:
    """Aitken delta-squared extrapolation over three refinement levels.

    Rate-free, so it also handles the reduced convergence order caused by
    re-entrant corners.  Falls back to the finest value where the
    difference quotient degenerates.
    """
    d1 = mid - older
    d2 = newest - mid
    denom = d2 - d1
    safe = np.abs(denom) > 1e-14 * np.maximum(np.abs(newest), 1.0)
    out = np.array(newest, dtype=float)
    out[safe] = newest[safe] - d2[safe] ** 2 / denom[safe]
    return out
