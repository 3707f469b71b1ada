"""Velocity-gradient kinematics: A, S, omega, invariant traces, eigenvalues.

Everything here is algebra on a single velocity snapshot.  Products are
formed pointwise in physical space; derivatives are spectral.  For the
cubic traces to be alias-free the input should be band-limited to
|k| < n/4, which the verification suites enforce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    Grid,
    ScalarField,
    TensorField3,
    VectorField,
    spec_curl,
    spec_derivative,
    to_physical,
    to_spectral,
)

__all__ = [
    "StrainEigenvalues",
    "InvariantFields",
    "relative_divergence",
    "velocity_gradient",
    "vorticity",
    "decompose",
    "invariants",
    "strain_eigenvalues",
    "variance_P",
    "mean_helicity",
]


def _spectral_data(u: VectorField) -> np.ndarray:
    return u.data if u.rep == "spectral" else to_spectral(u.grid, u.data)


def relative_divergence(u: VectorField) -> float:
    """max_k |k . u_hat| / max_k |u_hat|, zero for a solenoidal field."""
    uh = _spectral_data(u)
    grid = u.grid
    div = sum(grid.kd[a] * uh[a] for a in range(3))
    denom = float(np.abs(uh).max())
    if denom == 0.0:
        return 0.0
    return float(np.abs(div).max()) / denom


def _require_solenoidal(u: VectorField, tol: float = 1e-10) -> None:
    rel = relative_divergence(u)
    if rel >= tol:
        raise ValueError(
            f"velocity field is not divergence-free: max |div u| = {rel:.3e} "
            f"(relative), tolerance {tol:.0e}"
        )


def _gradient_tensor_data(grid: Grid, uh: np.ndarray) -> np.ndarray:
    """A_ij = d u_i / d x_j in spectral representation, shape (3,3) + spectral shape."""
    return np.stack([
        np.stack([spec_derivative(grid, uh[i], j) for j in range(3)])
        for i in range(3)
    ])


def velocity_gradient(u: VectorField) -> TensorField3:
    """A with A[i, j] = du_i/dx_j; rejects non-solenoidal input."""
    _require_solenoidal(u)
    grid = u.grid
    ah = _gradient_tensor_data(grid, _spectral_data(u))
    if u.rep == "physical":
        return TensorField3(grid, to_physical(grid, ah), "physical")
    return TensorField3(grid, ah, "spectral")


def vorticity(u: VectorField) -> VectorField:
    """curl u, with omega_1 = d2 u3 - d3 u2 fixing the sign convention."""
    grid = u.grid
    wh = spec_curl(grid, _spectral_data(u))
    if u.rep == "physical":
        return VectorField(grid, to_physical(grid, wh), "physical")
    return VectorField(grid, wh, "spectral")


def decompose(A: TensorField3) -> tuple[TensorField3, VectorField]:
    """Split A into strain S = (A + A^T)/2 and the vorticity vector.

    The skew part is 0.5 * eps_kji omega_k, so A is recovered from the pair;
    that reconstruction is asserted in the test suite rather than here.
    """
    a = A.data
    s = 0.5 * (a + np.swapaxes(a, 0, 1))
    w = np.stack([
        a[2, 1] - a[1, 2],
        a[0, 2] - a[2, 0],
        a[1, 0] - a[0, 1],
    ])
    return (
        TensorField3(A.grid, s, A.rep),
        VectorField(A.grid, w, A.rep),
    )


@dataclass(frozen=True)
class InvariantFields:
    """Pointwise invariant scalars of one velocity snapshot (physical rep).

    grad_S_sq is the full contraction sum_{ijk} (d_k S_ij)^2 and
    grad_omega_sq is sum_{ik} (d_k omega_i)^2.
    """

    trA2: ScalarField
    trA3: ScalarField
    trS2: ScalarField
    trS3: ScalarField
    enstrophy: ScalarField
    omega_S_omega: ScalarField
    grad_S_sq: ScalarField
    grad_omega_sq: ScalarField
    variance_P: ScalarField


def invariants(u: VectorField) -> InvariantFields:
    _require_solenoidal(u)
    grid = u.grid
    uh = _spectral_data(u)

    ah = _gradient_tensor_data(grid, uh)
    a = to_physical(grid, ah)
    s = 0.5 * (a + np.swapaxes(a, 0, 1))
    w = to_physical(grid, spec_curl(grid, uh))

    trA2 = np.einsum("ij...,ji...->...", a, a)
    trA3 = np.einsum("ij...,jk...,ki...->...", a, a, a)
    trS2 = np.einsum("ij...,ij...->...", s, s)
    trS3 = np.einsum("ij...,jk...,ki...->...", s, s, s)
    enst = np.einsum("i...,i...->...", w, w)
    wsw = np.einsum("i...,ij...,j...->...", w, s, w)

    # gradients of S and omega: one batched inverse transform each
    sh = to_spectral(grid, s)
    ds = to_physical(grid, np.stack(
        [spec_derivative(grid, sh, k) for k in range(3)]))
    grad_s = np.einsum("kij...,kij...->...", ds, ds)
    wh = to_spectral(grid, w)
    dw = to_physical(grid, np.stack(
        [spec_derivative(grid, wh, k) for k in range(3)]))
    grad_w = np.einsum("ki...,ki...->...", dw, dw)

    eigs = _eigenvalues_from_traces(trS2, trS3)
    p_var = (
        (eigs[0] - eigs[1]) ** 2
        + (eigs[1] - eigs[2]) ** 2
        + (eigs[2] - eigs[0]) ** 2
    ) / 3.0

    wrap = lambda arr: ScalarField(grid, arr, "physical")  # noqa: E731
    return InvariantFields(
        trA2=wrap(trA2),
        trA3=wrap(trA3),
        trS2=wrap(trS2),
        trS3=wrap(trS3),
        enstrophy=wrap(enst),
        omega_S_omega=wrap(wsw),
        grad_S_sq=wrap(grad_s),
        grad_omega_sq=wrap(grad_w),
        variance_P=wrap(p_var),
    )


@dataclass(frozen=True)
class StrainEigenvalues:
    """Per-point strain eigenvalues ordered a >= b >= c (and a+b+c = 0)."""

    grid: Grid
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        for name in ("a", "b", "c"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if arr.shape != self.grid.shape:
                raise ValueError(
                    f"eigenvalue array {name} must have shape {self.grid.shape}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def _eigenvalues_from_traces(trS2: np.ndarray, trS3: np.ndarray) -> np.ndarray:
    """Roots of t^3 - (trS2/2) t - (trS3/3) = 0, descending along axis 0.

    Trigonometric form for the depressed cubic with three real roots.  The
    traces are normalized by their field maximum first so that trS2**1.5
    cannot underflow for uniformly tiny strain; points more than thirty
    orders of magnitude below the maximum are treated as strain-free.
    """
    top = float(np.max(trS2, initial=0.0))
    if not (top > 0.0 and np.isfinite(top)):
        return np.zeros((3,) + np.shape(trS2))
    t2 = trS2 / top
    with np.errstate(over="ignore", under="ignore"):
        t3 = (trS3 / top) / np.sqrt(top)
    live = t2 > 1e-60
    safe = np.where(live, t2, 1.0)
    amp = 2.0 * np.sqrt(safe / 6.0)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        raw = t3 * np.sqrt(6.0) / safe ** 1.5
    # trS3 = 0 with degenerate scaling gives 0/0; its limit is the
    # symmetric spectrum, which arg = 0 produces
    arg = np.clip(np.nan_to_num(raw, nan=0.0, posinf=1.0, neginf=-1.0),
                  -1.0, 1.0)
    theta = np.arccos(arg) / 3.0
    shift = 2.0 * np.pi / 3.0
    lam = np.stack([
        amp * np.cos(theta),
        amp * np.cos(theta - shift),
        amp * np.cos(theta - 2.0 * shift),
    ])
    lam = np.where(live, lam, 0.0) * np.sqrt(top)
    # cos ordering already gives descending roots; the sort only arbitrates
    # exact ties and guards the invariant
    return np.sort(lam, axis=0)[::-1]


def strain_eigenvalues(S: TensorField3) -> StrainEigenvalues:
    s = S.data if S.rep == "physical" else to_physical(S.grid, S.data)
    trace = np.einsum("ii...->...", s)
    scale = max(float(np.abs(s).max()), 1e-300)
    if float(np.abs(trace).max()) > 1e-10 * scale:
        raise ValueError("strain tensor must be traceless")
    sym_defect = float(np.abs(s - np.swapaxes(s, 0, 1)).max())
    if sym_defect > 1e-10 * scale:
        raise ValueError("strain tensor must be symmetric")
    trS2 = np.einsum("ij...,ij...->...", s, s)
    trS3 = np.einsum("ij...,jk...,ki...->...", s, s, s)
    lam = _eigenvalues_from_traces(trS2, trS3)
    return StrainEigenvalues(S.grid, lam[0], lam[1], lam[2])


def variance_P(eigs: StrainEigenvalues) -> tuple[ScalarField, ScalarField]:
    """Eigenvalue spread P = ((a-b)^2 + (b-c)^2 + (c-a)^2) / 3.

    Returns (P, trS2/3).  The second entry is the statistical variance of
    {a, b, c} about their zero mean; under a+b+c = 0 the first equals trS2
    itself, so the two differ by exactly a factor of three.
    """
    a, b, c = eigs.a, eigs.b, eigs.c
    p = ((a - b) ** 2 + (b - c) ** 2 + (c - a) ** 2) / 3.0
    var = (a * a + b * b + c * c) / 3.0
    return (
        ScalarField(eigs.grid, p, "physical"),
        ScalarField(eigs.grid, var, "physical"),
    )


def mean_helicity(u: VectorField) -> float:
    """Volume mean of u . curl u."""
    grid = u.grid
    uh = _spectral_data(u)
    up = u.data if u.rep == "physical" else to_physical(grid, uh)
    w = to_physical(grid, spec_curl(grid, uh))
    return float(np.einsum("i...,i...->...", up, w).mean())
