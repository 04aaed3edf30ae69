"""RWA Hamiltonian of the three-state ladder and its adiabatic eigensystem.

The rotating-frame Hamiltonian (hbar factored out, entries in rad/ns) is

    H = [[ 0,        Omega1/2,  0                        ],
         [ Omega1/2, Delta2,    Omega2/2                 ],
         [ 0,        Omega2/2,  Delta2 + Delta3 - stark ]]

with the dynamic Stark shift entering the (3,3) element with a minus sign
(``stark`` >= 0 lowers the rotating-frame energy of state 3).  Eigenvalues
are obtained from the closed-form solution of the characteristic cubic with
one guarded Newton polish per root; clustered spectra fall back to LAPACK.
Eigenvectors and continuity tracking in time are handled by
:func:`eigensystem`, :func:`initial_frame` and :func:`track_adiabatic`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

# Relative eigenvalue spacing below which a pair is treated as degenerate
# (continuity tracking then realigns the eigenbasis inside the cluster).
DEGENERACY_RTOL = 1e-8
# Overlap ambiguity threshold for the assignment tie-break.
OVERLAP_TIE_ATOL = 1e-9


@dataclass(frozen=True)
class HamiltonianParams:
    """Instantaneous parameters of the ladder Hamiltonian, all in rad/ns.

    ``stark`` is the magnitude of the dynamic Stark shift of state 3; a
    positive value lowers H33.  All fields must be finite and ``stark``
    nonnegative.
    """

    omega1: float
    omega2: float
    delta2: float
    delta3: float
    stark: float = 0.0

    def __post_init__(self):
        for name in ("omega1", "omega2", "delta2", "delta3", "stark"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.stark < 0.0:
            raise ValueError(f"stark must be >= 0 (magnitude), got {self.stark}")


def build_hamiltonian(params: HamiltonianParams, beta: float = 0.0) -> np.ndarray:
    """Assemble the 3x3 RWA Hamiltonian.

    ``beta`` is the phase of field 2 relative to field 1; it multiplies the
    2-3 coupling by exp(i*beta), which puts the factor exp(-i*beta) on the
    third component of the dark state.  With ``beta == 0`` the matrix is
    real symmetric.
    """
    p = params
    h33 = p.delta2 + p.delta3 - p.stark
    if beta == 0.0:
        h = np.zeros((3, 3))
        c23 = 0.5 * p.omega2
    else:
        h = np.zeros((3, 3), dtype=complex)
        c23 = 0.5 * p.omega2 * np.exp(1j * beta)
    h[0, 1] = 0.5 * p.omega1
    h[1, 0] = np.conj(h[0, 1])
    h[1, 2] = c23
    h[2, 1] = np.conj(c23)
    h[1, 1] = p.delta2
    h[2, 2] = h33
    return h


def _char_poly_coeffs(h):
    """Coefficients (c2, c1, c0) of det(H - x I) = -(x^3 + c2 x^2 + c1 x + c0)."""
    h00 = np.real(h[..., 0, 0])
    h11 = np.real(h[..., 1, 1])
    h22 = np.real(h[..., 2, 2])
    a01 = np.abs(h[..., 0, 1]) ** 2
    a02 = np.abs(h[..., 0, 2]) ** 2
    a12 = np.abs(h[..., 1, 2]) ** 2
    tr = h00 + h11 + h22
    minors = (h00 * h11 - a01) + (h00 * h22 - a02) + (h11 * h22 - a12)
    det = np.real(
        h[..., 0, 0] * (h[..., 1, 1] * h[..., 2, 2] - h[..., 1, 2] * h[..., 2, 1])
        - h[..., 0, 1] * (h[..., 1, 0] * h[..., 2, 2] - h[..., 1, 2] * h[..., 2, 0])
        + h[..., 0, 2] * (h[..., 1, 0] * h[..., 2, 1] - h[..., 1, 1] * h[..., 2, 0]))
    return -tr, minors, -det


def eigvals3(h, refine: bool = True) -> np.ndarray:
    """Eigenvalues of Hermitian 3x3 matrices, sorted ascending.

    Vectorized over leading axes.  Uses the trigonometric closed form of
    the characteristic cubic, then one Newton step per root (skipped where
    the derivative of the characteristic polynomial is small).  Entries
    whose minimum eigenvalue spacing falls below ``DEGENERACY_RTOL`` times
    the spectral scale are recomputed with LAPACK when ``refine`` is set.
    """
    h = np.asarray(h)
    q = np.real(h[..., 0, 0] + h[..., 1, 1] + h[..., 2, 2]) / 3.0
    k = h - q[..., None, None] * np.eye(3, dtype=h.dtype)
    p2 = np.real(np.einsum("...ij,...ji->...", k, k)) / 6.0
    p = np.sqrt(np.maximum(p2, 0.0))
    detk = np.real(
        k[..., 0, 0] * (k[..., 1, 1] * k[..., 2, 2] - k[..., 1, 2] * k[..., 2, 1])
        - k[..., 0, 1] * (k[..., 1, 0] * k[..., 2, 2] - k[..., 1, 2] * k[..., 2, 0])
        + k[..., 0, 2] * (k[..., 1, 0] * k[..., 2, 1] - k[..., 1, 1] * k[..., 2, 0]))
    p_safe = np.where(p > 0.0, p, 1.0)
    r = np.clip(detk / (2.0 * p_safe**3), -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    hi = q + 2.0 * p * np.cos(phi)
    lo = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    lam = np.stack([lo, 3.0 * q - hi - lo, hi], axis=-1)
    lam = np.sort(lam, axis=-1)
    if not refine:
        return lam

    scale = np.maximum(np.max(np.abs(lam), axis=-1), 1e-300)
    c2, c1, c0 = _char_poly_coeffs(h)
    pv = ((lam + c2[..., None]) * lam + c1[..., None]) * lam + c0[..., None]
    dpv = (3.0 * lam + 2.0 * c2[..., None]) * lam + c1[..., None]
    ok = np.abs(dpv) > 1e-6 * scale[..., None] ** 2
    delta = np.where(ok, pv / np.where(ok, dpv, 1.0), 0.0)
    delta = np.clip(delta, -1e-8 * scale[..., None], 1e-8 * scale[..., None])
    lam = np.sort(lam - delta, axis=-1)

    gap_min = np.minimum(lam[..., 1] - lam[..., 0], lam[..., 2] - lam[..., 1])
    clustered = gap_min < DEGENERACY_RTOL * scale
    if np.any(clustered):
        lam = lam.copy()
        lam[clustered] = np.linalg.eigvalsh(h[clustered])
    return lam


def spectral_norm3(h) -> np.ndarray:
    """Spectral norm max|lambda| of Hermitian 3x3 matrices (vectorized)."""
    lam = eigvals3(h, refine=False)
    return np.max(np.abs(lam), axis=-1)


@dataclass(frozen=True)
class AdiabaticFrame:
    """Instantaneous eigensystem of the ladder Hamiltonian.

    ``vectors[:, k]`` is the unit eigenvector paired with ``energies[k]``.
    ``ordering`` is "sorted" (ascending eigenvalues, as produced by
    :func:`eigensystem`) or "tracked" (continuity-ordered in time).
    ``degenerate`` is set when a (near-)degenerate cluster was encountered
    while ordering or tracking.
    """

    energies: np.ndarray
    vectors: np.ndarray
    ordering: str = "sorted"
    degenerate: bool = False

    @property
    def dim(self) -> int:
        return self.energies.shape[0]


def eigensystem(h) -> AdiabaticFrame:
    """Value-sorted eigen-decomposition of a Hermitian matrix (2x2 or 3x3)."""
    h = np.asarray(h)
    vals, vecs = np.linalg.eigh(h)
    return AdiabaticFrame(energies=vals, vectors=vecs, ordering="sorted")


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude component is real positive."""
    v = vectors.copy()
    for k in range(v.shape[1]):
        i = int(np.argmax(np.abs(v[:, k])))
        a = v[i, k]
        if np.abs(a) > 0.0:
            v[:, k] = v[:, k] * (np.conj(a) / np.abs(a))
    return v


def _clusters(energies: np.ndarray, scale: float):
    """Group indices of (near-)degenerate eigenvalues, ascending order."""
    groups, current = [], [0]
    for k in range(1, energies.shape[0]):
        if energies[k] - energies[k - 1] < DEGENERACY_RTOL * max(scale, 1.0):
            current.append(k)
        else:
            groups.append(current)
            current = [k]
    groups.append(current)
    return groups


def initial_frame(h) -> AdiabaticFrame:
    """Continuity-ready frame at a scenario start.

    Value-sorted; inside any degenerate cluster whose span is a set of bare
    basis states, the basis is rotated onto those bare states and ordered
    with psi3 in the lowest slot, then psi1, then psi2.  This matches the
    zero-field limit where the eigenstates align with the bare states and
    resolves the Omega = 0, stark = 0 degeneracy in favor of
    Phi- -> psi3, Phi0 -> psi1.
    """
    fr = eigensystem(h)
    vals = fr.energies.copy()
    vecs = fr.vectors.astype(complex)
    dim = fr.dim
    scale = float(np.max(np.abs(vals)))
    degenerate = False
    bare_priority = [2, 0, 1] if dim == 3 else [1, 0]
    for group in _clusters(vals, scale):
        if len(group) < 2:
            continue
        degenerate = True
        sub = vecs[:, group]
        proj = sub @ sub.conj().T
        weights = np.real(np.diag(proj))
        bare = [i for i in bare_priority if weights[i] > 1.0 - 1e-6]
        if len(bare) != len(group):
            continue  # accidental degeneracy; keep the LAPACK basis
        cols = []
        for b in bare:
            v = proj[:, b].copy()
            for c in cols:
                v -= c * np.vdot(c, v)
            n = np.linalg.norm(v)
            if n < 1e-12:
                cols = None
                break
            cols.append(v / n)
        if cols is not None:
            for slot, v in zip(group, cols):
                vecs[:, slot] = v
    vecs = _fix_phases(vecs)
    return AdiabaticFrame(energies=vals, vectors=vecs, ordering="tracked",
                          degenerate=degenerate)


def _subspace_align(sub_new: np.ndarray, sub_prev: np.ndarray) -> np.ndarray:
    """Rotate a degenerate eigen-subspace basis onto the previous frame.

    Any unitary mix of a degenerate cluster is an equally valid eigenbasis;
    the continuity-correct choice is the one closest to the previous frame,
    i.e. the unitary polar factor of <new|prev>.
    """
    m = sub_new.conj().T @ sub_prev
    u, _, vt = np.linalg.svd(m)
    return sub_new @ (u @ vt)


def track_adiabatic(prev: AdiabaticFrame, nxt: AdiabaticFrame) -> AdiabaticFrame:
    """Reorder a value-sorted frame for continuity with its predecessor.

    Columns of ``nxt`` are permuted so each eigenvector has maximal
    overlap magnitude with its predecessor in ``prev`` (best of all
    permutations).  Near-ties (within ``OVERLAP_TIE_ATOL``) set the
    degenerate flag and are broken by eigenvalue proximity.  Degenerate
    clusters are realigned onto the previous frame's basis, and every
    column phase is fixed so <prev_k|next_k> is real positive.
    """
    if prev.ordering != "tracked":
        raise ValueError("prev frame must be continuity-ordered (tracked)")
    dim = prev.dim
    vals = np.asarray(nxt.energies, dtype=float)
    vecs = np.asarray(nxt.vectors).astype(complex)
    ov = np.abs(prev.vectors.conj().T @ vecs)

    scored = []
    for perm in itertools.permutations(range(dim)):
        s = sum(ov[i, perm[i]] ** 2 for i in range(dim))
        scored.append((s, perm))
    scored.sort(key=lambda t: -t[0])
    best_score, best_perm = scored[0]
    degenerate = prev.degenerate or nxt.degenerate
    if len(scored) > 1 and best_score - scored[1][0] < OVERLAP_TIE_ATOL:
        degenerate = True
        tied = [p for s, p in scored if best_score - s < OVERLAP_TIE_ATOL]
        # eigenvalue-proximity tie-break
        best_perm = min(
            tied,
            key=lambda p: sum((vals[p[i]] - prev.energies[i]) ** 2 for i in range(dim)),
        )

    vals = vals[list(best_perm)]
    vecs = vecs[:, list(best_perm)]

    scale = max(float(np.max(np.abs(vals))), float(np.max(np.abs(prev.energies))))
    order = np.argsort(vals)
    for group in _clusters(vals[order], scale):
        if len(group) < 2:
            continue
        degenerate = True
        slots = [int(order[g]) for g in group]
        vecs[:, slots] = _subspace_align(vecs[:, slots], prev.vectors[:, slots])

    ph = np.sum(prev.vectors.conj() * vecs, axis=0)
    unit = np.where(np.abs(ph) > 0.0, np.conj(ph) / np.maximum(np.abs(ph), 1e-300), 1.0)
    vecs = vecs * unit[None, :]
    return AdiabaticFrame(energies=vals, vectors=vecs, ordering="tracked",
                          degenerate=degenerate)


def dark_state(omega_p: float, omega_s: float, beta: float = 0.0) -> np.ndarray:
    """Population-trapping eigenstate (Omega_S, 0, -exp(-i beta) Omega_P)/N.

    Defined for two-photon resonance with vanishing Stark shift; it is the
    zero-eigenvalue eigenstate with no intermediate-state component.
    """
    if omega_p == 0.0 and omega_s == 0.0:
        raise ValueError("dark state undefined when both Rabi frequencies vanish")
    n = math.hypot(omega_p, omega_s)
    return np.array([omega_s / n, 0.0, -np.exp(-1j * beta) * omega_p / n])


def nonadiabatic_coupling(frame_a: AdiabaticFrame, frame_b: AdiabaticFrame,
                          dt: float) -> np.ndarray:
    """Finite-difference coupling magnitudes |<Phi_j(t)|Phi_k(t+dt)>| / dt.

    Both frames must be continuity-ordered.  The diagonal is zeroed; the
    off-diagonal entries estimate the rate at which neighbouring adiabatic
    states rotate into each other, in rad/ns.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if frame_a.ordering != "tracked" or frame_b.ordering != "tracked":
        raise ValueError("coupling requires continuity-ordered frames")
    mat = np.abs(frame_a.vectors.conj().T @ frame_b.vectors) / dt
    np.fill_diagonal(mat, 0.0)
    return mat
