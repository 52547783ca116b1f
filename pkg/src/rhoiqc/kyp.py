"""Augmented plant/filter realization, the exponential-rate LMI, and a grid FDI check."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import PreconditionError
from .iqc import StackedIqc, _as_stacked, _check_lambdas
from .lti import StateSpace, eigenvalues, ss_freqresp, unit_circle


@dataclass(frozen=True, eq=False)
class AugmentedSystem:
    """Realization of ``psi(z) [G(z); I]``; the first ``n_plant`` states are the plant's."""

    Ahat: np.ndarray
    Bhat: np.ndarray
    Chat: np.ndarray
    Dhat: np.ndarray
    n_plant: int
    n_psi: int

    @property
    def n(self) -> int:
        return self.Ahat.shape[0]

    @property
    def m(self) -> int:
        return self.Bhat.shape[1]

    @property
    def q(self) -> int:
        return self.Chat.shape[0]

    def as_statespace(self) -> StateSpace:
        return StateSpace(self.Ahat, self.Bhat, self.Chat, self.Dhat)


def build_augmented(G: StateSpace, psi: StateSpace) -> AugmentedSystem:
    if psi.m != G.p + G.m:
        raise PreconditionError(
            f"psi has {psi.m} inputs, expected p+m = {G.p + G.m} for (y, u)"
        )
    p = G.p
    B1, B2 = psi.B[:, :p], psi.B[:, p:]
    D1, D2 = psi.D[:, :p], psi.D[:, p:]
    n, npsi = G.n, psi.n
    Ahat = np.block([[G.A, np.zeros((n, npsi))], [B1 @ G.C, psi.A]])
    Bhat = np.vstack([G.B, B2 + B1 @ G.D])
    Chat = np.hstack([D1 @ G.C, psi.C])
    Dhat = D2 + D1 @ G.D
    return AugmentedSystem(Ahat, Bhat, Chat, Dhat, n, npsi)


@dataclass(frozen=True, eq=False)
class AffineMatrixInequality:
    """``F(x) = F0 + sum_i x_i Fi[i]``, required negative definite.

    ``labels[i]`` is ``("P", r, c)`` or ``("lambda", j)``; ``nonneg`` lists
    the decision variables constrained to be nonnegative (already encoded
    as diagonal entries of ``F``).
    """

    F0: np.ndarray
    Fi: np.ndarray
    labels: tuple
    nonneg: tuple = ()

    def __post_init__(self):
        F0 = np.asarray(self.F0, dtype=float)
        Fi = np.asarray(self.Fi, dtype=float).reshape(-1, *F0.shape)
        if len(self.labels) != Fi.shape[0]:
            raise PreconditionError("one label per decision variable is required")
        object.__setattr__(self, "F0", F0)
        object.__setattr__(self, "Fi", Fi)

    @property
    def size(self) -> int:
        return self.F0.shape[0]

    @property
    def nvar(self) -> int:
        return self.Fi.shape[0]

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.F0 + np.tensordot(x, self.Fi, axes=1)


def _sym_basis(n: int):
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0
            yield (i, j), E


def default_eps(aug: AugmentedSystem) -> float:
    return 1e-8 * (1 + np.linalg.norm(aug.Ahat) ** 2 + np.linalg.norm(aug.Bhat) ** 2)


def build_lmi(
    aug: AugmentedSystem,
    Ms: Sequence[np.ndarray],
    rho: float,
    eps: Optional[float] = None,
    fixed_lambdas: Optional[Sequence[float]] = None,
) -> AffineMatrixInequality:
    """Exponential-rate KYP LMI in ``P = P^T`` and one weight per multiplier.

    The matrix is ``[[A'PA - rho^2 P, A'PB], [B'PA, B'PB]] + [C D]' Mlam [C D]``
    with ``Mlam = blkdiag(lambda_i M_i)``, followed by diagonal entries
    ``-lambda_i``. Strictness is encoded by ``F0 = eps * I``. With
    ``fixed_lambdas`` the weights become data and only ``P`` is free.
    """
    if eps is None:
        eps = default_eps(aug)
    if eps < 0:
        raise PreconditionError("eps must be nonnegative")
    sizes = [np.shape(M)[0] for M in Ms]
    if sum(sizes) != aug.q:
        raise PreconditionError(f"multiplier blocks cover {sum(sizes)} outputs, psi has {aug.q}")
    n, m = aug.n, aug.m
    A, B = aug.Ahat, aug.Bhat
    CD = np.hstack([aug.Chat, aug.Dhat])
    r = 0 if fixed_lambdas is not None else len(Ms)
    s = n + m + r
    mats, labels = [], []

    AB = np.hstack([A, B])
    for (i, j), E in _sym_basis(n):
        F = np.zeros((s, s))
        F[: n + m, : n + m] = AB.T @ E @ AB
        F[:n, :n] -= rho**2 * E
        mats.append(F)
        labels.append(("P", i, j))

    F0 = eps * np.eye(s)
    offset = 0
    blocks = []
    for M, size in zip(Ms, sizes):
        rows = CD[offset : offset + size]
        blocks.append(rows.T @ np.asarray(M, dtype=float) @ rows)
        offset += size
    if fixed_lambdas is not None:
        lam = _check_lambdas(fixed_lambdas, len(Ms))
        for l, Q in zip(lam, blocks):
            F0[: n + m, : n + m] += l * Q
    else:
        for k, Q in enumerate(blocks):
            F = np.zeros((s, s))
            F[: n + m, : n + m] = Q
            F[n + m + k, n + m + k] = -1.0
            mats.append(F)
            labels.append(("lambda", k))
    nonneg = tuple(i for i, lab in enumerate(labels) if lab[0] == "lambda")
    Fi = np.array(mats).reshape(len(mats), s, s)
    Fi = 0.5 * (Fi + Fi.transpose(0, 2, 1))
    return AffineMatrixInequality(F0, Fi, tuple(labels), nonneg)


def unpack_solution(ami: AffineMatrixInequality, x, n: int):
    """Split a decision vector into ``(P, lambdas)``."""
    P = np.zeros((n, n))
    lam = []
    for val, lab in zip(np.asarray(x, dtype=float), ami.labels):
        if lab[0] == "P":
            P[lab[1], lab[2]] = P[lab[2], lab[1]] = val
        else:
            lam.append(val)
    return P, np.array(lam)


@dataclass(frozen=True)
class GridCheck:
    max_eig: float
    argmax_theta: float
    N: int
    eps: float = 0.0

    @property
    def passed(self) -> bool:
        return self.max_eig <= -self.eps


def fdi_values(G: StateSpace, iqc, lambdas, rho: float, N: int) -> np.ndarray:
    """Largest eigenvalue of ``[G;I]^* Pi [G;I]`` at ``rho * exp(i theta_j)``."""
    st: StackedIqc = _as_stacked(iqc)
    lam = _check_lambdas(lambdas, len(st.parts))
    aug = build_augmented(G, st.psi)
    for ev in eigenvalues(aug.Ahat):
        if abs(ev) >= rho * (1 - 1e-9):
            raise PreconditionError(
                f"eigenvalue {ev:.6g} (|.|={abs(ev):.6g}) lies on or outside the rho={rho} circle"
            )
    V = ss_freqresp(aug.as_statespace(), rho * unit_circle(N))
    Mlam = st.M_weighted(lam)
    H = np.conj(V.transpose(0, 2, 1)) @ Mlam @ V
    H = 0.5 * (H + np.conj(H.transpose(0, 2, 1)))
    return np.linalg.eigvalsh(H)[:, -1]


def grid_fdi_check(
    G: StateSpace, iqc, lambdas, rho: float, N: int = 512, eps: float = 0.0
) -> GridCheck:
    """Evaluate the frequency-domain inequality on a uniform grid of ``N`` points.

    The check passes when the largest eigenvalue over the grid is at most
    ``-eps``.
    """
    if N < 16:
        raise PreconditionError(f"grid needs at least 16 points, got {N}")
    vals = fdi_values(G, iqc, lambdas, rho, N)
    j = int(np.argmax(vals))
    return GridCheck(float(vals[j]), 2 * np.pi * j / N, N, eps)
