"""Factorized rho-IQC multipliers for scalar static nonlinearities.

Every multiplier is stored as a pair ``(psi, M)`` with
``Pi(z) = psi(z)^* M psi(z)``. ``psi`` takes the stacked signal ``(y, u)``
with ``u = Delta(y)``. Dynamic (Zames-Falb) multipliers use an FIR ``H`` so
that ``psi`` is a delay chain with a nilpotent state matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import PreconditionError, RhoValidityError
from .lti import StateSpace, ss_eval

#: slack allowed on the rho-weighted Zames-Falb sum
ZF_SUM_TOL = 1e-12

_SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])

NORM_BOUNDED = "norm_bounded"
SECTOR = "sector"
OFF_BY_K = "off_by_k"
ZAMES_FALB_FIR = "zames_falb_fir"
POINTWISE_KINDS = (NORM_BOUNDED, SECTOR)


@dataclass(frozen=True)
class NonlinearityModel:
    """Scalar static nonlinearity with sector/slope bounds ``[alpha, beta]``.

    ``func`` is only needed for simulation. ``name`` is a free-form label
    used in reports.
    """

    alpha: float
    beta: float
    func: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    static: bool = True
    name: str = "sector"

    def __post_init__(self):
        if self.alpha > self.beta:
            raise PreconditionError(f"alpha={self.alpha} exceeds beta={self.beta}")

    @classmethod
    def arctan(cls, b: float = 1.0) -> "NonlinearityModel":
        if b < 0:
            raise PreconditionError("arctan gain b must be nonnegative")
        return cls(0.0, float(b), lambda x, b=float(b): b * np.arctan(x), name=f"{b:g}*arctan")

    @classmethod
    def linear(cls, k: float) -> "NonlinearityModel":
        return cls(float(k), float(k), lambda x, k=float(k): k * np.asarray(x), name=f"linear({k:g})")

    @classmethod
    def from_dict(cls, d: dict) -> "NonlinearityModel":
        kind = d.get("kind")
        if kind == "arctan":
            return cls.arctan(float(d.get("b", 1.0)))
        if kind == "linear":
            return cls.linear(float(d["k"]))
        if kind == "zero":
            return cls.linear(0.0)
        if kind == "sector":
            alpha, beta = float(d["alpha"]), float(d["beta"])
            if alpha == beta:
                return cls.linear(alpha)
            return cls(alpha, beta, name=f"sector[{alpha:g},{beta:g}]")
        raise PreconditionError(f"nonlinearity.kind: unknown kind {kind!r}")

    @property
    def max_slope(self) -> float:
        return max(abs(self.alpha), abs(self.beta))

    def __call__(self, x):
        if self.func is None:
            raise PreconditionError(f"nonlinearity {self.name!r} has no concrete function")
        return self.func(x)

    def chord_slopes(self, grid) -> np.ndarray:
        """Slopes of all chords between distinct points of ``grid``."""
        x = np.asarray(grid, dtype=float)
        fx = np.asarray(self(x), dtype=float)
        i, j = np.triu_indices(x.size, k=1)
        keep = x[i] != x[j]
        return (fx[i] - fx[j])[keep] / (x[i] - x[j])[keep]


@dataclass(frozen=True, eq=False)
class IqcFactorization:
    """One multiplier ``Pi = psi^* M psi``.

    ``rho`` is the rate the multiplier was built for (``None`` for pointwise
    kinds, which hold for every rate in ``(0, 1]``) and ``h`` the FIR
    impulse response of ``H`` for Zames-Falb kinds.
    """

    psi: StateSpace
    M: np.ndarray
    kind: str
    alpha: float = 0.0
    beta: float = 0.0
    rho: Optional[float] = None
    h: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        if M.shape != (self.psi.p, self.psi.p):
            raise PreconditionError(f"M has shape {M.shape}, psi has {self.psi.p} outputs")
        if not np.allclose(M, M.T, atol=0, rtol=0):
            raise PreconditionError("M must be symmetric")
        if self.psi.m != 2:
            raise PreconditionError(f"psi must take (y, u), got {self.psi.m} inputs")
        object.__setattr__(self, "M", M)

    def valid_at(self, rho: float) -> bool:
        if not 0 < rho <= 1:
            return False
        if self.kind in POINTWISE_KINDS:
            return True
        return validate_rho_zf(self.h, rho).valid

    def pi(self, z: complex) -> np.ndarray:
        Pz = ss_eval(self.psi, z)
        P = Pz.conj().T @ self.M @ Pz
        return 0.5 * (P + P.conj().T)


@dataclass(frozen=True)
class ZfReport:
    valid: bool
    weighted_sum: float
    negative_taps: tuple

    def __bool__(self) -> bool:
        return self.valid


def validate_rho_zf(h: Sequence[float], rho: float) -> ZfReport:
    """Check ``h_k >= 0`` and ``sum_k rho^{-2k} h_k <= 1``."""
    h = np.asarray(h, dtype=float).ravel()
    neg = tuple(int(k) for k in np.flatnonzero(h < 0))
    weights = float(rho) ** (-2.0 * np.arange(h.size))
    total = float(np.dot(weights, h))
    return ZfReport(not neg and total <= 1.0 + ZF_SUM_TOL, total, neg)


def make_norm_bounded(gamma: float) -> IqcFactorization:
    if not gamma > 0:
        raise PreconditionError(f"gamma must be positive, got {gamma}")
    return IqcFactorization(
        StateSpace.static(np.eye(2)), np.diag([gamma**2, -1.0]), NORM_BOUNDED,
        alpha=-gamma, beta=gamma, label="norm",
    )


def make_sector(alpha: float, beta: float) -> IqcFactorization:
    if alpha > beta:
        raise PreconditionError(f"alpha={alpha} exceeds beta={beta}")
    psi = StateSpace.static([[beta, -1.0], [-alpha, 1.0]])
    return IqcFactorization(psi, _SWAP, SECTOR, alpha=alpha, beta=beta, label="sector")


def _check_slope_bounds(alpha: float, beta: float) -> None:
    if alpha < 0:
        raise PreconditionError(f"Zames-Falb multipliers need alpha >= 0, got {alpha}")
    if alpha > beta:
        raise PreconditionError(f"alpha={alpha} exceeds beta={beta}")


def _zf_psi(alpha: float, beta: float, h: np.ndarray) -> StateSpace:
    # z1 = (1 - H)(beta*y - u) via a delay chain on s = beta*y - u; z2 = u - alpha*y
    L = h.size - 1
    D = np.array([[beta * (1 - h[0]), -(1 - h[0])], [-alpha, 1.0]])
    if L == 0:
        return StateSpace.static(D)
    A = np.eye(L, k=-1)
    B = np.zeros((L, 2))
    B[0] = [beta, -1.0]
    C = np.zeros((2, L))
    C[0] = -h[1:]
    return StateSpace(A, B, C, D)


def make_zames_falb_fir(alpha: float, beta: float, h: Sequence[float], rho: float) -> IqcFactorization:
    """Zames-Falb multiplier with FIR ``H(z) = sum_k h_k z^{-k}``.

    Raises :class:`RhoValidityError` if ``h`` has a negative tap or
    violates the rho-weighted sum bound at ``rho``.
    """
    _check_slope_bounds(alpha, beta)
    if not 0 < rho <= 1:
        raise PreconditionError(f"rho must lie in (0, 1], got {rho}")
    h = np.atleast_1d(np.asarray(h, dtype=float)).ravel()
    if h.size == 0:
        h = np.zeros(1)
    report = validate_rho_zf(h, rho)
    if report.negative_taps:
        raise RhoValidityError(f"negative impulse-response taps at k={list(report.negative_taps)}")
    if not report.valid:
        raise RhoValidityError(
            f"sum_k rho^(-2k) h_k = {report.weighted_sum:.12g} exceeds 1 at rho={rho}"
        )
    h.setflags(write=False)
    return IqcFactorization(
        _zf_psi(alpha, beta, h), _SWAP, ZAMES_FALB_FIR,
        alpha=alpha, beta=beta, rho=float(rho), h=h, label="zf_fir",
    )


def make_off_by_k(alpha: float, beta: float, k: int, rho: float) -> IqcFactorization:
    """Off-by-k multiplier, ``H(z) = rho^{2k} z^{-k}``."""
    if int(k) != k or k < 1:
        raise PreconditionError(f"k must be a positive integer, got {k}")
    k = int(k)
    _check_slope_bounds(alpha, beta)
    if not 0 < rho <= 1:
        raise PreconditionError(f"rho must lie in (0, 1], got {rho}")
    h = np.zeros(k + 1)
    h[k] = rho ** (2 * k)
    h.setflags(write=False)
    return IqcFactorization(
        _zf_psi(alpha, beta, h), _SWAP, OFF_BY_K,
        alpha=alpha, beta=beta, rho=float(rho), h=h, label=f"off_by_{k}",
    )


@dataclass(frozen=True, eq=False)
class StackedIqc:
    """Several multipliers sharing the input ``(y, u)``, outputs concatenated."""

    parts: tuple
    psi: StateSpace
    block_sizes: tuple
    state_sizes: tuple

    @property
    def Ms(self) -> list:
        return [p.M for p in self.parts]

    def M_weighted(self, lambdas) -> np.ndarray:
        lambdas = _check_lambdas(lambdas, len(self.parts))
        return scipy.linalg.block_diag(*[l * p.M for l, p in zip(lambdas, self.parts)])

    @property
    def label(self) -> str:
        return "+".join(p.label for p in self.parts)


def stack(parts: Sequence[IqcFactorization]) -> StackedIqc:
    parts = tuple(parts)
    if not parts:
        raise PreconditionError("cannot stack an empty list of multipliers")
    if any(p.psi.m != parts[0].psi.m for p in parts):
        raise PreconditionError("all multipliers must share the input dimension")
    m = parts[0].psi.m
    A = scipy.linalg.block_diag(*[p.psi.A for p in parts]) if any(p.psi.n for p in parts) else np.zeros((0, 0))
    n = A.shape[0]
    B = np.vstack([p.psi.B for p in parts]) if n else np.zeros((0, m))
    C = scipy.linalg.block_diag(*[p.psi.C for p in parts])
    C = C.reshape(sum(p.psi.p for p in parts), n)
    D = np.vstack([p.psi.D for p in parts])
    return StackedIqc(
        parts, StateSpace(A, B, C, D),
        tuple(p.psi.p for p in parts), tuple(p.psi.n for p in parts),
    )


def _as_stacked(iqc) -> StackedIqc:
    return iqc if isinstance(iqc, StackedIqc) else stack([iqc])


def _check_lambdas(lambdas, r: int) -> np.ndarray:
    lam = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if lam.size != r:
        raise PreconditionError(f"expected {r} weights, got {lam.size}")
    if np.any(lam < 0):
        raise PreconditionError("multiplier weights must be nonnegative")
    return lam


def pi_eval(iqc, z: complex, lambdas=None) -> np.ndarray:
    """``sum_i lambda_i psi_i(z)^* M_i psi_i(z)``, symmetrized to be Hermitian."""
    st = _as_stacked(iqc)
    lam = _check_lambdas(np.ones(len(st.parts)) if lambdas is None else lambdas, len(st.parts))
    Pz = ss_eval(st.psi, z)
    P = Pz.conj().T @ st.M_weighted(lam) @ Pz
    return 0.5 * (P + P.conj().T)


def filter_signal(psi: StateSpace, w: np.ndarray) -> np.ndarray:
    """Run ``psi`` from zero state on the rows of ``w`` (shape ``(T, m)``)."""
    T = w.shape[0]
    x = np.zeros(psi.n)
    out = np.empty((T, psi.p))
    for k in range(T):
        out[k] = psi.C @ x + psi.D @ w[k]
        x = psi.A @ x + psi.B @ w[k]
    return out


def time_domain_check(iqc: IqcFactorization, rho: float, y, u) -> np.ndarray:
    """Partial sums ``S_T = sum_{k<=T} rho^{-2k} z_k^T M z_k`` with ``z = psi(y, u)``."""
    y = np.asarray(y, dtype=float).ravel()
    u = np.asarray(u, dtype=float).ravel()
    if y.shape != u.shape:
        raise PreconditionError(f"signal lengths differ: {y.size} vs {u.size}")
    if not rho > 0:
        raise PreconditionError(f"rho must be positive, got {rho}")
    zs = filter_signal(iqc.psi, np.column_stack([y, u]))
    terms = np.einsum("ki,ij,kj->k", zs, iqc.M, zs)
    return np.cumsum(rho ** (-2.0 * np.arange(y.size)) * terms)


# -- family specs -------------------------------------------------------------

def parse_family(spec) -> list:
    """Normalize a family given as a ``+``-joined string or a list of dicts.

    Short names: ``norm``, ``sector``, ``off_by_<k>``; e.g.
    ``"sector+off_by_1"``.
    """
    if isinstance(spec, str):
        items = []
        for tok in filter(None, (t.strip() for t in spec.split("+"))):
            if tok in ("norm", "sector"):
                items.append({"kind": tok})
            elif tok.startswith("off_by_"):
                items.append({"kind": "off_by_k", "k": int(tok[len("off_by_"):])})
            else:
                raise PreconditionError(f"family: unknown multiplier {tok!r}")
        spec = items
    spec = [dict(s) for s in spec]
    if not spec:
        raise PreconditionError("family: at least one multiplier is required")
    for s in spec:
        if s.get("kind") not in ("norm", "sector", "off_by_k", "zf_fir"):
            raise PreconditionError(f"family.kind: unknown kind {s.get('kind')!r}")
    return spec


def family_name(spec) -> str:
    names = []
    for s in parse_family(spec):
        if s["kind"] == "off_by_k":
            names.append(f"off_by_{int(s['k'])}")
        else:
            names.append(s["kind"])
    return "+".join(names)


def build_family(spec, delta: NonlinearityModel, rho: float) -> StackedIqc:
    """Instantiate every multiplier of a family at rate ``rho``.

    Sector/slope bounds default to those of ``delta``. A ``zf_fir`` entry
    with ``"rho_scaled": true`` takes ``h_k = w_k rho^{2k}`` from the given
    weights ``w``.
    """
    parts = []
    for s in parse_family(spec):
        kind = s["kind"]
        alpha = float(s.get("alpha", delta.alpha))
        beta = float(s.get("beta", delta.beta))
        if kind == "norm":
            parts.append(make_norm_bounded(float(s.get("gamma", delta.max_slope))))
        elif kind == "sector":
            parts.append(make_sector(alpha, beta))
        elif kind == "off_by_k":
            parts.append(make_off_by_k(alpha, beta, s.get("k", 1), rho))
        else:
            h = np.asarray(s["h"], dtype=float)
            if s.get("rho_scaled"):
                h = h * rho ** (2.0 * np.arange(h.size))
            parts.append(make_zames_falb_fir(alpha, beta, h, rho))
    return stack(parts)
