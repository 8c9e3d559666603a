"""Spectral core: the 1D Dirichlet wave operator, damping couplings and norms.

Everything lives in the eigenbasis of the operator, so the three graph
norms (energy space, smooth space, weak space) are weighted coefficient
sums and the undamped flow is exact.  The damping coefficient a(x) acts
through its mode-coupling matrix M_jk = integral of a * e_j * e_k; the
feedback operator is multiplication by sqrt(a), hence its "B B*" composite
is multiplication by a and the dissipation quadratic form is v' M v'.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError


@dataclass(frozen=True)
class SpectralOperator:
    """Diagonal representation of the stiffness operator.

    eigenvalues are strictly positive, strictly increasing (units 1/time^2);
    the canonical builder yields (k*pi/L)^2 with sine eigenfunctions
    sqrt(2/L)*sin(k*pi*x/L).
    """

    n_modes: int
    eigenvalues: np.ndarray
    domain_length: float

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if self.n_modes < 1 or lam.shape != (self.n_modes,):
            raise InvalidArgumentError("eigenvalue count must equal n_modes >= 1")
        if self.domain_length <= 0:
            raise InvalidArgumentError("domain_length must be positive")
        if np.any(lam <= 0) or np.any(np.diff(lam) <= 0):
            raise InvalidArgumentError("eigenvalues must be positive and strictly increasing")
        lam.flags.writeable = False
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def frequencies(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues)

    def eigenfunctions(self, x) -> np.ndarray:
        """Values e_k(x_i) as an (n_points, n_modes) matrix."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        L = self.domain_length
        k = np.arange(1, self.n_modes + 1)
        return np.sqrt(2.0 / L) * np.sin(np.outer(x, k) * (np.pi / L))


def build_dirichlet_operator(n_modes: int, length: float) -> SpectralOperator:
    """Canonical operator on (0, L) with eigenvalues (k*pi/L)^2."""
    if n_modes < 1:
        raise InvalidArgumentError(f"n_modes must be >= 1, got {n_modes}")
    if length <= 0:
        raise InvalidArgumentError(f"length must be positive, got {length}")
    k = np.arange(1, n_modes + 1, dtype=float)
    return SpectralOperator(n_modes, (k * np.pi / length) ** 2, float(length))


@dataclass(frozen=True)
class DampingProfile:
    """Damping coefficient a(x) >= 0: constant, or an indicator of [lo, hi]."""

    kind: str  # "constant" | "interval"
    amplitude: float
    interval: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "interval"):
            raise InvalidArgumentError(f"unknown profile kind {self.kind!r}")
        if self.amplitude < 0:
            raise InvalidArgumentError("amplitude must be nonnegative")
        if self.kind == "interval":
            if self.interval is None or self.interval[0] >= self.interval[1]:
                raise InvalidArgumentError("interval profile needs lo < hi")

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.amplitude)
        lo, hi = self.interval
        return np.where((x >= lo) & (x <= hi), self.amplitude, 0.0)


def constant_profile(amplitude: float) -> DampingProfile:
    return DampingProfile("constant", float(amplitude))


def interval_profile(lo: float, hi: float, amplitude: float) -> DampingProfile:
    return DampingProfile("interval", float(amplitude), (float(lo), float(hi)))


@dataclass(frozen=True)
class DampingMap:
    """Mode-coupling matrix of a damping profile: M_jk = int a e_j e_k dx."""

    coupling: np.ndarray
    profile: DampingProfile

    def __post_init__(self):
        m = np.asarray(self.coupling, dtype=float)
        m.flags.writeable = False
        object.__setattr__(self, "coupling", m)

    @property
    def n_modes(self) -> int:
        return self.coupling.shape[0]

    def dissipation(self, velocity: np.ndarray) -> float:
        """Quadratic form v' M v' = int a |v'|^2 dx."""
        return float(velocity @ self.coupling @ velocity)


def _sine_product_antiderivative(op: SpectralOperator, x: float) -> np.ndarray:
    """Antiderivative at x of e_j(s) e_k(s), as an (n, n) matrix."""
    n, L = op.n_modes, op.domain_length
    k = np.arange(1, n + 1, dtype=float)
    diff = k[:, None] - k[None, :]
    summ = k[:, None] + k[None, :]
    w = np.pi * x / L
    # off-diagonal: (1/2)[sin(d w)/d - sin(s w)/s] * (L/pi), diagonal: x/2 - sin(2 k w) L/(4 k pi)
    with np.errstate(divide="ignore", invalid="ignore"):
        off = 0.5 * (L / np.pi) * (np.sin(diff * w) / diff - np.sin(summ * w) / summ)
    diag = x / 2.0 - (L / (4.0 * np.pi * k)) * np.sin(2.0 * k * w)
    out = np.where(np.eye(n, dtype=bool), diag, off)
    return (2.0 / L) * out


def _coupling_closed_form(op: SpectralOperator, profile: DampingProfile) -> np.ndarray:
    if profile.kind == "constant":
        return profile.amplitude * np.eye(op.n_modes)
    lo, hi = profile.interval
    block = _sine_product_antiderivative(op, hi) - _sine_product_antiderivative(op, lo)
    m = profile.amplitude * block
    return 0.5 * (m + m.T)  # symmetrize away rounding asymmetry


def _coupling_quadrature(op: SpectralOperator, profile: DampingProfile,
                         n_points: int) -> np.ndarray:
    """Composite Gauss-Legendre assembly; slow cross-check route."""
    if profile.kind == "constant":
        lo, hi = 0.0, op.domain_length
    else:
        lo, hi = profile.interval
    nodes_per_panel = 16
    panels = max(1, int(np.ceil(n_points / nodes_per_panel)))
    xg, wg = np.polynomial.legendre.leggauss(nodes_per_panel)
    edges = np.linspace(lo, hi, panels + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    x = (mids[:, None] + half * xg[None, :]).ravel()
    w = np.tile(half * wg, panels)
    basis = op.eigenfunctions(x)
    a = profile.evaluate(x)
    m = basis.T @ (basis * (a * w)[:, None])
    return 0.5 * (m + m.T)


def build_damping(op: SpectralOperator, profile: DampingProfile,
                  quadrature_points: int = 0) -> DampingMap:
    """Assemble the coupling matrix, in closed form by default.

    A positive quadrature_points switches to composite Gauss-Legendre
    assembly with roughly that many nodes (retained as a cross-check).
    """
    if profile.kind == "interval":
        lo, hi = profile.interval
        if lo < 0 or hi > op.domain_length:
            raise InvalidArgumentError(
                f"interval [{lo}, {hi}] outside [0, {op.domain_length}]")
    if quadrature_points > 0:
        m = _coupling_quadrature(op, profile, quadrature_points)
    else:
        m = _coupling_closed_form(op, profile)
    return DampingMap(m, profile)


@dataclass(frozen=True)
class StatePair:
    """Position and velocity coefficient vectors in the eigenbasis."""

    w0: np.ndarray
    w1: np.ndarray

    def __post_init__(self):
        w0 = np.array(self.w0, dtype=float)
        w1 = np.array(self.w1, dtype=float)
        if w0.ndim != 1 or w0.shape != w1.shape:
            raise InvalidArgumentError("w0 and w1 must be 1d vectors of equal length")
        w0.flags.writeable = False
        w1.flags.writeable = False
        object.__setattr__(self, "w0", w0)
        object.__setattr__(self, "w1", w1)

    @property
    def n_modes(self) -> int:
        return self.w0.shape[0]

    def is_zero(self) -> bool:
        return max(np.max(np.abs(self.w0)), np.max(np.abs(self.w1))) == 0.0

    def scaled(self, c: float) -> "StatePair":
        return StatePair(c * self.w0, c * self.w1)


def mode_state(op: SpectralOperator, k: int, position: float = 1.0,
               velocity: float = 0.0) -> StatePair:
    """Pure mode k (1-based) with the given coefficient amplitudes."""
    if not 1 <= k <= op.n_modes:
        raise InvalidArgumentError(f"mode index {k} outside 1..{op.n_modes}")
    w0 = np.zeros(op.n_modes)
    w1 = np.zeros(op.n_modes)
    w0[k - 1] = position
    w1[k - 1] = velocity
    return StatePair(w0, w1)


def random_state(op: SpectralOperator, rng: np.random.Generator,
                 decay: float = 0.0) -> StatePair:
    """Gaussian coefficients, optionally damped as k^-decay for smoother data."""
    k = np.arange(1, op.n_modes + 1, dtype=float)
    scale = k ** (-decay)
    return StatePair(rng.standard_normal(op.n_modes) * scale,
                     rng.standard_normal(op.n_modes) * scale)


@dataclass(frozen=True)
class GraphNorms:
    """Squared graph norms of a state: energy (vx), smooth (da_v), weak."""

    vx: float
    da_v: float
    weak: float


def _check_dims(state: StatePair, op: SpectralOperator):
    if state.n_modes != op.n_modes:
        raise InvalidArgumentError(
            f"state has {state.n_modes} modes, operator has {op.n_modes}")


def graph_norms(state: StatePair, op: SpectralOperator) -> GraphNorms:
    _check_dims(state, op)
    lam = op.eigenvalues
    w0sq = state.w0 ** 2
    w1sq = state.w1 ** 2
    return GraphNorms(
        vx=float(np.sum(lam * w0sq) + np.sum(w1sq)),
        da_v=float(np.sum(lam ** 2 * w0sq) + np.sum(lam * w1sq)),
        weak=float(np.sum(w0sq) + np.sum(w1sq / lam)),
    )


def energy(state: StatePair, op: SpectralOperator) -> float:
    """E = (vx norm squared) / 2."""
    _check_dims(state, op)
    return 0.5 * float(np.sum(op.eigenvalues * state.w0 ** 2) + np.sum(state.w1 ** 2))


def lambda_ratio(state: StatePair, op: SpectralOperator) -> float:
    """Regularity quotient: smooth norm over energy norm (both squared)."""
    _check_dims(state, op)
    if state.is_zero():
        raise DegenerateInputError("regularity quotient undefined for the zero state")
    norms = graph_norms(state, op)
    return norms.da_v / norms.vx


class SineCollocation:
    """Uniform interior collocation grid with exact discrete sine orthogonality.

    With N = oversample*n_modes + 1 subdivisions the rectangle-rule projection
    of any product of resolved modes is alias-free up to mode (oversample-1)*n,
    so a cubic nonlinearity of n modes projects without aliasing at 4x.
    """

    def __init__(self, op: SpectralOperator, oversample: int = 4):
        n_div = oversample * op.n_modes + 1
        self.nodes = np.arange(1, n_div) * (op.domain_length / n_div)
        self.weight = op.domain_length / n_div
        self.basis = op.eigenfunctions(self.nodes)

    def to_grid(self, coeffs: np.ndarray) -> np.ndarray:
        return self.basis @ coeffs

    def to_modes(self, values: np.ndarray) -> np.ndarray:
        return self.weight * (self.basis.T @ values)
