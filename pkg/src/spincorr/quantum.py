"""Exact quantum evolution of the kicked two-spin model.

The state of spins ``s`` and ``l`` is a complex ``(2s+1, 2l+1)`` array
``amp[i, k]`` holding the amplitude of ``|s, m_s = s - i> (x) |l, m_l = l - k>``,
which is the m_s-major flattening of the product basis. One kick is the
Floquet operator ``exp[-i a (S_z + L_z)] exp[-i c S_x L_x]``; it is applied in
factored form and never assembled as a matrix.
"""

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .wigner import little_d, m_values, twice_spin, z_phase

NEGATIVE_PROB_TOL = 1e-15


class DimensionError(ValueError):
    """Raised when an array does not match the spin dimensions."""


@dataclass(frozen=True)
class QuantumNumbers:
    s: float
    l: float

    def __post_init__(self):
        object.__setattr__(self, "s", twice_spin(self.s) / 2)
        object.__setattr__(self, "l", twice_spin(self.l) / 2)

    @property
    def dim_s(self):
        return int(2 * self.s) + 1

    @property
    def dim_l(self):
        return int(2 * self.l) + 1

    @property
    def N(self):
        return self.dim_s * self.dim_l

    @property
    def mag_s(self):
        return sqrt(self.s * (self.s + 1))

    @property
    def mag_l(self):
        return sqrt(self.l * (self.l + 1))


@dataclass(frozen=True)
class ModelParams:
    """Kick parameters ``a`` and ``c`` for a given pair of spins."""

    qn: QuantumNumbers
    a: float
    c: float

    @classmethod
    def from_gamma(cls, qn: QuantumNumbers, a, gamma):
        """Choose ``c = gamma / |S|`` so the classical coupling is exactly ``gamma``."""
        return cls(qn, float(a), float(gamma) / qn.mag_s)

    @property
    def gamma(self):
        return self.c * self.qn.mag_s

    @property
    def r(self):
        return self.qn.mag_l / self.qn.mag_s


@dataclass(frozen=True)
class StateVector:
    qn: QuantumNumbers
    amp: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amp, dtype=complex)
        if amp.shape != (self.qn.dim_s, self.qn.dim_l):
            if amp.size == self.qn.N:
                amp = amp.reshape(self.qn.dim_s, self.qn.dim_l)
            else:
                raise DimensionError(
                    f"expected {self.qn.N} amplitudes, got shape {amp.shape}"
                )
        object.__setattr__(self, "amp", amp)

    @property
    def flat(self):
        return self.amp.reshape(-1)

    def norm(self):
        return float(np.linalg.norm(self.amp))

    def probabilities(self):
        return np.abs(self.amp) ** 2


@dataclass(frozen=True)
class Distribution:
    """Probabilities over ordered labels. Tiny negative rounding is clamped."""

    labels: np.ndarray
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        labels = np.asarray(self.labels, dtype=float)
        if p.shape != labels.shape:
            raise DimensionError("labels and probabilities differ in length")
        if np.any(p < -NEGATIVE_PROB_TOL):
            raise ValueError(f"negative probability {p.min():.3g}")
        object.__setattr__(self, "probs", np.where(p < 0, 0.0, p))
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.probs.size

    def total(self):
        return float(self.probs.sum())

    def mean(self):
        return float(np.dot(self.labels, self.probs))


def coherent_state(j, theta, phi):
    """Spin coherent state ``R(theta, phi)|j, j>`` as a length ``2j+1`` array."""
    if not 0.0 <= theta <= np.pi:
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    return z_phase(j, phi) * little_d(j, theta)[:, 0]


def product_state(qn: QuantumNumbers, s_vec, l_vec):
    s_vec = np.asarray(s_vec, dtype=complex)
    l_vec = np.asarray(l_vec, dtype=complex)
    if s_vec.shape != (qn.dim_s,) or l_vec.shape != (qn.dim_l,):
        raise DimensionError("subsystem vectors do not match (2s+1, 2l+1)")
    return StateVector(qn, np.outer(s_vec, l_vec))


def coherent_product(qn: QuantumNumbers, theta_s, phi_s, theta_l, phi_l):
    return product_state(
        qn, coherent_state(qn.s, theta_s, phi_s), coherent_state(qn.l, theta_l, phi_l)
    )


@dataclass(frozen=True)
class FactoredFloquet:
    qn: QuantumNumbers
    d_s: np.ndarray
    d_l: np.ndarray
    phase_free: np.ndarray
    phase_int: np.ndarray

    def apply(self, psi: StateVector):
        return apply_floquet(self, psi)

    def apply_inverse(self, psi: StateVector):
        _check_dims(self, psi)
        x = psi.amp * np.conj(self.phase_free)
        x = _rot_both(self.d_s.T, self.d_l, x)
        x *= np.conj(self.phase_int)
        x = _rot_both(self.d_s, self.d_l.T, x)
        return StateVector(self.qn, x)


def build_floquet(params: ModelParams):
    qn = params.qn
    ms = m_values(qn.s)
    ml = m_values(qn.l)
    return FactoredFloquet(
        qn=qn,
        d_s=little_d(qn.s, np.pi / 2),
        d_l=little_d(qn.l, np.pi / 2),
        phase_free=np.exp(-1j * params.a * (ms[:, None] + ml[None, :])),
        phase_int=np.exp(-1j * params.c * np.multiply.outer(ms, ml)),
    )


def _rot_both(left, right, x):
    # left @ x @ right with a real left/right factor, done on re/im separately
    re = left @ x.real @ right
    im = left @ x.imag @ right
    return re + 1j * im


def _check_dims(F, psi):
    if psi.qn != F.qn:
        raise DimensionError(f"state is for {psi.qn}, operator for {F.qn}")


def apply_floquet(F: FactoredFloquet, psi: StateVector):
    """One kick: rotate x onto z in both spins, apply the S_z L_z phase, rotate back, then precess."""
    _check_dims(F, psi)
    x = _rot_both(F.d_s.T, F.d_l, psi.amp)
    x *= F.phase_int
    x = _rot_both(F.d_s, F.d_l.T, x)
    x *= F.phase_free
    return StateVector(F.qn, x)


def evolve(F: FactoredFloquet, psi: StateVector, n_kicks):
    """Yield ``psi(0), psi(1), ..., psi(n_kicks)``."""
    yield psi
    for _ in range(n_kicks):
        psi = apply_floquet(F, psi)
        yield psi


def _raise_coeffs(j):
    # coefficient of J_+ between index i and i-1, i.e. m -> m+1 with m = j - i
    m = m_values(j)
    return np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))


def _ladder_mean(amp, j, axis):
    """<J_+> for the spin living on ``axis`` of ``amp``."""
    a = _raise_coeffs(j)
    if axis == 0:
        return np.sum(a[:, None] * np.conj(amp[:-1]) * amp[1:])
    return np.sum(a[None, :] * np.conj(amp[:, :-1]) * amp[:, 1:])


def expect_components(psi: StateVector):
    """Return ``(<S>, <L>, <J>)`` as real 3-vectors in absolute units."""
    qn = psi.qn
    p = psi.probabilities()
    ps, pl = p.sum(axis=1), p.sum(axis=0)
    sp = _ladder_mean(psi.amp, qn.s, 0)
    lp = _ladder_mean(psi.amp, qn.l, 1)
    S = np.array([sp.real, sp.imag, np.dot(m_values(qn.s), ps)])
    L = np.array([lp.real, lp.imag, np.dot(m_values(qn.l), pl)])
    return S, L, S + L


def variance_L(psi: StateVector):
    """Normalised variance ``(l(l+1) - |<L>|^2) / l(l+1)``."""
    _, L, _ = expect_components(psi)
    ll = psi.qn.l * (psi.qn.l + 1)
    return float((ll - L @ L) / ll)


def variance_S(psi: StateVector):
    S, _, _ = expect_components(psi)
    ss = psi.qn.s * (psi.qn.s + 1)
    return float((ss - S @ S) / ss)


def dist_Lz(psi: StateVector):
    return Distribution(m_values(psi.qn.l), psi.probabilities().sum(axis=0))


def dist_Sz(psi: StateVector):
    return Distribution(m_values(psi.qn.s), psi.probabilities().sum(axis=1))


def jz_labels(qn: QuantumNumbers):
    return m_values(qn.s + qn.l)


def dist_Jz(psi: StateVector):
    """P(m_j) summed along the anti-diagonals m_s + m_l = m_j."""
    qn = psi.qn
    idx = np.add.outer(np.arange(qn.dim_s), np.arange(qn.dim_l))
    probs = np.bincount(idx.ravel(), weights=psi.probabilities().ravel(),
                        minlength=qn.dim_s + qn.dim_l - 1)
    return Distribution(jz_labels(qn), probs)


def dist_Lx(psi: StateVector):
    """Distribution of L_x eigenvalues: rotate the l index into the x basis."""
    x = _rot_both(np.eye(psi.qn.dim_s), little_d(psi.qn.l, np.pi / 2), psi.amp)
    return Distribution(m_values(psi.qn.l), (np.abs(x) ** 2).sum(axis=0))


def shannon_entropy(dist: Distribution):
    """Entropy in nats with ``0 ln 0 = 0``."""
    p = dist.probs[dist.probs > 0]
    return float(-np.sum(p * np.log(p)))


def microcanonical_Lz(l):
    m = m_values(l)
    return Distribution(m, np.full(m.size, 1.0 / m.size))


def microcanonical_Jz(s, l):
    """Tent-shaped m_j distribution of the uniform measure on both spheres."""
    s, l = twice_spin(s) / 2, twice_spin(l) / 2
    if s > l:
        s, l = l, s
    mj = m_values(s + l)
    probs = np.where(
        np.abs(mj) >= l - s,
        (l + s + 1 - np.abs(mj)) / ((2 * s + 1) * (2 * l + 1)),
        1.0 / (2 * l + 1),
    )
    return Distribution(mj, probs)


def jx_matrix(j):
    """Dense J_x in the descending-m basis (small j only)."""
    a = _raise_coeffs(j)
    return 0.5 * (np.diag(a, 1) + np.diag(a, -1))


def coherent_x_moment(j, m):
    """``<j, j| J_x^m |j, j>`` by repeated tridiagonal application."""
    if m < 0 or int(m) != m:
        raise ValueError("moment order must be a non-negative integer")
    a = _raise_coeffs(j)
    v = np.zeros(twice_spin(j) + 1)
    v[0] = 1.0
    w = v.copy()
    for _ in range(int(m)):
        nxt = np.zeros_like(w)
        nxt[:-1] += 0.5 * a * w[1:]
        nxt[1:] += 0.5 * a * w[:-1]
        w = nxt
    return float(v @ w)
