"""
Jones-calculus polarization algebra.

Stokes convention: H -> (1, 0, 0), D -> (0, 1, 0), RCP -> (0, 0, 1), where
RCP = (1, i)/sqrt(2). Rotation angles are Poincare-sphere angles, so a
rotation by pi about s3 maps H onto V.

Vectors carry a global phase but nothing in this package depends on it:
every consumer works with moduli of inner products.
"""
import dataclasses
import logging
import math

import numpy as np

from .exceptions import DomainError

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-6

_IDENTITY = np.eye(2, dtype=complex)


@dataclasses.dataclass(frozen=True)
class JonesVector:
    """
    Pure state of polarization as two complex amplitudes.

    Parameters
    ----------
    h : complex
        Horizontal amplitude.
    v : complex
        Vertical amplitude.
    """
    h: complex
    v: complex

    @classmethod
    def from_array(cls, arr):
        return cls(complex(arr[0]), complex(arr[1]))

    def as_array(self):
        return np.array([self.h, self.v], dtype=complex)

    @property
    def norm(self):
        return math.sqrt(abs(self.h) ** 2 + abs(self.v) ** 2)

    def normalize(self):
        """Return the unit-norm copy of this vector."""
        norm = self.norm
        if norm == 0.0:
            raise DomainError("Cannot normalize the zero Jones vector")
        return JonesVector(self.h / norm, self.v / norm)


@dataclasses.dataclass(frozen=True)
class StokesVector:
    """Normalized Stokes parameters of a pure state."""
    s1: float
    s2: float
    s3: float

    def as_array(self):
        return np.array([self.s1, self.s2, self.s3])

    def dot(self, other):
        return self.s1 * other.s1 + self.s2 * other.s2 + self.s3 * other.s3

    @property
    def norm(self):
        return math.sqrt(self.dot(self))


@dataclasses.dataclass(frozen=True, eq=False)
class JonesMatrix:
    """
    2x2 complex Jones matrix.

    The wrapped array is copied and made read-only, so instances behave as
    values. ``m1 @ m2`` composes (``m2`` acts first) and ``m @ s`` rotates a
    :class:`JonesVector`.
    """
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.shape != (2, 2):
            raise DomainError(f"Jones matrix must be 2x2, got {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def __matmul__(self, other):
        if isinstance(other, JonesMatrix):
            return compose(self, other)
        if isinstance(other, JonesVector):
            return rotate(self, other)
        return NotImplemented

    def __repr__(self):
        return f"JonesMatrix({self.data.tolist()!r})"

    @property
    def dagger(self):
        return JonesMatrix(self.data.conj().T)

    def is_unitary(self, tol=1e-10):
        """Whether M^dagger M equals the identity within ``tol``."""
        product = self.data.conj().T @ self.data
        return bool(np.max(np.abs(product - _IDENTITY)) <= tol)

    def allclose(self, other, tol=1e-10):
        return bool(np.max(np.abs(self.data - other.data)) <= tol)


H = JonesVector(1.0 + 0j, 0j)
V = JonesVector(0j, 1.0 + 0j)
D = JonesVector(1 / math.sqrt(2) + 0j, 1 / math.sqrt(2) + 0j)
A = JonesVector(1 / math.sqrt(2) + 0j, -1 / math.sqrt(2) + 0j)
RCP = JonesVector(1 / math.sqrt(2) + 0j, 1j / math.sqrt(2))
LCP = JonesVector(1 / math.sqrt(2) + 0j, -1j / math.sqrt(2))


def _check_normalized(s, name):
    if abs(s.norm - 1.0) > NORM_TOLERANCE:
        raise DomainError(
            f"{name} is not normalized (norm={s.norm!r}); call normalize()"
        )


def identity():
    return JonesMatrix(_IDENTITY)


def linear(angle):
    """Linear SOP at Jones-space ``angle`` (radians) from horizontal."""
    return JonesVector(complex(math.cos(angle)), complex(math.sin(angle)))


def overlap_probability(a, b):
    """
    Projection probability |<a|b>|^2 between two pure states.

    Parameters
    ----------
    a, b : JonesVector
        Normalized states.

    Returns
    -------
    float
        Value in [0, 1]; symmetric and blind to the global phase of either
        argument.

    Raises
    ------
    DomainError
        If either vector deviates from unit norm by more than 1e-6.
    """
    _check_normalized(a, "first state")
    _check_normalized(b, "second state")
    amplitude = a.h.conjugate() * b.h + a.v.conjugate() * b.v
    return min(1.0, max(0.0, abs(amplitude) ** 2))


def rotate(m, s):
    """Apply ``m`` to ``s``; the result is renormalized."""
    out = m.data @ s.as_array()
    return JonesVector.from_array(out / np.linalg.norm(out))


def compose(m1, m2):
    """Matrix product ``m1 . m2``: ``m2`` acts first, then ``m1``."""
    return JonesMatrix(m1.data @ m2.data)


def inverse(m):
    """Inverse of a unitary Jones matrix (its conjugate transpose)."""
    return m.dagger


def rotation(axis, angle):
    """
    Rotation of the Poincare sphere by ``angle`` about ``axis``.

    Parameters
    ----------
    axis : sequence of 3 floats
        Rotation axis in (s1, s2, s3) coordinates; need not be normalized.
    angle : float
        Poincare rotation angle in radians.

    Returns
    -------
    JonesMatrix
        exp(-i angle/2 n.sigma), an element of SU(2).
    """
    n = np.asarray(axis, dtype=float)
    length = np.linalg.norm(n)
    if length == 0.0:
        raise DomainError("Rotation axis must be non-zero")
    return JonesMatrix(np.array(rotation_entries(n / length, angle)))


def rotation_entries(unit_axis, angle):
    """
    Entries of exp(-i angle/2 n.sigma) as nested tuples of complex.

    ``unit_axis`` must already be normalized. Pauli matrices pair with the
    (s1, s2, s3) axes as diag(1, -1), [[0, 1], [1, 0]] and [[0, -i], [i, 0]].
    """
    n1, n2, n3 = (float(x) for x in unit_axis)
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return ((complex(c, -s * n1), complex(-s * n3, -s * n2)),
            (complex(s * n3, -s * n2), complex(c, s * n1)))


def rotation_from_vector(omega):
    """Rotation about ``omega`` by the angle |omega|."""
    angle = float(np.linalg.norm(omega))
    if angle == 0.0:
        return identity()
    return rotation(omega, angle)


def rotation_angle(m):
    """Poincare rotation angle of a unitary, in [0, pi]."""
    half_trace = abs(np.trace(m.data)) / 2
    return 2 * math.acos(min(1.0, half_trace))


def random_unitary(rng, scale):
    """
    Random Poincare rotation with RMS angle ``scale``.

    The rotation vector has i.i.d. N(0, scale^2 / 3) components: its direction
    is uniform on the sphere and its length has RMS ``scale``. Repeated
    composition is an isotropic random walk with sqrt(t) spreading.

    Parameters
    ----------
    rng : numpy.random.Generator
    scale : float
        RMS rotation angle in radians; zero returns the identity without
        consuming random numbers.

    Raises
    ------
    DomainError
        If ``scale`` is negative.
    """
    if scale < 0:
        raise DomainError(f"Random unitary scale must be >= 0, got {scale}")
    if scale == 0:
        return identity()
    omega = rng.normal(0.0, scale / math.sqrt(3), size=3)
    return rotation_from_vector(omega)


def unitarize(m):
    """Nearest unitary to ``m`` (polar decomposition)."""
    u, _, vh = np.linalg.svd(m.data)
    return JonesMatrix(u @ vh)


def to_stokes(s):
    """Stokes vector of ``s`` in the package convention."""
    intensity = abs(s.h) ** 2 + abs(s.v) ** 2
    if intensity == 0.0:
        raise DomainError("The zero Jones vector has no Stokes vector")
    cross = s.h.conjugate() * s.v
    return StokesVector(
        (abs(s.h) ** 2 - abs(s.v) ** 2) / intensity,
        2 * cross.real / intensity,
        2 * cross.imag / intensity,
    )


def from_stokes(stokes):
    """A Jones vector (up to global phase) with the given Stokes vector."""
    vec = stokes.as_array()
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise DomainError("Stokes vector must be non-zero")
    s1, s2, s3 = vec / norm
    theta = math.acos(max(-1.0, min(1.0, s1)))
    phi = math.atan2(s3, s2)
    return JonesVector(complex(math.cos(theta / 2)),
                       math.sin(theta / 2) * complex(math.cos(phi),
                                                     math.sin(phi)))
