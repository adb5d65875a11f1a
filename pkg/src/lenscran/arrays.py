"""Antenna geometries and array responses for lens arrays and UPAs.

Angles follow one convention throughout the package: ``theta`` is the
elevation measured from the array's broadside plane toward its positive
``z`` direction and ``phi`` is the azimuth from broadside toward ``+y``.
For a mast-mounted RRH the positive ``z`` direction points toward the
ground, so users below the RRH have positive ``theta``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import sinc

# floor() of products like 10 * sin(pi / 6) must not drop to 4
_FLOOR_EPS = 1e-9


def _ifloor(x):
    return math.floor(x + _FLOOR_EPS)


def _iceil(x):
    return math.ceil(x - _FLOOR_EPS)


@dataclass(frozen=True, eq=False)
class LensGeometry:
    """Element layout of a full-dimensional lens array.

    ``elements`` is an ``(Q, 2)`` integer array of ``(q_e, q_a)`` pairs,
    ordered row-major by elevation index then azimuth index.
    """

    d_y: float
    d_z: float
    theta_minus: float
    theta_plus: float
    phi_minus: float
    phi_plus: float
    convention: str
    elements: np.ndarray = field(repr=False)

    @property
    def size(self):
        return len(self.elements)

    @property
    def q_e(self):
        return self.elements[:, 0]

    @property
    def q_a(self):
        return self.elements[:, 1]

    def labels(self):
        """``(q_e, q_a)`` pair for every element, in enumeration order."""
        return [tuple(int(v) for v in row) for row in self.elements]


@dataclass(frozen=True)
class UpaGeometry:
    """Half-wavelength uniform planar array in the y-z plane."""

    d_y: float
    d_z: float

    @property
    def q_y(self):
        return _ifloor(2 * self.d_y)

    @property
    def q_z(self):
        return _ifloor(2 * self.d_z)

    @property
    def size(self):
        return self.q_y * self.q_z

    def labels(self):
        """``(z index, y index)`` for each element, matching the Kronecker order."""
        return [(mz, my) for mz in range(self.q_z) for my in range(self.q_y)]


def enumerate_lens_elements(d_y, d_z, theta_minus, theta_plus, phi_minus, phi_plus,
                            convention="trimmed"):
    """Place lens-array elements on the focal surface.

    Elevation rows run over ``q_e`` in ``-floor(D_z sin(theta_minus)) ..
    floor(D_z sin(theta_plus))``; row ``q_e`` carries azimuth indices
    ``|q_a| <= floor(D_y cos(theta_qe) sin(phi))`` with ``sin(theta_qe) = q_e / D_z``.

    ``convention="inclusive"`` keeps both azimuth endpoints. ``"trimmed"``
    drops the positive endpoint of every row, leaving
    ``2 floor(D_y cos(theta_qe) sin(phi))`` elements per row; with the
    10 x 10 aperture and the standard coverage angles this yields 208
    elements instead of 224. ``"open"`` keeps full rows but treats the
    elevation range as open, ``|q_e| < D_z sin(Theta)``, which drops the
    boundary rows when ``D_z sin(Theta)`` is an integer; it also yields 208
    for the standard geometry.
    """
    if d_y <= 0 or d_z <= 0:
        raise ValueError("aperture dimensions must be positive")
    for name, ang in (("theta_minus", theta_minus), ("theta_plus", theta_plus),
                      ("phi_minus", phi_minus), ("phi_plus", phi_plus)):
        if not 0 < ang <= math.pi / 2 + 1e-12:
            raise ValueError(f"{name} must lie in (0, pi/2], got {ang}")
    if convention not in ("inclusive", "trimmed", "open"):
        raise ValueError(f"unknown convention {convention!r}")

    if convention == "open":
        e_lo = -(_iceil(d_z * math.sin(theta_minus)) - 1)
        e_hi = _iceil(d_z * math.sin(theta_plus)) - 1
    else:
        e_lo = -_ifloor(d_z * math.sin(theta_minus))
        e_hi = _ifloor(d_z * math.sin(theta_plus))
    rows = []
    for qe in range(e_lo, e_hi + 1):
        cos_e = math.sqrt(max(0.0, 1.0 - (qe / d_z) ** 2))
        lo = -_ifloor(d_y * cos_e * math.sin(phi_minus))
        hi = _ifloor(d_y * cos_e * math.sin(phi_plus))
        if convention == "trimmed":
            hi -= 1
        rows.extend((qe, qa) for qa in range(lo, hi + 1))
    elements = np.array(rows, dtype=int).reshape(-1, 2)
    return LensGeometry(d_y, d_z, theta_minus, theta_plus, phi_minus, phi_plus,
                        convention, elements)


def lens_response(geom, theta, phi):
    """Real amplitude response of every lens element to a plane wave.

    ``sqrt(D_z D_y) * sinc(q_e - D_z sin theta) * sinc(q_a - D_y cos theta sin phi)``.
    ``theta`` and ``phi`` may be arrays of equal shape ``S``; the result then
    has shape ``S + (Q,)``.
    """
    theta = np.asarray(theta, dtype=float)[..., None]
    phi = np.asarray(phi, dtype=float)[..., None]
    u = geom.d_z * np.sin(theta)
    v = geom.d_y * np.cos(theta) * np.sin(phi)
    return (math.sqrt(geom.d_z * geom.d_y)
            * sinc(geom.q_e - u) * sinc(geom.q_a - v))


def upa_response(geom, theta, phi):
    """Complex UPA response ``a_z(theta) kron a_y(theta, phi)``.

    Broadcasts like :func:`lens_response`.
    """
    theta = np.asarray(theta, dtype=float)[..., None]
    phi = np.asarray(phi, dtype=float)[..., None]
    mz = np.arange(geom.q_z)
    my = np.arange(geom.q_y)
    a_z = math.sqrt(geom.d_z / geom.q_z) * np.exp(1j * np.pi * mz * np.sin(theta))
    a_y = math.sqrt(geom.d_y / geom.q_y) * np.exp(1j * np.pi * my * np.cos(theta) * np.sin(phi))
    out = a_z[..., :, None] * a_y[..., None, :]
    return out.reshape(out.shape[:-2] + (geom.size,))


def response(geom, theta, phi):
    """Dispatch to the lens or UPA response depending on ``geom``."""
    if isinstance(geom, LensGeometry):
        return lens_response(geom, theta, phi)
    if isinstance(geom, UpaGeometry):
        return upa_response(geom, theta, phi)
    raise TypeError(f"unsupported geometry {type(geom).__name__}")
