"""Vector measurement model.

Body-frame observations of known inertial directions, their normalization
and cross-product augmentation, the weighted inertial matrix ``M^I`` and the
measurement-only reconstructions of ``Phi(M^I R~)``, ``||M^I R~||_I`` and
``Upsilon`` used by the filter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import CollinearPair, DegenerateVector, RankDeficient, SingularMatrix

WEIGHT_SUM = 3.0
COLLINEAR_TOL = 1e-6
MIN_NORM = 1e-9
RANK_TOL = 1e-9


def _as_rows(a, name):
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[1] != 3:
        raise ValueError(f"{name} must have shape (n, 3)")
    return a


def _collinear(a, b) -> bool:
    cos = np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b))
    return abs(cos) >= 1.0 - COLLINEAR_TOL


@dataclass(frozen=True)
class ReferenceVectorSet:
    """Known inertial directions and the error model of their body readings."""

    v_inertial: np.ndarray
    bias_body: np.ndarray = None
    noise_std: np.ndarray = None
    weights: np.ndarray = None

    def __post_init__(self):
        v = _as_rows(self.v_inertial, "v_inertial")
        n = v.shape[0]
        if n < 2:
            raise ValueError("at least two reference vectors are required")
        bias = np.zeros((n, 3)) if self.bias_body is None else _as_rows(self.bias_body, "bias_body")
        std = np.zeros(n) if self.noise_std is None else np.array(self.noise_std, dtype=float).reshape(-1)
        w = np.ones(n) if self.weights is None else np.array(self.weights, dtype=float).reshape(-1)
        if bias.shape != (n, 3) or std.shape != (n,) or w.shape != (n,):
            raise ValueError("bias_body, noise_std and weights must match v_inertial")
        if np.any(std < 0) or not np.all(np.isfinite(std)):
            raise ValueError("noise_std must be finite and non-negative")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        if np.any(np.linalg.norm(v, axis=1) < MIN_NORM):
            raise DegenerateVector("reference vector with zero norm")
        if not any(not _collinear(v[i], v[j]) for i in range(n) for j in range(i + 1, n)):
            raise CollinearPair("reference vectors are all collinear")
        for name, val in (("v_inertial", v), ("bias_body", bias), ("noise_std", std), ("weights", w)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.v_inertial.shape[0]


@dataclass(frozen=True)
class MeasurementFrame:
    """One epoch of normalized inertial/body vector pairs with weights."""

    ups_inertial: np.ndarray
    ups_body: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        for name in ("ups_inertial", "ups_body", "s"):
            val = np.array(getattr(self, name), dtype=float)
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.ups_inertial.shape[0]


@dataclass(frozen=True)
class InertialMatrix:
    """``M^I``, its trace complement ``Mbar^I`` and ``lambda_min(Mbar^I)``."""

    m: np.ndarray
    m_bar: np.ndarray
    lambda_min: float
    m_inv: np.ndarray = field(repr=False, default=None)


def synthesize_body(r_true, refs: ReferenceVectorSet, rng: np.random.Generator):
    """Raw body readings ``R^T v^I + b^B + noise`` for one epoch."""
    xi = rng.standard_normal((refs.n, 3))
    return body_readings(np.asarray(r_true)[None], refs, xi[None])[0]


def body_readings(r_true, refs: ReferenceVectorSet, xi):
    """Vectorized body readings for a stack of attitudes.

    ``r_true`` is ``(N, 3, 3)`` and ``xi`` the standard-normal draws of shape
    ``(N, n, 3)``; returns ``(N, n, 3)``.
    """
    clean = np.einsum("kji,nj->kni", r_true, refs.v_inertial)
    return clean + refs.bias_body + refs.noise_std[:, None] * xi


def _unit_rows(a):
    norms = np.linalg.norm(a, axis=-1, keepdims=True)
    if np.any(norms < MIN_NORM):
        raise DegenerateVector("cannot normalize a vector with (near) zero norm")
    return a / norms


def normalize_weights(s):
    s = np.asarray(s, dtype=float)
    return s * (WEIGHT_SUM / np.sum(s))


def normalize_frame(raw_body, refs: ReferenceVectorSet) -> MeasurementFrame:
    """Unit-normalize inertial and body vectors; rescale weights to sum to 3."""
    return MeasurementFrame(
        _unit_rows(refs.v_inertial), _unit_rows(np.asarray(raw_body, dtype=float)), normalize_weights(refs.weights)
    )


def _third(a, b):
    c = np.cross(a, b)
    return _unit_rows(c)


def augment_cross(frame: MeasurementFrame) -> MeasurementFrame:
    """Append the normalized cross product of a two-vector frame.

    The new vector takes the mean weight of the pair before the weights are
    rescaled to sum to 3. Frames with three or more vectors pass through.
    """
    if frame.n >= 3:
        return frame
    vi, vb = frame.ups_inertial, frame.ups_body
    if _collinear(vi[0], vi[1]) or _collinear(vb[0], vb[1]):
        raise CollinearPair("cannot augment a collinear pair")
    s = np.append(frame.s, frame.s.mean())
    return MeasurementFrame(
        np.vstack([vi, _third(vi[0], vi[1])]),
        np.vstack([vb, _third(vb[0], vb[1])]),
        normalize_weights(s),
    )


def augment_body_stack(ups_body):
    """Cross-product augmentation for a ``(N, 2, 3)`` stack of body vectors."""
    third = _third(ups_body[:, 0], ups_body[:, 1])
    return np.concatenate([ups_body, third[:, None, :]], axis=1)


def weighted_outer(vectors, s):
    return np.einsum("i,ij,ik->jk", np.asarray(s, dtype=float), vectors, vectors)


def inertial_matrix(frame: MeasurementFrame) -> InertialMatrix:
    """Build ``M^I = sum s_i v_i v_i^T`` with ``Mbar^I`` and ``lambda_min``.

    Raises
    ------
    RankDeficient
        If the smallest eigenvalue of ``M^I`` is below ``RANK_TOL``.
    """
    m = weighted_outer(frame.ups_inertial, frame.s)
    m = 0.5 * (m + m.T)
    if np.linalg.eigvalsh(m)[0] <= RANK_TOL:
        raise RankDeficient("inertial vectors do not span R^3")
    m_bar = np.trace(m) * np.eye(3) - m
    lam = float(np.linalg.svd(m_bar, compute_uv=False).min())
    return InertialMatrix(m, m_bar, lam, np.linalg.inv(m))


def body_matrix(frame: MeasurementFrame):
    """``M^B = sum s_i v^B_i (v^B_i)^T``."""
    return weighted_outer(frame.ups_body, frame.s)


def _inverse(frame, mats):
    if mats is not None and mats.m_inv is not None:
        return mats.m_inv
    m = weighted_outer(frame.ups_inertial, frame.s)
    try:
        return np.linalg.inv(m)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix("M^I is singular") from exc


def _contig(frame):
    return (
        np.ascontiguousarray(frame.ups_inertial),
        np.ascontiguousarray(frame.ups_body),
        np.ascontiguousarray(frame.s),
    )


def innovation(frame: MeasurementFrame, r_hat, mats: InertialMatrix | None = None):
    """``(Phi, ||M^I R~||_I, Upsilon)`` reconstructed from vectors only."""
    vi, vb, s = _contig(frame)
    m_inv = np.ascontiguousarray(_inverse(frame, mats))
    phi_v, dist, ups = _kernels.innovation(vi, vb, s, np.ascontiguousarray(r_hat, dtype=float), m_inv)
    return phi_v, float(dist), float(ups)


def phi_from_vectors(frame: MeasurementFrame, r_hat):
    """``Phi(M^I R~) = R^ sum (s_i / 2) v^B_i x R^T v^I_i``."""
    r_hat = np.asarray(r_hat, dtype=float)
    vhat = frame.ups_inertial @ r_hat
    return r_hat @ np.sum(0.5 * frame.s[:, None] * np.cross(frame.ups_body, vhat), axis=0)


def _estimated_product(frame, r_hat):
    r_hat = np.asarray(r_hat, dtype=float)
    vhat = frame.ups_inertial @ r_hat
    return r_hat @ np.einsum("i,ij,ik->jk", frame.s, vhat, frame.ups_body) @ r_hat.T


def dist_from_vectors(frame: MeasurementFrame, r_hat) -> float:
    """``||M^I R~||_I = 3/4 - Tr(R^ sum s_i vhat_i (v^B_i)^T R^T) / 4``."""
    return float(0.75 - 0.25 * np.trace(_estimated_product(frame, r_hat)))


def upsilon_from_vectors(frame: MeasurementFrame, r_hat, mats: InertialMatrix | None = None) -> float:
    """``Tr((M^I)^-1 R^ sum s_i vhat_i (v^B_i)^T R^T)``."""
    return float(np.trace(_inverse(frame, mats) @ _estimated_product(frame, r_hat)))
