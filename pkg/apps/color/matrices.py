"""Camera RGB to linear Rec. 2020 colour matrix algebra.

All pixel algebra uses column vectors: ``v_out = M @ v_in``.
"""

from typing import Optional

import numpy as np
import torch

from apps.core.enums import ColorSpace
from apps.core.exceptions import ShapeMismatch, SingularMatrix
from apps.core.images import LinearRgbImage, SensorMeta

# D65-calibrated XYZ -> linear Rec. 2020.
XYZ_TO_REC2020 = np.array(
    [
        [1.7167, -0.3557, -0.2534],
        [-0.6667, 1.6165, 0.0158],
        [0.0176, -0.0428, 0.9422],
    ],
    dtype=np.float64,
)
XYZ_TO_REC2020.setflags(write=False)

MIN_DETERMINANT = 1e-12


def xyz_to_rec2020_matrix() -> np.ndarray:
    """Return a writable copy of the XYZ -> Rec. 2020 matrix."""
    return XYZ_TO_REC2020.copy()


def _as_matrix(m) -> np.ndarray:
    matrix = np.asarray(m, dtype=np.float64)
    if matrix.shape != (3, 3):
        raise ShapeMismatch(f"colour matrix must be 3x3, got {matrix.shape}")
    return matrix


def invert_color_matrix(m) -> np.ndarray:
    matrix = _as_matrix(m)
    det = np.linalg.det(matrix)
    if not np.isfinite(det) or abs(det) <= MIN_DETERMINANT:
        raise SingularMatrix(f"matrix is not invertible (det={det:.3g})")
    return np.linalg.inv(matrix)


def camrgb_to_rec2020_matrix(xyz_to_camrgb) -> np.ndarray:
    """``M_xyz->rec2020 @ inv(M_xyz->camrgb)``."""
    return XYZ_TO_REC2020 @ invert_color_matrix(xyz_to_camrgb)


def apply_color_matrix(
    img: LinearRgbImage, m, colorspace: Optional[ColorSpace] = None
) -> LinearRgbImage:
    """Apply ``m`` to every pixel; out-of-gamut negatives are kept.

    The colorspace tag is kept unless the caller names a new one.
    """
    matrix = _as_matrix(m)
    dtype = img.channels.dtype if img.channels.dtype.kind == "f" else np.float64
    out = np.einsum("ij,jhw->ihw", matrix.astype(dtype), img.channels.astype(dtype))
    return img.with_channels(out, colorspace=colorspace)


def camrgb_to_rec2020(img: LinearRgbImage, meta: SensorMeta) -> LinearRgbImage:
    """Convert a camera-RGB image to linear Rec. 2020 using its sensor matrix."""
    if img.colorspace == ColorSpace.REC2020:
        return img
    matrix = camrgb_to_rec2020_matrix(meta.xyz_to_camrgb)
    return apply_color_matrix(img, matrix, colorspace=ColorSpace.REC2020)


def apply_color_matrix_torch(batch: torch.Tensor, matrices: torch.Tensor) -> torch.Tensor:
    """Differentiable batched form: (N,3,H,W) with (N,3,3) or (3,3) matrices."""
    if batch.dim() != 4 or batch.shape[1] != 3:
        raise ShapeMismatch(f"expected (N,3,H,W) batch, got {tuple(batch.shape)}")
    matrices = matrices.to(dtype=batch.dtype, device=batch.device)
    if matrices.dim() == 2:
        matrices = matrices.expand(batch.shape[0], 3, 3)
    if matrices.shape != (batch.shape[0], 3, 3):
        raise ShapeMismatch(f"expected (N,3,3) matrices, got {tuple(matrices.shape)}")
    return torch.einsum("nij,njhw->nihw", matrices, batch)
