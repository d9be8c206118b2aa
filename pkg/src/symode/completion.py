"""Low-rank image completion demo built on the nuclear-norm machinery.

An image is rank-reduced, a fraction of its pixels is overwritten with
salt-and-pepper values, and the clean pixels (the corruption mask is
known) serve as entry-sampling measurements for the matrix denoiser
wrapped in add-back iterations, which recovers the low-rank structure.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import linalg
from .sparseopt import DenoiseConfig, MeasurementOperator, matrix_denoise

__all__ = ["GrayImage", "RecoveryReport", "truncate_rank", "corrupt", "recover"]


@dataclass(frozen=True)
class GrayImage:
    """Grayscale image with pixels in [0, 1], row-major."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=float)
        object.__setattr__(self, "pixels", px)
        if px.shape != (self.height, self.width):
            raise ValueError(f"pixels shape {px.shape} != (height, width) = "
                             f"({self.height}, {self.width})")
        if not np.all(np.isfinite(px)):
            raise ValueError("pixels must be finite")

    @classmethod
    def from_matrix(cls, m: np.ndarray, clamp: bool = True) -> "GrayImage":
        m = np.asarray(m, dtype=float)
        if clamp:
            m = np.clip(m, 0.0, 1.0)
        return cls(width=m.shape[1], height=m.shape[0], pixels=m)


@dataclass(frozen=True)
class RecoveryReport:
    image: GrayImage
    converged: bool
    outer_iterations: int
    inner_iterations: int
    residual: float


def truncate_rank(img: GrayImage, r: int) -> GrayImage:
    """Keep the top-r singular triples of the pixel matrix, then clamp."""
    if not 1 <= r <= min(img.width, img.height):
        raise ValueError(f"rank {r} out of range [1, {min(img.width, img.height)}]")
    res = linalg.svd(img.pixels)
    sigma = res.sigma.copy()
    sigma[r:] = 0.0
    return GrayImage.from_matrix((res.u * sigma) @ res.vt)


def corrupt(img: GrayImage, fraction: float, seed: int = 0) -> tuple[GrayImage, np.ndarray]:
    """Overwrite a random fraction of pixels, half white and half black.

    Returns the corrupted image and a boolean mask (True = corrupted) of
    the same shape.  Exactly floor(fraction * pixels) distinct positions
    are hit; each is set to 0.0 or 1.0 with equal probability.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    n_pix = img.width * img.height
    n_corrupt = int(fraction * n_pix)
    rng = np.random.default_rng(seed)
    mask_flat = np.zeros(n_pix, dtype=bool)
    pixels = img.pixels.copy().ravel()
    if n_corrupt:
        positions = rng.choice(n_pix, size=n_corrupt, replace=False)
        values = rng.integers(0, 2, size=n_corrupt).astype(float)
        pixels[positions] = values
        mask_flat[positions] = True
    return (
        GrayImage(width=img.width, height=img.height,
                  pixels=pixels.reshape(img.height, img.width)),
        mask_flat.reshape(img.height, img.width),
    )


def recover(corrupted: GrayImage, mask: np.ndarray, cfg: DenoiseConfig) -> RecoveryReport:
    """Recover low-rank structure from the clean pixels only.

    The clean positions act as entry-sampling measurements of the stacked
    pixel vector.  An add-back outer loop re-injects the measurement
    residual so the clean pixels are matched to solver tolerance, while
    the inner proximal iterations of :func:`matrix_denoise` shrink the
    nuclear norm.  Non-convergence is reported, not raised.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != corrupted.pixels.shape:
        raise ValueError("mask shape must match the image")
    m, n = corrupted.height, corrupted.width
    clean_idx = np.flatnonzero(~mask.ravel(order="F"))
    operator = MeasurementOperator.entry_sampling(clean_idx, m * n)
    y = corrupted.pixels.ravel(order="F")[clean_idx]
    y_norm = float(np.linalg.norm(y))

    if clean_idx.size in (0, m * n):
        # nothing measurable, or everything pinned: the input is the answer
        return RecoveryReport(image=corrupted, converged=True, outer_iterations=0,
                              inner_iterations=0, residual=0.0)

    if cfg.mu is None:
        # pin the threshold to the input once so every outer pass shrinks alike
        step_a = cfg.step_a or 1.01 * operator.gram_norm()
        tau = cfg.tau_rel * float(linalg.svd(corrupted.pixels).sigma[0])
        cfg = replace(cfg, mu=1.0 / (2.0 * step_a * tau), step_a=step_a)

    current = corrupted.pixels.copy()
    yk = y.copy()
    total_inner = 0
    converged = False
    residual = np.inf
    best = np.inf
    stall = 0
    outer = 0
    for outer in range(1, cfg.max_outer + 1):
        step = matrix_denoise(current, cfg, operator=operator, y=yk,
                              max_iter=cfg.max_inner)
        current = step.matrix
        total_inner += step.iterations
        r = y - current.ravel(order="F")[clean_idx]
        residual = float(np.linalg.norm(r))
        if residual <= max(cfg.tol * y_norm, 1e-12):
            converged = True
            break
        if residual >= best * (1.0 - 1e-3):
            stall += 1
            if stall >= 50:  # residual has stopped improving; give up flagged
                break
        else:
            best = residual
            stall = 0
        yk = yk + r
    return RecoveryReport(
        image=GrayImage.from_matrix(current),
        converged=converged,
        outer_iterations=outer,
        inner_iterations=total_inner,
        residual=residual,
    )
