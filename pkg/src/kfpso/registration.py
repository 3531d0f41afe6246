"""Desk-scale rigid 2-D image registration: synthetic phantom pairs,
mutual-information and gradient-alignment similarity measures, Otsu-based
region-of-interest selection, and landmark-based accuracy evaluation.

Conventions: images are row-major float grids with intensities in [0, 1];
physical coordinates are millimeters with the origin at the image center
(x along columns, y along rows). A rigid transform maps reference-image
physical points into floating-image physical points, ``q = R(angle) p + t``.
Resampling is bilinear.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .estimator import FitnessProfile
from .validation import check_finite

OTSU_BINS = 256
ROI_PAD = 2  # pixels of padding around the above-threshold bounding box


@dataclass(frozen=True)
class Image2D:
    """A grayscale image with physical pixel spacing in mm."""

    intensities: np.ndarray
    pixel_spacing: float = 1.0

    def __post_init__(self):
        arr = np.asarray(self.intensities, dtype=float)
        if arr.ndim != 2:
            raise ValueError("intensities must be a 2-D grid")
        check_finite(arr, name="intensities")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("intensities must lie in [0, 1]")
        if self.pixel_spacing <= 0:
            raise ValueError("pixel spacing must be positive")
        object.__setattr__(self, "intensities", arr)

    @property
    def height(self):
        return self.intensities.shape[0]

    @property
    def width(self):
        return self.intensities.shape[1]

    def pixel_to_mm(self, rows, cols):
        """Physical (x, y) mm coordinates of pixel (row, col) centers."""
        s = self.pixel_spacing
        x = (np.asarray(cols, dtype=float) - 0.5 * (self.width - 1)) * s
        y = (np.asarray(rows, dtype=float) - 0.5 * (self.height - 1)) * s
        return x, y

    def mm_to_pixel(self, x, y):
        """Fractional (row, col) pixel coordinates of physical mm points."""
        s = self.pixel_spacing
        cols = np.asarray(x, dtype=float) / s + 0.5 * (self.width - 1)
        rows = np.asarray(y, dtype=float) / s + 0.5 * (self.height - 1)
        return rows, cols


@dataclass(frozen=True)
class RigidTransform2D:
    """Rotation about the origin followed by a translation, in mm/radians."""

    tx: float = 0.0
    ty: float = 0.0
    angle: float = 0.0

    @property
    def params(self):
        return np.array([self.tx, self.ty, self.angle])

    @classmethod
    def from_params(cls, params):
        tx, ty, angle = np.asarray(params, dtype=float)
        return cls(float(tx), float(ty), float(angle))

    def rotation(self):
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    def apply(self, points):
        """Map (N, 2) or (2,) physical points."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        out = np.atleast_2d(pts) @ self.rotation().T + np.array([self.tx, self.ty])
        return out[0] if single else out

    def inverse(self):
        rot_t = self.rotation().T
        t_inv = -rot_t @ np.array([self.tx, self.ty])
        return RigidTransform2D(float(t_inv[0]), float(t_inv[1]), -self.angle)


@dataclass(frozen=True)
class LandmarkSet:
    """Corresponding physical points in the reference and floating images."""

    ref_points: np.ndarray
    flo_points: np.ndarray

    def __post_init__(self):
        ref = np.atleast_2d(np.asarray(self.ref_points, dtype=float))
        flo = np.atleast_2d(np.asarray(self.flo_points, dtype=float))
        if ref.shape != flo.shape or ref.shape[1] != 2:
            raise ValueError("landmark arrays must both be (N, 2)")
        if ref.shape[0] < 4:
            raise ValueError("need at least 4 landmark pairs for TRE statistics")
        object.__setattr__(self, "ref_points", ref)
        object.__setattr__(self, "flo_points", flo)

    @property
    def size(self):
        return self.ref_points.shape[0]


@dataclass(frozen=True)
class Roi:
    """Half-open pixel rectangle [row_start:row_stop, col_start:col_stop]."""

    row_start: int
    row_stop: int
    col_start: int
    col_stop: int

    @property
    def slices(self):
        return slice(self.row_start, self.row_stop), slice(self.col_start, self.col_stop)


def _bilinear(grid, rows, cols):
    """Sample a 2-D grid at fractional (row, col) positions known to lie
    inside [0, H-1] x [0, W-1]."""
    r0 = np.floor(rows).astype(int)
    c0 = np.floor(cols).astype(int)
    r0 = np.clip(r0, 0, grid.shape[0] - 2) if grid.shape[0] > 1 else np.zeros_like(r0)
    c0 = np.clip(c0, 0, grid.shape[1] - 2) if grid.shape[1] > 1 else np.zeros_like(c0)
    dr = rows - r0
    dc = cols - c0
    top = grid[r0, c0] * (1 - dc) + grid[r0, c0 + 1] * dc
    bottom = grid[r0 + 1, c0] * (1 - dc) + grid[r0 + 1, c0 + 1] * dc
    return top * (1 - dr) + bottom * dr


def histogram_entropy(values, bins):
    """Shannon entropy (nats) of equal-width-binned samples on [0, 1]."""
    idx = np.clip((np.asarray(values) * bins).astype(int), 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


class _SimilarityEngine:
    """Precomputed reference-side geometry for repeated evaluations of one
    image pair (used by the fitness profiles; the one-shot module functions
    build a throwaway instance)."""

    def __init__(self, ref, flo, bins=32, roi=None):
        self.ref = ref
        self.flo = flo
        self.bins = int(bins)
        if roi is None:
            roi = Roi(0, ref.height, 0, ref.width)
        rr, cc = np.mgrid[roi.row_start : roi.row_stop, roi.col_start : roi.col_stop]
        self.rows = rr.ravel()
        self.cols = cc.ravel()
        self.ref_values = ref.intensities[self.rows, self.cols]
        self.px, self.py = ref.pixel_to_mm(self.rows, self.cols)
        self.ref_idx = np.clip((self.ref_values * self.bins).astype(int), 0, self.bins - 1)
        self._grads = None

    def _flo_coords(self, transform):
        c, s = math.cos(transform.angle), math.sin(transform.angle)
        qx = c * self.px - s * self.py + transform.tx
        qy = s * self.px + c * self.py + transform.ty
        rows, cols = self.flo.mm_to_pixel(qx, qy)
        inside = (
            (rows >= 0.0)
            & (rows <= self.flo.height - 1)
            & (cols >= 0.0)
            & (cols <= self.flo.width - 1)
        )
        if not np.any(inside):
            raise ValueError("no overlap between the images under this transform")
        return rows[inside], cols[inside], inside

    def mutual_information(self, transform):
        rows, cols, inside = self._flo_coords(transform)
        flo_values = _bilinear(self.flo.intensities, rows, cols)
        ref_idx = self.ref_idx[inside]
        flo_idx = np.clip((flo_values * self.bins).astype(int), 0, self.bins - 1)
        joint = np.bincount(ref_idx * self.bins + flo_idx, minlength=self.bins**2)
        total = joint.sum()
        joint = joint.reshape(self.bins, self.bins)
        p_joint = joint[joint > 0] / total
        p_ref = joint.sum(axis=1)
        p_ref = p_ref[p_ref > 0] / total
        p_flo = joint.sum(axis=0)
        p_flo = p_flo[p_flo > 0] / total
        h_ref = -(p_ref * np.log(p_ref)).sum()
        h_flo = -(p_flo * np.log(p_flo)).sum()
        h_joint = -(p_joint * np.log(p_joint)).sum()
        return max(float(h_ref + h_flo - h_joint), 0.0)

    def _gradients(self):
        if self._grads is None:
            gry, grx = np.gradient(self.ref.intensities, self.ref.pixel_spacing)
            gfy, gfx = np.gradient(self.flo.intensities, self.flo.pixel_spacing)
            self._grads = (grx, gry, gfx, gfy)
        return self._grads

    def gradient_similarity(self, transform):
        grx, gry, gfx, gfy = self._gradients()
        rows, cols, inside = self._flo_coords(transform)
        ref_gx = grx[self.rows, self.cols][inside]
        ref_gy = gry[self.rows, self.cols][inside]
        flo_gx = _bilinear(gfx, rows, cols)
        flo_gy = _bilinear(gfy, rows, cols)
        c, s = math.cos(transform.angle), math.sin(transform.angle)
        # rotate the floating gradients back into the reference frame
        back_x = c * flo_gx + s * flo_gy
        back_y = -s * flo_gx + c * flo_gy
        dot = ref_gx * back_x + ref_gy * back_y
        return float(np.mean(np.clip(dot, 0.0, None)))


def mutual_information(ref, flo, transform, bins=32, roi=None):
    """MI of the overlap under the transform: ``H(ref) + H(flo) - H(joint)``
    over a joint histogram with bilinear intensity interpolation.

    Raises ValueError("no overlap ...") when the transform maps every
    sample point outside the floating image.
    """
    return _SimilarityEngine(ref, flo, bins=bins, roi=roi).mutual_information(transform)


def gradient_similarity(ref, flo, transform, roi=None):
    """Edge-alignment reward: mean over the overlap of the product of
    gradient magnitudes and the clipped cosine of the gradient-direction
    difference (floating gradients rotated back into the reference frame).
    """
    return _SimilarityEngine(ref, flo, roi=roi).gradient_similarity(transform)


def otsu_threshold(image):
    """Threshold maximizing between-class variance over a 256-bin histogram.

    Ties (flat plateaus of the criterion) are resolved by averaging the
    tying cut positions. Raises on constant images.
    """
    values = image.intensities.ravel()
    if values.max() == values.min():
        raise ValueError("constant image has no Otsu threshold")
    idx = np.clip((values * OTSU_BINS).astype(int), 0, OTSU_BINS - 1)
    counts = np.bincount(idx, minlength=OTSU_BINS).astype(float)
    total = counts.sum()
    centers = (np.arange(OTSU_BINS) + 0.5) / OTSU_BINS
    w0 = np.cumsum(counts)[:-1]
    w1 = total - w0
    m0 = np.cumsum(counts * centers)[:-1]
    mean_total = (counts * centers).sum()
    valid = (w0 > 0) & (w1 > 0)
    mu0 = np.where(valid, m0 / np.where(w0 > 0, w0, 1.0), 0.0)
    mu1 = np.where(valid, (mean_total - m0) / np.where(w1 > 0, w1, 1.0), 0.0)
    variance = np.where(valid, w0 * w1 * (mu0 - mu1) ** 2, -np.inf)
    best = variance.max()
    cuts = np.flatnonzero(variance >= best - 1e-12 * max(abs(best), 1.0))
    return float((cuts.mean() + 1.0) / OTSU_BINS)


def select_roi(image):
    """Bounding rectangle of the above-Otsu-threshold mask, padded by two
    pixels and clipped to the image. Degenerate masks fall back to the
    whole image with a RuntimeWarning."""
    try:
        threshold = otsu_threshold(image)
        mask = image.intensities > threshold
    except ValueError:
        mask = np.zeros_like(image.intensities, dtype=bool)
    if not mask.any():
        warnings.warn(
            "foreground mask is empty; using the whole image as ROI",
            RuntimeWarning,
            stacklevel=2,
        )
        return Roi(0, image.height, 0, image.width)
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    return Roi(
        max(int(rows[0]) - ROI_PAD, 0),
        min(int(rows[-1]) + 1 + ROI_PAD, image.height),
        max(int(cols[0]) - ROI_PAD, 0),
        min(int(cols[-1]) + 1 + ROI_PAD, image.width),
    )


@dataclass(frozen=True)
class TreStats:
    """Target-registration-error statistics in mm."""

    mean: float
    median: float
    std: float
    values: np.ndarray


def target_registration_error(landmarks, recovered, truth):
    """Per-landmark mm distance between the truth-mapped and
    recovered-mapped reference points."""
    mapped_truth = truth.apply(landmarks.ref_points)
    mapped_rec = recovered.apply(landmarks.ref_points)
    tre = np.linalg.norm(mapped_truth - mapped_rec, axis=1)
    return TreStats(
        mean=float(tre.mean()),
        median=float(np.median(tre)),
        std=float(tre.std()),
        values=tre,
    )


def _intensity_remap(v):
    # monotone nonlinear remap so plain intensity difference is a poor
    # similarity while MI stays apt
    return v**2


def make_synthetic_pair(rng, truth, size=64, spacing=1.0, n_blobs=6, noise=0.01):
    """Reference/floating phantom pair with known truth transform.

    The reference is a sum of Gaussian blobs (normalized to [0, 1]) plus
    mild noise; the floating image is the same analytic blob model sampled
    through the inverse truth transform and passed through a monotone
    nonlinear intensity remap. Landmarks sit at the blob centers, so they
    map exactly under the truth transform.
    """
    if abs(truth.tx) > 20 or abs(truth.ty) > 20 or abs(truth.angle) > 0.35:
        raise ValueError("truth transform outside the supported demo range")
    if n_blobs < 4:
        raise ValueError("need at least 4 blobs to form a landmark set")
    extent = 0.5 * size * spacing
    centers = rng.uniform(-0.45 * extent, 0.45 * extent, (n_blobs, 2))
    sigmas = rng.uniform(2.5, 6.0, n_blobs)
    amps = rng.uniform(0.5, 1.0, n_blobs)

    def blob_sum(x, y):
        out = np.zeros_like(x)
        for (cx, cy), sigma, amp in zip(centers, sigmas, amps):
            out += amp * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * sigma**2))
        return out

    rr, cc = np.mgrid[0:size, 0:size]
    shape_tmpl = Image2D(np.zeros((size, size)), spacing)
    x, y = shape_tmpl.pixel_to_mm(rr.ravel(), cc.ravel())
    ref_raw = blob_sum(x, y)
    peak = ref_raw.max()
    ref_values = (ref_raw / peak).reshape(size, size)

    inv = truth.inverse()
    back = inv.apply(np.column_stack([x, y]))
    flo_values = _intensity_remap(blob_sum(back[:, 0], back[:, 1]) / peak).reshape(size, size)

    if noise > 0:
        ref_values = ref_values + noise * rng.standard_normal(ref_values.shape)
        flo_values = flo_values + noise * rng.standard_normal(flo_values.shape)
    ref = Image2D(np.clip(ref_values, 0.0, 1.0), spacing)
    flo = Image2D(np.clip(flo_values, 0.0, 1.0), spacing)
    landmarks = LandmarkSet(ref_points=centers, flo_points=truth.apply(centers))
    return ref, flo, landmarks


def mi_profile(ref, flo, bins=32, roi=None):
    """MI over transform parameters (tx, ty, angle) as a similarity profile."""
    engine = _SimilarityEngine(ref, flo, bins=bins, roi=roi)

    def measure(params):
        return engine.mutual_information(RigidTransform2D.from_params(params))

    return FitnessProfile(measure, "similarity", name="mutual_information", vectorized=False)


def gradient_profile(ref, flo, roi=None):
    """Gradient-alignment reward over transform parameters as a similarity
    profile (the second measure for nested mode)."""
    engine = _SimilarityEngine(ref, flo, roi=roi)

    def measure(params):
        return engine.gradient_similarity(RigidTransform2D.from_params(params))

    return FitnessProfile(measure, "similarity", name="gradient_alignment", vectorized=False)


def ssd_profile(ref, flo, roi=None):
    """Mean squared intensity difference as a difference profile (provided
    for contrast with MI; minimized)."""
    engine = _SimilarityEngine(ref, flo, roi=roi)

    def measure(params):
        transform = RigidTransform2D.from_params(params)
        rows, cols, inside = engine._flo_coords(transform)
        flo_values = _bilinear(flo.intensities, rows, cols)
        return float(np.mean((engine.ref_values[inside] - flo_values) ** 2))

    return FitnessProfile(measure, "difference", name="ssd", vectorized=False)


def write_pgm(image, path, binary=True):
    """Write a [0, 1] image as an 8-bit portable graymap (P5 or P2)."""
    data = np.round(image.intensities * 255.0).astype(np.uint8)
    header = f"{'P5' if binary else 'P2'}\n{image.width} {image.height}\n255\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            fh.write(data.tobytes())
        else:
            fh.write("\n".join(" ".join(str(v) for v in row) for row in data).encode("ascii"))
            fh.write(b"\n")


def read_pgm(path, pixel_spacing=1.0):
    """Read a P2/P5 portable graymap into a [0, 1] image."""
    with open(path, "rb") as fh:
        content = fh.read()
    # header tokens may be interleaved with '#' comments
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(content) and content[pos : pos + 1].isspace():
            pos += 1
        if content[pos : pos + 1] == b"#":
            end = content.find(b"\n", pos)
            pos = end + 1
            continue
        end = pos
        while end < len(content) and not content[end : end + 1].isspace():
            end += 1
        tokens.append(content[pos:end])
        pos = end
    magic = tokens[0].decode("ascii")
    width, height, maxval = (int(t) for t in tokens[1:4])
    if magic == "P5":
        pos += 1  # single whitespace byte after maxval
        data = np.frombuffer(content, dtype=np.uint8, count=width * height, offset=pos)
    elif magic == "P2":
        data = np.array(content[pos:].split(), dtype=float)[: width * height]
    else:
        raise ValueError(f"unsupported graymap magic {magic!r}")
    grid = data.reshape(height, width).astype(float) / float(maxval)
    return Image2D(grid, pixel_spacing)


def write_landmarks(landmarks, path):
    """Whitespace-separated 'x_ref y_ref x_flo y_flo' lines, mm units."""
    table = np.hstack([landmarks.ref_points, landmarks.flo_points])
    np.savetxt(path, table, fmt="%.9g")


def read_landmarks(path):
    table = np.atleast_2d(np.loadtxt(path))
    if table.shape[1] != 4:
        raise ValueError("landmark files need 4 columns: x_ref y_ref x_flo y_flo")
    return LandmarkSet(ref_points=table[:, :2], flo_points=table[:, 2:])
