"""Error measures and threshold segmentation for phantom studies."""
from dataclasses import dataclass, field

import numpy as np

# binary phantoms take values 0/1
DEFAULT_THRESHOLD = 0.5
# fixed cut used for the electron-tomography segmentations
ET_THRESHOLD = 0.15


def relative_l2(f, ref, mask=None):
    """``||(f - ref) * mask||_2 / ||ref * mask||_2``; ``mask=None`` means the whole image."""
    f = np.asarray(f, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if f.shape != ref.shape:
        raise ValueError(f"shape mismatch: {f.shape} vs {ref.shape}")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != ref.shape:
            raise ValueError("mask shape does not match the images")
        f, ref = f[mask], ref[mask]
    denom = np.linalg.norm(ref)
    if denom == 0.0:
        raise ValueError("reference has zero norm on the mask")
    return float(np.linalg.norm(f - ref) / denom)


def segment_threshold(f, threshold=DEFAULT_THRESHOLD):
    """Binary image: 1 where ``f >= threshold``, else 0."""
    if not np.isfinite(threshold):
        raise ValueError("threshold must be finite")
    return (np.asarray(f) >= threshold).astype(np.float64)


@dataclass
class ErrorReport:
    global_error: float
    region_errors: dict = field(default_factory=dict)
    segmented: bool = False
    order: int = None
    lam: float = None

    def row(self, region_ids=range(1, 7)):
        """Flat row ``[order, lam, segmented, global, region1, ...]``."""
        return [self.order, self.lam, int(self.segmented), self.global_error] + [
            self.region_errors.get(r, float("nan")) for r in region_ids
        ]


def error_report(f, ref, labels, segmented=False, order=None, lam=None):
    """Global and per-label relative l2 errors of ``f`` against ``ref``."""
    ids = [int(i) for i in np.unique(labels) if i != 0]
    regions = {i: relative_l2(f, ref, labels == i) for i in ids}
    return ErrorReport(relative_l2(f, ref), regions, segmented, order, lam)


def evaluate(result, phantom, threshold=DEFAULT_THRESHOLD):
    """Return ``(raw, segmented)`` error reports for a reconstruction of ``phantom``.

    ``result`` may be a ReconstructionResult or a bare image.
    """
    image = getattr(result, "image", result)
    order = getattr(result, "order", None)
    lam = getattr(result, "lam", None)
    image = np.asarray(image, dtype=np.float64)
    if image.shape != phantom.image.shape:
        raise ValueError("reconstruction and phantom grids differ")
    raw = error_report(image, phantom.image, phantom.labels, False, order, lam)
    seg = error_report(segment_threshold(image, threshold), phantom.image,
                       phantom.labels, True, order, lam)
    return raw, seg


def calibrate_lambda1(op, b, reference, candidates, cfg=None):
    """Pick the TV fidelity weight with the lowest global error against ``reference``.

    Runs an order-1 reconstruction for every candidate and returns
    ``(best_lambda1, {lambda1: (global_error, result)})``.
    """
    from .solvers import SolverConfig, reconstruct_admm
    from .pa_transform import PATransform

    cfg = cfg or SolverConfig()
    runs = {}
    for lam1 in candidates:
        res = reconstruct_admm(op, b, PATransform(1), cfg.with_(order=1, lambda1=lam1, lam=None))
        runs[lam1] = (relative_l2(res.image, reference), res)
    best = min(runs, key=lambda c: runs[c][0])
    return best, runs
