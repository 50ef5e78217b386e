"""Command-line experiment runner.

    patomo phantom     --out run/
    patomo project     --out run/ --preset limited_data --dose 3
    patomo reconstruct --out run/ --orders 1 2 3 4
    patomo sweep       --out run/ --orders 2 3
    patomo evaluate    --out run/

Each command reads ``--config`` (YAML key: value pairs), overrides it with
any flags given, and writes the fully resolved config into the output
directory.  Exit status: 0 success, 1 bad input, 2 a solver hit its
iteration limit (outputs are still written).
"""
import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, io
from .analysis import DEFAULT_THRESHOLD, evaluate
from .operators import AcquisitionGeometry, ImageGrid, build_radon, estimate_norm
from .pa_transform import PATransform
from .phantom import (
    DEFAULT_DOSE,
    PRESETS,
    NoiseModel,
    RingPhantom,
    acquisition_preset,
    add_poisson_noise,
    make_ring_phantom,
    peak_snr_db,
)
from .solvers import SolverConfig, reconstruct_admm, reconstruct_sirt

logger = logging.getLogger("patomo")

EXIT_OK, EXIT_BAD_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2


@dataclass
class ExperimentConfig:
    n: int = 256
    preset: str = "missing_wedge"
    # explicit angles in degrees; overrides ``preset`` when given
    angles: list = None
    orders: list = field(default_factory=lambda: [1, 2, 3, 4])
    lambda1: float = 70.0
    # explicit fidelity weight for every order; bypasses the 2**(k-1) rule
    lam: float = None
    beta: float = 32.0
    dose: float = DEFAULT_DOSE
    seed: int = 0
    max_outer: int = 100
    max_inner: int = 10
    tol: float = 1e-4
    nonneg: bool = True
    sirt_iters: int = 200
    norm_iters: int = 50
    # sweep fidelity weights are 2**(j-1) * lambda1 for j in this list
    sweep_exponents: list = field(default_factory=lambda: [0, 1, 2, 3])
    threshold: float = DEFAULT_THRESHOLD
    jobs: int = 1
    out: str = "run"

    @classmethod
    def resolve(cls, path=None, overrides=None):
        values = {}
        if path is not None:
            values.update(io.load_yaml(path))
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**values)
        cfg.validate()
        return cfg

    def validate(self):
        if isinstance(self.dose, str):
            self.dose = float(self.dose)
        if not (isinstance(self.n, int) and self.n >= 2):
            raise ValueError("n must be an integer >= 2")
        if self.angles is None and self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")
        if not self.dose > 0:
            raise ValueError("dose must be positive (use inf for noiseless data)")
        self.orders = [int(k) for k in (self.orders or [])]
        if any(k < 0 for k in self.orders):
            raise ValueError("orders must be non-negative")
        self.solver(1)  # validates the solver fields
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def geometry(self):
        if self.angles is not None:
            return AcquisitionGeometry(self.n, tuple(float(a) for a in self.angles))
        return acquisition_preset(self.preset, self.n)

    def solver(self, order, lam=None, seed=None):
        return SolverConfig(order=order, lambda1=self.lambda1, beta=self.beta,
                            max_outer=self.max_outer, max_inner=self.max_inner,
                            tol=self.tol, nonneg=self.nonneg,
                            seed=self.seed if seed is None else seed,
                            lam=lam if lam is not None else self.lam)

    def as_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        if isinstance(d["dose"], float) and math.isinf(d["dose"]):
            d["dose"] = "inf"
        return d


def _write_config(cfg, out):
    io.dump_yaml(out / "config.yaml", cfg.as_dict())


def _load_phantom(out):
    image = io.read_array(out / "phantom")
    labels = io.read_array(out / "labels")
    return RingPhantom(image.shape[0], (), image, labels)


def _load_problem(cfg, out):
    """Rebuild the scaled operator and scaled noisy data written by ``project``."""
    meta = json.loads((out / "projection.json").read_text())
    geometry = AcquisitionGeometry(meta["detector_count"], tuple(meta["angles"]))
    op = build_radon(ImageGrid(meta["n"]), geometry)
    norm = meta["operator_norm"]
    b = io.read_array(out / "sinogram_noisy")
    return op.scaled(1.0 / norm), b / norm, meta


def cmd_phantom(cfg, out):
    phantom = make_ring_phantom(cfg.n)
    io.write_array(out / "phantom", phantom.image, kind="image")
    io.write_array(out / "labels", phantom.labels, kind="labels", dtype="<i4")
    groups = [
        {"id": g.group_id, "center": list(g.center), "outer_radius": g.outer_radius,
         "thickness": g.thickness, "gap": g.gap, "rings": g.count}
        for g in phantom.groups
    ]
    (out / "groups.json").write_text(json.dumps(groups, indent=2))
    return EXIT_OK


def cmd_project(cfg, out):
    if not (out / "phantom.raw").exists():
        raise FileNotFoundError(f"{out / 'phantom.raw'} not found; run `patomo phantom` first")
    image = io.read_array(out / "phantom")
    if image.shape != (cfg.n, cfg.n):
        raise ValueError(f"phantom is {image.shape[0]}x{image.shape[1]} but config has n={cfg.n}")
    geometry = cfg.geometry()
    op = build_radon(ImageGrid(cfg.n), geometry)
    clean = op.apply(image)
    noisy = add_poisson_noise(clean, NoiseModel(cfg.dose, cfg.seed))
    # the files hold float32; scale and solve from exactly what is stored
    noisy = noisy.astype(np.float32).astype(np.float64)
    norm = estimate_norm(op, iters=cfg.norm_iters, seed=0)
    io.write_array(out / "sinogram_clean", clean, kind="sinogram")
    io.write_array(out / "sinogram_noisy", noisy, kind="sinogram", dose=cfg.dose, seed=cfg.seed)
    meta = {
        "n": cfg.n,
        "detector_count": geometry.detector_count,
        "angles": list(geometry.angles),
        "operator_norm": norm,
        "dose": "inf" if math.isinf(cfg.dose) else cfg.dose,
        "seed": cfg.seed,
        "peak_snr_db": None if math.isinf(cfg.dose) else peak_snr_db(clean, noisy),
    }
    (out / "projection.json").write_text(json.dumps(meta, indent=2))
    return EXIT_OK


def _save_result(result, stem, extra=None):
    io.write_array(stem, result.image, kind="image")
    with open(stem.with_name(stem.name + "_trace.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "objective", "primal_residual", "data_residual"])
        w.writerows(result.trace_rows())
    entry = {
        "file": stem.name,
        "method": result.method,
        "order": result.order,
        "lambda": result.lam,
        "iterations": result.iterations,
        "converged": result.converged,
    }
    entry.update(extra or {})
    return entry


def _solve_cell(args):
    op, b, order, solver_cfg = args
    return reconstruct_admm(op, b, PATransform(order), solver_cfg)


def _require_sinogram(out):
    if not (out / "projection.json").exists():
        raise FileNotFoundError(f"{out / 'projection.json'} not found; run `patomo project` first")


def cmd_reconstruct(cfg, out):
    _require_sinogram(out)
    op, b, _ = _load_problem(cfg, out)
    rdir = out / "recon"
    entries = []
    for k in cfg.orders:
        res = reconstruct_admm(op, b, PATransform(k), cfg.solver(k))
        entries.append(_save_result(res, rdir / f"pa_k{k}"))
        logger.info("order %d: lambda=%g, %d iterations, converged=%s",
                    k, res.lam, res.iterations, res.converged)
    sirt = reconstruct_sirt(op, b, iters=cfg.sirt_iters, nonneg=cfg.nonneg)
    entries.append(_save_result(sirt, rdir / "sirt"))
    (rdir / "metadata.json").write_text(json.dumps(entries, indent=2))
    return EXIT_OK if all(e["converged"] for e in entries) else EXIT_NOT_CONVERGED


def cmd_sweep(cfg, out):
    _require_sinogram(out)
    op, b, _ = _load_problem(cfg, out)
    phantom = _load_phantom(out) if (out / "labels.raw").exists() else None
    cells = [(k, j) for k in cfg.orders for j in cfg.sweep_exponents]
    jobs = [
        (op, b, k, cfg.solver(k, lam=2.0 ** (j - 1) * cfg.lambda1, seed=cfg.seed + idx))
        for idx, (k, j) in enumerate(cells)
    ]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_solve_cell, jobs))
    else:
        results = [_solve_cell(job) for job in jobs]

    sdir = out / "sweep"
    entries, table = [], []
    for (k, j), res in zip(cells, results):
        entry = _save_result(res, sdir / f"pa_k{k}_j{j}", {"exponent": j})
        entries.append(entry)
        err = float("nan")
        if phantom is not None:
            err = evaluate(res, phantom, cfg.threshold)[0].global_error
        table.append({"k": k, "exponent": j, "lambda": res.lam, "rule": j == k,
                      "global_error": err, "converged": res.converged})
    for k in cfg.orders:
        rows = [r for r in table if r["k"] == k and not math.isnan(r["global_error"])]
        if rows:
            best = min(rows, key=lambda r: r["global_error"])
            for r in rows:
                r["best"] = r is best
    with open(sdir / "errors.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "exponent", "lambda", "rule", "global_error", "best", "converged"])
        for r in table:
            w.writerow([r["k"], r["exponent"], repr(r["lambda"]), int(r["rule"]),
                        repr(r["global_error"]), int(r.get("best", False)), int(r["converged"])])
    (sdir / "metadata.json").write_text(json.dumps(entries, indent=2))
    return EXIT_OK if all(e["converged"] for e in entries) else EXIT_NOT_CONVERGED


METRIC_COLUMNS = ["k", "lambda", "segmented", "global"] + [f"region{i}" for i in range(1, 7)]


def metric_rows(entries, rdir, phantom, threshold):
    rows = []
    for e in entries:
        image = io.read_array(rdir / e["file"])
        raw, seg = evaluate(image, phantom, threshold)
        k = e["order"] if e["method"] == "admm" else "sirt"
        lam = e["lambda"] if e["lambda"] is not None else ""
        for rep in (raw, seg):
            rows.append([k, lam, int(rep.segmented), rep.global_error]
                        + [rep.region_errors.get(i, float("nan")) for i in range(1, 7)])
    # numeric orders first, ascending; SIRT rows last
    rows.sort(key=lambda r: (isinstance(r[0], str), r[0] if not isinstance(r[0], str) else 0,
                             r[1] if r[1] != "" else 0, r[2]))
    return rows


def cmd_evaluate(cfg, out, plot=False):
    rdir = out / "recon"
    if not (rdir / "metadata.json").exists():
        raise FileNotFoundError(f"{rdir / 'metadata.json'} not found; run `patomo reconstruct` first")
    phantom = _load_phantom(out)
    entries = json.loads((rdir / "metadata.json").read_text())
    rows = metric_rows(entries, rdir, phantom, cfg.threshold)
    with open(out / "metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRIC_COLUMNS)
        for r in rows:
            w.writerow([v if isinstance(v, (str, int)) else repr(float(v)) for v in r])
    if plot:
        _plot_metrics(rows, out / "metrics.png")
    return EXIT_OK


def _plot_metrics(rows, path):
    try:
        import matplotlib
    except ImportError:
        logger.warning("--plot needs matplotlib (pip install 'artifact[plot]'); skipped")
        return
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5), sharey=True)
    for seg, ax in zip((0, 1), axes):
        pa = [r for r in rows if r[2] == seg and not isinstance(r[0], str)]
        ks = [r[0] for r in pa]
        ax.plot(ks, [r[3] for r in pa], "k-o", label="global")
        for i in range(6):
            ax.plot(ks, [r[4 + i] for r in pa], "-o", ms=3, label=f"region {i + 1}")
        ax.set_xlabel("order k")
        ax.set_title("segmented" if seg else "raw")
    axes[0].set_ylabel("relative l2 error")
    axes[1].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


COMMANDS = {
    "phantom": cmd_phantom,
    "project": cmd_project,
    "reconstruct": cmd_reconstruct,
    "sweep": cmd_sweep,
    "evaluate": cmd_evaluate,
}


def _parse_dose(text):
    return math.inf if text.lower() in ("inf", "infinity", "none") else float(text)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML file of key: value settings")
    common.add_argument("--n", type=int, help="grid size (pixels per side)")
    common.add_argument("--preset", choices=PRESETS, help="acquisition angle set")
    common.add_argument("--orders", type=int, nargs="*", help="PA orders to reconstruct")
    common.add_argument("--lambda1", type=float, help="TV-calibrated fidelity weight")
    common.add_argument("--lambda", dest="lam", type=float,
                        help="fixed fidelity weight for every order (skips the 2^(k-1) rule)")
    common.add_argument("--beta", type=float, help="ADMM penalty parameter")
    common.add_argument("--dose", type=_parse_dose, help="expected counts per unit; 'inf' = noiseless")
    common.add_argument("--seed", type=int)
    common.add_argument("--threshold", type=float, help="segmentation threshold")
    common.add_argument("--max-outer", dest="max_outer", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--jobs", type=int, help="parallel sweep workers")
    common.add_argument("--out", type=str, help="experiment directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="patomo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"patomo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("phantom", parents=[common], help="write the rings phantom and labels")
    sub.add_parser("project", parents=[common], help="simulate clean and noisy sinograms")
    sub.add_parser("reconstruct", parents=[common], help="PA reconstructions plus SIRT")
    sub.add_parser("sweep", parents=[common], help="grid over orders and fidelity weights")
    ev = sub.add_parser("evaluate", parents=[common], help="relative l2 error table")
    ev.add_argument("--plot", action="store_true", help="also write metrics.png")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_BAD_INPUT if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {
        k: v for k, v in vars(args).items()
        if k not in ("config", "command", "verbose", "plot")
    }
    try:
        cfg = ExperimentConfig.resolve(args.config, overrides)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_config(cfg, out)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, out, plot=args.plot)
        return COMMANDS[args.command](cfg, out)
    except (ValueError, FileNotFoundError, OSError, TypeError) as exc:
        print(f"patomo {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
