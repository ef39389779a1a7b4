"""Command-line entry point.

Exit codes: 0 success, 1 input error, 2 no equilibrium within
``max_sweeps``, 3 selftest failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from hedseg import plots
from hedseg.config import ConfigError, load_config
from hedseg.harness import (
    DatasetError,
    aggregate,
    evaluate_labels,
    load_dataset,
    run_dataset,
    write_report_csv,
)
from hedseg.hedonic import (
    Partition,
    PartitionError,
    Resolution,
    read_partition,
    resolution_from_density,
    run_to_equilibrium,
    write_partition,
)
from hedseg.pixelgraph import ImageError, image_to_graph, load_image, write_edge_list
from hedseg.projection import f1_single, load_mask, save_mask, union_mask

log = logging.getLogger("hedseg")

EXIT_OK, EXIT_INPUT, EXIT_NOCONV, EXIT_SELFTEST = 0, 1, 2, 3
MAX_LABEL = 65535

_FLAG_KEYS = (
    "c", "gamma", "init", "lmax", "tau", "sigma_color", "sigma_edge", "eps",
    "canny_low", "canny_high", "max_sweeps", "out", "jobs",
)


def palette(labels: np.ndarray) -> np.ndarray:
    """Deterministic RGB colour per label id (multiplicative hashing)."""
    x = labels.astype(np.uint64) * np.uint64(2654435761) + np.uint64(0x9E3779B9)
    r = (x >> np.uint64(8)) & np.uint64(0xFF)
    g = (x >> np.uint64(16)) & np.uint64(0xFF)
    b = (x >> np.uint64(24)) & np.uint64(0xFF)
    return np.stack([r, g, b], axis=-1).astype(np.uint8)


def save_label_png(labels2d: np.ndarray, path) -> None:
    Image.fromarray(labels2d.astype(np.uint16)).save(path)


def read_label_image(path) -> np.ndarray:
    with Image.open(path) as im:
        im.load()
        return np.asarray(im).astype(np.int64)


def read_labels(path, shape) -> np.ndarray:
    """Injected labelling: a 16-bit label PNG or a ``node community`` dump."""
    path = Path(path)
    if path.suffix.lower() == ".png":
        lab = read_label_image(path)
    else:
        lab = read_partition(path).labels
    if lab.size != shape[0] * shape[1]:
        raise PartitionError(f"{path}: {lab.size} labels for a {shape[0]}x{shape[1]} image")
    return lab.reshape(shape)


def _config(args):
    overrides = {k: getattr(args, k, None) for k in _FLAG_KEYS}
    overrides = {k: (str(v) if v is not None else None) for k, v in overrides.items()}
    if getattr(args, "dataset", None):
        overrides["dataset"] = args.dataset
    return load_config(args.config, overrides)


def _resolution(cfg, g):
    if cfg.gamma is not None:
        return Resolution.coerce(cfg.gamma)
    return resolution_from_density(g, cfg.resolution_c)


def cmd_segment(args) -> int:
    cfg = _config(args)
    img = load_image(args.image)
    g = image_to_graph(img, cfg.graph_params())
    res = _resolution(cfg, g)
    init = cfg.inits[0]
    eq = run_to_equilibrium(g, res, init=init, max_sweeps=cfg.max_sweeps)
    part = eq.partition.renumbered()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.image).stem
    labels2d = part.labels.reshape(img.shape)

    write_partition(part, out / f"{stem}_partition.txt")
    if args.dump_graph:
        write_edge_list(g, out / f"{stem}_graph.txt")
    if part.K - 1 > MAX_LABEL:
        print(f"error: K={part.K} exceeds the 16-bit label range; only the text dump "
              "was written", file=sys.stderr)
    else:
        save_label_png(labels2d, out / f"{stem}_labels.png")
    Image.fromarray(palette(labels2d)).save(out / f"{stem}_preview.png")

    status = "converged" if eq.converged else "NOT converged (partial output)"
    print(f"{stem}: gamma={res.gamma:.6e} K={part.K} sweeps={eq.sweeps} {status}")
    return EXIT_OK if eq.converged else EXIT_NOCONV


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    img = load_image(args.image)
    for p in args.gt:
        if not Path(p).is_file():
            raise FileNotFoundError(f"ground truth not found: {p}")
    gts = [load_mask(p, shape=img.shape, mode=cfg.mask_mode) for p in args.gt]
    image_id = Path(args.image).stem

    converged = True
    if args.inject_labels:
        labels = read_labels(args.inject_labels, img.shape)
        rec = evaluate_labels(image_id, labels.ravel(), gts, l_max=cfg.lmax)
    else:
        g = image_to_graph(img, cfg.graph_params())
        res = _resolution(cfg, g)
        init = cfg.inits[0]
        eq = run_to_equilibrium(g, res, init=init, max_sweeps=cfg.max_sweeps)
        converged = eq.converged
        labels = eq.partition.renumbered().labels.reshape(img.shape)
        rec = evaluate_labels(
            image_id, labels.ravel(), gts, gamma=res.gamma, c=cfg.resolution_c,
            init=init, l_max=cfg.lmax, sweeps=eq.sweeps, converged=eq.converged,
        )

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_report_csv([rec], out / f"{image_id}_record.csv")
    renum = Partition(labels.ravel()).renumbered().labels
    best, _ = f1_single(renum, gts[rec.gt_id])
    save_mask((renum == best).reshape(img.shape), out / f"{image_id}_best_single.png")
    save_mask(union_mask(renum, rec.labels, img.shape), out / f"{image_id}_best_union.png")
    print(",".join(rec.csv_fields()))
    return EXIT_OK if converged else EXIT_NOCONV


def _run_protocol(args, sweep: bool) -> int:
    cfg = _config(args)
    if not cfg.dataset:
        raise DatasetError("no dataset root given (positional argument or 'dataset' key)")
    index = load_dataset(cfg.dataset, cfg.image_glob, cfg.gt_glob, cfg.mask_mode)
    settings = cfg.eval_settings()
    if sweep:
        if cfg.gamma_values is not None:
            records = run_dataset(index, settings, gamma_values=cfg.gamma_values,
                                  inits=cfg.inits, jobs=cfg.jobs)
        else:
            records = run_dataset(index, settings, c_values=cfg.c_values,
                                  inits=cfg.inits, jobs=cfg.jobs)
    elif cfg.gamma is not None:
        records = run_dataset(index, settings, gamma_values=(cfg.gamma,),
                              inits=cfg.inits, jobs=cfg.jobs)
    else:
        records = run_dataset(index, settings, c_values=(cfg.resolution_c,),
                              inits=cfg.inits, jobs=cfg.jobs)

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_report_csv(records, out / "report.csv")
    summary = aggregate(records, cfg.thresholds())
    text = summary.text()
    if index.warnings:
        text += "warnings:\n" + "".join(f"  {w}\n" for w in index.warnings)
    (out / "summary.txt").write_text(text)
    plots.write_all(records, out, sweep=sweep)
    print(text, end="")
    return EXIT_OK if all(r.converged for r in records if r.ok) else EXIT_NOCONV


def cmd_sweep(args) -> int:
    return _run_protocol(args, sweep=True)


def cmd_dataset(args) -> int:
    return _run_protocol(args, sweep=False)


def cmd_selftest(args) -> int:
    from hedseg.selftest import run_all

    checks = run_all()
    for c in checks:
        print(c.line())
    failed = sum(not c.ok for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if not failed else EXIT_SELFTEST


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file (default: $HEDSEG_CONFIG)")
    p.add_argument("--c", type=float, help="gamma = density(G) / c (default 900)")
    p.add_argument("--gamma", type=float, help="absolute resolution, overrides density scaling")
    p.add_argument("--init", choices=("singleton", "one", "both"))
    p.add_argument("--lmax", type=int, help="cap on labels merged by F1-union")
    p.add_argument("--tau", type=float)
    p.add_argument("--sigma-color", dest="sigma_color", type=float)
    p.add_argument("--sigma-edge", dest="sigma_edge", type=float)
    p.add_argument("--eps", type=float, help="drop edges with affinity <= eps")
    p.add_argument("--canny-low", dest="canny_low", type=float)
    p.add_argument("--canny-high", dest="canny_high", type=float)
    p.add_argument("--max-sweeps", dest="max_sweeps", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="worker processes (default: all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hedseg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment one image")
    p.add_argument("image")
    p.add_argument("--dump-graph", action="store_true", help="also write the u v w edge list")
    _add_common(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("evaluate", help="segment one image and score it against GT masks")
    p.add_argument("image")
    p.add_argument("gt", nargs="+", help="ground-truth mask PNG(s)")
    p.add_argument("--inject-labels", dest="inject_labels",
                   help="score this labelling (label PNG or partition dump) instead of optimising")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    for name, func, helptext in (
        ("sweep", cmd_sweep, "gamma sweep over a dataset"),
        ("dataset", cmd_dataset, "single-resolution run over a dataset"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("dataset", nargs="?", help="dataset root (or 'dataset' config key)")
        _add_common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("selftest", help="run the built-in verification suite")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, DatasetError, ImageError, PartitionError, FileNotFoundError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
