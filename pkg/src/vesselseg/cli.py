"""Command-line front end.

Every subcommand exits 0 on success. Failures print a single line
``error: <category>: <message>`` to stderr (or a JSON object with
``--json-errors``) and exit with status 1, or 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import io
from .bench import (RMIN_GRID, long_format, main_truth, sweep_nodes, sweep_rmin,
                    time_segmentation, timing_graph)
from .graph import EmptyGraphError
from .losses import toy_adversarial_fit
from .metrics import evaluate
from .pipeline import PipelineError, load_config, run_pipeline
from .raster import (StyleParams, apply_octa_style, binarize, render_enface,
                     render_volume)
from .segment import (EmptyRegionError, EmptySelectionError, RootNotFoundError,
                      SegmentorParams, extract_main, main_vessel_mask)
from .synthesis import synthesize

SWEEP_FIELDS = ["rmin", "iou", "dice", "kept_fraction", "runtime_us"]


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(float(v)) for v in text.split(",") if v.strip()]


def _config(args, extra=None):
    overrides = dict(kv.split("=", 1) for kv in (args.set or []))
    if args.seed is not None:
        overrides.setdefault("pipeline.seed", args.seed)
    overrides.update(extra or {})
    return load_config(args.config, overrides).resolved()


def _pixel_size(args, g):
    return args.pixel_size or g.fov_mm / max(args.width, args.height)


def cmd_synth(args):
    extra = {"synthesis.target_nodes": args.nodes} if args.nodes else {}
    cfg = _config(args, extra)
    g = synthesize(cfg.sca, cfg.radius)
    io.export_graph(g, args.out)
    print(f"{args.out}: {g.node_count} nodes, r_max={g.r.max():.6g} mm")


def cmd_render(args):
    g = io.import_graph(args.graph)
    ps = _pixel_size(args, g)
    img = render_enface(g, args.width, args.height, ps)
    io.write_pgm(args.out, img.data, bits=args.bits)
    if args.mask_out:
        io.write_mask_pgm(args.mask_out, binarize(img, args.threshold))
    if args.volume_out:
        vol = render_volume(g, (args.width, args.height, args.depth),
                            (ps, ps, args.voxel_z or ps))
        io.write_volume(args.volume_out, vol)
    print(f"{args.out}: {args.width}x{args.height} px at {ps:.6g} mm/px")


def cmd_style(args):
    img = io.load_image(args.image)
    base = StyleParams()
    sp = StyleParams(
        vessel_gain=base.vessel_gain if args.gain is None else args.gain,
        background_capillary_density=(base.background_capillary_density
                                      if args.density is None else args.density),
        speckle_sigma=base.speckle_sigma if args.speckle is None else args.speckle,
        contrast_gamma=base.contrast_gamma if args.gamma is None else args.gamma,
        seed=args.seed or 0,
    )
    out = apply_octa_style(img, sp)
    io.write_pgm(args.out, out.data, bits=args.bits)
    if args.stats:
        mask = binarize(img)
        rows = [dict(image=args.image, **io.image_stats(img, mask)),
                dict(image=args.out, **io.image_stats(out, mask))]
        io.write_csv(args.stats, rows, list(rows[0]))


def cmd_segment(args):
    g = io.import_graph(args.graph)
    params = SegmentorParams(
        r_min_ratio=args.rmin, connectivity_radius=args.connectivity,
        root_policy=args.root, root_id=args.root_id,
        region_center=tuple(_floats(args.region_center)) if args.region_center else None,
        region_radius=args.region_radius,
    )
    res = extract_main(g, params)
    if args.graph_out:
        io.export_graph(res.g_main, args.graph_out)
    if args.mask_out:
        mask = main_vessel_mask(res, args.width, args.height, _pixel_size(args, g))
        io.write_mask_pgm(args.mask_out, mask)
    if args.trace:
        rows = [{"step": s, "node_id": i, "r": r} for s, i, r in res.trace]
        io.write_csv(args.trace, rows, ["step", "node_id", "r"])
    print(f"kept {res.kept_nodes}/{g.node_count} nodes, threshold {res.threshold_abs:.6g} mm, "
          f"root {res.root_id}")


def cmd_eval(args):
    pred, gt = io.load_mask(args.pred), io.load_mask(args.gt)
    a = io.load_image(args.img_a) if args.img_a else None
    b = io.load_image(args.img_b) if args.img_b else None
    rep = evaluate(pred, gt, a, b, window_size=args.window)
    d = rep.as_dict()
    if args.report.endswith(".csv"):
        flat = {k: v for k, v in d.items() if k != "pixel_counts"}
        flat.update(d["pixel_counts"])
        io.write_csv(args.report, [flat], list(flat))
    else:
        Path(args.report).write_text(json.dumps(d, indent=1) + "\n")
    print(f"iou={rep.iou:.6f} dice={rep.dice:.6f}")


def _write_sweep(rows, args, param):
    key = "rmin" if param == "rmin" else "n"
    recs = []
    for r in rows:
        rec = {key: r.value if key == "rmin" else int(r.value)}
        rec.update({k: getattr(r, k) for k in SWEEP_FIELDS[1:]})
        rec["nodes"] = r.nodes
        recs.append(rec)
    fields = [key] + SWEEP_FIELDS[1:] + ([] if key == "rmin" else ["nodes"])
    if args.out:
        io.write_csv(args.out, recs, fields)
    if args.plot_data:
        io.write_csv(args.plot_data, long_format(rows, param),
                     ["param", "value", "metric", "score"])
    for rec in recs:
        print(",".join(str(rec[k]) for k in fields))


def cmd_sweep_rmin(args):
    if args.graph:
        g = io.import_graph(args.graph)
    else:
        cfg = _config(args, {"synthesis.target_nodes": args.nodes} if args.nodes else {})
        g = synthesize(cfg.sca, cfg.radius)
    gt = main_truth(g, args.truth_ratio)
    rows = sweep_rmin(g, gt, _floats(args.values), args.width, args.height)
    _write_sweep(rows, args, "rmin")


def cmd_sweep_n(args):
    cfg = _config(args)
    rows = sweep_nodes(cfg.sca, cfg.radius, _ints(args.n_values), args.rmin,
                       args.truth_ratio, args.width, args.height)
    _write_sweep(rows, args, "n")


def cmd_bench(args):
    rows = []
    for n in _ints(args.nodes):
        g = timing_graph(n, seed=args.seed or 0)
        st = time_segmentation(g, SegmentorParams(r_min_ratio=args.rmin), args.reps)
        rows.append(asdict(st))
        print(f"nodes={st.nodes} median={st.median_us:.1f}us p95={st.p95_us:.1f}us "
              f"parameters={st.parameters} node_visits={st.node_visits}")
    if args.out:
        io.write_csv(args.out, rows, list(rows[0]))


def cmd_losses_demo(args):
    real, fake = io.read_feature_csv(args.real), io.read_feature_csv(args.fake)
    trace = toy_adversarial_fit(real, fake, args.steps, args.lr, seed=args.seed or 0)
    rows = [{"step": k, "l_gan": b.l_gan, "l_gp": b.l_gp, "l_seg": b.l_seg,
             "l_total": b.l_total} for k, b in enumerate(trace)]
    if args.out:
        io.write_csv(args.out, rows, ["step", "l_gan", "l_gp", "l_seg", "l_total"])
    last = trace[-1]
    print(f"steps={args.steps} l_gan={last.l_gan:.6g} l_gp={last.l_gp:.6g}")


def cmd_run(args):
    extra = {"pipeline.out_dir": args.out_dir} if args.out_dir else {}
    if args.rmin is not None:
        extra["segmentor.r_min_ratio"] = args.rmin
    if args.nodes:
        extra["synthesis.target_nodes"] = args.nodes
    cfg = _config(args, extra)
    manifest = run_pipeline(cfg)
    for a in manifest["artifacts"]:
        print(f"{a['sha256']}  {a['path']}")


def _raster_flags(p, default=512):
    p.add_argument("--width", type=int, default=default)
    p.add_argument("--height", type=int, default=default)
    p.add_argument("--pixel-size", type=float, default=None,
                   help="mm per pixel (default: fov / max(width, height))")


def build_parser():
    ap = argparse.ArgumentParser(prog="vesselseg", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--json-errors", action="store_true")
    ap.add_argument("--config", default=None, help="INI-style parameter file")
    ap.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                    help="override a config value; repeatable")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="grow a vessel tree")
    p.add_argument("--out", required=True)
    p.add_argument("--nodes", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("render", help="rasterize a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bits", type=int, choices=(8, 16), default=8)
    p.add_argument("--mask-out")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--volume-out")
    p.add_argument("--depth", type=int, default=16)
    p.add_argument("--voxel-z", type=float, default=None)
    _raster_flags(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("style", help="apply the procedural OCTA look")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bits", type=int, choices=(8, 16), default=8)
    p.add_argument("--gain", type=float)
    p.add_argument("--density", type=float)
    p.add_argument("--speckle", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--stats", help="CSV of per-image statistics")
    p.set_defaults(func=cmd_style)

    p = sub.add_parser("segment", help="extract main vessels from a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--rmin", type=float, default=0.2)
    p.add_argument("--root", default="max-radius",
                   choices=("max-radius", "explicit-id", "region-center"))
    p.add_argument("--root-id", type=int)
    p.add_argument("--region-center", help="x,y[,z] in mm")
    p.add_argument("--region-radius", type=float)
    p.add_argument("--connectivity", type=float, default=None,
                   help="link radius in mm for graphs without edges")
    p.add_argument("--mask-out")
    p.add_argument("--graph-out")
    p.add_argument("--trace")
    _raster_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("eval", help="score a predicted mask")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--img-a")
    p.add_argument("--img-b")
    p.add_argument("--window", type=int, default=7)
    p.add_argument("--report", required=True, help="output .csv or .json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-rmin", help="IoU/Dice across radius ratios")
    p.add_argument("--graph")
    p.add_argument("--nodes", type=int)
    p.add_argument("--values", default=",".join(str(v) for v in RMIN_GRID))
    p.add_argument("--truth-ratio", type=float, default=0.2)
    p.add_argument("--out")
    p.add_argument("--plot-data")
    _raster_flags(p)
    p.set_defaults(func=cmd_sweep_rmin)

    p = sub.add_parser("sweep-n", help="IoU/Dice across node counts")
    p.add_argument("--n-values", default="100,1000,10000")
    p.add_argument("--rmin", type=float, default=0.2)
    p.add_argument("--truth-ratio", type=float, default=0.2)
    p.add_argument("--out")
    p.add_argument("--plot-data")
    _raster_flags(p)
    p.set_defaults(func=cmd_sweep_n)

    p = sub.add_parser("bench", help="time main-vessel extraction")
    p.add_argument("--nodes", default="10000")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--rmin", type=float, default=0.2)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("losses-demo", help="fit an affine critic on feature CSVs")
    p.add_argument("--real", required=True)
    p.add_argument("--fake", required=True)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--out")
    p.set_defaults(func=cmd_losses_demo)

    p = sub.add_parser("run", help="full pipeline with a manifest")
    p.add_argument("--out-dir")
    p.add_argument("--rmin", type=float)
    p.add_argument("--nodes", type=int)
    p.set_defaults(func=cmd_run)
    return ap


_CATEGORIES = [
    (io.GraphFormatError, "graph-format"),
    (io.GraphValidationError, "graph-invalid"),
    (io.ImageFormatError, "image-format"),
    (io.ShapeMismatchError, "shape-mismatch"),
    (RootNotFoundError, "root-not-found"),
    (EmptyRegionError, "empty-region"),
    (EmptySelectionError, "empty-selection"),
    (EmptyGraphError, "empty-graph"),
    (FileNotFoundError, "io"),
    (OSError, "io"),
    (ValueError, "invalid-argument"),
]


def categorize(exc) -> str:
    if isinstance(exc, PipelineError):
        return f"pipeline-{exc.stage}"
    for cls, name in _CATEGORIES:
        if isinstance(exc, cls):
            return name
    return "internal"


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # top-level boundary: report one line, never a traceback
        cat = categorize(exc)
        cause = exc.cause if isinstance(exc, PipelineError) else exc
        msg = " ".join(str(cause).split())
        if args.json_errors:
            print(json.dumps({"error": cat, "message": msg}), file=sys.stderr)
        else:
            print(f"error: {cat}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
