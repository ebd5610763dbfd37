"""End-to-end run: synthesize, render, style, segment, mask, evaluate."""

from __future__ import annotations

import configparser
import hashlib
import json
import os
import shutil
import tempfile
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from . import io
from .bench import main_truth
from .losses import seg_consistency_loss
from .metrics import evaluate
from .raster import StyleParams, apply_octa_style, binarize, render_enface, render_mask
from .segment import SegmentorParams, extract_main
from .synthesis import RadiusParams, ScaParams, synthesize

OUT_ENV = "VESSELSEG_OUT"


class PipelineError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    sca: ScaParams = field(default_factory=ScaParams)
    radius: RadiusParams = field(default_factory=RadiusParams)
    style: StyleParams = field(default_factory=StyleParams)
    segmentor: SegmentorParams = field(default_factory=SegmentorParams)
    width: int = 512
    height: int = 512
    truth_ratio: float = 0.2
    seed: int | None = None
    out_dir: str | None = None

    def resolved(self):
        """Apply the global seed to the seeded stages."""
        if self.seed is None:
            return self
        return replace(self, sca=replace(self.sca, seed=self.seed),
                       style=replace(self.style, seed=self.seed))

    def echo(self):
        d = asdict(self.resolved())
        d.pop("out_dir")
        return d


_SECTIONS = {"synthesis": ScaParams, "radius": RadiusParams, "style": StyleParams,
             "segmentor": SegmentorParams}
_ATTR = {"synthesis": "sca", "radius": "radius", "style": "style", "segmentor": "segmentor"}


def _coerce(cls, key, text):
    kinds = {f.name: f.type for f in fields(cls)}
    if key not in kinds:
        raise ValueError(f"unknown key {key!r} for {cls.__name__}")
    kind = str(kinds[key])
    if text.strip().lower() in ("none", ""):
        return None
    if "tuple" in kind:
        return tuple(json.loads(text))
    if kind.startswith("int"):
        return int(text)
    if kind.startswith("float"):
        return float(text)
    return text.strip()


def load_config(path=None, overrides=None) -> PipelineConfig:
    """Read an INI-style file with ``[synthesis]``, ``[radius]``, ``[style]``,
    ``[segmentor]`` and ``[pipeline]`` sections; ``overrides`` maps
    ``"section.key"`` to string values and wins over the file."""
    parser = configparser.ConfigParser()
    if path is not None:
        if not parser.read(path):
            raise FileNotFoundError(f"unreadable config: {path}")
    values: dict[str, dict[str, str]] = {s: dict(parser[s]) for s in parser.sections()}
    for dotted, val in (overrides or {}).items():
        sec, key = dotted.split(".", 1)
        values.setdefault(sec, {})[key] = str(val)
    cfg = PipelineConfig()
    for sec, cls in _SECTIONS.items():
        try:
            kv = {k: _coerce(cls, k, v) for k, v in values.get(sec, {}).items()}
            setattr(cfg, _ATTR[sec], cls(**kv))
        except (TypeError, ValueError) as exc:
            raise PipelineError(sec, exc) from exc
    for k, v in values.get("pipeline", {}).items():
        if k in ("width", "height", "seed"):
            setattr(cfg, k, int(v))
        elif k == "truth_ratio":
            cfg.truth_ratio = float(v)
        elif k == "out_dir":
            cfg.out_dir = v
        else:
            raise ValueError(f"unknown key {k!r} in [pipeline]")
    return cfg


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_pipeline(config: PipelineConfig) -> dict:
    """Write graph, images, main-vessel graph and mask, and a report into
    ``config.out_dir``; returns the manifest (also written as manifest.json).

    On failure nothing is left behind and :class:`PipelineError` names the
    stage that broke.
    """
    cfg = config.resolved()
    out = Path(cfg.out_dir or os.environ.get(OUT_ENV) or "vesselseg_out")
    out.mkdir(parents=True, exist_ok=True)
    work = Path(tempfile.mkdtemp(prefix=".partial-", dir=out))
    stage = "synthesis"
    try:
        g = synthesize(cfg.sca, cfg.radius)
        stage = "render"
        ps = g.fov_mm / max(cfg.width, cfg.height)
        img = render_enface(g, cfg.width, cfg.height, ps)
        stage = "style"
        styled = apply_octa_style(img, cfg.style)
        stage = "segment"
        res = extract_main(g, cfg.segmentor)
        stage = "mask"
        pred = render_mask(res.g_main, cfg.width, cfg.height, ps)
        truth = render_mask(main_truth(g, cfg.truth_ratio), cfg.width, cfg.height, ps)
        stage = "eval"
        rep = evaluate(pred, truth, img, styled)
        report = rep.as_dict()
        report["seg_consistency"] = seg_consistency_loss(binarize(styled), binarize(img))
        report["kept_nodes"] = res.kept_nodes
        report["nodes"] = g.node_count
        report["threshold_abs"] = res.threshold_abs
        report["root_id"] = res.root_id

        stage = "write"
        names = {
            "graph": "graph.json", "enface": "enface.pgm", "styled": "styled.pgm",
            "main_graph": "main_graph.json", "main_mask": "main_mask.pgm",
            "report": "report.json",
        }
        io.export_graph(g, work / names["graph"])
        io.write_pgm(work / names["enface"], img.data, bits=16)
        io.write_pgm(work / names["styled"], styled.data, bits=16)
        io.export_graph(res.g_main, work / names["main_graph"])
        io.write_mask_pgm(work / names["main_mask"], pred)
        (work / names["report"]).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
        artifacts = [
            {"name": k, "path": v, "sha256": _sha256(work / v)} for k, v in names.items()
        ]
        # round-trip so the returned manifest equals the file (tuples become lists)
        manifest = json.loads(json.dumps({"artifacts": artifacts, "config": cfg.echo()}))
        (work / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
        for v in list(names.values()) + ["manifest.json"]:
            os.replace(work / v, out / v)
    except Exception as exc:
        raise PipelineError(stage, exc) from exc
    finally:
        shutil.rmtree(work, ignore_errors=True)
    return manifest
