"""Batch command-line front end.

Subcommands: consistency, voeval, interp, loss, synth, warp.
Exit codes: 0 success, 1 usage/validation error, 2 I/O or data error.
Every command is deterministic: identical inputs and flags produce
byte-identical outputs, regardless of --threads.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, consistency, imgio, manifest, se3, synth, trajio, voeval
from .flowcore import FlowFileError, load_flo, save_flo, warp_backward

log = logging.getLogger("seqvo")


class DataError(Exception):
    """Unusable input data (distinct from usage/validation errors): exit 2."""


class CliParser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _provenance(inputs, flags) -> dict:
    return {
        "tool": "seqvo",
        "version": __version__,
        "inputs": {str(name): _sha256(path) for name, path in inputs.items()},
        "flags": {k: v for k, v in sorted(flags.items())},
    }


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _parse_float_list(text, flag):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"{flag} expects comma-separated numbers, got {text!r}")
    if not values:
        raise ValueError(f"{flag} must not be empty")
    return values


# ---------------------------------------------------------------------------
# consistency


def cmd_consistency(args) -> int:
    man = manifest.load_manifest(args.manifest)
    metrics = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    report = consistency.sequence_report(
        man, metrics=metrics, direction=args.flow_direction, threads=args.threads
    )
    flags = {
        "metrics": ",".join(metrics),
        "flow_direction": args.flow_direction or man.flow_direction,
        "aggregate": args.aggregate,
    }
    prov = _provenance({"manifest": args.manifest}, flags)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.format in ("csv", "both"):
        (out / "consistency.csv").write_text(report.to_csv(prov))
    if args.format in ("json", "both"):
        _write_json(out / "consistency.json", report.to_json_obj(prov))
    key = "pooled_mean" if args.aggregate == "pooled" else "mean"
    for name, agg in sorted(report.aggregates().items()):
        print(f"{name} {key}={agg[key]!r} median={agg['median']!r}")
    return 0


# ---------------------------------------------------------------------------
# voeval

VOEVAL_COLUMNS = ("t_rel", "r_rel", "t_abs", "r_abs", "t_raw_m", "r_raw_deg")


def _metrics_row(label, values, pair_count):
    row = {"estimate": label}
    row.update({k: values[k] for k in VOEVAL_COLUMNS})
    row["pairs"] = pair_count
    return row


def cmd_voeval(args) -> int:
    lengths = _parse_float_list(args.lengths, "--lengths")
    if args.stride < 1:
        raise ValueError(f"--stride must be >= 1, got {args.stride}")
    try:
        gt = trajio.load_trajectory(args.gt, args.gt_format)
    except ValueError as exc:
        raise DataError(f"{args.gt}: {exc}") from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    axes = {"xy": (0, 1), "xz": (0, 2)}[args.plot_axes]
    _write_xy(out / "gt_path.txt", gt.translations()[:, axes])
    for pos, est_path in enumerate(args.est):
        stem = f"est{pos:03d}"
        try:
            est = trajio.load_trajectory(est_path, args.est_format)
            metrics = voeval.evaluate(
                gt, est, lengths=lengths, stride=args.stride,
                max_dt=args.max_dt, align=args.align,
            )
            _write_xy(out / f"{stem}_path.txt", est.translations()[:, axes])
            _write_curves(out, stem, gt, est, lengths, args)
        except ValueError as exc:
            raise DataError(f"{est_path}: {exc}") from None
        r_rel = metrics.r_rel if args.r_rel_unit == "per100m" else metrics.r_raw_deg
        values = {
            "t_rel": metrics.t_rel,
            "r_rel": r_rel,
            "t_abs": metrics.t_abs,
            "r_abs": metrics.r_abs,
            "t_raw_m": metrics.t_raw_m,
            "r_raw_deg": metrics.r_raw_deg,
        }
        rows.append(_metrics_row(Path(est_path).name, values, metrics.pair_count))
    median_row = {"estimate": "median"}
    for key in (*VOEVAL_COLUMNS, "pairs"):
        median_row[key] = float(np.median([row[key] for row in rows]))
    rows.append(median_row)

    flags = {
        "lengths": args.lengths, "stride": args.stride, "max_dt": args.max_dt,
        "align": args.align, "r_rel_unit": args.r_rel_unit, "plot_axes": args.plot_axes,
    }
    inputs = {"gt": args.gt}
    inputs.update({f"est{pos:03d}": p for pos, p in enumerate(args.est)})
    prov = _provenance(inputs, flags)
    if args.format in ("csv", "both"):
        (out / "metrics.csv").write_text(_voeval_csv(rows, prov))
    if args.format in ("json", "both"):
        _write_json(out / "metrics.json", {"provenance": prov, "rows": rows})
    for row in rows:
        print(f"{row['estimate']}: t_rel={row['t_rel']!r} r_rel={row['r_rel']!r} "
              f"t_abs={row['t_abs']!r} r_abs={row['r_abs']!r}")
    return 0


def _write_xy(path, points):
    lines = [f"{x!r} {y!r}" for x, y in points]
    Path(path).write_text("\n".join(lines) + "\n")


def _write_curves(out, stem, gt, est, lengths, args):
    """Per-length mean error curves (two-column: length value)."""
    gt_m, est_m = voeval.associate_trajectories(gt, est, args.max_dt)
    t_lines = []
    r_lines = []
    for length in lengths:
        try:
            sets = voeval.build_pairs(gt_m, [length], stride=args.stride)
            rel = voeval.relative_errors(gt_m, est_m, sets)
        except ValueError:
            continue
        t_lines.append(f"{length!r} {rel.t_rel_percent!r}")
        r_value = rel.r_rel_deg_per_100m if args.r_rel_unit == "per100m" else rel.r_raw_deg
        r_lines.append(f"{length!r} {r_value!r}")
    (out / f"{stem}_trel_curve.txt").write_text("\n".join(t_lines) + "\n" if t_lines else "")
    (out / f"{stem}_rrel_curve.txt").write_text("\n".join(r_lines) + "\n" if r_lines else "")


def _cell(value):
    return repr(value) if isinstance(value, float) else str(value)


def _voeval_csv(rows, prov) -> str:
    lines = [f"# tool seqvo {prov['version']}"]
    for name, digest in sorted(prov["inputs"].items()):
        lines.append(f"# input {name} sha256={digest}")
    for key, val in sorted(prov["flags"].items()):
        lines.append(f"# flag {key}={val}")
    header = ("estimate", *VOEVAL_COLUMNS, "pairs")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_cell(row[k]) for k in header))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# interp


def cmd_interp(args) -> int:
    try:
        gps = trajio.load_trajectory(args.gpsins, "gps_ins")
    except ValueError as exc:
        raise DataError(f"{args.gpsins}: {exc}") from None
    stamps = []
    for line in Path(args.timestamps).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        stamps.append(float(line))
    scale = 1e-6 if args.timestamp_unit == "us" else 1.0
    times = []
    poses = []
    dropped = 0
    for raw in stamps:
        t = raw * scale
        try:
            pose = se3.interpolate(gps, t)
        except ValueError:
            dropped += 1
            continue
        times.append(t)
        poses.append(pose)
    if dropped:
        log.warning("dropped %d of %d timestamps outside the GPS/INS range",
                    dropped, len(stamps))
    if not poses:
        raise ValueError("no requested timestamp lies inside the GPS/INS range")
    traj = se3.Trajectory(np.array(times), tuple(poses))
    trajio.save_tum(args.out, traj)
    print(f"wrote {len(poses)} poses ({dropped} dropped)")
    return 0


# ---------------------------------------------------------------------------
# loss


def _load_scores(path) -> consistency.ScoreMap:
    arr = np.loadtxt(path, ndmin=2)
    return consistency.ScoreMap(arr)


def cmd_loss(args) -> int:
    weights_vals = _parse_float_list(args.weights, "--weights")
    if len(weights_vals) != 4:
        raise ValueError(f"--weights expects 4 values adv,cy,tmp,st, got {len(weights_vals)}")
    weights = consistency.LossWeights(*weights_vals, alpha=args.alpha)

    inputs = {}
    terms = {"l_adv": None, "l_gen": None, "l_disc": None,
             "l_cy": None, "l_tmp": None, "l_st": None}

    def opt_group(names, label):
        given = [getattr(args, n) is not None for n in names]
        if any(given) and not all(given):
            flags = ", ".join("--" + n.replace("_", "-") for n in names)
            raise ValueError(f"{label} needs all of: {flags}")
        return all(given)

    if opt_group(("cycle_orig", "cycle_recon"), "cycle loss"):
        orig = imgio.load_image(args.cycle_orig)
        recon = imgio.load_image(args.cycle_recon)
        terms["l_cy"] = consistency.cycle_loss(orig, recon, args.alpha)
        inputs.update(cycle_orig=args.cycle_orig, cycle_recon=args.cycle_recon)
    if opt_group(("prev", "curr", "flow_tmp"), "temporal loss"):
        prev = imgio.load_image(args.prev)
        curr = imgio.load_image(args.curr)
        flow = load_flo(args.flow_tmp)
        if args.flow_direction == "target":
            terms["l_tmp"] = consistency.temporal_loss(prev, curr, flow, args.alpha)
        else:
            terms["l_tmp"] = consistency.temporal_loss(curr, prev, flow, args.alpha)
        inputs.update(prev=args.prev, curr=args.curr, flow_tmp=args.flow_tmp)
    if opt_group(("right", "left", "flow_stereo"), "stereo loss"):
        right = imgio.load_image(args.right)
        left = imgio.load_image(args.left)
        flow = load_flo(args.flow_stereo)
        if args.flow_direction == "target":
            terms["l_st"] = consistency.stereo_loss(right, left, flow, args.alpha)
        else:
            terms["l_st"] = consistency.stereo_loss(left, right, flow, args.alpha)
        inputs.update(right=args.right, left=args.left, flow_stereo=args.flow_stereo)
    if opt_group(("scores_fake", "scores_real"), "adversarial loss"):
        adv = consistency.adversarial_loss(_load_scores(args.scores_fake),
                                           _load_scores(args.scores_real))
        terms["l_adv"] = adv.l_adv
        terms["l_gen"] = adv.l_gen
        terms["l_disc"] = adv.l_disc
        inputs.update(scores_fake=args.scores_fake, scores_real=args.scores_real)

    computable = {k: v for k, v in terms.items()
                  if k in ("l_adv", "l_cy", "l_tmp", "l_st") and v is not None}
    if not computable:
        raise ValueError("no loss term computable: provide inputs for at least one")
    total = consistency.total_loss(
        terms["l_adv"] or 0.0, terms["l_cy"] or 0.0,
        terms["l_tmp"] or 0.0, terms["l_st"] or 0.0, weights,
    )
    flags = {"alpha": args.alpha, "weights": args.weights,
             "flow_direction": args.flow_direction}
    obj = dict(terms)
    obj["total"] = total
    obj["weights"] = {"lambda_adv": weights.lambda_adv, "lambda_cy": weights.lambda_cy,
                      "lambda_tmp": weights.lambda_tmp, "lambda_st": weights.lambda_st}
    obj["alpha"] = weights.alpha
    obj["provenance"] = _provenance(inputs, flags)
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# synth


def _spec_from_file(path) -> synth.SynthSpec:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed synth spec JSON in {path}: {exc}") from None
    if not isinstance(obj, dict):
        raise ValueError("synth spec must be a JSON object")
    motion = obj.get("motion", {})
    path_obj = obj.get("path", {})
    flicker = obj.get("flicker")
    return synth.SynthSpec(
        width=int(obj.get("width", 128)),
        height=int(obj.get("height", 96)),
        frames=int(obj.get("frames", 20)),
        motion=synth.AffineMotion(
            rotation=float(motion.get("rotation", 0.0)),
            scale=float(motion.get("scale", 1.0)),
            translation=tuple(motion.get("translation", (0.0, 0.0))),
        ),
        disparity=float(obj.get("disparity", 0.0)),
        seed=int(obj.get("seed", 0)),
        flicker=None if flicker is None else tuple(float(g) for g in flicker),
        path=synth.PathSpec(
            kind=str(path_obj.get("kind", "line")),
            speed=float(path_obj.get("speed", 1.0)),
            frame_rate=float(path_obj.get("frame_rate", 10.0)),
            radius=float(path_obj.get("radius", 50.0)),
        ),
        flow_direction=str(obj.get("flow_direction", "source")),
    )


def write_sequence(seq: synth.SynthSequence, out: Path, crop_rows: int = 0):
    """Materialize a generated sequence as manifest + PNG/.flo/TUM files."""
    out.mkdir(parents=True, exist_ok=True)
    (out / "flows").mkdir(exist_ok=True)
    frames = []
    n = len(seq.frames)
    for k, frame in enumerate(seq.frames):
        left_rel = f"left_{k:04d}.png"
        right_rel = f"right_{k:04d}.png"
        imgio.save_image(out / left_rel, frame.left, bit_depth=16)
        imgio.save_image(out / right_rel, frame.right, bit_depth=16)
        flows = {}
        if k < n - 1:
            flows["tmp_left"] = f"flows/tmp_left_{k:04d}.flo"
            flows["tmp_right"] = f"flows/tmp_right_{k:04d}.flo"
            save_flo(out / flows["tmp_left"], seq.tmp_left[k])
            save_flo(out / flows["tmp_right"], seq.tmp_right[k])
        if k < n - 2:
            flows["skip_left"] = f"flows/skip_left_{k:04d}.flo"
            save_flo(out / flows["skip_left"], seq.skip_left[k])
        flows["stereo"] = f"flows/stereo_{k:04d}.flo"
        save_flo(out / flows["stereo"], seq.stereo[k])
        frames.append(manifest.ManifestFrame(
            index=k, timestamp=frame.timestamp,
            left=left_rel, right=right_rel, flows=flows,
        ))
    man = manifest.SequenceManifest(
        frames=tuple(frames), crop_rows=crop_rows,
        flow_direction=seq.flow_direction, root=out,
    )
    manifest.save_manifest(man, out / "manifest.json")
    trajio.save_tum(out / "trajectory.tum", seq.trajectory)


def cmd_synth(args) -> int:
    spec = _spec_from_file(args.spec)
    seq = synth.gen_sequence(spec)
    write_sequence(seq, Path(args.out))
    print(f"wrote {len(seq.frames)} frames to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# warp


def cmd_warp(args) -> int:
    img, depth = imgio.load_image_and_depth(args.image)
    flow = load_flo(args.flow)
    warped = warp_backward(img, flow)
    imgio.save_image(args.out, warped, bit_depth=depth)
    mask_out = args.mask_out or str(Path(args.out).with_suffix("")) + "_mask.png"
    imgio.save_mask(mask_out, warped.mask)
    print(f"wrote {args.out} and {mask_out}")
    return 0


# ---------------------------------------------------------------------------
# parser wiring


def build_parser() -> CliParser:
    parser = CliParser(prog="seqvo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"seqvo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("consistency", help="flow-composition consistency report")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--metrics", default="tmp,st", help="comma list from {tmp,st}")
    p.add_argument("--flow-direction", choices=("source", "target"), default=None,
                   help="override the manifest's flow convention")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.add_argument("--aggregate", choices=("frame-mean", "pooled"), default="frame-mean",
                   help="aggregate echoed on stdout")
    p.set_defaults(func=cmd_consistency)

    p = sub.add_parser("voeval", help="trajectory error metrics")
    p.add_argument("gt")
    p.add_argument("est", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--lengths", default="100,200,300,400,500,600,700,800")
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--max-dt", type=float, default=0.02)
    p.add_argument("--align", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--r-rel-unit", choices=("per100m", "deg"), default="per100m")
    p.add_argument("--gt-format", choices=("auto", "tum", "kitti", "gps_ins"), default="auto")
    p.add_argument("--est-format", choices=("auto", "tum", "kitti", "gps_ins"), default="auto")
    p.add_argument("--plot-axes", choices=("xy", "xz"), default="xy")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.set_defaults(func=cmd_voeval)

    p = sub.add_parser("interp", help="interpolate GPS/INS poses at timestamps")
    p.add_argument("gpsins", help="GPS/INS CSV file")
    p.add_argument("timestamps", help="file with one timestamp per line")
    p.add_argument("--out", required=True, help="output TUM file")
    p.add_argument("--timestamp-unit", choices=("us", "s"), default="us")
    p.set_defaults(func=cmd_interp)

    p = sub.add_parser("loss", help="evaluate consistency loss terms")
    p.add_argument("--cycle-orig")
    p.add_argument("--cycle-recon")
    p.add_argument("--prev")
    p.add_argument("--curr")
    p.add_argument("--flow-tmp")
    p.add_argument("--right")
    p.add_argument("--left")
    p.add_argument("--flow-stereo")
    p.add_argument("--scores-fake")
    p.add_argument("--scores-real")
    p.add_argument("--alpha", type=float, default=0.8)
    p.add_argument("--weights", default="1.0,10.0,3.0,3.0",
                   help="lambda_adv,lambda_cy,lambda_tmp,lambda_st")
    p.add_argument("--flow-direction", choices=("source", "target"), default="target")
    p.add_argument("--out", default=None, help="optional JSON output file")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("synth", help="generate a synthetic oracle sequence")
    p.add_argument("spec", help="synth spec JSON file")
    p.add_argument("out", help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("warp", help="backward-warp an image by a flow file")
    p.add_argument("image")
    p.add_argument("flow")
    p.add_argument("out")
    p.add_argument("--mask-out", default=None)
    p.set_defaults(func=cmd_warp)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("SEQVO_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"seqvo {args.command}: {exc}", file=sys.stderr)
        return 1
    except (DataError, FlowFileError, FileNotFoundError, OSError) as exc:
        print(f"seqvo {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
