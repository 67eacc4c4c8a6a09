"""Batch command-line front-end.

Subcommands:
  cmf build       gyro CSV + intrinsics -> CMF1 motion-field file
  dataset synth   sharp PNG dir + gyro CSV -> blurred/GT/CMF/window + manifest
  kernels render  gyro CSV + intrinsics -> KRN1 patch-kernel grid
  deconv run      blurred PNG + KRN1 -> deconvolved PNG
  metrics eval    prediction dir vs GT dir -> per-image and aggregate CSV

Every command that draws randomness takes ``--seed`` and is byte-
reproducible; dataset items use seeds derived as splitmix64(seed, index),
so ``--jobs`` parallelism cannot change the outputs. Failures print one
machine-readable JSON line on stderr and exit non-zero.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .blursynth import (
    SynthConfig,
    default_noise_params,
    densify_gyro,
    load_image_linear,
    sample_object_spec,
    save_image_srgb,
    synth_pipeline,
)
from .errorsim import (
    CenterShiftRange,
    CurriculumSchedule,
    blend_cmf,
    curriculum_alpha,
    default_noise_model,
    make_noisy_cmf,
)
from .gyro import GyroSequence, build_cmf
from .kernels import patch_layout, render_all
from .metrics import psnr, ssim
from .rng import derive_seed


def _fail(message: str) -> int:
    print(json.dumps({"error": message}), file=sys.stderr)
    return 2


def cmd_cmf_build(args) -> int:
    seq = fileio.load_gyro_csv(args.gyro_csv)
    k = fileio.load_intrinsics(args.intrinsics)
    dims = (args.width, args.height)
    clean = build_cmf(seq, k, args.width, args.height, args.m, args.scale)

    alpha = args.alpha
    if args.epoch is not None:
        alpha = curriculum_alpha(CurriculumSchedule(), args.epoch)
    wants_noise = args.noisy or alpha is not None

    field = clean
    if wants_noise:
        if args.noise_model:
            model, shift = fileio.load_error_model(args.noise_model)
        else:
            model = default_noise_model()
            shift = CenterShiftRange(500.0)
        if args.center_shift is not None:
            shift = CenterShiftRange(args.center_shift)
        noisy = make_noisy_cmf(
            seq, k, dims, args.m, args.scale, model, shift, args.seed
        )
        field = noisy if alpha is None else blend_cmf(clean, noisy, alpha)
    fileio.save_cmf(args.out, field)
    print(f"wrote {args.out} ({field.width_g}x{field.height_g}x{2 * field.m})")
    return 0


def _load_sharp_paths(sharp_dir: str) -> list[Path]:
    paths = sorted(Path(sharp_dir).glob("*.png"))
    if not paths:
        raise ValueError(f"no PNG images found in {sharp_dir}")
    return paths


def _default_sprite(rng: np.random.Generator, size: int = 24) -> np.ndarray:
    """Soft elliptical blob with random color, used when no sprite bank exists."""
    color = rng.uniform(0.2, 1.0, size=3)
    yy, xx = np.mgrid[0:size, 0:size]
    r2 = ((xx - size / 2 + 0.5) / (size / 2)) ** 2 + ((yy - size / 2 + 0.5) / (size / 2)) ** 2
    alpha = np.clip(1.0 - r2, 0.0, 1.0)
    sprite = np.empty((size, size, 4))
    sprite[:, :, :3] = color
    sprite[:, :, 3] = alpha
    return sprite


def _synth_item(job) -> dict:
    (index, sharp_paths, gyro_path, out_dir, master_seed, cfg_kwargs, window_len,
     with_objects) = job
    seed = derive_seed(master_seed, index)
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, 0)))
    seq = fileio.load_gyro_csv(gyro_path)
    if len(seq) < window_len:
        raise ValueError(
            f"gyro sequence has {len(seq)} samples, need at least {window_len}"
        )
    sharp_path = sharp_paths[int(rng.integers(len(sharp_paths)))]
    start = int(rng.integers(len(seq) - window_len + 1))
    window = GyroSequence(
        seq.times[start : start + window_len],
        seq.omega[start : start + window_len],
        seq.rate_hz,
    )
    sharp = load_image_linear(sharp_path)
    cfg = SynthConfig(**cfg_kwargs)
    obj = None
    obj_record = None
    if with_objects:
        sprite = _default_sprite(rng)
        obj = sample_object_spec(rng, sharp.shape[1], sharp.shape[0], sprite)
        obj_record = {
            "position": [obj.position[0], obj.position[1]],
            "direction": obj.direction,
            "distance": obj.distance,
            "sprite_size": list(obj.sprite.shape[:2]),
        }
    result = synth_pipeline(sharp, window, cfg, derive_seed(seed, 1), obj=obj)

    stem = f"{index:06d}"
    out = Path(out_dir)
    blur_path = out / f"{stem}_blur.png"
    gt_path = out / f"{stem}_gt.png"
    cmf_path = out / f"{stem}_cmf.bin"
    win_path = out / f"{stem}_gyro.csv"
    save_image_srgb(blur_path, result.blurred)
    save_image_srgb(gt_path, result.gt)
    fileio.save_cmf(cmf_path, result.cmf)
    fileio.save_gyro_csv(win_path, result.window)
    return {
        "index": index,
        "sharp": sharp_path.name,
        "blurred": blur_path.name,
        "gt": gt_path.name,
        "cmf": cmf_path.name,
        "gyro_window": win_path.name,
        "window_start": start,
        "seed": seed,
        "exposure": cfg.exposure,
        "iso": cfg.iso,
        "object": obj_record,
    }


def cmd_dataset_synth(args) -> int:
    sharp_paths = _load_sharp_paths(args.sharp_dir)
    k = fileio.load_intrinsics(args.intrinsics)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg_kwargs = dict(
        intrinsics=k,
        exposure=args.exposure,
        gyro_window=args.window,
        interp_factor=args.interp,
        m=args.m,
        s=args.scale,
        noise=default_noise_params(),
        saturation_scale=args.saturation,
        iso=args.iso,
    )
    jobs = [
        (i, sharp_paths, args.gyro_csv, str(out_dir), args.seed, cfg_kwargs,
         args.window, args.objects)
        for i in range(args.count)
    ]
    if args.jobs > 1 and jobs:
        with multiprocessing.Pool(args.jobs) as pool:
            records = pool.map(_synth_item, jobs)
    else:
        records = [_synth_item(job) for job in jobs]
    records.sort(key=lambda r: r["index"])
    manifest = out_dir / "manifest.jsonl"
    with open(manifest, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    print(f"wrote {len(records)} samples to {out_dir}")
    return 0


def cmd_kernels_render(args) -> int:
    seq = fileio.load_gyro_csv(args.gyro_csv)
    k = fileio.load_intrinsics(args.intrinsics)
    dense = densify_gyro(seq, args.interp)
    layout = patch_layout(args.width, args.height, args.patch, args.overlap)
    grid = render_all(dense, k, layout, args.ksize)
    fileio.save_kernel_grid(args.out, grid)
    print(f"wrote {args.out} ({layout.rows}x{layout.cols} kernels, ksize {args.ksize})")
    return 0


def cmd_deconv_run(args) -> int:
    from .blursynth import linear_to_srgb
    from .deconv import deconv_spatially_varying

    img = load_image_linear(args.image)
    grid = fileio.load_kernel_grid(args.kernels)
    if args.method == "wiener":
        out = deconv_spatially_varying(
            img, grid, grid.layout, method="wiener", lam=args.lam
        )
    else:
        out = deconv_spatially_varying(
            img, grid, grid.layout, method="rl", iters=args.iters
        )
    save_image_srgb(args.out, linear_to_srgb(np.clip(out, 0.0, 1.0)))
    print(f"wrote {args.out}")
    return 0


def cmd_metrics_eval(args) -> int:
    pred_dir = Path(args.pred)
    gt_dir = Path(args.gt)
    names = sorted(p.name for p in pred_dir.glob("*.png"))
    if not names:
        raise ValueError(f"no PNG images found in {pred_dir}")
    rows = []
    for name in names:
        gt_path = gt_dir / name
        if not gt_path.exists():
            raise ValueError(f"missing ground truth for {name}")
        a = load_image_linear(pred_dir / name)
        b = load_image_linear(gt_path)
        rows.append((name, psnr(a, b), ssim(a, b)))
    lines = ["name,psnr,ssim"]
    for name, p, s in rows:
        lines.append(f"{name},{p},{s}")
    mean_psnr = float(np.mean([r[1] for r in rows]))
    mean_ssim = float(np.mean([r[2] for r in rows]))
    lines.append(f"aggregate,{mean_psnr},{mean_ssim}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="camshake", description=__doc__)
    top = parser.add_subparsers(dest="group", required=True)

    cmf = top.add_parser("cmf", help="camera motion fields").add_subparsers(
        dest="action", required=True
    )
    p = cmf.add_parser("build", help="build a CMF1 file from gyro data")
    p.add_argument("gyro_csv")
    p.add_argument("intrinsics")
    p.add_argument("out")
    p.add_argument("--width", type=int, default=1280)
    p.add_argument("--height", type=int, default=720)
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--scale", type=int, default=2)
    p.add_argument("--noisy", action="store_true", help="simulate gyro errors")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--center-shift", type=float, default=None,
                   help="max rotational-center shift in px (default 500)")
    p.add_argument("--noise-model", default=None, help="error-model key-value file")
    p.add_argument("--alpha", type=float, default=None,
                   help="blend weight between clean and noisy fields")
    p.add_argument("--epoch", type=int, default=None,
                   help="derive alpha from the default curriculum schedule")
    p.set_defaults(func=cmd_cmf_build)

    ds = top.add_parser("dataset", help="dataset generation").add_subparsers(
        dest="action", required=True
    )
    p = ds.add_parser("synth", help="generate blurred/sharp/gyro triplets")
    p.add_argument("sharp_dir")
    p.add_argument("gyro_csv")
    p.add_argument("out_dir")
    p.add_argument("--intrinsics", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--exposure", type=float, default=0.05)
    p.add_argument("--window", type=int, default=10, help="gyro samples per exposure")
    p.add_argument("--interp", type=int, default=8)
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--scale", type=int, default=2)
    p.add_argument("--iso", type=float, default=100.0)
    p.add_argument("--saturation", type=float, default=1.0)
    p.add_argument("--objects", action="store_true", help="composite moving objects")
    p.set_defaults(func=cmd_dataset_synth)

    kr = top.add_parser("kernels", help="patch blur kernels").add_subparsers(
        dest="action", required=True
    )
    p = kr.add_parser("render", help="render a KRN1 kernel grid from gyro data")
    p.add_argument("gyro_csv")
    p.add_argument("intrinsics")
    p.add_argument("out")
    p.add_argument("--width", type=int, default=1280)
    p.add_argument("--height", type=int, default=720)
    p.add_argument("--patch", type=int, default=160)
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--ksize", type=int, default=159)
    p.add_argument("--interp", type=int, default=8)
    p.set_defaults(func=cmd_kernels_render)

    dc = top.add_parser("deconv", help="non-blind deconvolution").add_subparsers(
        dest="action", required=True
    )
    p = dc.add_parser("run", help="deconvolve an image with a kernel grid")
    p.add_argument("image")
    p.add_argument("kernels")
    p.add_argument("out")
    p.add_argument("--method", choices=("wiener", "rl"), default="wiener")
    p.add_argument("--lambda", type=float, default=0.001, dest="lam")
    p.add_argument("--iters", type=int, default=30)
    p.set_defaults(func=cmd_deconv_run)

    mt = top.add_parser("metrics", help="evaluation").add_subparsers(
        dest="action", required=True
    )
    p = mt.add_parser("eval", help="PSNR/SSIM over a prediction directory")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", default=None, help="CSV path (stdout when omitted)")
    p.set_defaults(func=cmd_metrics_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
