"""Command-line frontend: detect, match, serve.

Exit codes: 0 success, 1 unreadable input, 2 bad flags or parameter
values.  Data goes to stdout (or ``--output``); diagnostics to stderr.
Detector flags mirror the ScaleSpaceConfig field names exactly.
"""

from __future__ import annotations

import argparse
import logging
import os
import socket
import sys
from pathlib import Path

from . import __version__
from .imageio import ImageDecodeError, RasterImage, load_image, render_keypoints, render_matches
from .jsonio import encode_detect_response, encode_match_response
from .keypointfile import write_keypoint_file
from .pipeline import detect_and_describe, match_images
from .scalespace import ConfigError, ImageTooSmallError, ScaleSpaceConfig

__all__ = ["main"]


def _add_detector_flags(parser: argparse.ArgumentParser) -> None:
    defaults = ScaleSpaceConfig()
    group = parser.add_argument_group("detector")
    group.add_argument("--scales_per_octave", type=int, default=defaults.scales_per_octave)
    group.add_argument("--sigma0", type=float, default=defaults.sigma0)
    group.add_argument("--assumed_blur", type=float, default=defaults.assumed_blur)
    group.add_argument(
        "--upsample",
        action=argparse.BooleanOptionalAction,
        default=defaults.upsample,
        help="double the image before building the pyramid",
    )
    group.add_argument(
        "--num_octaves", type=int, default=None, help="octave count (default: auto)"
    )
    group.add_argument("--contrast_threshold", type=float, default=defaults.contrast_threshold)
    group.add_argument("--edge_ratio", type=float, default=defaults.edge_ratio)
    group.add_argument("--border", type=int, default=defaults.border)
    group.add_argument("--max_refine_steps", type=int, default=defaults.max_refine_steps)


def _config_from_args(args: argparse.Namespace) -> ScaleSpaceConfig:
    config = ScaleSpaceConfig(
        scales_per_octave=args.scales_per_octave,
        sigma0=args.sigma0,
        assumed_blur=args.assumed_blur,
        upsample=args.upsample,
        num_octaves=args.num_octaves,
        contrast_threshold=args.contrast_threshold,
        edge_ratio=args.edge_ratio,
        border=args.border,
        max_refine_steps=args.max_refine_steps,
    )
    config.validate()
    return config


def _load(path: str) -> RasterImage:
    return load_image(Path(path).read_bytes())


def _emit(data: bytes, output: str | None) -> None:
    if output:
        Path(output).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="siftsvc")
    parser.add_argument("--version", action="version", version=f"siftsvc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser("detect", help="detect keypoints and descriptors")
    detect.add_argument("image", help="input image (PGM/PNG/JPEG)")
    detect.add_argument("--format", choices=("json", "lowe"), default="json")
    detect.add_argument("--output", help="write data here instead of stdout")
    detect.add_argument("--overlay", help="write a keypoint overlay PPM here")
    detect.add_argument("--precision", choices=("g6", "full"), default="g6")
    _add_detector_flags(detect)

    match = sub.add_parser("match", help="match keypoints between two images")
    match.add_argument("image_a")
    match.add_argument("image_b")
    match.add_argument("--ratio", type=float, default=0.8, help="ratio-test threshold")
    match.add_argument("--format", choices=("tsv", "json"), default="tsv")
    match.add_argument("--output", help="write data here instead of stdout")
    match.add_argument("--overlay", help="write a side-by-side match PPM here")
    match.add_argument("--precision", choices=("g6", "full"), default="g6")
    _add_detector_flags(match)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument(
        "--port",
        type=int,
        default=int(os.environ.get("SIFTSVC_PORT", "8080")),
        help="0 binds an ephemeral port and prints it",
    )
    serve.add_argument(
        "--workers",
        type=int,
        default=int(os.environ.get("SIFTSVC_WORKERS", "2")),
        help="concurrent detection slots",
    )
    serve.add_argument(
        "--static-dir",
        default=os.environ.get("SIFTSVC_STATIC_DIR"),
        help="directory with the web client (default: ./frontend/dist if present)",
    )
    return parser


def _cmd_detect(args: argparse.Namespace) -> int:
    import time

    config = _config_from_args(args)
    image = _load(args.image)
    start = time.perf_counter()
    result = detect_and_describe(image, config)
    elapsed_ms = (time.perf_counter() - start) * 1000.0

    if args.format == "json":
        body = encode_detect_response(
            image.width, image.height, config, result.keypoints,
            result.descriptors, args.precision,
        )
    else:
        body = write_keypoint_file(result.keypoints, result.descriptors)
    _emit(body, args.output)
    if args.overlay:
        overlay, skipped = render_keypoints(image, result.keypoints)
        Path(args.overlay).write_bytes(overlay)
        if skipped:
            print(f"overlay: skipped {skipped} out-of-bounds keypoints", file=sys.stderr)
    print(
        f"detect: {len(result.keypoints)} keypoints in {elapsed_ms:.1f} ms",
        file=sys.stderr,
    )
    return 0


def _cmd_match(args: argparse.Namespace) -> int:
    import time

    config = _config_from_args(args)
    if not (0.0 <= args.ratio <= 1.0):
        raise ConfigError("--ratio must lie in [0, 1]")
    image_a = _load(args.image_a)
    image_b = _load(args.image_b)
    start = time.perf_counter()
    result_a, result_b, matches = match_images(image_a, image_b, config, args.ratio)
    elapsed_ms = (time.perf_counter() - start) * 1000.0

    if args.format == "json":
        body = encode_match_response(
            (image_a.width, image_a.height), len(result_a.keypoints),
            (image_b.width, image_b.height), len(result_b.keypoints),
            config, args.ratio, matches, args.precision,
        )
    else:
        rows = "".join(
            f"{m.index_a}\t{m.index_b}\t{m.distance:.6g}\t{m.ratio:.6g}\n"
            for m in matches
        )
        body = rows.encode("ascii")
    _emit(body, args.output)
    if args.overlay:
        overlay = render_matches(
            image_a, image_b, matches, result_a.keypoints, result_b.keypoints
        )
        Path(args.overlay).write_bytes(overlay)
    print(f"match: {len(matches)} matches in {elapsed_ms:.1f} ms", file=sys.stderr)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServiceLimits, create_app

    static_dir = args.static_dir
    if static_dir is None and Path("frontend/dist").is_dir():
        static_dir = "frontend/dist"

    limits = ServiceLimits(
        max_upload_bytes=int(
            os.environ.get("SIFTSVC_MAX_UPLOAD_BYTES", ServiceLimits().max_upload_bytes)
        )
    )
    app = create_app(limits=limits, workers=args.workers, static_dir=static_dir)

    try:
        sock = socket.create_server((args.host, args.port))
    except OSError as exc:
        print(f"cannot bind {args.host}:{args.port}: {exc}", file=sys.stderr)
        return 1
    host, port = sock.getsockname()[:2]
    print(f"listening on http://{host}:{port}", flush=True)

    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    server = uvicorn.Server(
        uvicorn.Config(app, log_level="warning", access_log=False)
    )
    try:
        server.run(sockets=[sock])
    except KeyboardInterrupt:
        pass  # uvicorn re-raises SIGINT after its graceful shutdown
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "detect":
            return _cmd_detect(args)
        if args.command == "match":
            return _cmd_match(args)
        return _cmd_serve(args)
    except (ConfigError, ImageTooSmallError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ImageDecodeError as exc:
        print(f"error: cannot decode input: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
