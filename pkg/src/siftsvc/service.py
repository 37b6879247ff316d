"""HTTP service exposing detect and match over multipart uploads.

Endpoints:
  GET  /health     -> {"status": "ok", "version": ...}
  POST /v1/detect  -> multipart "image" + optional parameter fields
  POST /v1/match   -> multipart "image_a", "image_b" + fields + ratio_threshold

Responses are canonical JSON bodies, byte-identical to the CLI's
``--format json`` output for the same inputs; wall-clock duration is
reported in the ``X-Timing-Ms`` header so bodies stay deterministic.
Errors carry {"code", "message"} with statuses 400 (malformed image),
413 (payload too large), 422 (parameter out of range), 503 (overloaded).
Requests never mutate server state; uploads are processed in memory only.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request, Response
from starlette.concurrency import run_in_threadpool
from starlette.staticfiles import StaticFiles

from . import __version__
from .imageio import ImageDecodeError, RasterImage, load_image
from .jsonio import (
    PRECISIONS,
    encode_detect_response,
    encode_error,
    encode_health,
    encode_match_response,
)
from .matching import match_descriptors
from .pipeline import detect_and_describe
from .scalespace import ConfigError, ImageTooSmallError, ScaleSpaceConfig

__all__ = ["ServiceLimits", "create_app"]

logger = logging.getLogger("siftsvc.access")

# Multipart fields accepted as detector overrides.
_DETECT_FIELDS = {
    "contrast_threshold": float,
    "edge_ratio": float,
    "scales_per_octave": int,
    "upsample": None,  # parsed as a boolean token
    "sigma0": float,
}


@dataclass(frozen=True)
class ServiceLimits:
    max_upload_bytes: int = 16 * 1024 * 1024
    max_pixels_per_side: int = 4096
    request_timeout: float = 60.0

    def __post_init__(self):
        if self.max_upload_bytes <= 0 or self.max_pixels_per_side <= 0:
            raise ValueError("service limits must be positive")
        if self.request_timeout <= 0:
            raise ValueError("request_timeout must be positive")


class _RequestError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _error_response(status: int, code: str, message: str) -> Response:
    return Response(
        content=encode_error(code, message),
        status_code=status,
        media_type="application/json",
    )


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _config_from_form(form) -> ScaleSpaceConfig:
    overrides = {}
    for name, cast in _DETECT_FIELDS.items():
        raw = form.get(name)
        if raw is None:
            continue
        if not isinstance(raw, str):
            raise _RequestError(
                422, "parameter-out-of-range", f"field {name!r} must be a text field"
            )
        try:
            overrides[name] = _parse_bool(raw) if cast is None else cast(raw)
        except ValueError:
            raise _RequestError(
                422, "parameter-out-of-range", f"cannot parse field {name!r}: {raw!r}"
            ) from None
    config = ScaleSpaceConfig(**overrides)
    try:
        config.validate()
    except ConfigError as exc:
        raise _RequestError(422, "parameter-out-of-range", str(exc)) from None
    return config


def _ratio_from_form(form) -> float:
    raw = form.get("ratio_threshold")
    if raw is None:
        return 0.8
    try:
        ratio = float(raw)
    except (TypeError, ValueError):
        raise _RequestError(
            422, "parameter-out-of-range", f"cannot parse field 'ratio_threshold': {raw!r}"
        ) from None
    if not (0.0 <= ratio <= 1.0):
        raise _RequestError(
            422, "parameter-out-of-range", "ratio_threshold must lie in [0, 1]"
        )
    return ratio


def _precision_from_query(request: Request) -> str:
    precision = request.query_params.get("precision", "g6")
    if precision == "full":
        return "full"
    if precision in PRECISIONS:
        return precision
    raise _RequestError(422, "parameter-out-of-range", f"unknown precision {precision!r}")


async def _read_image_part(form, name: str, limits: ServiceLimits) -> RasterImage:
    part = form.get(name)
    if part is None or isinstance(part, str):
        raise _RequestError(400, "missing-part", f"multipart file {name!r} is required")
    data = await part.read()
    if len(data) > limits.max_upload_bytes:
        raise _RequestError(
            413, "payload-too-large", f"part {name!r} exceeds {limits.max_upload_bytes} bytes"
        )
    try:
        image = load_image(data)
    except ImageDecodeError as exc:
        raise _RequestError(400, "malformed-image", f"part {name!r}: {exc}") from None
    if max(image.width, image.height) > limits.max_pixels_per_side:
        raise _RequestError(
            413,
            "payload-too-large",
            f"part {name!r} exceeds {limits.max_pixels_per_side} pixels per side",
        )
    return image


def create_app(
    limits: ServiceLimits | None = None,
    workers: int | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    """Build the application; configuration is read once, never mutated."""
    limits = limits or ServiceLimits()
    if workers is None:
        workers = int(os.environ.get("SIFTSVC_WORKERS", "2"))
    detect_slots = threading.Semaphore(max(1, workers))

    app = FastAPI(title="siftsvc", version=__version__, docs_url=None, redoc_url=None)

    @app.middleware("http")
    async def access_log(request: Request, call_next):
        start = time.perf_counter()
        response = await call_next(request)
        elapsed = (time.perf_counter() - start) * 1000.0
        logger.info(
            "%s %s %d %.1fms",
            request.method,
            request.url.path,
            response.status_code,
            elapsed,
        )
        return response

    def _check_content_length(request: Request, parts: int) -> None:
        raw = request.headers.get("content-length")
        if raw is None:
            return
        try:
            length = int(raw)
        except ValueError:
            return
        # Allow multipart framing overhead on top of the per-part limit.
        if length > parts * limits.max_upload_bytes + 1_000_000:
            raise _RequestError(413, "payload-too-large", "request body too large")

    def _run_limited(func, *args):
        if not detect_slots.acquire(timeout=limits.request_timeout):
            raise _RequestError(503, "overloaded", "no worker available in time")
        try:
            return func(*args)
        finally:
            detect_slots.release()

    @app.get("/health")
    async def health() -> Response:
        return Response(content=encode_health(__version__), media_type="application/json")

    @app.post("/v1/detect")
    async def detect(request: Request) -> Response:
        try:
            precision = _precision_from_query(request)
            _check_content_length(request, 1)
            form = await request.form()
            config = _config_from_form(form)
            image = await _read_image_part(form, "image", limits)
            start = time.perf_counter()
            try:
                result = await run_in_threadpool(
                    _run_limited, detect_and_describe, image, config
                )
            except ImageTooSmallError as exc:
                raise _RequestError(422, "parameter-out-of-range", str(exc)) from None
            elapsed_ms = (time.perf_counter() - start) * 1000.0
            body = encode_detect_response(
                image.width,
                image.height,
                config,
                result.keypoints,
                result.descriptors,
                precision,
            )
            return Response(
                content=body,
                media_type="application/json",
                headers={"X-Timing-Ms": f"{elapsed_ms:.1f}"},
            )
        except _RequestError as exc:
            return _error_response(exc.status, exc.code, exc.message)

    @app.post("/v1/match")
    async def match(request: Request) -> Response:
        try:
            precision = _precision_from_query(request)
            _check_content_length(request, 2)
            form = await request.form()
            config = _config_from_form(form)
            ratio = _ratio_from_form(form)
            image_a = await _read_image_part(form, "image_a", limits)
            image_b = await _read_image_part(form, "image_b", limits)
            start = time.perf_counter()

            def _detect_and_match():
                result_a = detect_and_describe(image_a, config)
                result_b = detect_and_describe(image_b, config)
                matches = match_descriptors(
                    result_a.descriptors, result_b.descriptors, ratio
                )
                return result_a, result_b, matches

            try:
                result_a, result_b, matches = await run_in_threadpool(
                    _run_limited, _detect_and_match
                )
            except ImageTooSmallError as exc:
                raise _RequestError(422, "parameter-out-of-range", str(exc)) from None
            elapsed_ms = (time.perf_counter() - start) * 1000.0
            body = encode_match_response(
                (image_a.width, image_a.height),
                len(result_a.keypoints),
                (image_b.width, image_b.height),
                len(result_b.keypoints),
                config,
                ratio,
                matches,
                precision,
            )
            return Response(
                content=body,
                media_type="application/json",
                headers={"X-Timing-Ms": f"{elapsed_ms:.1f}"},
            )
        except _RequestError as exc:
            return _error_response(exc.status, exc.code, exc.message)

    @app.exception_handler(Exception)
    async def unhandled(request: Request, exc: Exception) -> Response:
        return _error_response(500, "internal-error", "unexpected server error")

    if static_dir is not None:
        static_path = Path(static_dir)
        if static_path.is_dir():
            app.mount("/", StaticFiles(directory=static_path, html=True), name="static")
    return app
