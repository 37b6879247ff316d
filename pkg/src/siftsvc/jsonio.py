"""Canonical JSON bodies shared byte-for-byte by the CLI and the service.

Documents are emitted with a fixed key order and fixed number formatting
so that identical inputs always produce identical bytes.  Keypoint and
descriptor floats are written with 6 significant digits by default;
``precision="full"`` switches to shortest round-trip representation.
Configuration echoes always use full precision.
"""

from __future__ import annotations

from .matching import Match
from .scalespace import Keypoint, ScaleSpaceConfig

__all__ = [
    "encode_health",
    "encode_detect_response",
    "encode_match_response",
    "encode_error",
]

PRECISIONS = ("g6", "full")


def _num(value: float, precision: str) -> str:
    if precision == "full":
        return repr(float(value))
    return format(float(value), ".6g")


def _echo_value(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def _parameters(config: ScaleSpaceConfig, ratio_threshold: float | None) -> str:
    fields = [
        ("scales_per_octave", config.scales_per_octave),
        ("sigma0", config.sigma0),
        ("assumed_blur", config.assumed_blur),
        ("upsample", config.upsample),
        ("num_octaves", config.num_octaves),
        ("contrast_threshold", config.contrast_threshold),
        ("edge_ratio", config.edge_ratio),
        ("border", config.border),
        ("max_refine_steps", config.max_refine_steps),
    ]
    if ratio_threshold is not None:
        fields.append(("ratio_threshold", ratio_threshold))
    return "{" + ",".join(f'"{k}":{_echo_value(v)}' for k, v in fields) + "}"


def _keypoint(kp: Keypoint, precision: str) -> str:
    return (
        "{"
        f'"x":{_num(kp.x, precision)},'
        f'"y":{_num(kp.y, precision)},'
        f'"sigma":{_num(kp.sigma, precision)},'
        f'"orientation":{_num(kp.orientation, precision)},'
        f'"response":{_num(kp.response, precision)}'
        "}"
    )


def _descriptor(values, precision: str) -> str:
    return "[" + ",".join(_num(v, precision) for v in values) + "]"


def encode_health(version: str) -> bytes:
    return f'{{"status":"ok","version":"{version}"}}\n'.encode("ascii")


def encode_detect_response(
    width: int,
    height: int,
    config: ScaleSpaceConfig,
    keypoints,
    descriptors,
    precision: str = "g6",
) -> bytes:
    body = (
        "{"
        f'"image_width":{width},'
        f'"image_height":{height},'
        f'"parameters":{_parameters(config, None)},'
        '"keypoints":['
        + ",".join(_keypoint(kp, precision) for kp in keypoints)
        + '],"descriptors":['
        + ",".join(_descriptor(d, precision) for d in descriptors)
        + "]}\n"
    )
    return body.encode("ascii")


def _image_summary(width: int, height: int, count: int) -> str:
    return f'{{"width":{width},"height":{height},"keypoints":{count}}}'


def encode_match_response(
    size_a: tuple[int, int],
    count_a: int,
    size_b: tuple[int, int],
    count_b: int,
    config: ScaleSpaceConfig,
    ratio_threshold: float,
    matches: list[Match],
    precision: str = "g6",
) -> bytes:
    rows = ",".join(
        "{"
        f'"index_a":{m.index_a},'
        f'"index_b":{m.index_b},'
        f'"distance":{_num(m.distance, precision)},'
        f'"ratio":{_num(m.ratio, precision)}'
        "}"
        for m in matches
    )
    body = (
        "{"
        f'"image_a":{_image_summary(size_a[0], size_a[1], count_a)},'
        f'"image_b":{_image_summary(size_b[0], size_b[1], count_b)},'
        f'"parameters":{_parameters(config, ratio_threshold)},'
        f'"matches":[{rows}]'
        "}\n"
    )
    return body.encode("ascii")


def encode_error(code: str, message: str) -> bytes:
    import json

    return (
        "{" + f'"code":{json.dumps(code)},"message":{json.dumps(message)}' + "}\n"
    ).encode("utf-8")
