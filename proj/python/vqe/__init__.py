"""Python access to the video quality enhancement core."""

import torch  # noqa: F401  loads the libtorch shared libraries the extension links against

from ._vqe import (
    ConfigError,
    Error,
    FormatError,
    InvalidInputError,
    IoError,
    NumericError,
    PluginError,
    ShapeError,
    UnknownQpError,
    count_parameters,
    encode_qp,
    enhance,
    init_checkpoint,
    psnr,
    read_video,
    score_sequences,
    ssim,
    tiny_config,
    write_video,
)

__all__ = [
    "ConfigError",
    "Error",
    "FormatError",
    "InvalidInputError",
    "IoError",
    "NumericError",
    "PluginError",
    "ShapeError",
    "UnknownQpError",
    "count_parameters",
    "encode_qp",
    "enhance",
    "init_checkpoint",
    "psnr",
    "read_video",
    "score_sequences",
    "ssim",
    "tiny_config",
    "write_video",
]
