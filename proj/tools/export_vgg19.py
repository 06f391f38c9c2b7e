#!/usr/bin/env python3
"""Convert a torchvision VGG-19 state dict into the backbone weight container.

Usage: export_vgg19.py vgg19.pth backbone.vqe

Only the 16 convolutions of the feature extractor are kept, renamed to the
backbone's conv<block>_<index> scheme, plus the ImageNet normalisation buffers.
"""

import argparse
import json
import struct
import sys

import torch

VGG19_CONVS = (2, 2, 4, 4, 4)
MAGIC = b"VQECKPT\0"
VERSION = 1


def backbone_blocks(state):
    feature_keys = sorted(
        {int(k.split(".")[1]) for k in state if k.startswith("features.") and k.endswith(".weight")})
    if len(feature_keys) != sum(VGG19_CONVS):
        raise SystemExit(f"expected {sum(VGG19_CONVS)} feature convolutions, found {len(feature_keys)}")
    it = iter(feature_keys)
    blocks = []
    for b, n in enumerate(VGG19_CONVS, start=1):
        for k in range(1, n + 1):
            idx = next(it)
            for part in ("weight", "bias"):
                blocks.append((f"conv{b}_{k}.{part}", state[f"features.{idx}.{part}"]))
    blocks.append(("mean", torch.tensor([0.485, 0.456, 0.406]).view(1, 3, 1, 1)))
    blocks.append(("std", torch.tensor([0.229, 0.224, 0.225]).view(1, 3, 1, 1)))
    return blocks


def write_container(path, blocks, config=None):
    config_bytes = json.dumps(config or {}).encode()
    header = bytearray(MAGIC)
    header += struct.pack("<IQ", VERSION, len(config_bytes)) + config_bytes
    header += struct.pack("<I", len(blocks))
    payload = bytearray()
    for name, value in blocks:
        value = value.detach().to(torch.float32).contiguous()
        encoded = name.encode()
        header += struct.pack("<I", len(encoded)) + encoded
        header += struct.pack("<I", value.dim()) + struct.pack(f"<{value.dim()}Q", *value.shape)
        header += struct.pack("<Q", len(payload))
        payload += value.numpy().astype("<f4").tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("state_dict", help="torchvision vgg19 .pth file")
    parser.add_argument("output", help="container file to write")
    args = parser.parse_args()
    state = torch.load(args.state_dict, map_location="cpu", weights_only=True)
    write_container(args.output, backbone_blocks(state))
    print(f"wrote {args.output}", file=sys.stderr)


if __name__ == "__main__":
    main()
