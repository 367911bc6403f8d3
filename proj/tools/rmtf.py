#!/usr/bin/env python3
"""Reader for RMTF tensors and the dataset manifest, for tools outside C++.

    python3 rmtf.py FILE.rmtf            print dims and value range
    python3 rmtf.py --check-dataset DIR  read every file the manifest references
"""

import argparse
import json
import struct
import sys
from array import array
from pathlib import Path

MAGIC = b"RMTF"


def read_tensor(path):
    """Returns (dims, values) with values as a flat float32 array."""
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic")
    version, dtype, rank = struct.unpack_from("<HHI", data, 4)
    if version != 1 or dtype != 1:
        raise ValueError(f"{path}: unsupported version {version} / dtype {dtype}")
    dims = list(struct.unpack_from(f"<{rank}Q", data, 12))
    offset = 12 + 8 * rank
    count = 1
    for d in dims:
        count *= d
    if len(data) - offset != 4 * count:
        raise ValueError(f"{path}: payload holds {len(data) - offset} bytes, expected {4 * count}")
    values = array("f")
    values.frombytes(data[offset:])
    if sys.byteorder != "little":
        values.byteswap()
    return dims, values


def write_tensor(path, dims, values):
    values = array("f", values)
    count = 1
    for d in dims:
        count *= d
    if count != len(values):
        raise ValueError("dims do not match the value count")
    if sys.byteorder != "little":
        values.byteswap()
    header = MAGIC + struct.pack(f"<HHI{len(dims)}Q", 1, 1, len(dims), *dims)
    Path(path).write_bytes(header + values.tobytes())


def check_dataset(root):
    root = Path(root)
    manifest = json.loads((root / "manifest.json").read_text())
    seen = set()
    for s in manifest["samples"]:
        for key in ("map_path", "env_encoding_path", "tx_encoding_path"):
            rel = s.get(key, "")
            if not rel or rel in seen:
                continue
            seen.add(rel)
            dims, values = read_tensor(root / rel)
            if key == "map_path":
                if dims[0] != 2:
                    raise ValueError(f"{rel}: map tensor must have 2 channels")
                n = dims[1] * dims[2]
                for v, m in zip(values[:n], values[n:]):
                    if m and not (-71.0 - 1e-4 <= v <= 0.0):
                        raise ValueError(f"{rel}: value {v} outside [-71, 0]")
            elif len(dims) != 3 or dims[1:] != [256, 256]:
                raise ValueError(f"{rel}: unexpected encoding shape {dims}")
    print(f"{len(manifest['samples'])} samples, {len(seen)} tensors read")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("path", nargs="?")
    ap.add_argument("--check-dataset")
    args = ap.parse_args()
    if args.check_dataset:
        check_dataset(args.check_dataset)
    elif args.path:
        dims, values = read_tensor(args.path)
        print(dims, min(values) if values else None, max(values) if values else None)
    else:
        ap.error("nothing to do")


if __name__ == "__main__":
    main()
