"""PFM / PGM / PNG reading and writing."""

import re
from pathlib import Path

import numpy as np
from PIL import Image


def write_pfm(path, image):
    """Little-endian float32 PFM; (H, W) -> ``Pf``, (H, W, 3) -> ``PF``."""
    img = np.asarray(image, dtype="<f4")
    if img.ndim == 2:
        tag = b"Pf"
    elif img.ndim == 3 and img.shape[2] == 3:
        tag = b"PF"
    else:
        raise ValueError(f"PFM needs (H, W) or (H, W, 3), got {img.shape}")
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(tag + b"\n" + f"{w} {h}\n".encode() + b"-1.0\n")
        fh.write(np.ascontiguousarray(img[::-1]).tobytes())


def read_pfm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    m = re.match(rb"(P[Ff])\s+(\d+)\s+(\d+)\s+(-?[\d.eE+-]+)\s", data)
    if not m:
        raise ValueError(f"{path}: not a PFM file")
    tag, w, h, scale = m.group(1), int(m.group(2)), int(m.group(3)), float(m.group(4))
    dtype = "<f4" if scale < 0 else ">f4"
    ch = 3 if tag == b"PF" else 1
    arr = np.frombuffer(data[m.end():], dtype=dtype, count=w * h * ch)
    arr = arr.reshape(h, w, ch) if ch == 3 else arr.reshape(h, w)
    return arr[::-1].astype(np.float32)


def write_pgm(path, image, max_value=255):
    img = np.clip(np.rint(np.asarray(image, float)), 0, max_value).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{max_value}\n".encode())
        fh.write(img.tobytes())


def read_pgm(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("L"))


def linear_to_srgb(x):
    x = np.clip(x, 0.0, 1.0)
    return np.where(x <= 0.0031308, 12.92 * x, 1.055 * np.power(x, 1.0 / 2.4) - 0.055)


def srgb_to_linear(x):
    return np.where(x <= 0.04045, x / 12.92, ((x + 0.055) / 1.055) ** 2.4)


def write_png(path, image):
    """sRGB-encoded 8-bit PNG of a linear RGB image."""
    enc = np.rint(linear_to_srgb(np.asarray(image, float)) * 255.0).astype(np.uint8)
    Image.fromarray(enc).save(path)


def read_image(path):
    """Load PFM as-is or PNG/other formats decoded to linear RGB floats."""
    path = Path(path)
    if path.suffix.lower() == ".pfm":
        return read_pfm(path).astype(float)
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=float) / 255.0
    return srgb_to_linear(arr)
