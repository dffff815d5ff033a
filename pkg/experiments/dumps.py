"""
Flat binary dumps with a text header, for inspection in other tools.

Every ``<name>.bin`` holds little-endian float64 values in C order; the
sibling ``<name>.txt`` records dims, dtype, byte order, seed and (for
parameter dumps) the offset of each named array.
"""
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
from PIL import Image

from mri.masks import SamplingMask
from mri.phantom import Phantom
from spectral.exceptions import ShapeError

logger = logging.getLogger(__name__)

DUMP_DTYPE = np.dtype('<f8')


def write_array(path, array: np.ndarray, seed: int, extra: Sequence[Tuple[str, str]] = ()) -> Tuple[Path, Path]:
    """
    Write ``array`` as ``path.bin`` plus ``path.txt``.

    Args:
        path: output stem, without extension
        array: real array; complex inputs must be split by the caller
        seed: generator seed recorded in the header
        extra: additional header lines

    Returns:
        (binary path, header path)
    """
    if np.iscomplexobj(array):
        raise ShapeError("Complex arrays are dumped with a trailing (re, im) axis")
    stem = Path(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    data = np.ascontiguousarray(array, dtype=DUMP_DTYPE)
    bin_path = stem.with_suffix('.bin')
    header_path = stem.with_suffix('.txt')
    bin_path.write_bytes(data.tobytes(order='C'))
    lines = [
        f"dims={','.join(str(d) for d in data.shape)}",
        'dtype=float64',
        'byte_order=little',
        'layout=C',
        f'seed={seed}',
    ]
    lines.extend(f'{k}={v}' for k, v in extra)
    header_path.write_text('\n'.join(lines) + '\n')
    return bin_path, header_path


def read_header(path) -> Dict[str, str]:
    header = {}
    for line in Path(path).with_suffix('.txt').read_text().splitlines():
        if '=' in line:
            key, value = line.split('=', 1)
            header[key] = value
    return header


def read_array(path) -> np.ndarray:
    header = read_header(path)
    dims = tuple(int(d) for d in header['dims'].split(',') if d)
    data = np.frombuffer(Path(path).with_suffix('.bin').read_bytes(), dtype=DUMP_DTYPE)
    return data.reshape(dims).copy()


def split_complex(image: np.ndarray) -> np.ndarray:
    return np.stack([image.real, image.imag], axis=-1)


def dump_phantom(out_dir, phantom: Phantom, name: str = 'phantom') -> Tuple[Path, Path]:
    h, w = phantom.shape
    return write_array(Path(out_dir) / name, split_complex(phantom.image), phantom.seed,
                       extra=[('components', 're,im'), ('ellipses', str(len(phantom.ellipses))),
                              ('shape', f'{h}x{w}')])


def dump_mask(out_dir, mask: SamplingMask, name: str = 'mask') -> Tuple[Path, Path]:
    return write_array(Path(out_dir) / name, mask.selected.astype(DUMP_DTYPE), mask.seed, extra=[
        ('kind', mask.kind.value),
        ('acceleration', repr(float(mask.acceleration))),
        ('center_fraction', repr(float(mask.center_fraction))),
        ('popcount', str(mask.popcount)),
        ('phase_encode_axis', 'width'),
    ])


def dump_parameters(out_dir, named: List[Tuple[str, np.ndarray]], seed: int,
                    name: str = 'params') -> Tuple[Path, Path]:
    """Concatenate named arrays in the given (canonical) order."""
    offsets = []
    flat = []
    offset = 0
    for key, arr in named:
        arr = np.asarray(arr)
        shape = 'x'.join(str(d) for d in arr.shape) or 'scalar'
        offsets.append((f'array.{key}', f'{offset}:{shape}'))
        flat.append(arr.ravel())
        offset += arr.size
    values = np.concatenate(flat) if flat else np.zeros(0)
    return write_array(Path(out_dir) / name, values, seed, extra=offsets)


def to_uint8(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    peak = float(np.max(image)) if image.size else 0.0
    if peak <= 0:
        return np.zeros(image.shape, dtype=np.uint8)
    return np.clip(np.round(255.0 * image / peak), 0, 255).astype(np.uint8)


def save_preview(path, image: np.ndarray) -> Path:
    """8-bit grayscale PNG scaled to the image maximum."""
    path = Path(path).with_suffix('.png')
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(image)).save(path)
    return path
