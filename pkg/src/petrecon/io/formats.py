"""
Binary artifact formats.

Every file starts with a text header line (``PIV1`` volumes, ``PSG1`` sinograms) or a text
manifest (``PNW1`` network weights), followed by little-endian float64 values in C order.
"""

import json
from collections import OrderedDict
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from loguru import logger

from petrecon.errors import FormatError
from petrecon.network.unet import NetworkConfig, NetworkWeights, ResidualUNet
from petrecon.scanner.types import ImageGrid

PathLike = Union[str, Path]
VALUE_DTYPE = np.dtype("<f8")


def _read_header(handle, magic: str) -> list:
    line = handle.readline()
    try:
        tokens = line.decode("ascii").split()
    except UnicodeDecodeError as err:
        raise FormatError(f"Unreadable header in '{handle.name}'") from err
    if not tokens or tokens[0] != magic:
        raise FormatError(f"'{handle.name}' is not a {magic} file")
    return tokens[1:]


def _read_values(handle, count: int) -> np.ndarray:
    payload = handle.read()
    if len(payload) != count * VALUE_DTYPE.itemsize:
        raise FormatError(
            f"'{handle.name}' holds {len(payload)} bytes of data, expected {count * VALUE_DTYPE.itemsize}"
        )
    return np.frombuffer(payload, dtype=VALUE_DTYPE).astype(np.float64)


def _write(path: PathLike, header: str, *blocks: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(header.encode("ascii"))
        for block in blocks:
            handle.write(np.ascontiguousarray(block, dtype=VALUE_DTYPE).tobytes())
    logger.debug(f"Wrote {path}")
    return path


def write_volume(path: PathLike, data: np.ndarray, grid: ImageGrid) -> Path:
    """Write a volume in PIV1 format: ``PIV1 nx ny nz voxel_size [slice_thickness]``."""
    if data.shape != grid.shape:
        raise FormatError(f"Volume shape {data.shape} does not match grid {grid.shape}")
    header = f"PIV1 {grid.nx} {grid.ny} {grid.nz} {grid.voxel_size!r}"
    if grid.slice_thickness is not None:
        header += f" {grid.slice_thickness!r}"
    return _write(path, header + "\n", data)


def read_volume(path: PathLike) -> Tuple[np.ndarray, ImageGrid]:
    """
    Read a PIV1 volume.

    Returns:
        tuple: ``(data, grid)``

    Raises:
        FormatError: On a wrong magic, a malformed header or a value count that does not match
    """
    with open(path, "rb") as handle:
        tokens = _read_header(handle, "PIV1")
        if len(tokens) not in (4, 5):
            raise FormatError(f"Malformed PIV1 header in '{path}'")
        try:
            nx, ny, nz = (int(t) for t in tokens[:3])
            grid = ImageGrid(
                nx=nx,
                ny=ny,
                nz=nz,
                voxel_size=float(tokens[3]),
                slice_thickness=float(tokens[4]) if len(tokens) == 5 else None,
            )
        except ValueError as err:
            raise FormatError(f"Malformed PIV1 header in '{path}': {err}") from err
        values = _read_values(handle, nx * ny * nz)
    return values.reshape(grid.shape), grid


def write_sinogram(path: PathLike, data: np.ndarray) -> Path:
    """Write a sinogram ``(n_slices, n_angles, n_bins)`` in PSG1 format."""
    if data.ndim != 3:
        raise FormatError(f"Sinogram must be 3D, got shape {data.shape}")
    return _write(path, "PSG1 {} {} {}\n".format(*data.shape), data)


def read_sinogram(path: PathLike) -> np.ndarray:
    """Read a PSG1 sinogram."""
    with open(path, "rb") as handle:
        tokens = _read_header(handle, "PSG1")
        try:
            shape = tuple(int(t) for t in tokens)
        except ValueError as err:
            raise FormatError(f"Malformed PSG1 header in '{path}'") from err
        if len(shape) != 3 or min(shape) < 1:
            raise FormatError(f"Malformed PSG1 header in '{path}'")
        values = _read_values(handle, int(np.prod(shape)))
    return values.reshape(shape)


def write_weights(path: PathLike, net: ResidualUNet) -> Path:
    """
    Write network weights in PNW1 format.

    The manifest lists the architecture and one line per array (``param`` or ``buffer``, name and
    shape) in network order, terminated by ``end``; the arrays follow in the same order.
    """
    weights = net.weights
    params = set(weights.parameter_names)
    lines = [f"PNW1 {len(weights)}", f"config {json.dumps(net.config.model_dump(), sort_keys=True)}"]
    for name, array in weights.items():
        kind = "param" if name in params else "buffer"
        lines.append(" ".join([kind, name] + [str(d) for d in array.shape]))
    lines.append("end")
    return _write(path, "\n".join(lines) + "\n", *weights.values())


def read_weights(path: PathLike, config: Optional[NetworkConfig] = None) -> ResidualUNet:
    """
    Read PNW1 weights into a network.

    Args:
        path: Weights file
        config: Expected architecture; when given it must equal the stored one

    Raises:
        FormatError: If the manifest does not match the architecture or the data is truncated
    """
    with open(path, "rb") as handle:
        tokens = _read_header(handle, "PNW1")
        try:
            count = int(tokens[0])
            config_line = handle.readline().decode("ascii").split(" ", 1)
            if config_line[0] != "config":
                raise ValueError("missing config line")
            stored = NetworkConfig(**json.loads(config_line[1]))
        except (ValueError, IndexError) as err:
            raise FormatError(f"Malformed PNW1 manifest in '{path}': {err}") from err
        if config is not None and stored != config:
            raise FormatError(f"Weights in '{path}' were trained for a different architecture")

        entries = []
        for _ in range(count):
            parts = handle.readline().decode("ascii").split()
            if len(parts) < 2 or parts[0] not in ("param", "buffer"):
                raise FormatError(f"Malformed PNW1 manifest entry in '{path}'")
            try:
                shape = tuple(int(d) for d in parts[2:])
            except ValueError as err:
                raise FormatError(f"Malformed shape in PNW1 manifest of '{path}'") from err
            entries.append((parts[0], parts[1], shape))
        if handle.readline().decode("ascii").strip() != "end":
            raise FormatError(f"PNW1 manifest in '{path}' is not terminated")

        expected = ResidualUNet.create(stored).weight_shapes()
        if OrderedDict((name, shape) for _, name, shape in entries) != expected:
            raise FormatError(f"PNW1 manifest in '{path}' does not match the network layout")
        sizes = [int(np.prod(shape)) for _, _, shape in entries]
        values = _read_values(handle, sum(sizes))

    arrays = OrderedDict()
    offset = 0
    for (_, name, shape), size in zip(entries, sizes):
        arrays[name] = values[offset : offset + size].reshape(shape).copy()
        offset += size
    parameter_names = [name for kind, name, _ in entries if kind == "param"]
    return ResidualUNet(stored, NetworkWeights(arrays, parameter_names))
