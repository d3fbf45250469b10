"""Field files: one JSON header line, then little-endian float64 values.

Values are row-major over the grid, then over components in increasing
lexicographic multi-index order.
"""

import json

import numpy as np

from .alg_point import basis
from .exceptions import DimensionMismatch
from .fieldcalc import Domain

MAGIC = "g2kit-field"


def write_field(path, domain, degree, values, dim=None, **meta):
    """Write ``values`` (shape ``grid + (ncomp,)``) of a ``degree``-form in dimension ``dim``."""
    dim = domain.dim if dim is None else dim
    comps = [list(I) for I in basis(dim, degree)]
    values = np.asarray(values, dtype="<f8")
    if values.shape != domain.shape + (len(comps),):
        raise DimensionMismatch(f"values have shape {values.shape}, expected {domain.shape + (len(comps),)}")
    header = {"format": MAGIC, "version": 1, "dim": dim, "degree": degree,
              "axes": domain.descriptor(), "grid": list(domain.shape),
              "component_order": comps, **meta}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(np.ascontiguousarray(values).tobytes())


def read_field(path):
    """Return ``(header, domain, values)``."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        payload = fh.read()
    if header.get("format") != MAGIC:
        raise ValueError(f"{path} is not a field file")
    domain = Domain.from_descriptor(header["axes"])
    shape = tuple(header["grid"]) + (len(header["component_order"]),)
    values = np.frombuffer(payload, dtype="<f8")
    if values.size != int(np.prod(shape)):
        raise DimensionMismatch("payload size does not match the header")
    return header, domain, values.reshape(shape).astype(float)


def grid_points(domain):
    """All grid points as an array ``grid + (dim,)``."""
    return np.stack(np.meshgrid(*[ax.points() for ax in domain.axes], indexing="ij"), axis=-1)
