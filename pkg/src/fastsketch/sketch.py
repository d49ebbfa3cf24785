"""Hashed sign-combination sketch operators.

The m x d operator is built from an (m*B) x d structured row source A:
row b is the signed sum of the B consecutive source rows in bucket b,

    phi_b = sum_{i=1}^{B} sigma[b, i] * a_{B*(b-1) + i},

scaled once by 1/sqrt(m*B).  Equivalently Phi = H A for the sparse sign
matrix H with one nonzero per column, so applying Phi costs one fast
multiply by A plus O(mB) work for the bucket sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fastsketch.ensembles import (
    DENSIFY_CAP,
    RowSource,
    _dense_rows,
    apply_rows,
    apply_rows_adjoint,
    normalize_kind,
    sample_bounded_orthogonal,
    sample_dense_gaussian,
    sample_partial_circulant,
)
from fastsketch.rng import derive_seed, stream
from fastsketch.transforms import next_power_of_two

__all__ = [
    "SketchOperator",
    "bucket_index",
    "build_sketch",
    "apply",
    "apply_adjoint",
    "densify_sketch",
    "sketch_to_json_dict",
    "sketch_from_json_dict",
    "dump_arrays",
]


def bucket_index(b: int, i: int, B: int, m: int | None = None) -> int:
    """1-based row index of slot ``i`` in bucket ``b``: B*(b-1) + i.

    Injective over [m] x [B], covering [m*B].  ``m`` is optional and only
    used to range-check ``b``.
    """
    if not 1 <= i <= B:
        raise ValueError(f"slot i must lie in [1, {B}], got {i}")
    if b < 1 or (m is not None and b > m):
        upper = m if m is not None else "m"
        raise ValueError(f"bucket b must lie in [1, {upper}], got {b}")
    return B * (b - 1) + i


@dataclass(frozen=True)
class SketchOperator:
    """Immutable sketch: row source with M = m*B rows plus an m x B sign table."""

    source: RowSource
    signs: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        signs = np.asarray(self.signs, dtype=np.float64)
        if signs.ndim != 2:
            raise ValueError(f"sign table must be 2-D (m, B), got shape {signs.shape}")
        if not np.all(np.abs(signs) == 1.0):
            raise ValueError("sign table entries must be +1 or -1")
        m, B = signs.shape
        if self.source.M != m * B:
            raise ValueError(
                f"source has {self.source.M} rows but sign table implies m*B = {m * B}"
            )
        signs.setflags(write=False)
        object.__setattr__(self, "signs", signs)

    @property
    def d(self) -> int:
        return self.source.d

    @property
    def m(self) -> int:
        return self.signs.shape[0]

    @property
    def B(self) -> int:
        return self.signs.shape[1]

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.m * self.B)


def build_sketch(d: int, m: int, B: int, kind: str, seed: int) -> SketchOperator:
    """Sample a fresh operator: source rows and sign table from ``seed``.

    Row and sign streams are derived from the seed with distinct purpose
    tags, so the same seed rebuilds a bit-identical operator.  For the
    circulant kind m*B must not exceed d; zero-pad the signal dimension
    up to the next power of two >= m*B if it does.
    """
    if m < 1 or B < 1:
        raise ValueError(f"m and B must be positive, got m={m}, B={B}")
    kind = normalize_kind(kind)
    M = m * B
    rows_seed = derive_seed(seed, 0, "rows")
    if kind in ("partial_fourier", "partial_hadamard"):
        source = sample_bounded_orthogonal(d, M, kind, rows_seed)
    elif kind == "partial_circulant":
        if M > d:
            raise ValueError(
                f"circulant sketch needs m*B <= d but m*B = {M} > d = {d}; "
                f"zero-pad the signal to d = {next_power_of_two(M)} first"
            )
        source = sample_partial_circulant(d, M, rows_seed)
    else:
        source = sample_dense_gaussian(d, M, rows_seed)
    sign_rng = stream(derive_seed(seed, 0, "signs"))
    signs = sign_rng.integers(0, 2, size=(m, B)).astype(np.float64) * 2.0 - 1.0
    return SketchOperator(source=source, signs=signs, seed=seed)


def apply(op: SketchOperator, x: np.ndarray, *, circulant_method: str = "auto") -> np.ndarray:
    """Compute (1/sqrt(mB)) * Phi @ x along the last axis.

    One fast source multiply, then signed bucket sums: O(d log d + mB).
    """
    y = apply_rows(op.source, x, circulant_method=circulant_method)
    buckets = y.reshape(y.shape[:-1] + (op.m, op.B))
    return op.scale * np.sum(op.signs * buckets, axis=-1)


def apply_adjoint(op: SketchOperator, z: np.ndarray) -> np.ndarray:
    """Compute (1/sqrt(mB)) * Phi* @ z along the last axis."""
    z = np.asarray(z)
    if z.ndim == 0 or z.shape[-1] != op.m:
        raise ValueError(f"apply_adjoint: expected last-axis length {op.m}, got {z.shape}")
    w = (op.scale * op.signs) * np.asarray(z, dtype=np.complex128)[..., :, None]
    return apply_rows_adjoint(op.source, w.reshape(z.shape[:-1] + (op.m * op.B,)))


def densify_sketch(op: SketchOperator, *, cap: int = DENSIFY_CAP) -> np.ndarray:
    """Materialize the m x d operator, row b = scale * sum_i signs[b,i] a_{h(b,i)}."""
    if op.m * op.d > cap:
        raise ValueError(
            f"densify_sketch would materialize {op.m}x{op.d} entries, exceeding cap {cap}"
        )
    out = np.empty((op.m, op.d), dtype=np.complex128)
    # Densify source rows bucket-by-bucket so the (m*B) x d intermediate
    # never exceeds the cap either.
    bucket_chunk = max(1, cap // max(1, op.B * op.d))
    for b0 in range(0, op.m, bucket_chunk):
        b1 = min(op.m, b0 + bucket_chunk)
        rows = _dense_rows(op.source, b0 * op.B, b1 * op.B)
        blocks = rows.reshape(b1 - b0, op.B, op.d)
        out[b0:b1] = op.scale * np.einsum("bi,bid->bd", op.signs[b0:b1], blocks)
    return out


def sketch_to_json_dict(op: SketchOperator) -> dict:
    """Compact JSON form: {kind, d, m, B, seed} rebuilds the operator bit-identically."""
    if op.seed is None:
        raise ValueError("operator was not built from a seed; serialize its arrays instead")
    return {
        "schema_version": 1,
        "kind": op.source.kind,
        "d": op.d,
        "m": op.m,
        "B": op.B,
        "seed": int(op.seed),
    }


def sketch_from_json_dict(doc: dict) -> SketchOperator:
    return build_sketch(
        d=int(doc["d"]),
        m=int(doc["m"]),
        B=int(doc["B"]),
        kind=doc["kind"],
        seed=int(doc["seed"]),
    )


def dump_arrays(op: SketchOperator, path) -> None:
    """Binary audit dump (npz) of the sign table and source payload."""
    arrays: dict = {"signs": op.signs}
    if op.source.indices is not None:
        arrays["indices"] = op.source.indices
    if op.source.eps is not None:
        arrays["eps"] = op.source.eps
    if op.source.matrix is not None:
        arrays["matrix"] = op.source.matrix
    np.savez(path, **arrays)
