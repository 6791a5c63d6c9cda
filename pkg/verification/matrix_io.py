"""
JSON file formats for matrices, states, channels and block structures.

A matrix is ``{"dim_rows": n, "dim_cols": m, "entries": [[re, im], ...]}`` in
row-major order. Floats are written in their shortest round-tripping form,
so reading a written file gives back the same doubles.
"""

import math
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from quantum_sdk.recoverability.errors import RecoverabilityError
from quantum_sdk.recoverability.fixed_point_structure import BlockStructure
from quantum_sdk.recoverability.quantum_objects import DensityMatrix, QuantumChannel
from quantum_sdk.recoverability.tolerances import Tolerances, default_tolerances


class MatrixFileError(ValueError):
    """A file that cannot be read, parsed or validated."""


class MatrixPayload(BaseModel):
    model_config = ConfigDict(extra='forbid')

    dim_rows: int = Field(ge=1)
    dim_cols: int = Field(ge=1)
    entries: List[Tuple[float, float]]

    @field_validator('entries')
    @classmethod
    def _finite_entries(cls, entries):
        for re, im in entries:
            if not (math.isfinite(re) and math.isfinite(im)):
                raise ValueError('matrix entries must be finite')
        return entries

    @model_validator(mode='after')
    def _entry_count(self):
        if len(self.entries) != self.dim_rows * self.dim_cols:
            raise ValueError(
                f'{len(self.entries)} entries for a {self.dim_rows}x{self.dim_cols} matrix'
            )
        return self

    @classmethod
    def from_array(cls, A) -> 'MatrixPayload':
        A = np.asarray(A, dtype=np.complex128)
        if A.ndim != 2:
            raise MatrixFileError(f'expected a 2-d array, got shape {A.shape}')
        flat = A.reshape(-1)
        return cls(
            dim_rows=A.shape[0],
            dim_cols=A.shape[1],
            entries=[(float(z.real), float(z.imag)) for z in flat],
        )

    def to_array(self) -> np.ndarray:
        values = np.array(self.entries, dtype=float).reshape(-1, 2)
        return (values[:, 0] + 1j * values[:, 1]).reshape(self.dim_rows, self.dim_cols)


class ChannelPayload(BaseModel):
    model_config = ConfigDict(extra='forbid')

    dim_in: int = Field(ge=1)
    dim_out: int = Field(ge=1)
    kraus: Optional[List[MatrixPayload]] = None
    choi: Optional[MatrixPayload] = None

    @model_validator(mode='after')
    def _one_form(self):
        if (self.kraus is None) == (self.choi is None):
            raise ValueError('a channel file holds exactly one of "kraus" and "choi"')
        if self.kraus is not None:
            if not self.kraus:
                raise ValueError('"kraus" is empty')
            for K in self.kraus:
                if (K.dim_rows, K.dim_cols) != (self.dim_out, self.dim_in):
                    raise ValueError(
                        f'Kraus operator is {K.dim_rows}x{K.dim_cols}, expected {self.dim_out}x{self.dim_in}'
                    )
        else:
            size = self.dim_in * self.dim_out
            if (self.choi.dim_rows, self.choi.dim_cols) != (size, size):
                raise ValueError(f'Choi matrix must be {size}x{size}')
        return self

    @classmethod
    def from_channel(cls, channel: QuantumChannel) -> 'ChannelPayload':
        return cls(
            dim_in=channel.dim_in,
            dim_out=channel.dim_out,
            kraus=[MatrixPayload.from_array(K) for K in channel.kraus_ops],
        )

    def to_channel(self, tolerances: Optional[Tolerances] = None) -> QuantumChannel:
        if self.kraus is not None:
            return QuantumChannel.from_kraus([K.to_array() for K in self.kraus], tolerances)
        return QuantumChannel.from_choi(self.choi.to_array(), self.dim_in, self.dim_out, tolerances)


class BlockPayload(BaseModel):
    model_config = ConfigDict(extra='forbid')

    d_L: int = Field(ge=1)
    d_R: int = Field(ge=1)
    sigma_R: MatrixPayload
    A_L: MatrixPayload


class StructurePayload(BaseModel):
    model_config = ConfigDict(extra='forbid')

    unitary: MatrixPayload
    blocks: List[BlockPayload]
    support_basis: Optional[MatrixPayload] = None

    @model_validator(mode='after')
    def _sizes_add_up(self):
        total = sum(block.d_L * block.d_R for block in self.blocks)
        if total != self.unitary.dim_rows:
            raise ValueError(f'blocks cover {total} dimensions, the unitary acts on {self.unitary.dim_rows}')
        return self

    @classmethod
    def from_structure(cls, structure: BlockStructure) -> 'StructurePayload':
        return cls(
            unitary=MatrixPayload.from_array(structure.unitary),
            blocks=[
                BlockPayload(
                    d_L=block.d_L,
                    d_R=block.d_R,
                    sigma_R=MatrixPayload.from_array(block.sigma_R.matrix),
                    A_L=MatrixPayload.from_array(block.A_L),
                )
                for block in structure.blocks
            ],
            support_basis=(
                None if structure.support_basis is None else MatrixPayload.from_array(structure.support_basis)
            ),
        )


def _load(path, model):
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise MatrixFileError(f'cannot read {path}: {exc}') from exc
    try:
        return model.model_validate_json(raw)
    except ValidationError as exc:
        raise MatrixFileError(f'{path}: {exc}') from exc


def read_matrix(path) -> np.ndarray:
    return _load(path, MatrixPayload).to_array()


def read_state(path, tolerances: Optional[Tolerances] = None) -> DensityMatrix:
    matrix = read_matrix(path)
    try:
        return DensityMatrix(matrix, tolerances or default_tolerances())
    except RecoverabilityError as exc:
        raise MatrixFileError(f'{path}: {exc}') from exc


def read_channel(path, tolerances: Optional[Tolerances] = None) -> QuantumChannel:
    payload = _load(path, ChannelPayload)
    try:
        return payload.to_channel(tolerances)
    except RecoverabilityError as exc:
        raise MatrixFileError(f'{path}: {exc}') from exc


def read_structure(path) -> StructurePayload:
    return _load(path, StructurePayload)


def write_payload(payload: BaseModel, path) -> None:
    try:
        Path(path).write_text(payload.model_dump_json(indent=2) + '\n')
    except OSError as exc:
        raise MatrixFileError(f'cannot write {path}: {exc}') from exc


def write_matrix(A, path) -> None:
    write_payload(MatrixPayload.from_array(A), path)


def write_channel(channel: QuantumChannel, path) -> None:
    write_payload(ChannelPayload.from_channel(channel), path)


def write_structure(structure: BlockStructure, path) -> None:
    write_payload(StructurePayload.from_structure(structure), path)
