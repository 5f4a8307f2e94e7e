"""
PCKP checkpoint format

magic 'PCKP', u32 version, u32 tensor count; per tensor: u16 name length,
UTF-8 name, u8 ndim, ndim x u32 dims, little-endian float32 data.
Architecture descriptor lives in 'meta.*' tensors.
"""
import logging
import struct
from pathlib import Path
from typing import Dict, Union

import numpy as np

from ..utils.errors import FormatError
from .models import AE_ARCH, ARCHITECTURES, AEModel, ClassifierModel, PointCloudModel, build_ae, build_classifier
from .tensors import TensorBundle

logger = logging.getLogger(__name__)

MAGIC = b"PCKP"
VERSION = 1
META_PREFIX = "meta."
ARCH_CODES = {name: code for code, name in enumerate(ARCHITECTURES + (AE_ARCH,))}
KIND_CODES = {"classifier": 0, "autoencoder": 1}


def _metadata(model: PointCloudModel) -> Dict[str, np.ndarray]:
    meta = {"kind": KIND_CODES[model.kind], "arch": ARCH_CODES[model.arch]}
    if isinstance(model, AEModel):
        meta.update(n_points=model.n_points, latent_dim=model.latent_dim)
    else:
        meta.update(k_classes=model.k_classes, knn_k=model.knn_k)
    return {META_PREFIX + key: np.array([value], dtype=np.float32) for key, value in meta.items()}


def save_checkpoint(model: PointCloudModel, path: Union[str, Path]) -> Path:
    """Write model weights and descriptor"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tensors = {**_metadata(model), **dict(model.bundle())}

    chunks = [struct.pack("<4sII", MAGIC, VERSION, len(tensors))]
    for name, array in tensors.items():
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", array.ndim))
        chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
        chunks.append(np.ascontiguousarray(array, dtype="<f4").tobytes())

    path.write_bytes(b"".join(chunks))
    logger.info(f"Saved checkpoint {path} ({model.arch}, {len(tensors)} tensors)")
    return path


def _read_tensors(blob: bytes) -> Dict[str, np.ndarray]:
    def take(fmt: str, offset: int):
        size = struct.calcsize(fmt)
        if offset + size > len(blob):
            raise FormatError("checkpoint truncated", offset)
        return struct.unpack_from(fmt, blob, offset), offset + size

    if blob[:4] != MAGIC:
        raise FormatError(f"bad magic, expected {MAGIC.decode()}", 0)
    (_, version, count), offset = take("<4sII", 0)
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", 4)

    tensors: Dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,), offset = take("<H", offset)
        if offset + name_len > len(blob):
            raise FormatError("checkpoint truncated in tensor name", offset)
        try:
            name = blob[offset:offset + name_len].decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError("tensor name is not UTF-8", offset) from e
        offset += name_len
        (ndim,), offset = take("<B", offset)
        shape, offset = take(f"<{ndim}I", offset)
        n_bytes = 4 * int(np.prod(shape, dtype=np.int64))
        if offset + n_bytes > len(blob):
            raise FormatError(f"checkpoint truncated in tensor '{name}'", offset)
        tensors[name] = np.frombuffer(blob, dtype="<f4", count=n_bytes // 4, offset=offset).reshape(shape)
        offset += n_bytes
    return tensors


def load_checkpoint(path: Union[str, Path]) -> PointCloudModel:
    """Rebuild a classifier or auto-encoder from a PCKP file"""
    tensors = _read_tensors(Path(path).read_bytes())
    meta = {name[len(META_PREFIX):]: int(value[0]) for name, value in tensors.items() if name.startswith(META_PREFIX)}
    weights = TensorBundle({name: value for name, value in tensors.items() if not name.startswith(META_PREFIX)})

    codes = {code: name for name, code in ARCH_CODES.items()}
    arch = codes.get(meta.get("arch", -1))
    if arch is None:
        raise FormatError("checkpoint has no valid meta.arch tensor", 0)

    if arch == AE_ARCH:
        model: PointCloudModel = build_ae(meta["n_points"], meta["latent_dim"])
    else:
        model = build_classifier(arch, meta["k_classes"], knn_k=meta.get("knn_k", 8) or 8)
    model.load_bundle(weights)
    return model.eval()


def load_classifier(path: Union[str, Path]) -> ClassifierModel:
    model = load_checkpoint(path)
    if not isinstance(model, ClassifierModel):
        raise FormatError(f"{path} holds an auto-encoder, expected a classifier", 0)
    return model


def load_ae(path: Union[str, Path]) -> AEModel:
    model = load_checkpoint(path)
    if not isinstance(model, AEModel):
        raise FormatError(f"{path} holds a classifier, expected an auto-encoder", 0)
    return model
