"""Problem definitions, controller files and run reports as JSON documents.

Matrices are stored as ``{"shape": [rows, cols], "data": [row-major values]}``;
plain nested lists are accepted on input.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigParseError, DimensionMismatch
from .sscore import BlockStructure, StateSpace, UncertainPlant

PLANT_KEYS = ("A", "B_w", "B_d", "B_u", "C_v", "C_e", "C_y")
OPTIONAL_KEYS = ("D_vw", "D_vd", "D_vu", "D_eu", "D_yd")
ZERO_KEYS = ("D_ew", "D_ed", "D_yw", "D_yu")


@dataclass
class SynthesisOptions:
    gamma_lo: float = 0.0
    gamma_hi: float | None = None
    tol: float = 1e-3
    freq_grid: int = 256
    max_dk: int = 12
    dk_rel_improvement: float = 0.01


@dataclass
class AnalysisOptions:
    delta_grid: int = 41
    freq_grid: int = 2048
    check_deltas: list = field(default_factory=lambda: [-1.0, 0.0, 1.0])


@dataclass
class ProblemConfig:
    matrices: dict
    blocks: tuple
    synthesis: SynthesisOptions = field(default_factory=SynthesisOptions)
    analysis: AnalysisOptions = field(default_factory=AnalysisOptions)
    name: str = "problem"

    def plant(self) -> UncertainPlant:
        kw = {k: self.matrices.get(k) for k in PLANT_KEYS + OPTIONAL_KEYS}
        try:
            return UncertainPlant.from_blocks(**kw, block=BlockStructure(tuple(self.blocks)))
        except (DimensionMismatch, ValueError) as exc:
            raise ConfigParseError(f"plant matrices are inconsistent: {exc}", field="plant") from exc

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "plant": {k: matrix_to_json(v) for k, v in self.matrices.items()},
            "blocks": list(self.blocks),
            "synthesis": asdict(self.synthesis),
            "analysis": asdict(self.analysis),
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def matrix_to_json(M) -> dict:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return {"shape": list(M.shape), "data": [float(x) for x in M.ravel()]}


def _locate(text: str | None, key: str) -> int | None:
    if not text:
        return None
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return None


def matrix_from_json(obj, field_name: str, text: str | None = None) -> np.ndarray:
    line = _locate(text, field_name.rsplit(".", 1)[-1])
    try:
        if isinstance(obj, dict):
            shape = tuple(int(s) for s in obj["shape"])
            data = np.asarray(obj["data"], dtype=float)
            if len(shape) != 2 or data.size != shape[0] * shape[1]:
                raise ValueError(f"data has {data.size} entries for shape {shape}")
            M = data.reshape(shape)
        else:
            M = np.asarray(obj, dtype=float)
            M = M.reshape(1, 1) if M.ndim == 0 else np.atleast_2d(M)
            if M.ndim != 2:
                raise ValueError("expected a matrix")
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigParseError(f"malformed matrix: {exc}", field=field_name, line=line) from exc
    if not np.all(np.isfinite(M)):
        raise ConfigParseError("matrix has non-finite entries", field=field_name, line=line)
    return M


def _options(cls, obj, section: str, text: str | None):
    if obj is None:
        return cls()
    if not isinstance(obj, dict):
        raise ConfigParseError("expected an object", field=section, line=_locate(text, section))
    known = cls.__dataclass_fields__
    for k in obj:
        if k not in known:
            raise ConfigParseError(f"unknown option '{k}'", field=f"{section}.{k}", line=_locate(text, k))
    try:
        out = cls(**obj)
        for k, f in known.items():
            v = getattr(out, k)
            if v is None or isinstance(v, list):
                continue
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise TypeError(f"option '{k}' must be a finite number")
    except TypeError as exc:
        raise ConfigParseError(str(exc), field=section, line=_locate(text, section)) from exc
    return out


def config_from_dict(doc: dict, text: str | None = None) -> ProblemConfig:
    if not isinstance(doc, dict) or "plant" not in doc:
        raise ConfigParseError("missing 'plant' section", field="plant")
    plant = doc["plant"]
    if not isinstance(plant, dict):
        raise ConfigParseError("'plant' must be an object", field="plant", line=_locate(text, "plant"))
    for k in plant:
        if k not in PLANT_KEYS + OPTIONAL_KEYS + ZERO_KEYS:
            raise ConfigParseError(f"unknown plant matrix '{k}'", field=f"plant.{k}", line=_locate(text, k))
    matrices = {}
    for k in PLANT_KEYS:
        if k not in plant:
            raise ConfigParseError("required matrix missing", field=f"plant.{k}")
        matrices[k] = matrix_from_json(plant[k], f"plant.{k}", text)
    for k in OPTIONAL_KEYS:
        if k in plant:
            matrices[k] = matrix_from_json(plant[k], f"plant.{k}", text)
    for k in ZERO_KEYS:
        if k in plant and np.any(matrix_from_json(plant[k], f"plant.{k}", text)):
            raise ConfigParseError(f"feedthrough {k} must be zero", field=f"plant.{k}", line=_locate(text, k))
    blocks = doc.get("blocks", [])
    try:
        blocks = tuple(int(b) for b in blocks)
        BlockStructure(blocks)
    except (TypeError, ValueError) as exc:
        raise ConfigParseError(f"invalid block sizes: {exc}", field="blocks", line=_locate(text, "blocks")) from exc
    cfg = ProblemConfig(
        matrices=matrices,
        blocks=blocks,
        synthesis=_options(SynthesisOptions, doc.get("synthesis"), "synthesis", text),
        analysis=_options(AnalysisOptions, doc.get("analysis"), "analysis", text),
        name=str(doc.get("name", "problem")),
    )
    cfg.plant()  # validates dimensions and the zero-feedthrough pattern
    return cfg


def load_config(path) -> ProblemConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    return config_from_dict(doc, text)


def example_config() -> ProblemConfig:
    """The scalar example of :mod:`robregret.example` as a config."""
    from .example import scalar_plant

    P = scalar_plant()
    mats = {
        "A": P.A,
        "B_w": P.input_matrix("w"),
        "B_d": P.input_matrix("d"),
        "B_u": P.input_matrix("u"),
        "C_v": P.output_matrix("v"),
        "C_e": P.output_matrix("e"),
        "C_y": P.output_matrix("y"),
        "D_vw": P.feedthrough("v", "w"),
        "D_vd": P.feedthrough("v", "d"),
        "D_vu": P.feedthrough("v", "u"),
        "D_eu": P.feedthrough("e", "u"),
        "D_yd": P.feedthrough("y", "d"),
    }
    return ProblemConfig(matrices={k: np.array(v) for k, v in mats.items()}, blocks=P.block.sizes, name="scalar-example")


# ---------------------------------------------------------------- controllers and reports


def controller_to_dict(K: StateSpace, meta: dict | None = None) -> dict:
    doc = {k: matrix_to_json(getattr(K, k)) for k in ("A", "B", "C", "D")}
    doc["meta"] = meta or {}
    return doc


def controller_from_dict(doc: dict) -> tuple[StateSpace, dict]:
    try:
        mats = {k: matrix_from_json(doc[k], k) for k in ("A", "B", "C", "D")}
    except KeyError as exc:
        raise ConfigParseError("controller matrix missing", field=str(exc.args[0])) from exc
    A = mats["A"]
    nx = A.shape[0]
    D = mats["D"]
    B = mats["B"].reshape(nx, D.shape[1])
    C = mats["C"].reshape(D.shape[0], nx)
    return StateSpace(A, B, C, D), doc.get("meta", {})


def save_controller(path, K: StateSpace, meta: dict | None = None) -> None:
    Path(path).write_text(json.dumps(controller_to_dict(K, meta), indent=2, sort_keys=True) + "\n")


def load_controller(path) -> tuple[StateSpace, dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigParseError(f"cannot read controller file {path}: {exc}") from exc
    return controller_from_dict(doc)


@dataclass
class RunReport:
    """Achieved levels, regret curves and bound checks of one run."""

    controllers: dict = field(default_factory=dict)
    curves: list = field(default_factory=list)
    bounds: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    bands: list = field(default_factory=list)
    version: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=_json_default) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        doc = json.loads(text)
        return cls(**doc)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")
