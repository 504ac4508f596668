""" config v0.2
Run configuration: the JSON run file, kernel descriptors and one parameter
model per task
"""

# Imports
import hashlib
import json
import os
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from locuskit.errors import ConfigValidationError
from locuskit.mylog import get_logger

logger = get_logger(__name__)

SEED_BITS = 64
DATASETS = (
    "two-blobs",
    "blobs",
    "swiss-roll",
    "noisy-sine",
    "step-signal",
    "mixture-1d",
)


class KernelSpec(BaseModel):
    """Kernel descriptor handed to ``make_kernel``"""

    model_config = ConfigDict(extra="forbid")

    kind: str = Field(description="gaussian, epanechnikov, neighborhood, ...")
    h: Optional[float] = Field(None, gt=0, description="bandwidth")
    eps: Optional[float] = Field(None, gt=0, description="neighborhood radius")
    k: Optional[int] = Field(None, ge=1, description="neighbour count")
    alpha: Optional[float] = Field(None, description="regularization mix in [0, 1]")
    eps0: Optional[float] = Field(None, description="hollow kernel radius")
    n: Optional[int] = Field(None, description="power of a derived kernel")
    weights: Optional[List[float]] = Field(None, description="multi-kernel weights")
    base: Optional["KernelSpec"] = Field(None, description="kernel being derived")
    parts: Optional[List["KernelSpec"]] = Field(None, description="multi parts")


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    task: Optional[str] = Field(None, description="must match the subcommand")
    inputs: Dict[str, str] = Field(
        default_factory=dict, description="named input files, e.g. data"
    )
    kernel: Optional[KernelSpec] = Field(None, description="kernel descriptor")
    params: dict = Field(default_factory=dict, description="task parameters")
    seed: Optional[int] = Field(None, description="64-bit run seed")
    output_dir: str = Field("out", description="artifact directory")

    @field_validator("inputs")
    @classmethod
    def inputs_exist(cls, value):
        for name, path in value.items():
            if not os.path.isfile(path):
                raise ValueError(f"input {name!r} does not exist: {path}")
        return value


# Task parameter models
class TaskParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dataset: Optional[Literal[DATASETS]] = Field(
        None, description="built-in dataset used when inputs.data is absent"
    )
    n: int = Field(100, ge=2, description="size of a generated dataset")
    noise: float = Field(0.1, ge=0, description="noise level of a generated dataset")


class RegressParams(TaskParams):
    dataset: Optional[Literal[DATASETS]] = Field("noisy-sine", description="dataset")
    lam: float = Field(0.0, ge=0, description="ridge parameter (local linear only)")
    n_grid: int = Field(200, ge=2, description="prediction grid size for 1-D inputs")


class ClassifyParams(TaskParams):
    dataset: Optional[Literal[DATASETS]] = Field("blobs", description="dataset")
    method: Literal["mode", "centerless"] = Field(
        "mode", description="local mode or local centerless classifier"
    )
    distance: str = Field("sqeuclidean", description="metric of the centerless rule")


class MeanShiftParams(TaskParams):
    dataset: Optional[Literal[DATASETS]] = Field("two-blobs", description="dataset")
    alpha: float = Field(1.0, gt=0, le=1, description="step damping")
    max_iter: int = Field(500, ge=1, description="iteration cap")
    merge_radius: Optional[float] = Field(
        None, gt=0, description="cluster merge radius"
    )


class MedoidShiftParams(TaskParams):
    dataset: Optional[Literal[DATASETS]] = Field("two-blobs", description="dataset")
    distance: str = Field("sqeuclidean", description="pairwise distance")
    merge_radius: Optional[float] = Field(
        1.0, gt=0, description="representative merge radius"
    )


class RelaxParams(TaskParams):
    dataset: Optional[Literal[DATASETS]] = Field("two-blobs", description="dataset")
    n_classes: int = Field(2, ge=1, description="classes of the k-means initialization")
    mode: Literal["soft", "hard"] = Field("soft", description="relaxation update")
    max_iter: int = Field(100, ge=1, description="iteration cap")


class LleParams(TaskParams):
    dataset: Optional[Literal[DATASETS]] = Field("swiss-roll", description="dataset")
    n: int = Field(400, ge=4, description="size of a generated dataset")
    noise: float = Field(0.0, ge=0, description="noise level of a generated dataset")
    k_nn: int = Field(10, ge=1, description="neighbours per reconstruction")
    r: int = Field(2, ge=1, description="embedding dimension")


class AmdsParams(TaskParams):
    dataset: Optional[Literal[DATASETS]] = Field("blobs", description="dataset")
    q: int = Field(2, ge=1, description="factor rank")
    method: Literal["svd", "nmf"] = Field("svd", description="factorization")
    iters: int = Field(200, ge=1, description="NMF sweeps")


class TrimapParams(TaskParams):
    dataset: Optional[Literal[DATASETS]] = Field("blobs", description="dataset")
    n: int = Field(60, ge=3, description="size of a generated dataset")
    q: int = Field(2, ge=1, description="embedding dimension")
    h: Literal["identity", "log1p"] = Field("identity", description="increasing map")
    steps: int = Field(200, ge=1, description="gradient steps")
    lr: float = Field(0.01, gt=0, description="learning rate")
    budget: int = Field(100_000, ge=1, description="triplet budget")


class WordsParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    window: int = Field(5, ge=2, description="sliding window length")
    d: int = Field(2, ge=1, description="vector dimension")


class KdeParams(TaskParams):
    dataset: Optional[Literal[DATASETS]] = Field("mixture-1d", description="dataset")
    n_grid: int = Field(200, ge=2, description="evaluation grid size (1-D)")


class DiffusionParams(TaskParams):
    dataset: Optional[Literal[DATASETS]] = Field("mixture-1d", description="dataset")
    n: int = Field(200, ge=2, description="training set size")
    noise: float = Field(0.1, ge=0, description="component spread of the mixture")
    T: int = Field(20, ge=1, description="diffusion steps")
    n_samples: int = Field(500, ge=1, description="generated samples")
    alpha: float = Field(0.8, gt=0, le=1, description="reverse step damping")
    lo: float = Field(1e-4, gt=0, description="first noise variance")
    hi: float = Field(0.2, gt=0, lt=1, description="last noise variance")


class NlmParams(TaskParams):
    dataset: Optional[Literal[DATASETS]] = Field("step-signal", description="dataset")
    rho: int = Field(2, ge=0, description="patch radius")
    h: float = Field(0.1, gt=0, description="patch bandwidth")
    search: int = Field(10, ge=1, description="search radius")


class TuneParams(TaskParams):
    dataset: Optional[Literal[DATASETS]] = Field("noisy-sine", description="dataset")
    predictor: Literal["local-mean", "local-linear", "kde-loo"] = Field(
        "local-mean", description="estimator scored by leave-one-out"
    )
    grid: Optional[List[float]] = Field(None, description="explicit bandwidth grid")
    grid_lo: float = Field(0.01, gt=0, description="log grid start")
    grid_hi: float = Field(2.0, gt=0, description="log grid end")
    grid_n: int = Field(20, ge=1, description="log grid size")
    bracket: Optional[List[float]] = Field(None, description="[lo, hi] search bracket")


class QkvParamsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    d: int = Field(2, ge=1, description="feature dimension")
    form: Literal["linear", "softmax"] = Field("softmax", description="attention form")
    lr: float = Field(0.1, gt=0, description="learning rate")
    steps: int = Field(500, ge=1, description="gradient steps")
    heads: int = Field(1, ge=1, description="number of heads")
    hollow: bool = Field(True, description="mask the diagonal while training")
    init: Literal["uniform", "zeros"] = Field("uniform", description="feature init")


class TransformerParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    p: int = Field(3, ge=1, description="token width")
    d: int = Field(2, ge=1, description="attention feature dimension")
    H: int = Field(8, ge=1, description="MLP hidden width")
    L: int = Field(6, ge=1, description="depth")
    T: int = Field(6, ge=1, description="prefix length")
    steps: int = Field(4, ge=1, description="autoregressive continuation steps")
    residual: bool = Field(False, description="add each layer's input back")


def derive_seed(seed, task):
    """Per-task seed: first 8 bytes of sha256(task) xor the run seed"""
    digest = int.from_bytes(hashlib.sha256(task.encode("utf-8")).digest()[:8], "big")
    return (digest ^ int(seed)) & ((1 << SEED_BITS) - 1)


def describe(model):
    """Help text listing every run-file, kernel and params key a task reads"""
    lines = []
    for title, schema in (
        ("run file keys", RunConfig),
        ("kernel keys", KernelSpec),
        ("params keys", model),
    ):
        if lines:
            lines.append("")
        lines.append(f"{title}:")
        for name, info in schema.model_fields.items():
            if info.is_required():
                default = "required"
            elif info.default_factory is not None:
                default = f"default {info.default_factory()!r}"
            else:
                default = f"default {info.default!r}"
            lines.append(f"  {name} ({default}): {info.description or ''}")
    return "\n".join(lines)


def load_config(path, task=None, out=None, seed=None):
    """(path, str, str, int) -> RunConfig

    Command-line values override the file; a task named in the file must
    match the command.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigValidationError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigValidationError(f"config is not valid JSON: {e}")
    if not isinstance(raw, dict):
        raise ConfigValidationError("config must be a JSON object")
    cfg = RunConfig.model_validate(raw)
    if task is not None and cfg.task is not None and cfg.task != task:
        raise ConfigValidationError(f"config is for task {cfg.task!r}, not {task!r}")
    update = {"task": task or cfg.task}
    if out is not None:
        update["output_dir"] = out
    if seed is not None:
        update["seed"] = seed
    return cfg.model_copy(update=update)


def parse_params(model, params):
    """Validates the ``params`` block against a task model"""
    return model.model_validate(params)

