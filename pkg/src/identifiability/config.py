"""Strict JSON run configuration for the command-line front end."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError

# variances below this are not a usable noise model for O(1) outputs
MIN_NOISE_VARIANCE = 1e-12

PositiveInt = Annotated[int, Field(gt=0)]
NoiseVariance = Annotated[float, Field(ge=MIN_NOISE_VARIANCE)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class LinearGaussianSettings(_Strict):
    m: PositiveInt = 3
    n: PositiveInt = 100
    interval: tuple[float, float] = (-1.0, 1.0)
    noise_variance: NoiseVariance = 0.1


class LinearSettings(_Strict):
    matrix: list[list[float]]
    noise_variance: NoiseVariance = 0.1

    @model_validator(mode="after")
    def _rectangular(self):
        if not self.matrix or not self.matrix[0] or len({len(r) for r in self.matrix}) != 1:
            raise ValueError("matrix must be a non-empty rectangular list of rows")
        return self


class MethaneSettings(_Strict):
    temperatures: list[Annotated[float, Field(ge=900.0, le=2500.0)]] = [1100.0, 1400.0, 1700.0,
                                                                         2000.0]
    phi: Annotated[float, Field(gt=0)] = 1.0
    pressure: Annotated[float, Field(gt=0)] = 100e3
    noise_variance: NoiseVariance = 0.1
    rtol: Annotated[float, Field(gt=0, lt=1e-3)] = 1e-8


class LinearGaussianModel(_Strict):
    name: Literal["linear_gaussian"]
    settings: LinearGaussianSettings = LinearGaussianSettings()


class LinearModel(_Strict):
    name: Literal["linear"]
    settings: LinearSettings


class MethaneModel(_Strict):
    name: Literal["methane_2step"]
    settings: MethaneSettings = MethaneSettings()


ModelSection = Annotated[Union[LinearGaussianModel, LinearModel, MethaneModel],
                         Field(discriminator="name")]


class PriorEntry(_Strict):
    mean: float
    variance: Annotated[float, Field(gt=0)]


class EstimatorSection(_Strict):
    n_outer: Annotated[int, Field(ge=2)] = 10_000
    n_inner: PositiveInt = 50
    n_inner_pair: PositiveInt | None = None
    proposal: Literal["laplace", "prior"] = "laplace"
    proposal_scale: Annotated[float, Field(gt=0)] = 1.0
    use_importance_sampling: bool = True
    seed: Annotated[int, Field(ge=0, lt=2 ** 64)] = 0
    workers: PositiveInt = 1


class SobolSection(_Strict):
    n_samples: Annotated[int, Field(ge=3)] = 2 ** 14


class ConvergenceSection(_Strict):
    replicates: PositiveInt = 20
    n_outer_values: list[Annotated[int, Field(ge=2)]] = [100, 1000, 10_000]
    n_inner_fixed: PositiveInt = 50
    n_inner_values: list[PositiveInt] = [2, 5, 10, 50]
    n_outer_fixed: Annotated[int, Field(ge=2)] = 10_000


class PosteriorSection(_Strict):
    reference_theta: list[float] | None = None  # default: the model's reference point
    data_seed: Annotated[int, Field(ge=0, lt=2 ** 64)] = 0
    n_steps: PositiveInt = 100_000
    burn_in: Annotated[int, Field(ge=0)] | None = None
    adaptation_start: Annotated[int, Field(ge=10)] = 1000
    epsilon: Annotated[float, Field(gt=0)] = 1e-10
    initial_scale: Annotated[float, Field(gt=0)] = 0.1
    max_prediction_samples: PositiveInt = 2000


class RunConfig(_Strict):
    model: ModelSection
    prior: dict[str, PriorEntry] | None = None
    estimator: EstimatorSection = EstimatorSection()
    sobol: SobolSection = SobolSection()
    convergence: ConvergenceSection = ConvergenceSection()
    posterior: PosteriorSection = PosteriorSection()
    output_dir: str = "results"


def bundled_configs() -> list[str]:
    root = resources.files("identifiability") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def _read_text(path: str) -> str:
    p = Path(path)
    if p.is_file():
        return p.read_text()
    root = resources.files("identifiability") / "configs"
    name = p.name if p.suffix else p.name + ".json"
    bundled = root / name
    if bundled.is_file():
        return bundled.read_text()
    raise ConfigError(f"config file not found: {path} (bundled: {', '.join(bundled_configs())})")


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"  {where}: {err['msg']}")
    return "invalid config:\n" + "\n".join(lines)


def parse_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def load_config(path: str) -> RunConfig:
    """Read a config from ``path``, falling back to a bundled config of that name."""
    text = _read_text(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return parse_config(data)
