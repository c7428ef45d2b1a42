from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict
import os
from pathlib import Path

# Get the project root directory (where .env is located)
PROJECT_ROOT = Path(__file__).parent.parent.parent
ENV_FILE = os.path.join(PROJECT_ROOT, ".env")

# Function to resolve paths relative to project root
def resolve_path(path_str):
    """Resolve a path that might be relative to project root"""
    if path_str.startswith('./') or path_str.startswith('../'):
        # It's a relative path, make it relative to PROJECT_ROOT
        return os.path.normpath(os.path.join(PROJECT_ROOT, path_str))
    return path_str


class SimulatorSettings(BaseSettings):
    gamma: float = Field(default=1.0, gt=0.0, le=1.0)
    observation_window: int = Field(default=7, ge=1)
    empty_return_delay: int = Field(default=2, ge=0)

    model_config = SettingsConfigDict(
        env_file=ENV_FILE,
        env_prefix="ECR_SIM_",
        extra="ignore"
    )


class PolicySettings(BaseSettings):
    heuristic_threshold: float = Field(default=0.1, ge=0.0)

    model_config = SettingsConfigDict(
        env_file=ENV_FILE,
        env_prefix="ECR_POLICY_",
        extra="ignore"
    )


class PlannerSettings(BaseSettings):
    noise_level: float = Field(default=0.2, ge=0.0, lt=1.0)
    window: int = Field(default=20, ge=1)
    plan_horizon: int = Field(default=60, ge=1)
    # windows whose move tree is at most this large are searched to optimality
    exact_search_size: int = Field(default=1_000_000, ge=0)
    # bound evaluations spent improving the plan of larger windows
    search_nodes: int = Field(default=0, ge=0)

    model_config = SettingsConfigDict(
        env_file=ENV_FILE,
        env_prefix="ECR_PLANNER_",
        extra="ignore"
    )


class ConfiguratorSettings(BaseSettings):
    hidden_width: int = Field(default=64, ge=1)
    learning_rate: float = Field(default=3e-3, gt=0.0)
    clip_ratio: float = Field(default=0.2, gt=0.0)
    entropy_coef: float = Field(default=0.01, ge=0.0)
    batch_size: int = Field(default=32, ge=1)
    update_epochs: int = Field(default=4, ge=1)
    baseline_momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    eval_episodes: int = Field(default=4, ge=1)
    iterations: int = Field(default=100, ge=0)
    max_grad_norm: float = Field(default=1.0, gt=0.0)
    # divide advantages by their batch standard deviation
    normalize_advantages: bool = False

    model_config = SettingsConfigDict(
        env_file=ENV_FILE,
        env_prefix="ECR_CONF_",
        extra="ignore"
    )


class SearchSettings(BaseSettings):
    population: int = Field(default=20, ge=2)
    generations: int = Field(default=50, ge=0)
    tournament: int = Field(default=3, ge=1)
    crossover_rate: float = Field(default=0.9, ge=0.0, le=1.0)
    mutation_rate: float = Field(default=0.1, ge=0.0, le=1.0)
    elitism: int = Field(default=2, ge=0)

    model_config = SettingsConfigDict(
        env_file=ENV_FILE,
        env_prefix="ECR_GA_",
        extra="ignore"
    )


class ExperimentSettings(BaseSettings):
    k_seeds: int = Field(default=5, ge=1)
    budget: int = Field(default=2000, ge=1)
    master_seed: int = 0
    eval_episodes: int = Field(default=4, ge=1)
    out_dir: str = "./runs"
    log_dir: str = "./logs"
    record_wall_time: bool = False

    model_config = SettingsConfigDict(
        env_file=ENV_FILE,
        env_prefix="ECR_EXP_",
        extra="ignore"
    )

    @property
    def out_path(self) -> Path:
        """Return the absolute output directory"""
        return Path(resolve_path(self.out_dir))

    @property
    def log_path(self) -> Path:
        """Return the absolute log directory"""
        return Path(resolve_path(self.log_dir))


class AppSettings(BaseSettings):
    simulator: SimulatorSettings = Field(default_factory=SimulatorSettings)
    policy: PolicySettings = Field(default_factory=PolicySettings)
    planner: PlannerSettings = Field(default_factory=PlannerSettings)
    configurator: ConfiguratorSettings = Field(default_factory=ConfiguratorSettings)
    search: SearchSettings = Field(default_factory=SearchSettings)
    experiment: ExperimentSettings = Field(default_factory=ExperimentSettings)

    model_config = SettingsConfigDict(
        env_file=ENV_FILE,
        extra="ignore"
    )

# Create a global settings instance
app_settings = AppSettings()
