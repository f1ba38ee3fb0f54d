"""Central configuration for the spherical energy minimization toolkit."""
from __future__ import annotations

from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="SPHERE_ENERGY_", env_file=".env", extra="ignore")

    project_name: str = "Spherical Energy Minimization"
    version: str = "0.1.0"

    # Base paths
    root_dir: Path = Path(__file__).resolve().parents[2]
    config_dir: Path = root_dir / "config"
    schemas_dir: Path = root_dir / "schemas"
    outputs_dir: Path = root_dir / "outputs"
    reports_dir: Path = outputs_dir / "reports"
    traces_dir: Path = outputs_dir / "traces"

    # File names
    logging_file: str = "logging.yaml"

    # spectral
    coeff_tol: float = 1e-9
    min_quad_nodes: int = 64
    max_quad_nodes: int = 8192
    sigma_rtol: float = 1e-11
    default_nmax: int = 16

    # measures
    merge_tol: float = 1e-9
    equator_tol: float = 1e-12
    probe_grid_size: int = 2000

    # moments
    moment_tol: float = 1e-9
    rank_tol: float = 1e-10
    basis_retries: int = 3

    # optimizer
    n_starts: int = 20
    max_iters: int = 3000
    initial_step: float = 0.5
    max_step: float = 10.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    grad_tol: float = 1e-10
    merge_radius: float = 1e-4
    weight_floor: float = 1e-12
    n_probes: int = 500
    tau_grid: tuple[float, ...] = (0.5, 0.1, 1e-2, 1e-3, 1e-4, 1e-6)
    probe_tol: float = 1e-12

    # witness
    witness_eps_factor: float = 1e-2
    witness_halvings: int = 20
    witness_margin: float = 1e-12
    max_witness_k: int = 85

    # diffop
    fd_step: float = 1e-3
    sign_tol: float = 1e-12

    # output
    json_indent: int = 2
    validate_output: bool = True

    @property
    def logging_config(self) -> Path:
        return self.config_dir / self.logging_file


settings = Settings()
