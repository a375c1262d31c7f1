"""
Reconstruction module.

This module provides the likelihood, the EM-type algorithms, the ADMM reconstruction with the
network representation and a factory over all reconstruction methods.
"""

from petrecon.errors import ConfigurationError
from petrecon.recon.admm import (
    AdmmConfig,
    AdmmReconstructor,
    AdmmResult,
    AdmmState,
    alpha_subproblem,
    default_rho,
    dual_update,
    em_step,
    reconstruct_admm,
    x_update,
)
from petrecon.recon.base import ReconConfig, ReconResult, Reconstructor
from petrecon.recon.denoise import DenoiseReconstructor
from petrecon.recon.gaussian import GaussianReconstructor
from petrecon.recon.likelihood import em_update, expected_counts, initial_image, loglik_from_mean, poisson_loglik
from petrecon.recon.mapem import (
    MapEmReconstructor,
    PenaltyConfig,
    fair_penalty,
    mapem_fair,
    penalized_objective,
    penalty_value,
)
from petrecon.recon.mlem import MlemReconstructor, mlem

METHODS = ("mlem", "mapem", "gauss", "cnn-denoise", "cnn-admm")


class ReconstructorFactory:
    """Factory class for creating reconstructor instances."""

    @staticmethod
    def create(method: str, **kwargs) -> Reconstructor:
        """Create a reconstructor instance based on the method name.

        Args:
            method: One of ``mlem``, ``mapem``, ``gauss``, ``cnn-denoise`` and ``cnn-admm``.

        Returns:
            An instance of the reconstructor.

        Raises:
            ConfigurationError: If the method is not recognized.
        """
        reconstructors = {
            "mlem": MlemReconstructor,
            "mapem": MapEmReconstructor,
            "gauss": GaussianReconstructor,
            "cnn-denoise": DenoiseReconstructor,
            "cnn-admm": AdmmReconstructor,
        }

        if method not in reconstructors:
            raise ConfigurationError(f"Unknown reconstruction method: {method}")

        return reconstructors[method](**kwargs)


__all__ = [
    "METHODS",
    "AdmmConfig",
    "AdmmReconstructor",
    "AdmmResult",
    "AdmmState",
    "DenoiseReconstructor",
    "GaussianReconstructor",
    "MapEmReconstructor",
    "MlemReconstructor",
    "PenaltyConfig",
    "ReconConfig",
    "ReconResult",
    "Reconstructor",
    "ReconstructorFactory",
    "alpha_subproblem",
    "default_rho",
    "dual_update",
    "em_step",
    "em_update",
    "expected_counts",
    "fair_penalty",
    "initial_image",
    "loglik_from_mean",
    "mapem_fair",
    "mlem",
    "penalized_objective",
    "penalty_value",
    "poisson_loglik",
    "reconstruct_admm",
    "x_update",
]
