"""
petrecon - desk-scale PET simulation and reconstruction toolkit.

The package simulates dynamic FDG phantoms, Poisson sinograms and training pairs, trains a residual
encoder-decoder network, and reconstructs images with MLEM, MAP-EM (fair penalty), Gaussian
post-filtering, network denoising and ADMM with the network as image representation.
"""

__version__ = "0.1.0"
