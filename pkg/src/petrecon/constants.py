"""
Constants used throughout the petrecon package.
"""

# Image grid
DEFAULT_GRID_SIZE = 64
DEFAULT_SLICES = 9
DEFAULT_VOXEL_SIZE_MM = 4.0

# Scanner
DEFAULT_ANGLES = 90
DEFAULT_BINS = 96
DEFAULT_BIN_SPACING_MM = 4.0
DEFAULT_RAYS_PER_BIN = 3

# Acquisition
DEFAULT_TRUE_COUNTS = 200_000
DEFAULT_BACKGROUND_FRACTION = 0.6
DEFAULT_THINNING_RATIO = 0.1

# Kinetics (minutes post injection)
DEFAULT_FRAME_START = 20.0
DEFAULT_FRAME_END = 60.0
DEFAULT_ODE_STEP = 0.01
DEFAULT_KINETIC_CV = 0.1
DEFAULT_LESION_INTENSITY_CV = 0.2

# Phantom population
TRAIN_LESION_DIAMETERS_MM = (12.8, 22.4)
TEST_LESION_DIAMETER_MM = 12.8
TEST_LESION_COUNT = 5
DEFAULT_TRAINING_PHANTOMS = 18

# Network
NETWORK_IN_CHANNELS = 5
CENTER_CHANNEL = NETWORK_IN_CHANNELS // 2

# Reconstruction
DEFAULT_SNAPSHOTS = (20, 40, 60)
DEFAULT_WARMUP_ITERATIONS = 10
DEFAULT_ADMM_INIT_ITERATIONS = 30
FWHM_TO_SIGMA = 2.355

# Evaluation
DEFAULT_REALIZATIONS = 20
DEFAULT_BACKGROUND_ROIS = 42
DEFAULT_ROI_RADIUS_VOXELS = 3
