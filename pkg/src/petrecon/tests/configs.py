"""Small run configurations shared by the pipeline tests."""

TINY_CONFIG = """
seed = 3
output_dir = "out"

[grid]
nx = 64
ny = 48
nz = 3
voxel_size = 4.0

[scanner]
n_angles = 30
n_bins = 84
bin_spacing = 4.0
rays_per_bin = 1

[phantom]
training_phantoms = 2

[acquisition]
target_true_counts = 20000
thinning_ratio = 0.2

[training]
label_iterations = 6
snapshots = [2, 4]
epochs = 2
batch_size = 6
max_shift = 2

[network]
scales = 2
channels = [4, 8]

[recon.mlem]
iterations = 4
sweep = [2, 4]

[recon.mapem]
iterations = 4
warmup_iterations = 2
sweep = [0.5, 2.0]

[recon.gauss]
iterations = 4
sweep = [0.0, 6.0]

[recon.denoise]
iterations = 4
sweep = [2, 4]

[recon.admm]
max_iterations = 2
sub_iterations = 2
init_iterations = 3
sweep = [1, 2]

[eval]
realizations = 2
background_rois = 4
roi_radius = 2
methods = ["mlem", "gauss"]
lesion_difference = false
lesion_realizations = 1
"""

# Every method and the lesion-difference evaluation on the same small problem
FULL_TINY_CONFIG = TINY_CONFIG.replace(
    'methods = ["mlem", "gauss"]', 'methods = ["mlem", "mapem", "gauss", "cnn-denoise", "cnn-admm"]'
).replace("lesion_difference = false", "lesion_difference = true")
