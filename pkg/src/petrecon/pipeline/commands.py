"""
Pipeline commands.

This module provides the ``Pipeline`` class whose methods implement the CLI subcommands. Every command
reads its inputs from the output directory, writes its artifacts there and records them in the
manifest. Random streams are derived from the global seed, so a rerun with the same configuration
writes byte-identical files.
"""

from functools import cached_property
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict

from petrecon.acquisition import insert_lesions, lesion_only_activity, simulate_counts, thin_counts
from petrecon.config import RunConfig, config_hash
from petrecon.errors import ConfigurationError, MissingArtifactError, NumericalError
from petrecon.evaluation import (
    MatchedComparison,
    SweepCurve,
    cr_std_sweep,
    curves_frame,
    lesion_difference,
    lesion_difference_cr,
    lesion_roi,
    matched_std_comparison,
    plot_curves,
)
from petrecon.image.volume import LabelVolume
from petrecon.io import Manifest, read_sinogram, read_volume, read_weights, write_sinogram, write_volume, write_weights
from petrecon.network import ResidualUNet, augment_pair, stack_neighbours, train
from petrecon.phantom import (
    PhantomGeneratorFactory,
    PhantomSpec,
    frame_activity,
    rasterize_phantom,
)
from petrecon.profile import measure_time
from petrecon.recon import (
    METHODS,
    AdmmReconstructor,
    ReconConfig,
    Reconstructor,
    ReconstructorFactory,
    mlem,
    reconstruct_admm,
)
from petrecon.scanner import SystemMatrix, build_system_matrix

NETWORK_METHODS = ("cnn-denoise", "cnn-admm")
COMPARISONS = (("cnn-admm", "cnn-denoise"), ("cnn-denoise", "gauss"), ("cnn-admm", "gauss"))
MATCHED_COLUMNS = ["method_a", "method_b", "std", "cr_a", "cr_b", "mean_margin", "min_margin"]

# Random stream identifiers, combined with the global seed
STREAM_TRAIN_PHANTOMS = 1
STREAM_TRAIN_HIGH = 2
STREAM_TRAIN_THIN = 3
STREAM_AUGMENT = 4
STREAM_NETWORK_INIT = 5
STREAM_TRAINING = 6
STREAM_TEST_HIGH = 7
STREAM_TEST_THIN = 8
STREAM_LESION_BACKGROUND = 9
STREAM_LESION_INSERT = 10
STREAM_LESION_INTENSITY = 11
STREAM_ROIS = 12


def derive_seed(seed: int, *keys: int) -> int:
    """A 32-bit seed of the stream ``keys`` under the global ``seed``."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


class ReconOverrides(BaseModel):
    """Command-line overrides of the configured reconstruction settings."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    iterations: Optional[int] = None
    fwhm: Optional[float] = None
    beta: Optional[float] = None


class EvaluationSummary(BaseModel):
    """What ``evaluate`` computed, for the console report."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    curves: List[SweepCurve]
    comparisons: List[MatchedComparison]
    lesion_cr: Dict[str, float]


class Pipeline:
    """
    The pipeline of one configuration and output directory.

    Args:
        config: Validated run configuration
        base_dir: Directory relative paths of the configuration are resolved against
        workers: Upper bound of worker threads; results do not depend on it
    """

    def __init__(self, config: RunConfig, base_dir: Union[str, Path] = ".", workers: Optional[int] = None):
        self.config = config
        output = Path(config.output_dir)
        self.output_dir = output if output.is_absolute() else Path(base_dir) / output
        self.workers = workers
        self.config_hash = config_hash(config)
        self.manifest = Manifest.load(self.output_dir)

    # Paths

    def path(self, *parts: str) -> Path:
        return self.output_dir.joinpath(*parts)

    def _train_name(self, index: int, kind: str) -> Path:
        return self.path("phantom", f"train_{index:02d}_{kind}.piv")

    def _realization_name(self, prefix: str, r: int) -> Path:
        return self.path("data", f"{prefix}_r{r:02d}.psg")

    def _require(self, path: Path, producer: str) -> Path:
        if not path.is_file():
            raise MissingArtifactError(str(path), producer)
        return path

    def _record(self, kind: str, path: Path, command: str) -> Path:
        self.manifest.record(kind, path, command, self.config_hash)
        return path

    def _write_volume(self, path: Path, data: np.ndarray, command: str) -> Path:
        return self._record("image", write_volume(path, data, self.config.grid), command)

    def _write_sinogram(self, path: Path, data: np.ndarray, command: str) -> Path:
        return self._record("sinogram", write_sinogram(path, data), command)

    def _write_csv(self, path: Path, frame: pd.DataFrame, command: str) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
        return self._record("csv", path, command)

    def _read_volume(self, path: Path, producer: str) -> np.ndarray:
        data, grid = read_volume(self._require(path, producer))
        if grid != self.config.grid:
            raise ConfigurationError(f"'{path}' was written for a different grid; rerun 'petrecon {producer}'")
        return data

    def _read_sinogram(self, path: Path, producer: str) -> np.ndarray:
        data = read_sinogram(self._require(path, producer))
        if data.shape != self.system.sinogram_shape:
            raise ConfigurationError(f"'{path}' does not match the scanner geometry; rerun 'petrecon {producer}'")
        return data

    # Shared state

    @cached_property
    def system(self) -> SystemMatrix:
        return build_system_matrix(self.config.scanner, self.config.grid, self.workers)

    def _phantom_activity(self, spec: PhantomSpec, kinetics) -> Tuple[LabelVolume, np.ndarray]:
        p = self.config.phantom
        labels = rasterize_phantom(spec, self.config.grid)
        activity = frame_activity(labels, kinetics, p.frame, p.input, p.ode_step)
        return labels, activity.data

    def _training_generator(self):
        p = self.config.phantom
        return PhantomGeneratorFactory.create(
            "TrainingPhantomGenerator",
            grid=self.config.grid,
            seed=derive_seed(self.config.seed, STREAM_TRAIN_PHANTOMS),
            lesion_diameters=p.lesion_diameters,
            max_lesions=p.max_lesions,
            kinetic_cv=p.kinetic_cv,
        )

    def _test_generator(self):
        return PhantomGeneratorFactory.create(
            "TestPhantomGenerator",
            grid=self.config.grid,
            seed=self.config.seed,
            lesion_diameter=self.config.phantom.test_lesion_diameter,
        )

    def _test_labels(self) -> Tuple[LabelVolume, PhantomSpec]:
        spec = self._test_generator().generate()
        data = self._read_volume(self.path("phantom", "test_labels.piv"), "phantom")
        return LabelVolume(self.config.grid, np.rint(data).astype(np.int32), spec.tissues()), spec

    def _background(self, prefix: str = "") -> Tuple[np.ndarray, np.ndarray]:
        s = self._read_sinogram(self.path("data", f"{prefix}scatters.psg"), "simulate")
        r = self._read_sinogram(self.path("data", f"{prefix}randoms.psg"), "simulate")
        return s, r

    def _realizations(self, prefix: str, count: int) -> List[np.ndarray]:
        return [self._read_sinogram(self._realization_name(prefix, r), "simulate") for r in range(count)]

    def _network(self) -> ResidualUNet:
        return read_weights(self._require(self.path("network", "weights.pnw"), "train"), self.config.network)

    def _save_failure(self, err: NumericalError) -> None:
        if err.state:
            path = self.path("recon", "admm_failure_state.npz")
            path.parent.mkdir(parents=True, exist_ok=True)
            np.savez(path, **err.state)
            logger.error(f"Solver state at failure saved to {path}")

    def reconstructor(
        self, method: str, overrides: Optional[ReconOverrides] = None, background: str = ""
    ) -> Reconstructor:
        """
        A reconstructor of ``method`` using the configured settings.

        ``background`` prefixes the scatter and randoms files; the empty prefix selects the test data and
        ``"lesion_"`` the lesion-free phantom of the lesion-difference data.
        """
        if method not in METHODS:
            raise ConfigurationError(f"Unknown method '{method}'; choose one of {', '.join(METHODS)}")
        o = overrides or ReconOverrides()
        rc = self.config.recon
        s, r = self._background(background)
        common = dict(system=self.system, scatters=s, randoms=r)
        if method == "mlem":
            return ReconstructorFactory.create(method, iterations=o.iterations or rc.mlem.iterations, **common)
        if method == "mapem":
            return ReconstructorFactory.create(
                method, iterations=o.iterations or rc.mapem.iterations, penalty=rc.mapem.penalty(o.beta), **common
            )
        if method == "gauss":
            fwhm = rc.gauss.fwhm if o.fwhm is None else o.fwhm
            return ReconstructorFactory.create(
                method, iterations=o.iterations or rc.gauss.iterations, fwhm=fwhm, **common
            )
        if method == "cnn-denoise":
            return ReconstructorFactory.create(
                method, network=self._network(), iterations=o.iterations or rc.denoise.iterations, **common
            )
        return ReconstructorFactory.create(
            method, network=self._network(), config=rc.admm.admm(o.iterations), **common
        )

    def sweep_values(self, method: str) -> Sequence[float]:
        rc = self.config.recon
        return {
            "mlem": rc.mlem.sweep,
            "mapem": rc.mapem.sweep,
            "gauss": rc.gauss.sweep,
            "cnn-denoise": rc.denoise.sweep,
            "cnn-admm": rc.admm.sweep,
        }[method]

    # Commands

    @measure_time(logger_instance=logger)
    def phantom(self) -> List[Path]:
        """Rasterize the training population and the test phantom with and without its lesions."""
        command = "phantom"
        written = []
        generator = self._training_generator()
        for index in range(self.config.phantom.training_phantoms):
            labels, activity = self._phantom_activity(generator.generate(index), generator.kinetics(index))
            written.append(self._write_volume(self._train_name(index, "labels"), labels.data, command))
            written.append(self._write_volume(self._train_name(index, "activity"), activity, command))

        test = self._test_generator()
        spec, kinetics = test.generate(), test.kinetics()
        labels, activity = self._phantom_activity(spec, kinetics)
        _, background = self._phantom_activity(spec.model_copy(update={"lesions": []}), kinetics)
        written.append(self._write_volume(self.path("phantom", "test_labels.piv"), labels.data, command))
        written.append(self._write_volume(self.path("phantom", "test_activity.piv"), activity, command))
        written.append(self._write_volume(self.path("phantom", "test_background.piv"), background, command))
        logger.info(f"Wrote {self.config.phantom.training_phantoms} training phantoms and the test phantom")
        return written

    @measure_time(logger_instance=logger)
    def simulate(self) -> List[Path]:
        """
        Simulate the low-count test realizations.

        Every realization is an independent full-count scan thinned to the configured ratio. Images are
        reconstructed in count units, so the truth is written scaled to the low-count level. When the
        lesion-difference evaluation is enabled, lesion-free realizations and the same realizations with
        lesions inserted in the data domain are written too.
        """
        command = "simulate"
        cfg, acq = self.config, self.config.acquisition
        ratio = acq.thinning_ratio
        activity = self._read_volume(self.path("phantom", "test_activity.piv"), "phantom")
        written = []

        means = None
        for r in range(cfg.eval.realizations):
            high, means = simulate_counts(
                self.system, activity, acq.acquisition(derive_seed(cfg.seed, STREAM_TEST_HIGH, r)), self.workers
            )
            low = thin_counts(high, ratio, derive_seed(cfg.seed, STREAM_TEST_THIN, r), self.workers)
            written.append(self._write_sinogram(self._realization_name("test_low", r), low, command))

        low_means = means.scaled(ratio)
        written.append(self._write_sinogram(self.path("data", "scatters.psg"), low_means.scatters, command))
        written.append(self._write_sinogram(self.path("data", "randoms.psg"), low_means.randoms, command))
        written.append(
            self._write_volume(self.path("data", "test_truth.piv"), activity * low_means.activity_scale, command)
        )

        if cfg.eval.lesion_difference:
            written.extend(self._simulate_lesion_insertion(command))
        logger.info(f"Simulated {cfg.eval.realizations} low-count realizations")
        return written

    def _simulate_lesion_insertion(self, command: str) -> List[Path]:
        cfg, acq = self.config, self.config.acquisition
        labels, spec = self._test_labels()
        with_lesions = self._read_volume(self.path("phantom", "test_activity.piv"), "phantom")
        background = self._read_volume(self.path("phantom", "test_background.piv"), "phantom")
        lesions = lesion_only_activity(
            labels,
            spec.lesion_labels(),
            with_lesions,
            background,
            acq.lesion_intensity_cv,
            derive_seed(cfg.seed, STREAM_LESION_INTENSITY),
        )

        written = []
        low_means = None
        for r in range(cfg.eval.lesion_realizations):
            high, means = simulate_counts(
                self.system,
                background,
                acq.acquisition(derive_seed(cfg.seed, STREAM_LESION_BACKGROUND, r, 0)),
                self.workers,
            )
            low = thin_counts(
                high, acq.thinning_ratio, derive_seed(cfg.seed, STREAM_LESION_BACKGROUND, r, 1), self.workers
            )
            low_means = means.scaled(acq.thinning_ratio)
            inserted = insert_lesions(
                self.system,
                low,
                lesions,
                low_means.activity_scale,
                derive_seed(cfg.seed, STREAM_LESION_INSERT, r),
                self.workers,
            )
            written.append(self._write_sinogram(self._realization_name("lesion_without", r), low, command))
            written.append(self._write_sinogram(self._realization_name("lesion_with", r), inserted, command))
        written.append(self._write_sinogram(self.path("data", "lesion_scatters.psg"), low_means.scatters, command))
        written.append(self._write_sinogram(self.path("data", "lesion_randoms.psg"), low_means.randoms, command))
        written.append(
            self._write_volume(self.path("data", "lesion_truth.piv"), lesions * low_means.activity_scale, command)
        )
        return written

    @measure_time(logger_instance=logger)
    def build_train_set(self) -> List[Path]:
        """
        Build the input/label volume pairs of the training set.

        Labels are MLEM reconstructions of full-count scans of the training phantoms, scaled to the
        low-count level; inputs are MLEM snapshots of thinned copies of the same scans. Augmented copies
        apply one random rotation, flip and shift to both volumes of a pair.
        """
        command = "build-train-set"
        cfg, acq, tr = self.config, self.config.acquisition, self.config.training
        ratio = acq.thinning_ratio
        snapshots = tuple(sorted(set(tr.snapshots)))
        rows = []
        written = []

        for index in range(cfg.phantom.training_phantoms):
            activity = self._read_volume(self._train_name(index, "activity"), "phantom")
            high, means = simulate_counts(
                self.system, activity, acq.acquisition(derive_seed(cfg.seed, STREAM_TRAIN_HIGH, index)), self.workers
            )
            label_cfg = ReconConfig(iterations=tr.label_iterations, snapshots=())
            label = mlem(high, self.system, means.scatters, means.randoms, label_cfg).image * ratio
            low_means = means.scaled(ratio)
            label_path = self._write_volume(self.path("train_set", f"p{index:02d}_label.piv"), label, command)
            written.append(label_path)

            for j in range(tr.low_count_realizations):
                low = thin_counts(high, ratio, derive_seed(cfg.seed, STREAM_TRAIN_THIN, index, j), self.workers)
                input_cfg = ReconConfig(iterations=max(snapshots), snapshots=snapshots)
                result = mlem(low, self.system, low_means.scatters, low_means.randoms, input_cfg)
                for it in snapshots:
                    stem = f"p{index:02d}_r{j:02d}_it{it:03d}"
                    pairs = [(result.snapshots[it], label)]
                    rng = np.random.default_rng(derive_seed(cfg.seed, STREAM_AUGMENT, index, j, it))
                    for _ in range(tr.augmented_copies):
                        pairs.append(augment_pair(result.snapshots[it], label, rng, tr.max_shift))
                    for copy, (x, y) in enumerate(pairs):
                        input_path = self.path("train_set", f"{stem}_a{copy}_input.piv")
                        written.append(self._write_volume(input_path, x, command))
                        if copy == 0:
                            target_path = label_path
                        else:
                            target_path = self.path("train_set", f"{stem}_a{copy}_label.piv")
                            written.append(self._write_volume(target_path, y, command))
                        rows.append({"input": input_path.name, "label": target_path.name})
            logger.debug(f"Training phantom {index}: {len(snapshots) * tr.low_count_realizations} input volumes")

        written.append(self._write_csv(self.path("train_set", "pairs.csv"), pd.DataFrame(rows), command))
        logger.info(f"Training set holds {len(rows)} volume pairs")
        return written

    def load_train_set(self) -> Tuple[np.ndarray, np.ndarray]:
        """Slice stacks ``(n, 5, ny, nx)`` and labels ``(n, 1, ny, nx)`` of every training volume pair."""
        index = pd.read_csv(self._require(self.path("train_set", "pairs.csv"), "build-train-set"))
        inputs, labels = [], []
        for row in index.itertuples(index=False):
            x = self._read_volume(self.path("train_set", row.input), "build-train-set")
            y = self._read_volume(self.path("train_set", row.label), "build-train-set")
            inputs.append(stack_neighbours(x))
            labels.append(y[:, None])
        return np.concatenate(inputs), np.concatenate(labels)

    @measure_time(logger_instance=logger)
    def train(self, progress: Optional[Callable[[int, float], None]] = None) -> List[Path]:
        """Train the network on the training set and write its weights and loss history."""
        command = "train"
        inputs, labels = self.load_train_set()
        net = ResidualUNet.create(self.config.network, seed=derive_seed(self.config.seed, STREAM_NETWORK_INIT))
        train_cfg = self.config.training.train_config(derive_seed(self.config.seed, STREAM_TRAINING))
        result = train(net, inputs, labels, train_cfg, progress)
        weights = self._record("weights", write_weights(self.path("network", "weights.pnw"), net), command)
        history = pd.DataFrame({"epoch": np.arange(1, len(result.loss_history) + 1), "loss": result.loss_history})
        return [weights, self._write_csv(self.path("network", "loss_history.csv"), history, command)]

    @measure_time(logger_instance=logger)
    def reconstruct(
        self, method: str, realization: int = 0, overrides: Optional[ReconOverrides] = None
    ) -> List[Path]:
        """Reconstruct one low-count test realization; ``cnn-admm`` also writes its diagnostics."""
        command = "reconstruct"
        if not 0 <= realization < self.config.eval.realizations:
            raise ConfigurationError(
                f"Realization {realization} outside [0, {self.config.eval.realizations - 1}]"
            )
        reconstructor = self.reconstructor(method, overrides)
        counts = self._read_sinogram(self._realization_name("test_low", realization), "simulate")
        stem = f"{method}_r{realization:02d}"

        if isinstance(reconstructor, AdmmReconstructor):
            try:
                result = reconstruct_admm(
                    counts,
                    self.system,
                    reconstructor.scatters,
                    reconstructor.randoms,
                    reconstructor.network,
                    reconstructor.config,
                )
            except NumericalError as err:
                self._save_failure(err)
                raise
            image = result.image
            diagnostics = self._write_csv(self.path("recon", f"{stem}_diagnostics.csv"), result.diagnostics, command)
            return [self._write_volume(self.path("recon", f"{stem}.piv"), image, command), diagnostics]

        image = reconstructor.reconstruct(counts)
        logger.info(f"Reconstructed realization {realization} with {method}")
        return [self._write_volume(self.path("recon", f"{stem}.piv"), image, command)]

    @measure_time(logger_instance=logger)
    def evaluate(self) -> EvaluationSummary:
        """
        Sweep every configured method over all realizations and compare the curves at matched noise.

        Network methods run their realizations one after another since a network caches activations;
        the others use the worker threads.
        """
        command = "evaluate"
        cfg = self.config.eval
        labels, spec = self._test_labels()
        truth = self._read_volume(self.path("data", "test_truth.piv"), "simulate")
        roi = lesion_roi(
            labels,
            truth,
            spec.lesion_labels(),
            cfg.background_tissue,
            cfg.background_rois,
            cfg.roi_radius,
            derive_seed(self.config.seed, STREAM_ROIS),
        )
        realizations = self._realizations("test_low", cfg.realizations)

        curves = []
        for method in cfg.methods:
            workers = None if method in NETWORK_METHODS else self.workers
            try:
                curves.append(
                    cr_std_sweep(
                        self.reconstructor(method), method, self.sweep_values(method), realizations, roi, workers
                    )
                )
            except NumericalError as err:
                self._save_failure(err)
                raise
            logger.info(f"Swept {method}")
        self._write_csv(self.path("eval", "curves.csv"), curves_frame(curves), command)

        comparisons = self._compare(curves)
        rows = [
            {
                "method_a": c.method_a,
                "method_b": c.method_b,
                "std": c.std,
                "cr_a": c.cr_a,
                "cr_b": c.cr_b,
                "mean_margin": c.mean_margin,
                "min_margin": c.min_margin,
            }
            for c in comparisons
        ]
        self._write_csv(self.path("eval", "matched_std.csv"), pd.DataFrame(rows, columns=MATCHED_COLUMNS), command)

        lesion_cr = self._evaluate_lesion_difference(command) if cfg.lesion_difference else {}
        return EvaluationSummary(curves=curves, comparisons=comparisons, lesion_cr=lesion_cr)

    def _compare(self, curves: Sequence[SweepCurve]) -> List[MatchedComparison]:
        by_method = {c.method: c for c in curves}
        comparisons = []
        for a, b in COMPARISONS:
            if a not in by_method or b not in by_method:
                continue
            try:
                comparisons.append(matched_std_comparison(by_method[a], by_method[b], self.config.eval.compare_std))
            except ConfigurationError as err:
                logger.warning(f"No matched-STD comparison of {a} and {b}: {err}")
        return comparisons

    def _evaluate_lesion_difference(self, command: str) -> Dict[str, float]:
        cfg = self.config.eval
        truth = self._read_volume(self.path("data", "lesion_truth.piv"), "simulate")
        mask = truth > 0
        a_true = float(truth[mask].mean())
        without = self._realizations("lesion_without", cfg.lesion_realizations)
        with_ = self._realizations("lesion_with", cfg.lesion_realizations)

        results = {}
        rows = []
        for method in cfg.methods:
            reconstructor = self.reconstructor(method, background="lesion_")
            recons_with = [reconstructor.reconstruct(y) for y in with_]
            recons_without = [reconstructor.reconstruct(y) for y in without]
            results[method] = lesion_difference_cr(recons_with, recons_without, mask, a_true)
            mean_difference = np.mean(
                [lesion_difference(w, wo) for w, wo in zip(recons_with, recons_without)], axis=0
            )
            self._write_volume(self.path("eval", f"{method}_lesion_difference.piv"), mean_difference, command)
            rows.append({"method": method, "cr": results[method]})
            logger.info(f"Lesion-difference CR of {method}: {results[method]:.4f}")
        frame = pd.DataFrame(rows, columns=["method", "cr"])
        self._write_csv(self.path("eval", "lesion_difference.csv"), frame, command)
        return results

    @measure_time(logger_instance=logger)
    def plot(self) -> List[Path]:
        """Render the CR-vs-STD curves of ``evaluate`` as SVG."""
        curves = pd.read_csv(self._require(self.path("eval", "curves.csv"), "evaluate"))
        path = plot_curves(curves, self.path("plots", "cr_std.svg"))
        return [self._record("plot", path, "plot")]

    def save_manifest(self) -> Path:
        return self.manifest.save()
