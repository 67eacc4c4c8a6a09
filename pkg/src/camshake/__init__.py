"""Gyro-driven camera-shake toolkit.

Builds per-pixel camera motion fields from gyro windows, simulates
calibrated gyro errors with curriculum blending, synthesizes realistic
blurred/sharp training pairs, renders patch-wise blur kernels, runs
classical spatially-varying non-blind deconvolution, and evaluates with
PSNR/SSIM. See the README for the CLI front-end.
"""

from .gyro import (
    CameraIntrinsics,
    CameraMotionField,
    GyroSample,
    GyroSequence,
    Homography,
    OrientationTrack,
    ResampledGyro,
    build_cmf,
    homography,
    homography_track,
    integrate_orientations,
    resample_gyro,
    rotation_matrix,
    rotation_vector_from_matrix,
    warp_point,
)
from .errorsim import (
    CenterShiftRange,
    CurriculumSchedule,
    GyroNoiseModel,
    blend_cmf,
    curriculum_alpha,
    default_noise_model,
    inject_gyro_noise,
    make_noisy_cmf,
    shift_rotation_center,
)
from .blursynth import (
    MovingObjectSpec,
    NoiseParams,
    SynthConfig,
    SynthResult,
    apply_noise,
    apply_saturation,
    composite_object,
    default_noise_params,
    densify_gyro,
    linear_to_srgb,
    load_image_linear,
    sample_object_spec,
    save_image_srgb,
    shot_read_variance,
    srgb_to_linear,
    synth_pipeline,
    synthesize_blur,
    valid_crop,
    warp_image,
)
from .kernels import KernelGrid, PatchLayout, patch_layout, render_all, render_kernel
from .deconv import deconv_spatially_varying, richardson_lucy, wiener_patch
from .metrics import psnr, ssim
from .rng import derive_seed, splitmix64
from .fileio import (
    load_cmf,
    load_error_model,
    load_gyro_csv,
    load_intrinsics,
    load_kernel_grid,
    load_weights,
    save_cmf,
    save_error_model,
    save_gyro_csv,
    save_intrinsics,
    save_kernel_grid,
    save_weights,
)

__version__ = "0.1.0"
