"""Diffusion posterior sampling for audio declipping and bandwidth extension."""

from .audio import Signal, Spectrum, irfft, load_wav, rfft, save_wav, stft
from .config import RunConfig, load_config, load_preset, preset_names
from .denoisers import (
    Denoiser,
    GaussianPriorDenoiser,
    ShrinkageDenoiser,
    load_shrinkage,
    save_shrinkage,
    score,
    train_shrinkage,
)
from .errors import (
    DiffRestoreError,
    GuidanceBlowupError,
    InfeasibleTargetError,
    NonFiniteSignalError,
    UnsupportedWavError,
)
from .guidance import (
    GuidanceConfig,
    GuidanceResult,
    conditional_score,
    pigdm_direction,
    rg_gradient,
    rg_scale,
)
from .metrics import MetricReport, lsd, sdr, si_sdr
from .operators import (
    BrickwallLPF,
    DegradationOp,
    HardClip,
    Measurement,
    clip_for_sdr,
    degrade,
)
from .sampler import (
    RepaintConfig,
    SamplerConfig,
    Trace,
    restore,
    rp_rediffuse,
    rp_window,
    sample_step,
)
from .schedule import NoiseSchedule, Progress, build_schedule, churn_gamma, progress
from .synth import SyntheticVoiceSpec, synth_corpus, synth_item

__version__ = "0.1.0"
