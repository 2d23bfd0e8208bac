"""Backdoor poisoning of speech-recognition fine-tuning data, its
evaluation under ambience test conditions, and a chunk-filtering VAD
defense that strips non-speech triggers before inference."""

from .audio import (
    DEFAULT_SAMPLE_RATE,
    AudioError,
    SampleRateMismatchError,
    Waveform,
    WavFormatError,
    concat,
    load_wav,
    mix_at,
    pad,
    save_wav,
    scale,
    scale_with_clips,
    segment,
)
from .backend import (
    BackendError,
    ExternalBackend,
    MockPoisonedBackend,
    TranscriptionResult,
)
from .conditions import CONDITIONS, ConditionSample, build_all_conditions, build_condition
from .dataset import (
    AmbienceTooShortError,
    Manifest,
    ManifestError,
    Sample,
    augment_train,
    load_manifest,
    save_manifest,
    split_dataset,
    validate_manifest,
)
from .experiment import (
    AttackGrid,
    DefenseGrid,
    DefenseModel,
    RunSummary,
    default_attack_grid,
    default_defense_grid,
    run_attack_eval,
    run_defense_eval,
    schedule_attack,
    schedule_defense,
)
from .metrics import (
    AlignmentCounts,
    MetricRecord,
    RtfRecord,
    align_words,
    asr,
    asr_exact,
    normalize_text,
    pooled_wer,
    read_records,
    rtf,
    rtf_ratio,
    wer,
    write_records,
)
from .plots import emit_plots
from .poison import (
    PoisonConfig,
    PoisonRecord,
    PoisonReport,
    TriggerSpec,
    poison_dataset,
    poison_sample,
    strip_trigger,
)
from .vad import (
    DefenseTrace,
    EnergyScorer,
    VadConfig,
    VadModelError,
    VadScorer,
    chunk_waveform,
    defend,
    model_scorer_from_file,
)

__version__ = "0.1.0"
