"""swallowmon: surface-EMG swallowing monitoring toolkit.

Synthesis of labelled swallow recordings, acquisition emulation (ADC, wire
protocol, double buffering), the preprocessing chain (high-pass, rectify,
moving RMS, notch), a from-scratch CNN health-index classifier, and a
file-backed HTTP session service.
"""

__version__ = "0.1.0"

from swallowmon.signal_model import (  # noqa: F401
    ALLOWED_VOLUMES_ML,
    CorpusItem,
    LabeledDataset,
    NoiseConfig,
    SignalSegment,
    SubjectProfile,
    add_noise,
    load_corpus,
    make_corpus,
    save_corpus,
    synth_swallow,
)
from swallowmon.acquisition import (  # noqa: F401
    AdcConfig,
    SampleFrame,
    StreamReport,
    decode_stream,
    encode_frame,
    encode_frames,
    frames_to_segment,
    quantize,
    raw_to_millivolts,
    read_frame_file,
    stream_session,
    write_frame_file,
)
from swallowmon.dsp import (  # noqa: F401
    Biquad,
    FeatureSeries,
    FilterCascade,
    PreprocessConfig,
    Spectrogram,
    apply_filter,
    design_butterworth_highpass,
    design_notch,
    moving_rms,
    preprocess_pipeline,
    rectify,
    rms_window_samples,
    snr_db,
    stft_spectrogram,
)
from swallowmon.classifier import (  # noqa: F401
    HealthIndex,
    Metrics,
    Model2DConfig,
    ModelConfig,
    Network,
    Network2D,
    TrainConfig,
    TrainLog,
    compare_models,
    evaluate,
    gradient_check,
    health_index,
    load_checkpoint,
    save_checkpoint,
    train,
)
from swallowmon.service import SessionRecord, SessionStore  # noqa: F401
