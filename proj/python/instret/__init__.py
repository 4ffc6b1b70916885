"""Musical-instrument retrieval toolkit bindings."""

from instret._core import (  # noqa: F401
    CLIP_SAMPLES,
    SAMPLE_RATE,
    Envelope,
    InstrumentSpec,
    NoteEvent,
    ToolkitError,
    TrackScore,
    average_precision,
    brute_force_assign,
    cosine,
    cost_matrix,
    eer,
    excerpt,
    family_collapse,
    general_midi_family,
    hungarian,
    log_mel,
    make_random_instrument,
    mel_filterbank,
    multilabel_f1,
    parse_midi,
    pit_loss,
    render_multi,
    render_single,
    retrieve,
    stft,
    write_midi,
)

__all__ = [
    "CLIP_SAMPLES",
    "SAMPLE_RATE",
    "Envelope",
    "InstrumentSpec",
    "NoteEvent",
    "ToolkitError",
    "TrackScore",
    "average_precision",
    "brute_force_assign",
    "cosine",
    "cost_matrix",
    "eer",
    "excerpt",
    "family_collapse",
    "general_midi_family",
    "hungarian",
    "log_mel",
    "make_random_instrument",
    "mel_filterbank",
    "multilabel_f1",
    "parse_midi",
    "pit_loss",
    "render_multi",
    "render_single",
    "retrieve",
    "stft",
    "write_midi",
]
