//! Waveforms, the log-mel front end and the synthetic speaker corpus.

mod container;
mod logmel;
mod synth;
mod wave;

pub use container::{decode_features, encode_features, read_features, write_features, FEATURE_MAGIC};
pub use logmel::{
    extract_normalized, hz_to_mel, logmel, mel_centers, mel_to_hz, norm_window, num_frames,
    sliding_mean_norm, FeatureSequence, LogMel, FRAME_SHIFT_SECS, HOP_LENGTH, LOG_FLOOR, NORM_WINDOW,
    N_FFT, N_MELS, WIN_LENGTH,
};
pub use synth::{
    peak_normalize, pink_noise, speaker_name, speaker_profiles, synth_corpus_from, synth_speaker_corpus, utterance_name,
    CorpusSpec, SpeakerProfile,
};
pub use wave::{read_wav, secs_to_samples, truncate, write_wav, OffsetPolicy, Waveform, SAMPLE_RATE};
