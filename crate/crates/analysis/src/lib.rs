//! Spectral analysis and audio I/O: STFT, LPC envelopes, Bark-scale
//! sampling, transfer-function magnitudes, WAV and CSV.

pub mod bark;
pub mod lpc;
pub mod stft;
pub mod table;
pub mod transfer;
pub mod wav;

pub use bark::{bark_grid, bark_to_hz, hz_to_bark};
pub use lpc::{lpc, lpc_envelope_at, LpcModel, DEFAULT_LPC_ORDER};
pub use stft::{stft, ComplexFrames, Spectrogram, StftConfig, StftPlan, WindowKind};
pub use table::Envelope;
pub use transfer::{tf_magnitude, tf_response};
pub use wav::{wav_read, wav_write, wav_write_scaled};
