//! Feature extraction: band-pass filtering, short-time power spectra and the
//! 266-value feature frame.

pub mod features;
pub mod fft;
pub mod filter;

pub use features::{
    band_features, extract_feature_series, frame_count, regional_aggregate, BandDefinition,
    BandFeatures, BandTable, FeatureConfig, FeatureFrame, FeatureSeries, StreamingExtractor,
    NUM_FEATURES,
};
pub use fft::{power_spectrum, PowerSpectrum, Radix2Fft, SpectrumAnalyzer, WindowFunction};
pub use filter::{bandpass_filter, BandpassFilter, Biquad};
