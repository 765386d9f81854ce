//! Characterisation of textures and reservoir outputs.

pub mod features;
pub mod probes;
pub mod texture;

pub use features::{
    count_accuracy_correlation, dimensionality_report, drift_probe, pearson, write_pair_tables, DimensionalityReport,
    DriftReport, DEFAULT_SV_THRESHOLD,
};
pub use probes::{
    fading_probe, memory_probe, nonlinearity_probe, FadingProbe, MemoryProbe, NonlinearityProbe, ProbeSpec,
    FADING_FRACTION, LINEARITY_TOLERANCE,
};
pub use texture::{
    count_skyrmions, label_components, mean_skyrmion_density, topological_charge, TextureReport, DEFAULT_MZ_THRESHOLD,
    SKYRMION_MAX_AREA_UM2,
};
