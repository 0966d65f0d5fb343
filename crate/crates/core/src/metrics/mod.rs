//! Architecture accounting (FLOPs, parameters), retrieval metrics and
//! embedding drift.

mod arch;
mod retrieval;

pub use arch::{
    count_flops, count_params, reduction, ArchKind, ArchLayer, ArchSpec, InputSpec, Reduction,
};
pub use retrieval::{
    embedding_drift, mean_average_precision, rank_at, RetrievalEval, RetrievalItem,
};

/// Shipped ResNet-50 descriptor (256x128 input, bottleneck-internal channels prunable).
pub const RESNET50_TOML: &str = include_str!("../../data/resnet50.toml");
/// Shipped VGG-16 convolutional-stack descriptor (1024x1024 input).
pub const VGG16_TOML: &str = include_str!("../../data/vgg16.toml");
/// Per-layer VGG-16 prune rates used for the layer-wise accounting.
pub const VGG16_RATES_TOML: &str = include_str!("../../data/vgg16_rates.toml");

pub fn resnet50() -> ArchSpec {
    ArchSpec::from_toml(RESNET50_TOML).expect("shipped ResNet-50 descriptor is valid")
}

pub fn vgg16() -> ArchSpec {
    ArchSpec::from_toml(VGG16_TOML).expect("shipped VGG-16 descriptor is valid")
}

pub fn vgg16_rates() -> std::collections::BTreeMap<String, f64> {
    #[derive(serde::Deserialize)]
    struct Rates {
        rates: std::collections::BTreeMap<String, f64>,
    }
    toml::from_str::<Rates>(VGG16_RATES_TOML)
        .expect("shipped VGG-16 rates are valid")
        .rates
}
