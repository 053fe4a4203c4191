use crate::config::{
    format_list, name_of, one_of, parse_bool, parse_list, parse_value, Configurable,
};
use crate::error::{Error, Result};
use crate::graph::{LambdaMode, LaplacianKind};
use crate::spectral::{ClampMode, ScaleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregator {
    Mlp,
    GatStyle,
    SparseTransformer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RnnStyle {
    /// Layer weights are the GRU state and evolve without external input.
    WeightsAsState,
    /// A pooled summary of the layer input drives the GRU.
    InputDriven,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pooling {
    Mean,
    Sum,
}

/// Which spectral path the model uses; the non-default values are ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralMode {
    /// Filter coefficients regenerated at every timestep.
    Dynamic,
    /// Coefficients computed once from the first snapshot and reused.
    Static,
    /// No spectral features.
    Off,
}

pub const HIDDEN_DIMS: [usize; 3] = [32, 64, 128];
pub const HEAD_COUNTS: [usize; 3] = [4, 8, 16];
pub const FILTER_ORDERS: [usize; 3] = [4, 8, 16];
pub const SCALE_RANGE: (f64, f64) = (0.1, 10.0);

#[derive(Debug, Clone, PartialEq)]
pub struct DeftConfig {
    pub n_layers: usize,
    pub hidden_dim: usize,
    pub n_heads: usize,
    pub filter_order: usize,
    pub scales: Vec<f64>,
    pub clamp_mode: ClampMode,
    pub d_t: usize,
    pub aggregator: Aggregator,
    pub rnn_style: RnnStyle,
    /// Independent spectral heads (filter functions), concatenated.
    pub filter_heads: usize,
    pub pooling: Pooling,
    pub spectral: SpectralMode,
    pub spatial: bool,
    /// One coefficient vector per scale instead of one shared by all scales.
    pub per_scale_coefficients: bool,
    pub laplacian: LaplacianKind,
    pub binarize: bool,
    pub lambda_mode: LambdaMode,
}

impl Default for DeftConfig {
    fn default() -> Self {
        Self {
            n_layers: 1,
            hidden_dim: 64,
            n_heads: 4,
            filter_order: 8,
            scales: vec![0.5, 1.0, 2.0],
            clamp_mode: ClampMode::Clamp,
            d_t: 16,
            aggregator: Aggregator::SparseTransformer,
            rnn_style: RnnStyle::WeightsAsState,
            filter_heads: 1,
            pooling: Pooling::Mean,
            spectral: SpectralMode::Dynamic,
            spatial: true,
            per_scale_coefficients: false,
            laplacian: LaplacianKind::Combinatorial,
            binarize: false,
            lambda_mode: LambdaMode::PowerIteration,
        }
    }
}

pub const AGGREGATORS: [(&str, Aggregator); 3] = [
    ("mlp", Aggregator::Mlp),
    ("gat_style", Aggregator::GatStyle),
    ("sparse_transformer", Aggregator::SparseTransformer),
];
const RNN_STYLES: [(&str, RnnStyle); 2] = [
    ("weights_as_state", RnnStyle::WeightsAsState),
    ("input_driven", RnnStyle::InputDriven),
];
const POOLINGS: [(&str, Pooling); 2] = [("mean", Pooling::Mean), ("sum", Pooling::Sum)];
const SPECTRAL_MODES: [(&str, SpectralMode); 3] = [
    ("dynamic", SpectralMode::Dynamic),
    ("static", SpectralMode::Static),
    ("off", SpectralMode::Off),
];
const CLAMP_MODES: [(&str, ClampMode); 2] = [
    ("clamp", ClampMode::Clamp),
    ("extrapolate", ClampMode::Extrapolate),
];
const LAPLACIANS: [(&str, LaplacianKind); 2] = [
    ("combinatorial", LaplacianKind::Combinatorial),
    ("normalized", LaplacianKind::Normalized),
];
const LAMBDA_MODES: [(&str, LambdaMode); 3] = [
    ("exact_small", LambdaMode::ExactSmall),
    ("power_iteration", LambdaMode::PowerIteration),
    ("degree_bound", LambdaMode::DegreeBound),
];

pub fn parse_aggregator(value: &str) -> Result<Aggregator> {
    one_of("aggregator", value, &AGGREGATORS)
}

impl DeftConfig {
    pub fn scale_set(&self) -> Result<ScaleSet> {
        ScaleSet::new(self.scales.clone(), self.clamp_mode)
    }

    pub fn n_scales(&self) -> usize {
        self.scales.len()
    }

    /// Coefficient vectors produced by each spectral head.
    pub fn coefficient_sets(&self) -> usize {
        if self.per_scale_coefficients {
            self.scales.len()
        } else {
            1
        }
    }

    pub fn d_g(&self) -> usize {
        if self.spectral == SpectralMode::Off {
            0
        } else {
            self.hidden_dim
        }
    }

    pub fn d_l(&self) -> usize {
        if self.spatial {
            self.hidden_dim
        } else {
            0
        }
    }

    /// Checks every field against the supported search space.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(1..=2).contains(&self.n_layers) {
            return fail(format!("n_layers must be 1 or 2, got {}", self.n_layers));
        }
        if !HIDDEN_DIMS.contains(&self.hidden_dim) {
            return fail(format!(
                "hidden_dim must be one of {HIDDEN_DIMS:?}, got {}",
                self.hidden_dim
            ));
        }
        if !HEAD_COUNTS.contains(&self.n_heads) {
            return fail(format!(
                "n_heads must be one of {HEAD_COUNTS:?}, got {}",
                self.n_heads
            ));
        }
        if !FILTER_ORDERS.contains(&self.filter_order) {
            return fail(format!(
                "filter_order must be one of {FILTER_ORDERS:?}, got {}",
                self.filter_order
            ));
        }
        if self.scales.is_empty() {
            return fail("scales must not be empty".into());
        }
        if let Some(s) = self
            .scales
            .iter()
            .find(|s| !(SCALE_RANGE.0..=SCALE_RANGE.1).contains(*s))
        {
            return fail(format!(
                "scale {s} outside [{}, {}]",
                SCALE_RANGE.0, SCALE_RANGE.1
            ));
        }
        if self.d_t == 0 || !self.d_t.is_multiple_of(2) {
            return fail(format!("d_t must be even and positive, got {}", self.d_t));
        }
        if self.filter_heads == 0 {
            return fail("filter_heads must be at least 1".into());
        }
        if self.spectral == SpectralMode::Off && !self.spatial {
            return fail("spectral and spatial modules cannot both be disabled".into());
        }
        Ok(())
    }
}

impl Configurable for DeftConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "n_layers" => self.n_layers = parse_value(key, value)?,
            "hidden_dim" => self.hidden_dim = parse_value(key, value)?,
            "n_heads" => self.n_heads = parse_value(key, value)?,
            "filter_order" => self.filter_order = parse_value(key, value)?,
            "scales" => self.scales = parse_list(key, value)?,
            "clamp_mode" => self.clamp_mode = one_of(key, value, &CLAMP_MODES)?,
            "d_t" => self.d_t = parse_value(key, value)?,
            "aggregator" => self.aggregator = one_of(key, value, &AGGREGATORS)?,
            "rnn_style" => self.rnn_style = one_of(key, value, &RNN_STYLES)?,
            "filter_heads" => self.filter_heads = parse_value(key, value)?,
            "pooling" => self.pooling = one_of(key, value, &POOLINGS)?,
            "spectral" => self.spectral = one_of(key, value, &SPECTRAL_MODES)?,
            "spatial" => self.spatial = parse_bool(key, value)?,
            "per_scale_coefficients" => self.per_scale_coefficients = parse_bool(key, value)?,
            "laplacian" => self.laplacian = one_of(key, value, &LAPLACIANS)?,
            "binarize" => self.binarize = parse_bool(key, value)?,
            "lambda_mode" => self.lambda_mode = one_of(key, value, &LAMBDA_MODES)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn entries(&self) -> Vec<(String, String)> {
        [
            ("n_layers", self.n_layers.to_string()),
            ("hidden_dim", self.hidden_dim.to_string()),
            ("n_heads", self.n_heads.to_string()),
            ("filter_order", self.filter_order.to_string()),
            ("scales", format_list(&self.scales)),
            ("clamp_mode", name_of(self.clamp_mode, &CLAMP_MODES).into()),
            ("d_t", self.d_t.to_string()),
            ("aggregator", name_of(self.aggregator, &AGGREGATORS).into()),
            ("rnn_style", name_of(self.rnn_style, &RNN_STYLES).into()),
            ("filter_heads", self.filter_heads.to_string()),
            ("pooling", name_of(self.pooling, &POOLINGS).into()),
            ("spectral", name_of(self.spectral, &SPECTRAL_MODES).into()),
            ("spatial", self.spatial.to_string()),
            (
                "per_scale_coefficients",
                self.per_scale_coefficients.to_string(),
            ),
            ("laplacian", name_of(self.laplacian, &LAPLACIANS).into()),
            ("binarize", self.binarize.to_string()),
            (
                "lambda_mode",
                name_of(self.lambda_mode, &LAMBDA_MODES).into(),
            ),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigFile;

    #[test]
    fn default_is_valid_and_round_trips() {
        let c = DeftConfig::default();
        c.validate().unwrap();
        let text = crate::config::render(&c.entries());
        let mut back = DeftConfig {
            hidden_dim: 128,
            ..Default::default()
        };
        ConfigFile::parse(&text)
            .unwrap()
            .apply(&mut [&mut back])
            .unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn search_space_is_enforced() {
        for bad in [
            DeftConfig {
                n_layers: 3,
                ..Default::default()
            },
            DeftConfig {
                hidden_dim: 48,
                ..Default::default()
            },
            DeftConfig {
                filter_order: 5,
                ..Default::default()
            },
            DeftConfig {
                scales: vec![0.05],
                ..Default::default()
            },
            DeftConfig {
                d_t: 15,
                ..Default::default()
            },
            DeftConfig {
                spectral: SpectralMode::Off,
                spatial: false,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().unwrap_err().is_config());
        }
    }

    #[test]
    fn enum_values() {
        let mut c = DeftConfig::default();
        assert!(c.set("aggregator", "gat_style").unwrap());
        assert_eq!(c.aggregator, Aggregator::GatStyle);
        assert!(c.set("aggregator", "gat").is_err());
        assert!(!c.set("unknown", "1").unwrap());
    }
}
