use serde::{Deserialize, Serialize};

use super::NetworkError;
use crate::data::Style;

/// Upper bounds of the span-width buckets: 1, 2, 3, 4, 5–7, 8–15, 16–30,
/// and everything longer in the last bucket.
pub const WIDTH_BUCKETS: [usize; 7] = [1, 2, 3, 4, 7, 15, 30];

/// Bucket index of a span width.
pub fn width_bucket(width: usize) -> usize {
    WIDTH_BUCKETS
        .iter()
        .position(|&hi| width <= hi)
        .unwrap_or(WIDTH_BUCKETS.len() - 1)
}

/// Dimensions, regularization, pruning and optimization settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub style: Style,
    pub word_dim: usize,
    pub char_dim: usize,
    pub char_windows: Vec<usize>,
    pub char_filters: usize,
    pub ext_dim: usize,
    pub lstm_layers: usize,
    pub lstm_hidden: usize,
    pub mlp_dim: usize,
    pub scorer_mlp_dim: usize,
    pub width_dim: usize,
    pub dropout_embed: f64,
    pub dropout_hidden: f64,
    pub dropout_recurrent: f64,
    pub max_span_len: usize,
    pub beam_p: f64,
    pub beam_a: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::span()
    }
}

impl ModelConfig {
    /// Full-size span-style settings.
    pub fn span() -> Self {
        ModelConfig {
            style: Style::Span,
            word_dim: 300,
            char_dim: 8,
            char_windows: vec![3, 4, 5],
            char_filters: 50,
            ext_dim: 0,
            lstm_layers: 3,
            lstm_hidden: 200,
            mlp_dim: 300,
            scorer_mlp_dim: 150,
            width_dim: 20,
            dropout_embed: 0.5,
            dropout_hidden: 0.2,
            dropout_recurrent: 0.4,
            max_span_len: 30,
            beam_p: 0.4,
            beam_a: 0.8,
            lr: 0.001,
            batch_size: 40,
            max_epochs: 600,
        }
    }

    /// Full-size dependency-style settings (arguments of width one).
    pub fn dep() -> Self {
        ModelConfig {
            style: Style::Dep,
            max_span_len: 1,
            ..Self::span()
        }
    }

    pub fn for_style(style: Style) -> Self {
        match style {
            Style::Span => Self::span(),
            Style::Dep => Self::dep(),
        }
    }

    /// A 64-dimensional configuration small enough to train on a CPU in
    /// seconds.
    pub fn toy(style: Style) -> Self {
        ModelConfig {
            word_dim: 64,
            char_dim: 8,
            char_filters: 16,
            lstm_layers: 2,
            lstm_hidden: 32,
            mlp_dim: 64,
            scorer_mlp_dim: 64,
            width_dim: 16,
            dropout_embed: 0.1,
            dropout_hidden: 0.1,
            dropout_recurrent: 0.1,
            lr: 0.002,
            batch_size: 2,
            max_epochs: 300,
            ..Self::for_style(style)
        }
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let dims = [
            ("word_dim", self.word_dim),
            ("char_dim", self.char_dim),
            ("char_filters", self.char_filters),
            ("lstm_layers", self.lstm_layers),
            ("lstm_hidden", self.lstm_hidden),
            ("mlp_dim", self.mlp_dim),
            ("scorer_mlp_dim", self.scorer_mlp_dim),
            ("width_dim", self.width_dim),
            ("max_span_len", self.max_span_len),
            ("batch_size", self.batch_size),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(NetworkError::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        if self.char_windows.is_empty() || self.char_windows.contains(&0) {
            return Err(NetworkError::InvalidConfig(
                "char_windows must be a nonempty list of positive widths".into(),
            ));
        }
        for (name, p) in [
            ("dropout_embed", self.dropout_embed),
            ("dropout_hidden", self.dropout_hidden),
            ("dropout_recurrent", self.dropout_recurrent),
        ] {
            if !(0.0..1.0).contains(&p) {
                return Err(NetworkError::InvalidConfig(format!("{name} must lie in [0, 1)")));
            }
        }
        for (name, b) in [("beam_p", self.beam_p), ("beam_a", self.beam_a)] {
            if !(b > 0.0 && b <= 1.0) {
                return Err(NetworkError::InvalidConfig(format!("{name} must lie in (0, 1]")));
            }
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(NetworkError::InvalidConfig("lr must be positive".into()));
        }
        if self.style == Style::Dep && self.max_span_len != 1 {
            return Err(NetworkError::InvalidConfig(
                "dependency style requires max_span_len = 1".into(),
            ));
        }
        Ok(())
    }

    /// Width of the token representation `[w_char, w_word, w_ext]`.
    pub fn token_dim(&self) -> usize {
        self.char_windows.len() * self.char_filters + self.word_dim + self.ext_dim
    }

    /// Width of the encoder output.
    pub fn context_dim(&self) -> usize {
        2 * self.lstm_hidden
    }

    /// Span-style arguments carry their boundaries, attention head and width.
    pub fn uses_spans(&self) -> bool {
        self.max_span_len > 1
    }

    /// Width of the final argument representation.
    pub fn argument_dim(&self) -> usize {
        if self.uses_spans() {
            3 * self.mlp_dim + self.width_dim
        } else {
            self.mlp_dim
        }
    }
}
