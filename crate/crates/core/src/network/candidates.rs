use rand::Rng;

use super::config::{width_bucket, WIDTH_BUCKETS};
use super::layers::Linear;
use super::{glorot_uniform, NetworkError};
use crate::autodiff::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::data::SpanRef;

/// Span representation `[g_START, g_END, h_λ, size(λ)]`.
///
/// The head vector `h_λ` is an attention average of the argument vectors
/// inside the span, with per-token logits `μ_t = w_attn · ReLU(MLP_attn(g_t))`.
/// `size(λ)` is a learned embedding of the bucketed width.
#[derive(Debug, Clone, Copy)]
pub struct SpanEncoder {
    pub attn_mlp: Linear,
    pub attn_weight: ParamId,
    pub widths: ParamId,
}

impl SpanEncoder {
    pub fn new<R: Rng>(store: &mut ParamStore, input_dim: usize, hidden: usize, width_dim: usize, rng: &mut R) -> Self {
        let attn_mlp = Linear::new(store, "span.attn_mlp", input_dim, hidden, true, rng);
        let attn_weight = store.add("span.attn_w", glorot_uniform(rng, hidden, 1));
        let widths = store.add("span.widths", glorot_uniform(rng, WIDTH_BUCKETS.len(), width_dim));
        SpanEncoder {
            attn_mlp,
            attn_weight,
            widths,
        }
    }

    /// Attention logits `μ`, one per token (`n × 1`).
    pub fn attention_logits(&self, tape: &mut Tape<'_>, g: Var) -> Result<Var, NetworkError> {
        let hidden = self.attn_mlp.forward(tape, g)?;
        let hidden = tape.relu(hidden);
        let w = tape.param(self.attn_weight);
        Ok(tape.matmul(hidden, w)?)
    }

    /// Softmax weights `ν` over the tokens of `span` (`width × 1`).
    pub fn attention_weights(&self, tape: &mut Tape<'_>, logits: Var, span: SpanRef) -> Result<Var, NetworkError> {
        let mu = tape.slice(logits, 0, span.start - 1, span.width())?;
        Ok(tape.softmax(mu, 0)?)
    }

    /// `h_λ = Σ_t ν_t · g_t` for one span (`1 × d`).
    pub fn head(&self, tape: &mut Tape<'_>, g: Var, logits: Var, span: SpanRef) -> Result<Var, NetworkError> {
        let nu = self.attention_weights(tape, logits, span)?;
        let nu_row = tape.transpose(nu)?;
        let inside = tape.slice(g, 0, span.start - 1, span.width())?;
        Ok(tape.matmul(nu_row, inside)?)
    }

    /// One row per span. `width_mask`, when given, drops out the width
    /// features (`spans × width_dim`).
    pub fn forward(
        &self,
        tape: &mut Tape<'_>,
        g: Var,
        spans: &[SpanRef],
        width_mask: Option<&Tensor>,
    ) -> Result<Var, NetworkError> {
        let logits = self.attention_logits(tape, g)?;
        let starts: Vec<usize> = spans.iter().map(|s| s.start - 1).collect();
        let ends: Vec<usize> = spans.iter().map(|s| s.end - 1).collect();
        let buckets: Vec<usize> = spans.iter().map(|s| width_bucket(s.width())).collect();
        let g_start = tape.gather_rows(g, &starts)?;
        let g_end = tape.gather_rows(g, &ends)?;
        let mut heads = Vec::with_capacity(spans.len());
        for &span in spans {
            heads.push(if span.width() == 1 {
                tape.slice(g, 0, span.start - 1, 1)?
            } else {
                self.head(tape, g, logits, span)?
            });
        }
        let heads = tape.concat(&heads, 0)?;
        let mut widths = tape.lookup(self.widths, &buckets)?;
        if let Some(mask) = width_mask {
            widths = tape.dropout(widths, mask)?;
        }
        Ok(tape.concat(&[g_start, g_end, heads, widths], 1)?)
    }
}
