use rand::Rng;

use super::layers::Linear;
use super::model::{DropoutMasks, SentenceInput};
use super::{glorot_uniform, ModelConfig, NetworkError};
use crate::autodiff::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::corpus::{EmbeddingMatrix, PAD};

/// Context-independent token vectors `x = [w_char, w_word, w_ext]`.
///
/// `w_char` runs one convolution per window width over the character
/// embeddings and max-pools each over time. Words shorter than a window are
/// right-padded with the PAD character.
#[derive(Debug, Clone)]
pub struct TokenEmbedder {
    pub words: ParamId,
    pub chars: ParamId,
    pub convs: Vec<(usize, Linear)>,
    char_dim: usize,
    ext_dim: usize,
}

impl TokenEmbedder {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        config: &ModelConfig,
        num_words: usize,
        num_chars: usize,
        pretrained: Option<&EmbeddingMatrix>,
        rng: &mut R,
    ) -> Result<Self, NetworkError> {
        let word_table = match pretrained {
            Some(m) => {
                if m.rows.shape() != [num_words, config.word_dim] {
                    return Err(NetworkError::InvalidConfig(format!(
                        "pretrained embeddings have shape {:?}, model expects [{num_words}, {}]",
                        m.rows.shape(),
                        config.word_dim
                    )));
                }
                m.rows.clone()
            }
            None => glorot_uniform(rng, num_words, config.word_dim),
        };
        let words = store.add("token.words", word_table);
        let chars = store.add("token.chars", glorot_uniform(rng, num_chars, config.char_dim));
        let convs = config
            .char_windows
            .iter()
            .map(|&w| {
                let conv = Linear::new(
                    store,
                    &format!("token.conv{w}"),
                    w * config.char_dim,
                    config.char_filters,
                    true,
                    rng,
                );
                (w, conv)
            })
            .collect();
        Ok(TokenEmbedder {
            words,
            chars,
            convs,
            char_dim: config.char_dim,
            ext_dim: config.ext_dim,
        })
    }

    /// Character CNN output, one row per token.
    pub fn char_features(&self, tape: &mut Tape<'_>, chars: &[Vec<usize>]) -> Result<Var, NetworkError> {
        let mut pooled = Vec::with_capacity(self.convs.len());
        for &(w, conv) in &self.convs {
            let mut ids = Vec::new();
            let mut segments = Vec::with_capacity(chars.len());
            let mut offset = 0;
            for word in chars {
                let mut padded = word.clone();
                if padded.len() < w {
                    padded.resize(w, PAD);
                }
                let positions = padded.len() - w + 1;
                for p in 0..positions {
                    ids.extend_from_slice(&padded[p..p + w]);
                }
                segments.push((offset, positions));
                offset += positions;
            }
            let emb = tape.lookup(self.chars, &ids)?;
            let windows = tape.reshape(emb, &[offset, w * self.char_dim])?;
            let conv = conv.forward(tape, windows)?;
            pooled.push(tape.segment_max(conv, &segments)?);
        }
        Ok(tape.concat(&pooled, 1)?)
    }

    pub fn forward(
        &self,
        tape: &mut Tape<'_>,
        input: &SentenceInput,
        masks: Option<&DropoutMasks>,
    ) -> Result<Var, NetworkError> {
        let n = input.words.len();
        let mut chars = self.char_features(tape, &input.chars)?;
        let mut words = tape.lookup(self.words, &input.words)?;
        if let Some(m) = masks {
            if let Some(mask) = &m.chars {
                chars = tape.dropout(chars, mask)?;
            }
            if let Some(mask) = &m.words {
                words = tape.dropout(words, mask)?;
            }
        }
        let mut parts = vec![chars, words];
        if self.ext_dim > 0 {
            let ext = match &input.external {
                Some(t) if t.shape() == [n, self.ext_dim] => t.clone(),
                Some(t) => {
                    return Err(NetworkError::InvalidConfig(format!(
                        "external vectors have shape {:?}, expected [{n}, {}]",
                        t.shape(),
                        self.ext_dim
                    )))
                }
                None => Tensor::zeros(&[n, self.ext_dim]),
            };
            parts.push(tape.constant(ext));
        }
        Ok(tape.concat(&parts, 1)?)
    }
}
