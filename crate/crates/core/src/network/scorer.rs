use rand::Rng;

use super::layers::Linear;
use super::{glorot_uniform, NetworkError};
use crate::autodiff::{ParamId, ParamStore, Tape, Tensor, Var};

/// `φ = w · ReLU(MLP(g))`, one score per row.
#[derive(Debug, Clone, Copy)]
pub struct UnaryScorer {
    pub hidden: Linear,
    pub weight: ParamId,
}

impl UnaryScorer {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let hidden_layer = Linear::new(store, &format!("{name}.mlp"), input_dim, hidden, true, rng);
        let weight = store.add(format!("{name}.w"), glorot_uniform(rng, hidden, 1));
        UnaryScorer {
            hidden: hidden_layer,
            weight,
        }
    }

    /// `m × d` rows to `m × 1` scores.
    pub fn forward(&self, tape: &mut Tape<'_>, x: Var, mask: Option<&Tensor>) -> Result<Var, NetworkError> {
        let h = self.hidden.forward(tape, x)?;
        let mut h = tape.relu(h);
        if let Some(m) = mask {
            h = tape.dropout(h, m)?;
        }
        let w = tape.param(self.weight);
        Ok(tape.matmul(h, w)?)
    }
}

/// Biaffine role scorer
/// `Φ_r(p, a) = g_pᵀ W1_r g_a + W2_rᵀ (g_p ⊕ g_a) + b_r`.
///
/// `W1` is stored as `d_p × (R · d_a)` with role `r` in columns
/// `[r · d_a, (r + 1) · d_a)`, `W2` as `(d_p + d_a) × R`.
#[derive(Debug, Clone, Copy)]
pub struct Biaffine {
    pub bilinear: ParamId,
    pub linear: ParamId,
    pub bias: ParamId,
    pub pred_dim: usize,
    pub arg_dim: usize,
    pub roles: usize,
}

impl Biaffine {
    pub fn new<R: Rng>(store: &mut ParamStore, pred_dim: usize, arg_dim: usize, roles: usize, rng: &mut R) -> Self {
        let bilinear = store.add("biaffine.w1", glorot_uniform(rng, pred_dim, roles * arg_dim));
        let linear = store.add("biaffine.w2", glorot_uniform(rng, pred_dim + arg_dim, roles));
        let bias = store.add("biaffine.b", Tensor::zeros(&[roles]));
        Biaffine {
            bilinear,
            linear,
            bias,
            pred_dim,
            arg_dim,
            roles,
        }
    }

    /// Scores every (predicate, argument) pair. Rows of the result are
    /// ordered predicate-major: row `p · A + a` holds the `R` role scores
    /// of predicate row `p` and argument row `a`.
    pub fn forward(&self, tape: &mut Tape<'_>, gp: Var, ga: Var) -> Result<Var, NetworkError> {
        let (np, na, r) = (tape.shape(gp)[0], tape.shape(ga)[0], self.roles);
        let (dp, da) = (self.pred_dim, self.arg_dim);

        let w1 = tape.param(self.bilinear);
        let left = tape.matmul(gp, w1)?;
        let left = tape.reshape(left, &[np * r, da])?;
        let ga_t = tape.transpose(ga)?;
        // row p·R + r, column a
        let bilinear = tape.matmul(left, ga_t)?;
        let mut blocks = Vec::with_capacity(np);
        for p in 0..np {
            let block = tape.slice(bilinear, 0, p * r, r)?;
            blocks.push(tape.transpose(block)?);
        }
        let bilinear = tape.concat(&blocks, 0)?;

        let w2 = tape.param(self.linear);
        let w2p = tape.slice(w2, 0, 0, dp)?;
        let w2a = tape.slice(w2, 0, dp, da)?;
        let lin_p = tape.matmul(gp, w2p)?;
        let lin_a = tape.matmul(ga, w2a)?;
        let p_rows: Vec<usize> = (0..np).flat_map(|p| std::iter::repeat_n(p, na)).collect();
        let a_rows: Vec<usize> = (0..np).flat_map(|_| 0..na).collect();
        let lin_p = tape.gather_rows(lin_p, &p_rows)?;
        let lin_a = tape.gather_rows(lin_a, &a_rows)?;
        let linear = tape.add(lin_p, lin_a)?;

        let total = tape.add(bilinear, linear)?;
        let b = tape.param(self.bias);
        Ok(tape.add_bias(total, b)?)
    }
}

/// Scores of full tuples: `φ_p + φ_a + Φ_r` for every role except ε, whose
/// column is forced to zero. `phi_p` is `P × 1`, `phi_a` is `A × 1`,
/// `relation` is the `(P · A) × R` output of [`Biaffine::forward`].
pub fn tuple_scores(tape: &mut Tape<'_>, phi_p: Var, phi_a: Var, relation: Var) -> Result<Var, NetworkError> {
    let (np, na) = (tape.shape(phi_p)[0], tape.shape(phi_a)[0]);
    let r = tape.shape(relation)[1];
    let p_rows: Vec<usize> = (0..np).flat_map(|p| std::iter::repeat_n(p, na)).collect();
    let a_rows: Vec<usize> = (0..np).flat_map(|_| 0..na).collect();
    let ones = tape.constant(Tensor::full(&[1, r], 1.0));
    let sp = tape.gather_rows(phi_p, &p_rows)?;
    let sp = tape.matmul(sp, ones)?;
    let sa = tape.gather_rows(phi_a, &a_rows)?;
    let sa = tape.matmul(sa, ones)?;
    let unary = tape.add(sp, sa)?;
    let total = tape.add(unary, relation)?;
    let mut mask = Tensor::full(&[np * na, r], 1.0);
    for row in mask.data_mut().chunks_mut(r) {
        row[0] = 0.0;
    }
    let mask = tape.constant(mask);
    Ok(tape.mul(total, mask)?)
}

/// Scalar form of one tuple score; ε (role 0) always scores zero.
pub fn tuple_score(phi_p: f64, phi_a: f64, relation: f64, role: usize) -> f64 {
    if role == 0 {
        0.0
    } else {
        phi_p + phi_a + relation
    }
}

/// `Σ_rows −log softmax(scores_row)[gold_row]`.
pub fn role_loss(tape: &mut Tape<'_>, scores: Var, gold: &[usize]) -> Result<Var, NetworkError> {
    let log_probs = tape.log_softmax(scores, 1)?;
    let picked = tape.pick(log_probs, gold)?;
    let total = tape.sum(picked);
    Ok(tape.scale(total, -1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn epsilon_is_zero_whatever_the_unaries() {
        assert_eq!(tuple_score(5.0, 7.0, 3.0, 0), 0.0);
        assert_eq!(tuple_score(1.0, 2.0, 3.0, 2), 6.0);
    }

    #[test]
    fn uniform_scores_give_log_r() {
        let mut tape = Tape::new();
        let s = tape.input(Tensor::matrix(1, 3, vec![0.0; 3]));
        let l = role_loss(&mut tape, s, &[1]).unwrap();
        assert!((tape.value(l).item() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn hand_set_bilinear() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = Biaffine::new(&mut store, 2, 2, 1, &mut rng);
        *store.get_mut(b.linear) = Tensor::zeros(&[4, 1]);
        *store.get_mut(b.bilinear) = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        let score = |store: &ParamStore| {
            let mut tape = Tape::with_params(store);
            let gp = tape.constant(Tensor::matrix(1, 2, vec![1.0, 0.0]));
            let ga = tape.constant(Tensor::matrix(1, 2, vec![0.0, 1.0]));
            let out = b.forward(&mut tape, gp, ga).unwrap();
            tape.value(out).item()
        };
        assert_eq!(score(&store), 0.0);
        *store.get_mut(b.bilinear) = Tensor::matrix(2, 2, vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(score(&store), 1.0);
    }
}
