use rand::Rng;

use super::init::orthogonal;
use super::layers::Linear;
use super::NetworkError;
use crate::autodiff::{ParamId, ParamStore, Tape, Tensor, Var};

/// One LSTM direction. Gates are laid out `[input, forget, output, cell]`.
#[derive(Debug, Clone, Copy)]
pub struct Lstm {
    pub input: Linear,
    pub recurrent: ParamId,
    pub hidden: usize,
}

impl Lstm {
    pub fn new<R: Rng>(store: &mut ParamStore, name: &str, input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let input = Linear::new(store, &format!("{name}.x"), input_dim, 4 * hidden, true, rng);
        let bias = store.get_mut(input.bias.expect("lstm input has a bias"));
        for v in &mut bias.data_mut()[hidden..2 * hidden] {
            *v = 1.0;
        }
        let blocks: Vec<Tensor> = (0..4).map(|_| orthogonal(rng, hidden)).collect();
        let mut data = Vec::with_capacity(hidden * 4 * hidden);
        for i in 0..hidden {
            for b in &blocks {
                data.extend_from_slice(b.row(i));
            }
        }
        let recurrent = store.add(format!("{name}.h"), Tensor::matrix(hidden, 4 * hidden, data));
        Lstm {
            input,
            recurrent,
            hidden,
        }
    }

    /// Runs over the rows of `x` (`n × d`), left to right or right to left.
    /// `mask` (`1 × hidden`) is applied to the previous hidden state at
    /// every step. Returns `n × hidden` in the original row order.
    pub fn forward(
        &self,
        tape: &mut Tape<'_>,
        x: Var,
        reverse: bool,
        mask: Option<&Tensor>,
    ) -> Result<Var, NetworkError> {
        let n = tape.shape(x)[0];
        let h = self.hidden;
        let projected = self.input.forward(tape, x)?;
        let w_h = tape.param(self.recurrent);
        let mut hidden = tape.constant(Tensor::zeros(&[1, h]));
        let mut cell = tape.constant(Tensor::zeros(&[1, h]));
        let mut outputs = vec![hidden; n];
        let order: Vec<usize> = if reverse {
            (0..n).rev().collect()
        } else {
            (0..n).collect()
        };
        for t in order {
            let prev = match mask {
                Some(m) => tape.dropout(hidden, m)?,
                None => hidden,
            };
            let row = tape.slice(projected, 0, t, 1)?;
            let rec = tape.matmul(prev, w_h)?;
            let gates = tape.add(row, rec)?;
            let i = tape.slice(gates, 1, 0, h)?;
            let f = tape.slice(gates, 1, h, h)?;
            let o = tape.slice(gates, 1, 2 * h, h)?;
            let g = tape.slice(gates, 1, 3 * h, h)?;
            let (i, f, o, g) = (tape.sigmoid(i), tape.sigmoid(f), tape.sigmoid(o), tape.tanh(g));
            let keep = tape.mul(f, cell)?;
            let write = tape.mul(i, g)?;
            cell = tape.add(keep, write)?;
            let squashed = tape.tanh(cell);
            hidden = tape.mul(o, squashed)?;
            outputs[t] = hidden;
        }
        Ok(tape.concat(&outputs, 0)?)
    }
}

#[derive(Debug, Clone)]
struct Layer {
    forward: Lstm,
    backward: Lstm,
    gate: Option<Linear>,
    projection: Option<ParamId>,
}

/// Stacked bidirectional LSTM. From the second layer on, each layer output
/// is mixed with its input through a highway gate:
/// `out = g ⊙ h + (1 − g) ⊙ proj(x)`, `g = σ(x · W_g + b_g)`, with `proj`
/// the identity when the widths agree.
#[derive(Debug, Clone)]
pub struct BiHighwayLstm {
    layers: Vec<Layer>,
    hidden: usize,
}

impl BiHighwayLstm {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        input_dim: usize,
        hidden: usize,
        num_layers: usize,
        rng: &mut R,
    ) -> Self {
        let mut layers = Vec::with_capacity(num_layers);
        let mut d = input_dim;
        for k in 0..num_layers {
            let name = format!("encoder.l{k}");
            let forward = Lstm::new(store, &format!("{name}.fwd"), d, hidden, rng);
            let backward = Lstm::new(store, &format!("{name}.bwd"), d, hidden, rng);
            let (gate, projection) = if k == 0 {
                (None, None)
            } else {
                let gate = Linear::new(store, &format!("{name}.gate"), d, 2 * hidden, true, rng);
                let projection = (d != 2 * hidden)
                    .then(|| store.add(format!("{name}.proj"), super::glorot_uniform(rng, d, 2 * hidden)));
                (Some(gate), projection)
            };
            layers.push(Layer {
                forward,
                backward,
                gate,
                projection,
            });
            d = 2 * hidden;
        }
        BiHighwayLstm { layers, hidden }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// `recurrent_masks[2k]` and `[2k + 1]` are the forward and backward
    /// masks of layer `k`.
    pub fn forward(
        &self,
        tape: &mut Tape<'_>,
        x: Var,
        recurrent_masks: &[Option<Tensor>],
    ) -> Result<Var, NetworkError> {
        let mut input = x;
        for (k, layer) in self.layers.iter().enumerate() {
            let mask = |j: usize| recurrent_masks.get(2 * k + j).and_then(Option::as_ref);
            let fwd = layer.forward.forward(tape, input, false, mask(0))?;
            let bwd = layer.backward.forward(tape, input, true, mask(1))?;
            let mut out = tape.concat(&[fwd, bwd], 1)?;
            if let Some(gate) = layer.gate {
                let pre = gate.forward(tape, input)?;
                let g = tape.sigmoid(pre);
                let carry = match layer.projection {
                    Some(p) => {
                        let p = tape.param(p);
                        tape.matmul(input, p)?
                    }
                    None => input,
                };
                let diff = tape.sub(out, carry)?;
                let gated = tape.mul(g, diff)?;
                out = tape.add(carry, gated)?;
            }
            input = out;
        }
        Ok(input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(input_dim: usize) -> (ParamStore, BiHighwayLstm) {
        let mut store = ParamStore::new();
        let enc = BiHighwayLstm::new(&mut store, input_dim, 3, 3, &mut ChaCha8Rng::seed_from_u64(4));
        (store, enc)
    }

    fn run(store: &ParamStore, enc: &BiHighwayLstm, x: Tensor) -> Tensor {
        let mut tape = Tape::with_params(store);
        let xv = tape.constant(x);
        let out = enc.forward(&mut tape, xv, &[]).unwrap();
        tape.value(out).clone()
    }

    #[test]
    fn output_is_n_by_two_hidden() {
        let (store, enc) = setup(5);
        assert_eq!(run(&store, &enc, Tensor::full(&[1, 5], 0.3)).shape(), &[1, 6]);
        assert_eq!(run(&store, &enc, Tensor::full(&[4, 5], 0.3)).shape(), &[4, 6]);
    }

    #[test]
    fn zero_parameters_give_finite_output() {
        let (mut store, enc) = setup(5);
        let ids: Vec<_> = store.ids().collect();
        for id in ids {
            let shape = store.get(id).shape().to_vec();
            *store.get_mut(id) = Tensor::zeros(&shape);
        }
        let out = run(&store, &enc, Tensor::full(&[3, 5], 1.0));
        assert!(out.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn forget_gate_bias_starts_at_one() {
        let (store, _) = setup(5);
        let b = store.get(store.id("encoder.l0.fwd.x.b").unwrap());
        assert_eq!(&b.data()[3..6], &[1.0; 3]);
        assert_eq!(&b.data()[..3], &[0.0; 3]);
    }

    #[test]
    fn directions_see_only_their_side() {
        let mut store = ParamStore::new();
        let lstm = Lstm::new(&mut store, "l", 2, 3, &mut ChaCha8Rng::seed_from_u64(2));
        let out = |x: Tensor, reverse: bool| {
            let mut tape = Tape::with_params(&store);
            let xv = tape.constant(x);
            let y = lstm.forward(&mut tape, xv, reverse, None).unwrap();
            tape.value(y).clone()
        };
        let a = Tensor::matrix(3, 2, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let b = Tensor::matrix(3, 2, vec![0.1, 0.2, 0.3, 0.4, -0.5, 0.9]);
        assert_eq!(out(a.clone(), false).row(1), out(b.clone(), false).row(1));
        assert_ne!(out(a.clone(), true).row(1), out(b.clone(), true).row(1));
        let c = Tensor::matrix(3, 2, vec![0.7, -0.2, 0.3, 0.4, 0.5, 0.6]);
        assert_eq!(out(a.clone(), true).row(1), out(c.clone(), true).row(1));
        assert_ne!(out(a, false).row(1), out(c, false).row(1));
    }
}
