//! Second-order input jets carried on the reverse tape.
//!
//! A jet `(x₀, x₁, x₂)` holds a value and its first and second derivatives
//! with respect to one scalar network input `t`. Each component is a tape
//! node, so anything built from jets (an ODE residual, say) can still be
//! differentiated with respect to the network parameters by one reverse
//! sweep.
//!
//! Propagation rules:
//!
//! * affine `z = w·x + b`: `(w·x₀ + b, w·x₁, w·x₂)`
//! * `y = tanh(z)` with `s = 1 − tanh²z₀`:
//!   `(tanh z₀, s·z₁, s·z₂ − 2·tanh z₀·s·z₁²)`
//!
//! Layers are laid out block-wise (all values, then all first derivatives,
//! then all second derivatives) so that each neuron's pre-activation is a
//! single [`Tape::dot`] node over contiguous ranges.

use super::{Tape, Var, VarRange};

/// Second-order jet of one scalar quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Jet2 {
    pub val: Var,
    pub d1: Var,
    pub d2: Var,
}

/// Jets of a whole layer, stored as three contiguous blocks.
#[derive(Clone, Copy, Debug)]
pub struct JetBlock {
    pub val: VarRange,
    pub d1: VarRange,
    pub d2: VarRange,
}

impl JetBlock {
    pub fn len(&self) -> usize {
        self.val.len()
    }

    pub fn is_empty(&self) -> bool {
        self.val.is_empty()
    }

    pub fn get(&self, i: usize) -> Jet2 {
        Jet2 {
            val: self.val.get(i),
            d1: self.d1.get(i),
            d2: self.d2.get(i),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

/// Tape view of one dense layer: `fan_out × fan_in` row-major weights and
/// `fan_out` biases.
#[derive(Clone, Copy, Debug)]
pub struct DenseLayer {
    pub weights: VarRange,
    pub biases: VarRange,
    pub fan_in: usize,
    pub fan_out: usize,
    pub activation: Activation,
}

impl DenseLayer {
    fn row(&self, i: usize) -> VarRange {
        self.weights.slice(i * self.fan_in, self.fan_in)
    }
}

fn affine(tape: &mut Tape, layer: &DenseLayer, x: VarRange, with_bias: bool) -> VarRange {
    assert_eq!(x.len(), layer.fan_in, "layer input width");
    let mut first = None;
    for i in 0..layer.fan_out {
        let bias = with_bias.then(|| layer.biases.get(i));
        let v = tape.dot(layer.row(i), x, bias);
        first.get_or_insert(v);
    }
    contiguous(first, layer.fan_out)
}

fn contiguous(first: Option<Var>, len: usize) -> VarRange {
    let start = first.expect("empty layer").index();
    VarRange::new(start, len)
}

/// Plain (value-only) forward pass through `layers` on the tape.
pub fn forward(tape: &mut Tape, layers: &[DenseLayer], input: VarRange) -> VarRange {
    let mut x = input;
    for layer in layers {
        let z = affine(tape, layer, x, true);
        x = match layer.activation {
            Activation::Identity => z,
            Activation::Tanh => {
                let mut first = None;
                for v in z.iter() {
                    let y = tape.tanh(v);
                    first.get_or_insert(y);
                }
                contiguous(first, z.len())
            }
        };
    }
    x
}

fn affine_jet(tape: &mut Tape, layer: &DenseLayer, x: &JetBlock) -> JetBlock {
    JetBlock {
        val: affine(tape, layer, x.val, true),
        d1: affine(tape, layer, x.d1, false),
        d2: affine(tape, layer, x.d2, false),
    }
}

fn tanh_jet(tape: &mut Tape, z: &JetBlock) -> JetBlock {
    let n = z.len();
    let y0 = {
        let mut first = None;
        for v in z.val.iter() {
            first.get_or_insert(tape.tanh(v));
        }
        contiguous(first, n)
    };
    // s = 1 − y0²
    let s = {
        let mut first = None;
        for i in 0..n {
            let y = tape.value(y0.get(i));
            first.get_or_insert(tape.custom(1.0 - y * y, &[(y0.get(i), -2.0 * y)]));
        }
        contiguous(first, n)
    };
    let y1 = {
        let mut first = None;
        for i in 0..n {
            first.get_or_insert(tape.mul(s.get(i), z.d1.get(i)));
        }
        contiguous(first, n)
    };
    // y2 = s·z2 − 2·y0·s·z1²
    let y2 = {
        let mut first = None;
        for i in 0..n {
            let (sv, y0v) = (tape.value(s.get(i)), tape.value(y0.get(i)));
            let (z1, z2) = (tape.value(z.d1.get(i)), tape.value(z.d2.get(i)));
            let value = sv * z2 - 2.0 * y0v * sv * z1 * z1;
            let node = tape.custom(
                value,
                &[
                    (s.get(i), z2 - 2.0 * y0v * z1 * z1),
                    (z.d2.get(i), sv),
                    (y0.get(i), -2.0 * sv * z1 * z1),
                    (z.d1.get(i), -4.0 * y0v * sv * z1),
                ],
            );
            first.get_or_insert(node);
        }
        contiguous(first, n)
    };
    JetBlock {
        val: y0,
        d1: y1,
        d2: y2,
    }
}

/// Pushes an input jet through `layers`.
pub fn jet_forward(tape: &mut Tape, layers: &[DenseLayer], input: JetBlock) -> JetBlock {
    let mut x = input;
    for layer in layers {
        let z = affine_jet(tape, layer, &x);
        x = match layer.activation {
            Activation::Identity => z,
            Activation::Tanh => tanh_jet(tape, &z),
        };
    }
    x
}

/// `(u(t), u′(t), u″(t))` of a scalar-input, scalar-output network, each a
/// tape node differentiable with respect to the layer parameters.
///
/// Panics if the network is not 1 → 1.
pub fn jet_propagate(tape: &mut Tape, layers: &[DenseLayer], t: f64) -> Jet2 {
    let input = JetBlock {
        val: tape.constants_from(&[t]),
        d1: tape.constants_from(&[1.0]),
        d2: tape.constants_from(&[0.0]),
    };
    let out = jet_forward(tape, layers, input);
    assert_eq!(out.len(), 1, "jet_propagate expects a scalar output");
    out.get(0)
}
