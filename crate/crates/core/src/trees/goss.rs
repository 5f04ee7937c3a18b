//! Gradient-based one-side sampling.

use rand::seq::index;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Rows kept for one boosting round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GossSample<F> {
    /// Largest-gradient rows, ascending row order.
    pub top: Vec<usize>,
    /// Random sample of the remaining rows, ascending row order.
    pub rest: Vec<usize>,
    /// Amplification applied to `rest`: `(1 - a) / b`, or 0 when `b = 0`.
    pub weight: F,
    pub a: F,
    pub b: F,
}

impl<F: Scalar> GossSample<F> {
    /// Per-row weights over `n` rows: 1 for `top`, `weight` for `rest`, 0 otherwise.
    pub fn row_weights(&self, n: usize) -> Vec<F> {
        let mut w = vec![F::zero(); n];
        for &i in &self.top {
            w[i] = F::one();
        }
        for &i in &self.rest {
            w[i] = self.weight;
        }
        w
    }

    /// Union of both sets, ascending.
    pub fn rows(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.top.iter().chain(&self.rest).copied().collect();
        all.sort_unstable();
        all
    }
}

// guards against ceil(0.1 * 30) == 4 from representation error
fn ceil_count<F: Scalar>(x: F) -> usize {
    (x.to_f64_lossy() - 1e-9).ceil().max(0.0) as usize
}

/// Keeps the `ceil(a n)` largest `|g|` (ties by row index) and samples
/// `ceil(b |rest|)` of the others without replacement.
pub fn goss_sample<F: Scalar>(gradients: &[F], a: F, b: F, seed: u64) -> Result<GossSample<F>> {
    if !(a > F::zero() && a <= F::one()) {
        return Err(Error::Argument(format!("top fraction a must lie in (0, 1], got {a}")));
    }
    if !(b >= F::zero() && b <= F::one()) {
        return Err(Error::Argument(format!("sample fraction b must lie in [0, 1], got {b}")));
    }
    let n = gradients.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| gradients[j].abs().total_order(&gradients[i].abs()).then(i.cmp(&j)));
    let n_top = ceil_count(a * F::of_usize(n)).min(n);
    let mut top = order[..n_top].to_vec();
    let remainder = &order[n_top..];
    let n_rest = ceil_count(b * F::of_usize(remainder.len())).min(remainder.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rest: Vec<usize> =
        index::sample(&mut rng, remainder.len(), n_rest).into_iter().map(|k| remainder[k]).collect();
    top.sort_unstable();
    rest.sort_unstable();
    let weight = if b > F::zero() { (F::one() - a) / b } else { F::zero() };
    Ok(GossSample { top, rest, weight, a, b })
}

fn side<F: Scalar>(sum: F, count: F) -> F {
    if count > F::zero() {
        sum * sum / count
    } else {
        F::zero()
    }
}

/// Sampled variance gain of splitting at `x <= d`:
///
/// ```text
/// V(d) = 1/n * [ (G_Al + w G_Bl)^2 / n_l  +  (G_Ar + w G_Br)^2 / n_r ]
/// ```
///
/// with `n_l = |A_l| + w |B_l|` the amplified side count and `n` the total row
/// count. An empty side contributes 0.
pub fn goss_gain<F: Scalar>(values: &[F], gradients: &[F], d: F, sample: &GossSample<F>) -> F {
    let n = values.len();
    let (mut gl, mut gr, mut nl, mut nr) = (F::zero(), F::zero(), F::zero(), F::zero());
    let mut add = |i: usize, w: F| {
        if values[i] <= d {
            gl = gl + w * gradients[i];
            nl = nl + w;
        } else {
            gr = gr + w * gradients[i];
            nr = nr + w;
        }
    };
    for &i in &sample.top {
        add(i, F::one());
    }
    for &i in &sample.rest {
        add(i, sample.weight);
    }
    if n == 0 {
        return F::zero();
    }
    (side(gl, nl) + side(gr, nr)) / F::of_usize(n)
}

/// Full-data variance gain `1/n * [G_l^2 / n_l + G_r^2 / n_r]`.
pub fn variance_gain<F: Scalar>(values: &[F], gradients: &[F], d: F) -> F {
    let n = values.len();
    if n == 0 {
        return F::zero();
    }
    let (mut gl, mut gr, mut nl, mut nr) = (F::zero(), F::zero(), 0usize, 0usize);
    for (&v, &g) in values.iter().zip(gradients) {
        if v <= d {
            gl = gl + g;
            nl += 1;
        } else {
            gr = gr + g;
            nr += 1;
        }
    }
    (side(gl, F::of_usize(nl)) + side(gr, F::of_usize(nr))) / F::of_usize(n)
}
