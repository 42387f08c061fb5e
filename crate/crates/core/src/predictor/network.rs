//! GRU Q-network over a window of multi-hot arrival vectors, with
//! backpropagation through time and an Adam optimiser.

use ndarray::{s, Array1, Array2, Axis, Zip};
use rand::Rng;

/// Gate blocks are stacked `[reset, update, candidate]` along the first axis
/// of the `3h x _` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub w_ih: Array2<f64>,
    pub w_hh: Array2<f64>,
    pub b_ih: Array1<f64>,
    pub b_hh: Array1<f64>,
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
}

/// Gradients, same shapes as the network.
pub type Grads = QNetwork;

struct StepCache {
    x: Array2<f64>,
    h_prev: Array2<f64>,
    r: Array2<f64>,
    z: Array2<f64>,
    n: Array2<f64>,
    gh_n: Array2<f64>,
}

pub struct Forward {
    steps: Vec<StepCache>,
    h_last: Array2<f64>,
    /// `services x batch` Q-values.
    pub q: Array2<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl QNetwork {
    pub fn new<R: Rng>(inputs: usize, hidden: usize, init_scale: f64, rng: &mut R) -> Self {
        let mut u = |r: usize, c: usize| Array2::from_shape_fn((r, c), |_| rng.gen_range(-init_scale..=init_scale));
        let w_ih = u(3 * hidden, inputs);
        let w_hh = u(3 * hidden, hidden);
        let b_ih = u(3 * hidden, 1).remove_axis(Axis(1));
        let b_hh = u(3 * hidden, 1).remove_axis(Axis(1));
        let w_out = u(inputs, hidden);
        let b_out = u(inputs, 1).remove_axis(Axis(1));
        QNetwork { w_ih, w_hh, b_ih, b_hh, w_out, b_out }
    }

    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        QNetwork {
            w_ih: Array2::zeros((3 * hidden, inputs)),
            w_hh: Array2::zeros((3 * hidden, hidden)),
            b_ih: Array1::zeros(3 * hidden),
            b_hh: Array1::zeros(3 * hidden),
            w_out: Array2::zeros((inputs, hidden)),
            b_out: Array1::zeros(inputs),
        }
    }

    pub fn zeros_like(&self) -> Self {
        QNetwork::zeros(self.inputs(), self.hidden())
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.ncols()
    }

    pub fn inputs(&self) -> usize {
        self.w_ih.ncols()
    }

    /// Flat views of every parameter tensor, in a fixed order.
    pub fn tensors(&self) -> [&[f64]; 6] {
        [
            self.w_ih.as_slice().expect("standard layout"),
            self.w_hh.as_slice().expect("standard layout"),
            self.b_ih.as_slice().expect("standard layout"),
            self.b_hh.as_slice().expect("standard layout"),
            self.w_out.as_slice().expect("standard layout"),
            self.b_out.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.w_ih.as_slice_mut().expect("standard layout"),
            self.w_hh.as_slice_mut().expect("standard layout"),
            self.b_ih.as_slice_mut().expect("standard layout"),
            self.b_hh.as_slice_mut().expect("standard layout"),
            self.w_out.as_slice_mut().expect("standard layout"),
            self.b_out.as_slice_mut().expect("standard layout"),
        ]
    }

    /// Runs the recurrence over `xs` (each `inputs x batch`, oldest first).
    pub fn forward(&self, xs: &[Array2<f64>]) -> Forward {
        let h = self.hidden();
        let batch = xs.first().map_or(1, |x| x.ncols());
        let mut h_prev = Array2::<f64>::zeros((h, batch));
        let mut steps = Vec::with_capacity(xs.len());
        let bi = self.b_ih.view().insert_axis(Axis(1));
        let bh = self.b_hh.view().insert_axis(Axis(1));
        for x in xs {
            let gi = self.w_ih.dot(x) + bi;
            let gh = self.w_hh.dot(&h_prev) + bh;
            let r = (&gi.slice(s![0..h, ..]) + &gh.slice(s![0..h, ..])).mapv(sigmoid);
            let z = (&gi.slice(s![h..2 * h, ..]) + &gh.slice(s![h..2 * h, ..])).mapv(sigmoid);
            let gh_n = gh.slice(s![2 * h.., ..]).to_owned();
            let n = (&gi.slice(s![2 * h.., ..]) + &(&r * &gh_n)).mapv(f64::tanh);
            let h_next = &n + &(&z * &(&h_prev - &n));
            steps.push(StepCache { x: x.clone(), h_prev, r, z, n, gh_n });
            h_prev = h_next;
        }
        let q = self.w_out.dot(&h_prev) + self.b_out.view().insert_axis(Axis(1));
        Forward { steps, h_last: h_prev, q }
    }

    /// Gradients of a scalar loss given its derivative `dq` w.r.t. the
    /// output of `fwd`.
    pub fn backward(&self, fwd: &Forward, dq: &Array2<f64>) -> Grads {
        let h = self.hidden();
        let mut g = self.zeros_like();
        g.w_out = dq.dot(&fwd.h_last.t());
        g.b_out = dq.sum_axis(Axis(1));
        let mut dh = self.w_out.t().dot(dq);
        let batch = dq.ncols();
        let mut dgi = Array2::<f64>::zeros((3 * h, batch));
        let mut dgh = Array2::<f64>::zeros((3 * h, batch));
        for st in fwd.steps.iter().rev() {
            // h' = n + z (h_prev - n)
            let dn = &dh * &st.z.mapv(|z| 1.0 - z);
            let dz = &dh * &(&st.h_prev - &st.n);
            let mut dh_prev = &dh * &st.z;
            let dn_pre = &dn * &st.n.mapv(|n| 1.0 - n * n);
            let dr = &dn_pre * &st.gh_n;
            let dr_pre = &dr * &st.r.mapv(|r| r * (1.0 - r));
            let dz_pre = &dz * &st.z.mapv(|z| z * (1.0 - z));
            dgi.slice_mut(s![0..h, ..]).assign(&dr_pre);
            dgi.slice_mut(s![h..2 * h, ..]).assign(&dz_pre);
            dgi.slice_mut(s![2 * h.., ..]).assign(&dn_pre);
            dgh.slice_mut(s![0..h, ..]).assign(&dr_pre);
            dgh.slice_mut(s![h..2 * h, ..]).assign(&dz_pre);
            dgh.slice_mut(s![2 * h.., ..]).assign(&(&dn_pre * &st.r));
            g.w_ih += &dgi.dot(&st.x.t());
            g.b_ih += &dgi.sum_axis(Axis(1));
            g.w_hh += &dgh.dot(&st.h_prev.t());
            g.b_hh += &dgh.sum_axis(Axis(1));
            dh_prev += &self.w_hh.t().dot(&dgh);
            dh = dh_prev;
        }
        g
    }
}

/// Scales `g` down so its global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_grad_norm(g: &mut Grads, max_norm: f64) -> f64 {
    let norm = g.tensors().iter().flat_map(|t| t.iter()).map(|v| v * v).sum::<f64>().sqrt();
    if norm > max_norm && norm.is_finite() {
        let k = max_norm / norm;
        for t in g.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= k);
        }
    }
    norm
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: QNetwork,
    v: QNetwork,
}

impl Adam {
    pub fn new(net: &QNetwork, lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: net.zeros_like(), v: net.zeros_like() }
    }

    pub fn step(&mut self, net: &mut QNetwork, g: &Grads) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let (lr, eps) = (self.lr, self.eps);
        for (((p, g), m), v) in net.tensors_mut().into_iter().zip(g.tensors()).zip(self.m.tensors_mut()).zip(self.v.tensors_mut())
        {
            Zip::from(ndarray::ArrayViewMut1::from(p))
                .and(ndarray::ArrayView1::from(g))
                .and(ndarray::ArrayViewMut1::from(m))
                .and(ndarray::ArrayViewMut1::from(v))
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inputs(rng: &mut ChaCha8Rng, s: usize, b: usize, m: usize) -> Vec<Array2<f64>> {
        (0..m).map(|_| Array2::from_shape_fn((s, b), |_| if rng.gen_bool(0.4) { 1.0 } else { 0.0 })).collect()
    }

    /// Loss = sum(q * w) for fixed random weights w, so dq = w.
    fn loss(net: &QNetwork, xs: &[Array2<f64>], w: &Array2<f64>) -> f64 {
        (&net.forward(xs).q * w).sum()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = QNetwork::new(3, 4, 0.5, &mut rng);
        let xs = inputs(&mut rng, 3, 2, 3);
        let w = Array2::from_shape_fn((3, 2), |_| rng.gen_range(-1.0..1.0));
        let g = net.backward(&net.forward(&xs), &w);
        let eps = 1e-6;
        for ti in 0..6 {
            let n = net.tensors()[ti].len();
            for k in 0..n {
                let mut plus = net.clone();
                plus.tensors_mut()[ti][k] += eps;
                let mut minus = net.clone();
                minus.tensors_mut()[ti][k] -= eps;
                let numeric = (loss(&plus, &xs, &w) - loss(&minus, &xs, &w)) / (2.0 * eps);
                let analytic = g.tensors()[ti][k];
                assert!((numeric - analytic).abs() < 1e-6, "tensor {ti} elem {k}: {numeric} vs {analytic}");
            }
        }
    }

    #[test]
    fn outputs_have_service_length_and_are_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = QNetwork::new(20, 8, 0.08, &mut rng);
        let xs = inputs(&mut rng, 20, 5, 4);
        let q = net.forward(&xs).q;
        assert_eq!(q.dim(), (20, 5));
        assert!(q.iter().all(|v| v.is_finite()));
        assert!(net.tensors().iter().flat_map(|t| t.iter()).all(|v| v.abs() <= 0.08));
    }

    #[test]
    fn adam_fits_a_fixed_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = QNetwork::new(4, 6, 0.08, &mut rng);
        let xs = inputs(&mut rng, 4, 3, 3);
        let target = Array2::from_elem((4, 3), 0.7);
        let mut opt = Adam::new(&net, 1e-2);
        let mut last = f64::INFINITY;
        for _ in 0..500 {
            let f = net.forward(&xs);
            let diff = &f.q - &target;
            last = diff.mapv(|d| d * d).mean().unwrap();
            let mut g = net.backward(&f, &(diff * (2.0 / 12.0)));
            clip_grad_norm(&mut g, 10.0);
            opt.step(&mut net, &g);
        }
        assert!(last < 1e-4, "{last}");
    }

    #[test]
    fn clipping_bounds_the_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut g = QNetwork::new(3, 2, 5.0, &mut rng);
        let before = clip_grad_norm(&mut g, 1.0);
        assert!(before > 1.0);
        let after = g.tensors().iter().flat_map(|t| t.iter()).map(|v| v * v).sum::<f64>().sqrt();
        assert!((after - 1.0).abs() < 1e-12);
    }
}
