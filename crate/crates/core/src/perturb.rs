//! Input-space perturbations.
//!
//! - [`fgsm`]: one signed-gradient *ascent* step on the loss,
//!   `x + ε·sign(∇ₓ CE(x, y))`, with `sign(0) = 0`.
//! - [`cfgm`]: the class-wise fast gradient method, one plain gradient
//!   *descent* step on the loss toward a chosen class `c`,
//!   `x − α·∇ₓ CE(x, y_c)`. Applied to current-task inputs with targets drawn
//!   from earlier tasks, it yields pseudo-samples that the network already
//!   scores as those earlier classes.
//!
//! Gradients are per sample: row `i` of the step depends only on row `i` of
//! the input. Neither function touches the model parameters.

use crate::model::MlpParams;
use crate::objective::{ce_with, Reduction};
use crate::{Error, Matrix, Result, Rng};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbConfig {
    /// FGSM ∞-norm budget.
    pub epsilon: f64,
    /// CFGM step size.
    pub cfgm_alpha: f64,
    /// Input range to clamp perturbed samples into.
    pub clip: Option<(f64, f64)>,
}

impl PerturbConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(Error::config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.cfgm_alpha > 0.0) {
            return Err(Error::config(format!("cfgm alpha must be > 0, got {}", self.cfgm_alpha)));
        }
        if let Some((lo, hi)) = self.clip {
            if !(lo < hi) {
                return Err(Error::config(format!("empty clip range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// How CFGM picks the target class for each row.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetPolicy {
    /// Independent uniform draw over the previous classes for every row.
    #[default]
    Uniform,
    /// Cycle through the previous classes starting at a random offset.
    RoundRobin,
}

/// Per-sample input gradient `∇ₓ CE(xᵢ, yᵢ)` for every row.
pub fn input_gradient(model: &MlpParams, x: &Matrix, labels: &[usize]) -> Result<Matrix> {
    let trace = model.forward(x)?;
    let out = ce_with(trace.logits(), labels, Reduction::Sum)?;
    Ok(model.backward(&trace, &out.logit_grad)?.input_grad)
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `x + ε·sign(grad)` with `sign(0) = 0`.
pub fn fgsm_step(x: &Matrix, grad: &Matrix, epsilon: f64) -> Result<Matrix> {
    if !(epsilon >= 0.0) {
        return Err(Error::config(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if x.shape() != grad.shape() {
        return Err(Error::shape("fgsm", format!("{:?} vs {:?}", x.shape(), grad.shape())));
    }
    if epsilon == 0.0 {
        return Ok(x.clone());
    }
    x.add(&fgsm_delta(grad, epsilon))
}

/// The perturbation `δ = ε·sign(grad)`; every entry is exactly `0` or `±ε`.
pub fn fgsm_delta(grad: &Matrix, epsilon: f64) -> Matrix {
    grad.map(|g| epsilon * sign(g))
}

/// Fast gradient sign method: a loss-increasing step of ∞-norm at most `epsilon`.
pub fn fgsm(model: &MlpParams, x: &Matrix, labels: &[usize], epsilon: f64) -> Result<Matrix> {
    let grad = input_gradient(model, x, labels)?;
    fgsm_step(x, &grad, epsilon)
}

/// One CFGM step moving every row toward class `target`.
pub fn cfgm(
    model: &MlpParams,
    x: &Matrix,
    target: usize,
    alpha: f64,
    clip: Option<(f64, f64)>,
) -> Result<Matrix> {
    cfgm_targets(model, x, &vec![target; x.rows()], alpha, clip)
}

/// One CFGM step with a target class per row: `x − α·∇ₓ CE(x, y_target)`,
/// optionally clamped to `clip`.
pub fn cfgm_targets(
    model: &MlpParams,
    x: &Matrix,
    targets: &[usize],
    alpha: f64,
    clip: Option<(f64, f64)>,
) -> Result<Matrix> {
    if !(alpha > 0.0) {
        return Err(Error::config(format!("cfgm alpha must be > 0, got {alpha}")));
    }
    let k = model.class_count();
    if let Some(&bad) = targets.iter().find(|&&c| c >= k) {
        return Err(Error::config(format!("target class {bad} out of range for {k} classes")));
    }
    let grad = input_gradient(model, x, targets)?;
    let mut out = x.clone();
    out.axpy(-alpha, &grad)?;
    if let Some((lo, hi)) = clip {
        for v in out.as_mut_slice() {
            *v = v.clamp(lo, hi);
        }
    }
    Ok(out)
}

/// Assigns each row a target from `previous_classes` and applies [`cfgm_targets`].
///
/// Returns the perturbed batch and its synthetic labels. On the first task
/// there are no previous classes and the caller must skip this term.
pub fn cfgm_batch(
    model: &MlpParams,
    x: &Matrix,
    previous_classes: &[usize],
    rng: &mut Rng,
    alpha: f64,
    clip: Option<(f64, f64)>,
    policy: TargetPolicy,
) -> Result<(Matrix, Vec<usize>)> {
    let targets = assign_targets(x.rows(), previous_classes, rng, policy)?;
    let x_cls = cfgm_targets(model, x, &targets, alpha, clip)?;
    Ok((x_cls, targets))
}

pub fn assign_targets(
    n: usize,
    previous_classes: &[usize],
    rng: &mut Rng,
    policy: TargetPolicy,
) -> Result<Vec<usize>> {
    if previous_classes.is_empty() {
        return Err(Error::config("cfgm needs at least one previous class"));
    }
    let m = previous_classes.len();
    Ok(match policy {
        TargetPolicy::Uniform => (0..n).map(|_| previous_classes[rng.uniform_int(m)]).collect(),
        TargetPolicy::RoundRobin => {
            let start = rng.uniform_int(m);
            (0..n).map(|i| previous_classes[(start + i) % m]).collect()
        }
    })
}

/// Running per-class input means, for measuring how close pseudo-samples land
/// to the real class centroids. Diagnostic only.
#[derive(Clone, Debug)]
pub struct ClassMeanTracker {
    sums: Vec<Vec<f64>>,
    counts: Vec<usize>,
}

impl ClassMeanTracker {
    pub fn new(classes: usize, dim: usize) -> Self {
        ClassMeanTracker {
            sums: vec![vec![0.0; dim]; classes],
            counts: vec![0; classes],
        }
    }

    pub fn observe(&mut self, x: &Matrix, labels: &[usize]) {
        for (row, &c) in x.iter_rows().zip(labels) {
            for (s, &v) in self.sums[c].iter_mut().zip(row) {
                *s += v;
            }
            self.counts[c] += 1;
        }
    }

    pub fn mean(&self, class: usize) -> Option<Vec<f64>> {
        let n = self.counts[class];
        (n > 0).then(|| self.sums[class].iter().map(|s| s / n as f64).collect())
    }

    /// Euclidean distance from `x` to the running mean of `class`.
    pub fn distance(&self, x: &[f64], class: usize) -> Option<f64> {
        let mean = self.mean(class)?;
        Some(x.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{ce, softmax};

    fn linear(rng: &mut Rng, d: usize, k: usize) -> MlpParams {
        MlpParams::init(&[d, k], rng).unwrap()
    }

    fn per_sample_loss(model: &MlpParams, x: &Matrix, labels: &[usize]) -> Vec<f64> {
        let z = model.logits(x).unwrap();
        (0..x.rows())
            .map(|r| ce(&z.select_rows(&[r]), &labels[r..=r]).unwrap().loss)
            .collect()
    }

    #[test]
    fn fgsm_zero_epsilon_is_identity() {
        let mut rng = Rng::new(1);
        let m = MlpParams::init(&[4, 3, 2], &mut rng).unwrap();
        let x = Matrix::from_fn(3, 4, |_, _| rng.next_f64());
        assert_eq!(fgsm(&m, &x, &[0, 1, 0], 0.0).unwrap(), x);
        assert!(fgsm(&m, &x, &[0, 1, 0], -0.1).is_err());
    }

    #[test]
    fn fgsm_sign_convention() {
        let x = Matrix::zeros(1, 3);
        let g = Matrix::from_rows(&[[0.5, -0.2, 0.0]]).unwrap();
        assert_eq!(fgsm_step(&x, &g, 0.1).unwrap().row(0), &[0.1, -0.1, 0.0]);
    }

    #[test]
    fn fgsm_infinity_norm_exact() {
        let mut rng = Rng::new(2);
        let m = MlpParams::init(&[6, 5, 3], &mut rng).unwrap();
        let x = Matrix::from_fn(10, 6, |_, _| rng.uniform(-1.0, 1.0));
        let labels: Vec<usize> = (0..10).map(|_| rng.uniform_int(3)).collect();
        let eps = 0.125;
        let grad = input_gradient(&m, &x, &labels).unwrap();
        let delta = fgsm_delta(&grad, eps);
        for (d, g) in delta.as_slice().iter().zip(grad.as_slice()) {
            let expected = if *g == 0.0 { 0.0 } else { eps };
            assert_eq!(d.abs(), expected);
        }
        let adv = fgsm(&m, &x, &labels, eps).unwrap();
        assert_eq!(adv, x.add(&delta).unwrap());
    }

    #[test]
    fn perturbations_leave_model_untouched() {
        let mut rng = Rng::new(3);
        let m = MlpParams::init(&[4, 3, 3], &mut rng).unwrap();
        let before = m.clone();
        let x = Matrix::from_fn(5, 4, |_, _| rng.next_f64());
        fgsm(&m, &x, &[0, 1, 2, 0, 1], 0.1).unwrap();
        cfgm_batch(&m, &x, &[0, 1], &mut rng, 0.5, Some((0.0, 1.0)), TargetPolicy::Uniform).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn cfgm_zero_gradient_is_identity() {
        // a single-class network is always certain: p = y_c, gradient 0
        let mut rng = Rng::new(4);
        let m = linear(&mut rng, 3, 1);
        let x = Matrix::from_fn(2, 3, |_, _| rng.next_f64());
        assert_eq!(cfgm(&m, &x, 0, 0.7, None).unwrap(), x);
    }

    #[test]
    fn cfgm_linear_closed_form() {
        let mut rng = Rng::new(5);
        let m = linear(&mut rng, 4, 3);
        let x = Matrix::from_fn(2, 4, |_, _| rng.uniform(-1.0, 1.0));
        let alpha = 0.3;
        let c = 2;
        let p = softmax(&m.logits(&x).unwrap()).unwrap();
        let mut y = Matrix::zeros(2, 3);
        y.set(0, c, 1.0);
        y.set(1, c, 1.0);
        let step = p.sub(&y).unwrap().matmul(&m.layers()[0].weight.transpose()).unwrap();
        let expected = x.sub(&step.scale(alpha)).unwrap();
        let got = cfgm(&m, &x, c, alpha, None).unwrap();
        assert!(got.sub(&expected).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn cfgm_descends_for_some_halving() {
        let mut rng = Rng::new(6);
        let m = MlpParams::init(&[5, 8, 4], &mut rng).unwrap();
        let x = Matrix::from_fn(6, 5, |_, _| rng.uniform(-1.0, 1.0));
        let target = 3;
        let base = per_sample_loss(&m, &x, &[target; 6]);
        let grad = input_gradient(&m, &x, &[target; 6]).unwrap();
        for (r, &loss) in base.iter().enumerate() {
            if grad.row(r).iter().all(|&g| g == 0.0) {
                continue;
            }
            let improved = (0..=10).any(|h| {
                let a = 2.0 / f64::from(1 << h);
                let xr = x.select_rows(&[r]);
                let moved = cfgm(&m, &xr, target, a, None).unwrap();
                per_sample_loss(&m, &moved, &[target])[0] < loss
            });
            assert!(improved, "row {r}");
        }
    }

    #[test]
    fn cfgm_clips_and_validates() {
        let mut rng = Rng::new(7);
        let m = linear(&mut rng, 3, 2);
        let x = Matrix::from_fn(4, 3, |_, _| rng.next_f64());
        let out = cfgm(&m, &x, 1, 100.0, Some((0.0, 1.0))).unwrap();
        assert!(out.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(cfgm(&m, &x, 1, 0.0, None).is_err());
        assert!(matches!(cfgm(&m, &x, 2, 0.1, None), Err(Error::Config(_))));
    }

    #[test]
    fn cfgm_batch_targets() {
        let mut rng = Rng::new(8);
        let m = linear(&mut rng, 3, 5);
        let x = Matrix::from_fn(7, 3, |_, _| rng.next_f64());
        let (xc, t) = cfgm_batch(&m, &x, &[3], &mut rng, 0.1, None, TargetPolicy::Uniform).unwrap();
        assert_eq!(xc.shape(), x.shape());
        assert_eq!(t, vec![3; 7]);
        assert!(cfgm_batch(&m, &x, &[], &mut rng, 0.1, None, TargetPolicy::Uniform).is_err());

        let rr = assign_targets(6, &[0, 1, 2], &mut rng, TargetPolicy::RoundRobin).unwrap();
        assert_eq!(rr[0], rr[3]);
        assert_ne!(rr[0], rr[1]);
    }

    #[test]
    fn uniform_target_frequencies() {
        let mut rng = Rng::new(9);
        let prev = [0, 1, 2, 3];
        let t = assign_targets(10_000, &prev, &mut rng, TargetPolicy::Uniform).unwrap();
        for c in prev {
            let f = t.iter().filter(|&&v| v == c).count() as f64 / 1e4;
            assert!((0.23..=0.27).contains(&f), "class {c}: {f}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = Rng::new(10);
        let m = MlpParams::init(&[4, 3, 4], &mut rng).unwrap();
        let x = Matrix::from_fn(5, 4, |_, _| rng.next_f64());
        let a = cfgm_batch(&m, &x, &[0, 1], &mut Rng::new(1), 0.5, None, TargetPolicy::Uniform).unwrap();
        let b = cfgm_batch(&m, &x, &[0, 1], &mut Rng::new(1), 0.5, None, TargetPolicy::Uniform).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn class_mean_tracker() {
        let mut t = ClassMeanTracker::new(2, 2);
        let x = Matrix::from_rows(&[[0.0, 2.0], [2.0, 2.0], [5.0, 5.0]]).unwrap();
        t.observe(&x, &[0, 0, 1]);
        assert_eq!(t.mean(0).unwrap(), vec![1.0, 2.0]);
        assert_eq!(t.distance(&[4.0, 6.0], 0).unwrap(), 5.0);
        assert!(ClassMeanTracker::new(3, 1).mean(2).is_none());
    }
}
