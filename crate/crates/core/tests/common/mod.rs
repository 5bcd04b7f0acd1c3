#![allow(dead_code)]

use maskcl::continual::{composite_loss, Term};
use maskcl::model::MlpParams;
use maskcl::objective::ClassMask;
use maskcl::{Matrix, Rng};

pub const FD_STEP: f64 = 1e-5;

/// `|a - n| / max(|a|, |n|, 1e-6)`: relative error with a floor for
/// parameters whose true gradient is (near) zero.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Worst relative error between the analytic gradient of `terms` and a
/// central finite difference, over every parameter of `model`.
pub fn worst_fd_error(model: &MlpParams, terms: &[Term]) -> (f64, usize) {
    let analytic = composite_loss(model, terms).unwrap().grads.flatten();
    let mut worst = 0.0f64;
    let mut probe = model.clone();
    for (i, &a) in analytic.iter().enumerate() {
        let orig = *probe.param_mut(i);
        *probe.param_mut(i) = orig + FD_STEP;
        let up = composite_loss(&probe, terms).unwrap().loss;
        *probe.param_mut(i) = orig - FD_STEP;
        let down = composite_loss(&probe, terms).unwrap().loss;
        *probe.param_mut(i) = orig;
        worst = worst.max(rel_err(a, (up - down) / (2.0 * FD_STEP)));
    }
    (worst, analytic.len())
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(0.0, 1.0))
}

/// The four objective shapes the trainer builds, on a batch for a
/// `[6, 5, 4]` network.
pub fn compositions(rng: &mut Rng) -> Vec<(&'static str, Vec<Term>)> {
    let n = 8;
    let x = random_matrix(n, 6, rng);
    let y: Vec<usize> = (0..n).map(|i| i % 4).collect();
    let y_masked: Vec<usize> = (0..n).map(|i| 2 + i % 2).collect();
    let mask = ClassMask::from_classes(4, &[2, 3]).unwrap();
    let target = Matrix::from_fn(n, 4, |_, _| rng.gauss(0.0, 1.0));
    let ce = Term::Ce { x: x.clone(), y: y.clone(), mask: None, weight: 1.0 };
    let masked = Term::Ce { x: x.clone(), y: y_masked.clone(), mask: Some(mask.clone()), weight: 1.0 };
    let mse = Term::Mse { x: x.clone(), target: target.clone(), columns: None, weight: 1.0 };
    let xb = random_matrix(n, 6, rng);
    let derpp = vec![
        Term::Ce { x: x.clone(), y: y_masked, mask: Some(mask), weight: 1.0 },
        Term::Mse { x: xb.clone(), target, columns: None, weight: 0.2 },
        Term::Ce { x: xb, y, mask: None, weight: 0.5 },
    ];
    vec![
        ("ce", vec![ce]),
        ("masked_ce", vec![masked]),
        ("mse", vec![mse]),
        ("der++", derpp),
    ]
}
