mod common;

use common::{compositions, random_matrix, rel_err, worst_fd_error, FD_STEP};
use maskcl::model::MlpParams;
use maskcl::objective::{ce_with, Reduction};
use maskcl::perturb::input_gradient;
use maskcl::Rng;

#[test]
fn every_composition_matches_finite_differences() {
    let mut rng = Rng::new(11);
    for net in 0..4 {
        let model = MlpParams::init(&[6, 5, 4], &mut rng).unwrap();
        for (name, terms) in compositions(&mut rng) {
            let (worst, count) = worst_fd_error(&model, &terms);
            assert_eq!(count, 59);
            assert!(worst < 1e-4, "net {net}, {name}: relative error {worst:e}");
        }
    }
}

#[test]
fn deeper_net_matches_finite_differences() {
    let mut rng = Rng::new(5);
    let model = MlpParams::init(&[6, 7, 5, 4], &mut rng).unwrap();
    for (name, terms) in compositions(&mut rng) {
        let (worst, _) = worst_fd_error(&model, &terms);
        assert!(worst < 1e-4, "{name}: relative error {worst:e}");
    }
}

#[test]
fn input_gradient_matches_finite_differences() {
    let mut rng = Rng::new(2);
    let model = MlpParams::init(&[6, 5, 4], &mut rng).unwrap();
    let x = random_matrix(3, 6, &mut rng);
    let y = [0, 3, 1];
    let g = input_gradient(&model, &x, &y).unwrap();
    let loss = |x: &maskcl::Matrix| {
        ce_with(&model.logits(x).unwrap(), &y, Reduction::Sum).unwrap().loss
    };
    for r in 0..3 {
        for c in 0..6 {
            let (mut up, mut down) = (x.clone(), x.clone());
            up.set(r, c, x.get(r, c) + FD_STEP);
            down.set(r, c, x.get(r, c) - FD_STEP);
            let n = (loss(&up) - loss(&down)) / (2.0 * FD_STEP);
            assert!(rel_err(g.get(r, c), n) < 1e-4, "({r},{c}): {} vs {n}", g.get(r, c));
        }
    }
}
