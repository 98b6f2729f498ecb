#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weakdiff::discretization::{build_grid, build_robin_operator};
use weakdiff::potentials::{CoefficientField, PotentialSpec};
use weakdiff::state::{FieldPreset, ProblemData};

pub fn gaussian(center: f64, width: f64) -> FieldPreset {
    FieldPreset::GaussianBump {
        center: vec![center],
        width,
        amplitude: 1.0,
    }
}

/// 1D problem on `[0, 1]` with Robin weight 1.
pub fn line(cells: usize, horizon: f64, steps: usize, f: &FieldPreset, y0: &FieldPreset) -> ProblemData {
    let op = build_robin_operator(&build_grid(1, &[1.0], &[cells]).unwrap(), 1.0).unwrap();
    ProblemData::from_presets(op, horizon, steps, f, y0, None).unwrap()
}

/// The heat fixture: 64 cells, `T = 0.1`, gaussian `y₀`, no source.
pub fn heat(steps: usize) -> ProblemData {
    line(64, 0.1, steps, &FieldPreset::zero(), &gaussian(0.5, 0.1))
}

pub fn random_flux(seed: u64, steps: usize, nodes: usize, scale: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..steps)
        .map(|_| (0..nodes).map(|_| scale * rng.random_range(-1.0..1.0)).collect())
        .collect()
}

pub fn admissible_families() -> Vec<PotentialSpec> {
    vec![
        PotentialSpec::quadratic(),
        PotentialSpec::power(3.0).unwrap(),
        PotentialSpec::log_type(CoefficientField::constant(1.0)).unwrap(),
        PotentialSpec::exp_type(CoefficientField::constant(1.0)).unwrap(),
    ]
}

/// Relative `L²(Q)` distance `‖a − b‖ / ‖b‖` over states `y_1..y_K`.
pub fn relative_l2q(data: &ProblemData, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let grid = data.op().grid();
    let (mut num, mut den) = (0.0, 0.0);
    for (ak, bk) in a.iter().zip(b).skip(1) {
        let d: Vec<f64> = ak.iter().zip(bk).map(|(x, y)| x - y).collect();
        num += grid.inner(&d, &d);
        den += grid.inner(bk, bk);
    }
    (num / den).sqrt()
}
