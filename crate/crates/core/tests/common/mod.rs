#![allow(dead_code)]

use belllab::theories::tabulated_theory;
use belllab::theory::SettingSet;
use belllab::{Direction, JointOutcomeDist, Outcome, OutcomeDist, Theory};
use rand::Rng;

pub fn deg(d: f64) -> Direction<f64> {
    Direction::in_plane_degrees(d)
}

pub fn settings(n_a: usize, n_b: usize) -> SettingSet<f64> {
    SettingSet {
        a: (0..n_a).map(|i| deg(37.0 * i as f64)).collect(),
        b: (0..n_b).map(|j| deg(11.0 + 53.0 * j as f64)).collect(),
    }
}

/// Rotation matrix of a (not necessarily unit) quaternion.
pub fn rotation(q: [f64; 4]) -> [[f64; 3]; 3] {
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|c| c / n);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn random_table<R: Rng>(rng: &mut R) -> JointOutcomeDist<f64> {
    let w: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
    let s: f64 = w.iter().sum();
    JointOutcomeDist::new(w[0] / s, w[1] / s, w[2] / s, w[3] / s).unwrap()
}

pub fn bernoulli(p: f64) -> OutcomeDist<f64> {
    OutcomeDist { plus: p, minus: 1.0 - p }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// No structure at all.
    Arbitrary,
    /// `P(A|â,λ)·P(B|b̂,λ)`: every locality condition holds.
    LocalProduct,
    /// Product tables whose A-marginal also depends on `b̂`.
    ParameterDependent,
    /// Fixed local marginals with correlated outcomes.
    OutcomeDependent,
}

pub const KINDS: [KernelKind; 4] = [
    KernelKind::Arbitrary,
    KernelKind::LocalProduct,
    KernelKind::ParameterDependent,
    KernelKind::OutcomeDependent,
];

/// Random finite kernel of the given kind over `n_a × n_b` settings and `n_l` hidden states.
pub fn random_kernel<R: Rng>(rng: &mut R, kind: KernelKind, n_a: usize, n_b: usize, n_l: usize) -> Theory<f64> {
    let raw: Vec<f64> = (0..n_l).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let pa: Vec<Vec<f64>> = (0..n_a).map(|_| (0..n_l).map(|_| rng.gen_range(0.2..0.8)).collect()).collect();
    let pb: Vec<Vec<f64>> = (0..n_b).map(|_| (0..n_l).map(|_| rng.gen_range(0.2..0.8)).collect()).collect();
    let mut tables = vec![vec![Vec::with_capacity(n_l); n_b]; n_a];
    for i in 0..n_a {
        for j in 0..n_b {
            for l in 0..n_l {
                let t = match kind {
                    KernelKind::Arbitrary => random_table(rng),
                    KernelKind::LocalProduct => {
                        JointOutcomeDist::product(&bernoulli(pa[i][l]), &bernoulli(pb[j][l]))
                    }
                    KernelKind::ParameterDependent => {
                        let shift = if j == 0 { 0.0 } else { 0.05 + 0.05 * j as f64 };
                        JointOutcomeDist::product(&bernoulli(pa[i][l] - shift), &bernoulli(pb[j][l]))
                    }
                    KernelKind::OutcomeDependent => {
                        let (p, q) = (pa[i][l], pb[j][l]);
                        // Largest covariance keeping all four entries positive.
                        let room = (p * (1.0 - q)).min((1.0 - p) * q).min(p * q).min((1.0 - p) * (1.0 - q));
                        let c = room * rng.gen_range(0.3..0.9);
                        JointOutcomeDist::new(p * q + c, p * (1.0 - q) - c, (1.0 - p) * q - c, (1.0 - p) * (1.0 - q) + c)
                            .unwrap()
                    }
                };
                tables[i][j].push(t);
            }
        }
    }
    tabulated_theory(format!("random-{kind:?}"), settings(n_a, n_b), weights, tables).unwrap()
}

pub fn outcome_pairs() -> impl Iterator<Item = (Outcome, Outcome)> {
    Outcome::ALL.into_iter().flat_map(|x| Outcome::ALL.into_iter().map(move |y| (x, y)))
}
