#![allow(dead_code)]

use std::path::PathBuf;

use groupsync::algebra::{CouplingMatrix, GroupPartition, Role, SyncBasis};
use groupsync::integrator::State;
use groupsync::linalg::apply_per_node;
use groupsync::models::{assemble, couple, CoupledSystem, ModelSpec};
use groupsync::scenario::Scenario;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

pub fn load_scenario(name: &str) -> Scenario {
    Scenario::load(&scenario_path(name)).expect("shipped scenario parses")
}

pub fn example_a() -> CouplingMatrix {
    CouplingMatrix::from_rows(
        &[
            &[2.0, -1.0, 0.0, 0.0],
            &[-1.0, 2.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ],
        Role::Stiffness,
    )
    .unwrap()
}

/// `C_pᵀC_p` for sizes `[2, 2]`.
pub fn example_d() -> CouplingMatrix {
    CouplingMatrix::from_rows(
        &[
            &[1.0, -1.0, 0.0, 0.0],
            &[-1.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, -1.0],
            &[0.0, 0.0, -1.0, 1.0],
        ],
        Role::Damping,
    )
    .unwrap()
}

pub fn wave_boundary_system(
    elements: usize,
    a: &CouplingMatrix,
    d: &CouplingMatrix,
) -> CoupledSystem {
    let model = assemble(&ModelSpec::wave_boundary(elements)).unwrap();
    couple(&model, a, d).unwrap()
}

/// Random symmetric PSD matrix `G Gᵀ` with `G` of size `n x rank`.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize, rank: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, rank, |_, _| rng.random_range(-1.0..1.0));
    let m = &g * g.transpose();
    (&m + m.transpose()) * 0.5
}

/// Indicator of group `r` as a vector of length `N`.
pub fn indicator(part: &GroupPartition, r: usize) -> DVector<f64> {
    let mut e = DVector::zeros(part.components());
    for i in part.group(r) {
        e[i] = 1.0;
    }
    e
}

/// Compatible `A` built from a difference part and a limit coupling `b`:
/// `A = C_pᵀ S C_p + Σ b_rs e_r e_sᵀ / (|e_r| |e_s|)`.
pub fn compatible_a(basis: &SyncBasis, s: &DMatrix<f64>, b: &DMatrix<f64>) -> CouplingMatrix {
    let part = basis.partition();
    let cp = basis.cp();
    let mut a = cp.transpose() * s * cp;
    for r in 0..part.groups() {
        for t in 0..part.groups() {
            let er = indicator(part, r) / (part.sizes()[r] as f64).sqrt();
            let et = indicator(part, t) / (part.sizes()[t] as f64).sqrt();
            a += er * et.transpose() * b[(r, t)];
        }
    }
    CouplingMatrix::new((&a + a.transpose()) * 0.5, Role::Stiffness).unwrap()
}

/// Strongly compatible `D = C_pᵀ R C_p`.
pub fn strong_d(basis: &SyncBasis, r: &DMatrix<f64>) -> CouplingMatrix {
    let cp = basis.cp();
    let d = cp.transpose() * r * cp;
    CouplingMatrix::new((&d + d.transpose()) * 0.5, Role::Damping).unwrap()
}

/// Applies the normalized difference map `M` per node to displacement and velocity.
pub fn project(state: &State, basis: &SyncBasis) -> (DVector<f64>, DVector<f64>) {
    let n = basis.partition().components();
    (
        apply_per_node(basis.normalizer(), &state.u, n),
        apply_per_node(basis.normalizer(), &state.v, n),
    )
}

pub fn stack(u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(u.len() + v.len(), u.iter().chain(v.iter()).copied())
}
