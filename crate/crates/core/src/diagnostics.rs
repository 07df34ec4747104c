//! Observables along trajectories: synchronization errors, the synchronized
//! state and its conservative energy, decay-rate fits and generator spectra.

use std::fmt;

use nalgebra::Complex;
use nalgebra::{Cholesky, DMatrix, DVector};

use crate::algebra::{GroupPartition, SyncBasis};
use crate::error::{Error, Result};
use crate::integrator::{Observer, State};
use crate::linalg::{apply_per_node, asymmetry, max_abs, symmetrize, SymBand};
use crate::models::{CoupledSystem, DiscreteModel};

/// Per-component `xᵀ (B ⊗ I_m) x` for a node-major vector.
fn component_forms(band: &SymBand, m: usize, x: &[f64]) -> Vec<f64> {
    let bx = band.mul_kron_identity(m, x);
    let mut out = vec![0.0; m];
    for (i, (a, b)) in x.iter().zip(&bx).enumerate() {
        out[i % m] += a * b;
    }
    out
}

/// Squared energy norm `uᵀ(K_h⊗I)u + vᵀ(M_h⊗I)v` of an `m`-component field pair.
pub fn energy_norm_sq(model: &DiscreteModel, m: usize, u: &[f64], v: &[f64]) -> f64 {
    component_forms(model.stiffness_band(), m, u)
        .iter()
        .sum::<f64>()
        + component_forms(model.mass_band(), m, v).iter().sum::<f64>()
}

/// `W = M U` applied node by node to both displacement and velocity.
///
/// Differences are taken first, so synchronized components project to an
/// exact zero.
pub fn project_state(state: &State, basis: &SyncBasis) -> State {
    let n = basis.partition().components();
    let m = basis.cp().nrows();
    let project = |x: &DVector<f64>| {
        apply_per_node(basis.gram_inv_sqrt(), &apply_per_node(basis.cp(), x, n), m)
    };
    State {
        u: project(&state.u),
        v: project(&state.v),
        t: state.t,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncError {
    pub total: f64,
    pub per_group: Vec<f64>,
}

/// Energy norm of the normalized difference projection `M (U, U')`.
pub fn sync_error(state: &State, basis: &SyncBasis, model: &DiscreteModel) -> Result<SyncError> {
    let part = basis.partition();
    let n = part.components();
    let expected = model.dof() * n;
    if state.u.len() != expected || state.v.len() != expected {
        return Err(Error::Dimension(format!(
            "state has {} unknowns, expected {expected}",
            state.u.len()
        )));
    }
    let w = project_state(state, basis);
    let m = n - part.groups();
    let ku = component_forms(model.stiffness_band(), m, w.u.as_slice());
    let mv = component_forms(model.mass_band(), m, w.v.as_slice());
    let per_group: Vec<f64> = (0..part.groups())
        .map(|r| {
            part.difference_rows(r)
                .map(|c| ku[c] + mv[c])
                .sum::<f64>()
                .max(0.0)
                .sqrt()
        })
        .collect();
    let total = per_group.iter().map(|g| g * g).sum::<f64>().sqrt();
    Ok(SyncError { total, per_group })
}

/// Nodal fields `u_r = ((U, e_r)) / ||e_r||` and the assembled
/// `u = Σ_r u_r e_r / ||e_r||`.
#[derive(Debug, Clone)]
pub struct SynchronizedState {
    pub fields: Vec<DVector<f64>>,
    pub assembled: DVector<f64>,
}

pub fn synchronized_state(
    u: &DVector<f64>,
    partition: &GroupPartition,
) -> Result<SynchronizedState> {
    let n = partition.components();
    if !u.len().is_multiple_of(n) {
        return Err(Error::Dimension(format!(
            "vector length {} is not a multiple of {n} components",
            u.len()
        )));
    }
    let nodes = u.len() / n;
    let p = partition.groups();
    let mut fields = vec![DVector::zeros(nodes); p];
    let mut assembled = DVector::zeros(u.len());
    for node in 0..nodes {
        for (r, field) in fields.iter_mut().enumerate() {
            let norm = partition.indicator_norm(r);
            let sum: f64 = partition.group(r).map(|i| u[node * n + i]).sum();
            field[node] = sum / norm;
            for i in partition.group(r) {
                assembled[node * n + i] = field[node] / norm;
            }
        }
    }
    Ok(SynchronizedState { fields, assembled })
}

/// `max |(U - u) - C_pᵀ(C_pC_pᵀ)⁻¹C_p U|` over all nodes.
pub fn pinning_residual(u: &DVector<f64>, basis: &SyncBasis) -> Result<f64> {
    let sync = synchronized_state(u, basis.partition())?;
    let n = basis.partition().components();
    let complement = apply_per_node(&basis.complement_projector(), u, n);
    Ok((u - &sync.assembled - complement).amax())
}

/// Conservative energy `Σ u_rᵀK u_r + Σ β_rs u_rᵀM u_s + Σ u_r'ᵀM u_r'` of the
/// limit system.
pub fn limit_energy(
    fields: &[DVector<f64>],
    velocities: &[DVector<f64>],
    b: &DMatrix<f64>,
    model: &DiscreteModel,
) -> Result<f64> {
    let p = fields.len();
    if velocities.len() != p || b.nrows() != p || b.ncols() != p {
        return Err(Error::Dimension(format!(
            "{p} fields, {} velocities, B is {}x{}",
            velocities.len(),
            b.nrows(),
            b.ncols()
        )));
    }
    if asymmetry(b) > 1e-12 * max_abs(b) {
        return Err(Error::Domain("limit coupling B is not symmetric".into()));
    }
    let (k, m) = (model.stiffness_band(), model.mass_band());
    let mut e = 0.0;
    for r in 0..p {
        e += k.form(fields[r].as_slice(), fields[r].as_slice());
        e += m.form(velocities[r].as_slice(), velocities[r].as_slice());
        for s in 0..p {
            if b[(r, s)] != 0.0 {
                e += b[(r, s)] * m.form(fields[r].as_slice(), fields[s].as_slice());
            }
        }
    }
    Ok(e)
}

/// `½ vᵀ(M_h⊗I)v + ½ uᵀ(K_h⊗I + M_h⊗A)u`.
pub fn full_energy(system: &CoupledSystem, state: &State) -> f64 {
    0.5 * system.mass().form(state.v.as_slice(), state.v.as_slice())
        + 0.5
            * system
                .stiffness()
                .form(state.u.as_slice(), state.u.as_slice())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub omega: f64,
    /// `exp(intercept) / value(0)`.
    pub m_const: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Samples at or below this fraction of the initial value are ignored.
pub const FIT_FLOOR: f64 = 1e-13;
pub const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares line through `(t, ln value)` inside `window`.
pub fn fit_decay(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != values.len() || times.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{} times vs {} values",
            times.len(),
            values.len()
        )));
    }
    let initial = values[0];
    let floor = FIT_FLOOR * initial.abs();
    let (ts, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(&t, &v)| t >= window.0 && t <= window.1 && v.is_finite() && v > floor && v > 0.0)
        .map(|(&t, &v)| (t, v.ln()))
        .unzip();
    let n = ts.len();
    if n < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{n} usable samples in [{}, {}], need {MIN_FIT_SAMPLES}",
            window.0, window.1
        )));
    }
    let nf = n as f64;
    let tm = ts.iter().sum::<f64>() / nf;
    let ym = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = ts.iter().map(|t| (t - tm).powi(2)).sum();
    let sxy: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let syy: f64 = ys.iter().map(|y| (y - ym).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all samples at one time".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let ss_res: f64 = ts
        .iter()
        .zip(&ys)
        .map(|(t, y)| (y - intercept - slope * t).powi(2))
        .sum();
    // A flat log-series is fitted perfectly by a zero slope.
    let r_squared = if syy <= 1e-24 * nf * (1.0 + ym * ym) {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        omega: -slope,
        m_const: intercept.exp() / initial,
        r_squared,
        window,
        samples: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    DecayObserved,
    NoUniformDecay,
    Inconclusive,
}

pub const MIN_R_SQUARED: f64 = 0.9;
pub const NO_DECAY_RATIO: f64 = 0.1;

/// Exponential decay needs a positive fitted rate with `r² ≥ 0.9` and a
/// final/initial ratio below 0.1; a ratio of at least 0.1 means no uniform decay.
pub fn decay_verdict(fit: Option<&DecayFit>, final_over_initial: f64) -> Verdict {
    if final_over_initial >= NO_DECAY_RATIO {
        return Verdict::NoUniformDecay;
    }
    match fit {
        Some(f) if f.omega > 0.0 && f.r_squared >= MIN_R_SQUARED => Verdict::DecayObserved,
        _ => Verdict::Inconclusive,
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::DecayObserved => "exponential decay observed",
            Verdict::NoUniformDecay => "no uniform decay",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex<f64>>,
    pub abscissa: f64,
    pub near_imaginary_count: usize,
}

pub const DEFAULT_SPECTRUM_CAP: usize = 2000;
pub const NEAR_IMAGINARY: f64 = 1e-8;

/// Eigenvalues of the first-order generator
/// `[[0, I], [-M⁻¹K, -M⁻¹C]]`, computed in the mass-symmetrized form
/// `[[0, I], [-L⁻¹KL⁻ᵀ, -L⁻¹CL⁻ᵀ]]` with `M = LLᵀ`.
pub fn spectrum(system: &CoupledSystem, cap: usize) -> Result<SpectrumReport> {
    let n = system.unknowns();
    if n > cap {
        return Err(Error::TooLarge { unknowns: n, cap });
    }
    let chol = Cholesky::new(system.mass().to_dense())
        .ok_or_else(|| Error::Singular("mass matrix is not positive definite".into()))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::Singular("mass factor".into()))?;
    let k = symmetrize(&(&l_inv * system.stiffness().to_dense() * l_inv.transpose()));
    let c = symmetrize(&(&l_inv * system.damping().to_dense() * l_inv.transpose()));
    let mut gen = DMatrix::zeros(2 * n, 2 * n);
    gen.view_mut((0, n), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    gen.view_mut((n, 0), (n, n)).copy_from(&(-k));
    gen.view_mut((n, n), (n, n)).copy_from(&(-c));
    let mut eigenvalues: Vec<Complex<f64>> = gen.complex_eigenvalues().iter().cloned().collect();
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let abscissa = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let near_imaginary_count = eigenvalues
        .iter()
        .filter(|z| z.re.abs() <= NEAR_IMAGINARY)
        .count();
    Ok(SpectrumReport {
        eigenvalues,
        abscissa,
        near_imaginary_count,
    })
}

/// Largest distance from the conjugate of each eigenvalue to the spectrum.
pub fn conjugate_defect(eigenvalues: &[Complex<f64>]) -> f64 {
    eigenvalues
        .iter()
        .map(|z| {
            eigenvalues
                .iter()
                .map(|w| (w - z.conj()).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Records `sync_total, sync_group_r…, full_energy, limit_energy,
/// pinning_residual` for a coupled system.
pub struct StandardObserver<'a> {
    system: &'a CoupledSystem,
    basis: &'a SyncBasis,
    beta: Option<DMatrix<f64>>,
}

impl<'a> StandardObserver<'a> {
    /// `beta` is the limit coupling when `A` is compatible; without it the
    /// limit energy column is NaN.
    pub fn new(
        system: &'a CoupledSystem,
        basis: &'a SyncBasis,
        beta: Option<DMatrix<f64>>,
    ) -> Self {
        Self {
            system,
            basis,
            beta,
        }
    }
}

impl Observer for StandardObserver<'_> {
    fn columns(&self) -> Vec<String> {
        let mut cols = vec!["sync_total".to_string()];
        cols.extend((1..=self.basis.partition().groups()).map(|r| format!("sync_group_{r}")));
        cols.extend(["full_energy", "limit_energy", "pinning_residual"].map(String::from));
        cols
    }

    fn observe(&self, state: &State, out: &mut Vec<f64>) {
        let model = self.system.model();
        let err = sync_error(state, self.basis, model).expect("state matches system");
        out.push(err.total);
        out.extend(err.per_group);
        out.push(full_energy(self.system, state));
        let part = self.basis.partition();
        let limit = match &self.beta {
            Some(b) => {
                let u = synchronized_state(&state.u, part).expect("state matches system");
                let v = synchronized_state(&state.v, part).expect("state matches system");
                limit_energy(&u.fields, &v.fields, b, model).expect("B is p x p and symmetric")
            }
            None => f64::NAN,
        };
        out.push(limit);
        let pin = pinning_residual(&state.u, self.basis)
            .expect("state matches system")
            .max(pinning_residual(&state.v, self.basis).expect("state matches system"));
        out.push(pin);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_sync_matrix, CouplingMatrix, Role};
    use crate::models::{assemble, couple, DampingProfile, ModelKind, ModelSpec};
    use std::f64::consts::PI;

    fn wave_distributed(ne: usize) -> DiscreteModel {
        assemble(&ModelSpec {
            kind: ModelKind::WaveDistributed,
            elements: ne,
            damping: DampingProfile::Plateau {
                left: 0.2,
                right: 0.2,
                floor: 1.0,
            },
        })
        .unwrap()
    }

    fn interleave(fields: &[DVector<f64>]) -> DVector<f64> {
        let n = fields.len();
        let nodes = fields[0].len();
        DVector::from_fn(nodes * n, |i, _| fields[i % n][i / n])
    }

    #[test]
    fn synchronized_data_has_zero_error() {
        let model = wave_distributed(16);
        let basis = build_sync_matrix(&GroupPartition::new(vec![2, 3]).unwrap());
        let f = model.interpolate(|x| (PI * x).sin(), |_| 0.0).unwrap();
        let g = model.interpolate(|x| x * (1.0 - x), |_| 0.0).unwrap();
        let u = interleave(&[f.clone(), f.clone(), g.clone(), g.clone(), g.clone()]);
        let s = State::new(u.clone(), u * 2.0);
        let err = sync_error(&s, &basis, &model).unwrap();
        assert_eq!(err.total, 0.0);
        assert!(err.per_group.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn pair_difference_error_matches_quadrature() {
        // ||(u1 - u2)/√2||²_V with u1 - u2 = sin(πx) → ∫(π cos πx)²/2 = π²/4.
        let basis = build_sync_matrix(&GroupPartition::new(vec![2]).unwrap());
        let mut errs = Vec::new();
        for ne in [16, 32, 64] {
            let model = wave_distributed(ne);
            let s1 = model.interpolate(|x| (PI * x).sin(), |_| 0.0).unwrap();
            let zero = DVector::zeros(model.dof());
            let u = interleave(&[s1, zero]);
            let state = State::new(u.clone(), u * 0.0);
            let err = sync_error(&state, &basis, &model).unwrap();
            errs.push((err.total.powi(2) - PI * PI / 4.0).abs());
        }
        assert!(errs[0] < 0.05);
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn sync_error_is_homogeneous() {
        let model = wave_distributed(10);
        let basis = build_sync_matrix(&GroupPartition::new(vec![2, 2]).unwrap());
        let n = model.dof() * 4;
        let u = DVector::from_fn(n, |i, _| ((i * 7 % 11) as f64).sin());
        let v = DVector::from_fn(n, |i, _| ((i * 3 % 5) as f64).cos());
        let s = State::new(u, v);
        let e = sync_error(&s, &basis, &model).unwrap().total;
        let e3 = sync_error(&s.scaled(-3.0), &basis, &model).unwrap().total;
        assert!((e3 - 3.0 * e).abs() <= 1e-12 * e3);
    }

    #[test]
    fn sync_error_dimension_mismatch() {
        let model = wave_distributed(10);
        let basis = build_sync_matrix(&GroupPartition::new(vec![2, 2]).unwrap());
        assert!(sync_error(&State::zeros(5), &basis, &model).is_err());
    }

    #[test]
    fn synchronized_state_projection_identities() {
        let part = GroupPartition::new(vec![2, 2]).unwrap();
        let basis = build_sync_matrix(&part);
        let theta = DVector::from_vec(vec![0.3, -1.2, 2.0]);
        let zero = DVector::zeros(3);
        // Same field on group 1, zero elsewhere.
        let u = interleave(&[theta.clone(), theta.clone(), zero.clone(), zero.clone()]);
        let s = synchronized_state(&u, &part).unwrap();
        assert!((&s.fields[0] - &theta * 2f64.sqrt()).amax() < 1e-15);
        assert_eq!(s.fields[1], zero);
        assert!((&s.assembled - &u).amax() < 1e-15);

        // Orthogonal to every e_r at every node.
        let w = interleave(&[theta.clone(), -theta.clone(), theta.clone(), -theta.clone()]);
        let s = synchronized_state(&w, &part).unwrap();
        assert_eq!(s.assembled.amax(), 0.0);

        let r = DVector::from_fn(12, |i, _| ((i as f64) * 1.37).sin());
        assert!(pinning_residual(&r, &basis).unwrap() <= 1e-12);
    }

    #[test]
    fn limit_energy_examples() {
        let model = wave_distributed(32);
        let b = DMatrix::zeros(1, 1);
        let zero = [DVector::zeros(model.dof())];
        assert_eq!(limit_energy(&zero, &zero, &b, &model).unwrap(), 0.0);
        let s = model.interpolate(|x| (PI * x).sin(), |_| 0.0).unwrap();
        let e = limit_energy(&[s], &zero, &b, &model).unwrap();
        assert!((e - PI * PI / 2.0).abs() < 0.01);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let two = [zero[0].clone(), zero[0].clone()];
        assert!(limit_energy(&two, &two, &asym, &model).is_err());
    }

    #[test]
    fn fit_exact_exponential() {
        let times: Vec<f64> = (0..=4000).map(|k| k as f64 * 0.01).collect();
        let values: Vec<f64> = times.iter().map(|t| 3.0 * (-0.5 * t).exp()).collect();
        let fit = fit_decay(&times, &values, (0.0, 40.0)).unwrap();
        assert!((fit.omega - 0.5).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.m_const - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fit_constant_series() {
        let times: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let values = vec![2.0; 100];
        let fit = fit_decay(&times, &values, (0.0, 100.0)).unwrap();
        assert_eq!(fit.omega, 0.0);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn fit_modulated_exponential() {
        let t_end = 40.0;
        let times: Vec<f64> = (0..=4000).map(|k| k as f64 * 0.01).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|t| (-0.3 * t).exp() * (2.0 + (5.0 * t).cos()))
            .collect();
        let fit = fit_decay(&times, &values, (t_end / 4.0, t_end)).unwrap();
        assert!((0.285..=0.315).contains(&fit.omega), "{}", fit.omega);
        assert!(fit.r_squared >= 0.95);
    }

    #[test]
    fn fit_needs_samples_above_floor() {
        let times: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let mut values = vec![1.0; 20];
        values.iter_mut().skip(5).for_each(|v| *v = 1e-20);
        assert!(matches!(
            fit_decay(&times, &values, (0.0, 20.0)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn verdicts() {
        let good = DecayFit {
            omega: 0.5,
            m_const: 1.0,
            r_squared: 0.99,
            window: (10.0, 40.0),
            samples: 100,
        };
        assert_eq!(decay_verdict(Some(&good), 1e-6), Verdict::DecayObserved);
        assert_eq!(decay_verdict(Some(&good), 0.5), Verdict::NoUniformDecay);
        let poor = DecayFit {
            r_squared: 0.5,
            ..good
        };
        assert_eq!(decay_verdict(Some(&poor), 1e-2), Verdict::Inconclusive);
    }

    fn oscillator(damping: f64) -> CoupledSystem {
        let one = DMatrix::from_element(1, 1, 1.0);
        let model = DiscreteModel::from_matrices(one.clone(), one.clone(), one).unwrap();
        couple(
            &model,
            &CouplingMatrix::zeros(1, Role::Stiffness),
            &CouplingMatrix::new(DMatrix::from_element(1, 1, damping), Role::Damping).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn oscillator_spectra() {
        let s = spectrum(&oscillator(0.0), DEFAULT_SPECTRUM_CAP).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        assert!(s.abscissa.abs() < 1e-14);
        assert_eq!(s.near_imaginary_count, 2);
        assert!((s.eigenvalues[0] - Complex::new(0.0, -1.0)).norm() < 1e-14);

        let s = spectrum(&oscillator(1.0), DEFAULT_SPECTRUM_CAP).unwrap();
        let r3 = 3f64.sqrt() / 2.0;
        assert!((s.eigenvalues[0] - Complex::new(-0.5, -r3)).norm() < 1e-14);
        assert!((s.eigenvalues[1] - Complex::new(-0.5, r3)).norm() < 1e-14);
        assert!((s.abscissa + 0.5).abs() < 1e-14);
        assert_eq!(s.near_imaginary_count, 0);
    }

    #[test]
    fn spectrum_cap_enforced() {
        let model = wave_distributed(8);
        let sys = couple(
            &model,
            &CouplingMatrix::zeros(2, Role::Stiffness),
            &CouplingMatrix::identity(2, Role::Damping),
        )
        .unwrap();
        assert!(matches!(
            spectrum(&sys, 10),
            Err(Error::TooLarge {
                unknowns: 14,
                cap: 10
            })
        ));
    }

    #[test]
    fn undamped_spectrum_is_imaginary_and_conjugate_closed() {
        let model = wave_distributed(8);
        let a = CouplingMatrix::from_rows(&[&[1.0, -1.0], &[-1.0, 1.0]], Role::Stiffness).unwrap();
        let sys = couple(&model, &a, &CouplingMatrix::zeros(2, Role::Damping)).unwrap();
        let s = spectrum(&sys, DEFAULT_SPECTRUM_CAP).unwrap();
        assert!(s.eigenvalues.iter().all(|z| z.re.abs() <= 1e-10));
        assert!(conjugate_defect(&s.eigenvalues) <= 1e-10);
    }
}
