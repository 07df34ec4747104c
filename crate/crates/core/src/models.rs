//! Semi-discrete scalar models on the unit interval and their coupling into
//! an `N`-component system.
//!
//! Each scalar model is a triple of matrices: mass `M_h` (the `H` inner
//! product), stiffness `K_h` (the `V` inner product) and the damping form
//! `G_h`. Three kinds are provided:
//!
//! * `WaveBoundary`: linear elements, `u(0) = 0`, velocity feedback at `x = 1`.
//! * `WaveDistributed`: linear elements, `u(0) = u(1) = 0`, damping `a(x) u'`.
//! * `BeamDistributed`: cubic Hermite elements, clamped ends, damping `a(x) u'`.
//!
//! The coupled system is
//! `(M_h⊗I) U'' + (K_h⊗I + M_h⊗A) U + (G_h⊗D) U' = 0`
//! with node-major ordering, `flat = dof * N + component`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::algebra::CouplingMatrix;
use crate::error::{Error, Result};
use crate::linalg::{asymmetry, max_abs, symmetrize, SymBand};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    WaveBoundary,
    WaveDistributed,
    BeamDistributed,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::WaveBoundary => "wave_boundary",
            ModelKind::WaveDistributed => "wave_distributed",
            ModelKind::BeamDistributed => "beam_distributed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "wave_boundary" => Some(ModelKind::WaveBoundary),
            "wave_distributed" => Some(ModelKind::WaveDistributed),
            "beam_distributed" => Some(ModelKind::BeamDistributed),
            _ => None,
        }
    }
}

/// Damping coefficient `a(x)` for the distributed models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DampingProfile {
    /// Equal to `floor` on `[0, left - h] ∪ [1 - right + h, 1]`, ramping
    /// linearly to zero over one element towards the interior.
    Plateau { left: f64, right: f64, floor: f64 },
    /// `a ≡ value` on the whole interval.
    Constant(f64),
}

impl DampingProfile {
    pub fn eval(&self, x: f64, h: f64) -> f64 {
        match *self {
            DampingProfile::Constant(c) => c,
            DampingProfile::Plateau { left, right, floor } => {
                let ramp = |d: f64| (d / h).clamp(0.0, 1.0);
                let mut a = 0.0;
                if left > 0.0 {
                    a += floor * ramp(left - x);
                }
                if right > 0.0 {
                    a += floor * ramp(x - (1.0 - right));
                }
                a
            }
        }
    }

    /// Points of `[0, 1]` where the profile may change slope.
    fn kinks(&self, h: f64) -> Vec<f64> {
        match *self {
            DampingProfile::Constant(_) => Vec::new(),
            DampingProfile::Plateau { left, right, .. } => {
                [left - h, left, 1.0 - right, 1.0 - right + h]
                    .into_iter()
                    .filter(|x| *x > 0.0 && *x < 1.0)
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub elements: usize,
    /// Ignored by `WaveBoundary`.
    pub damping: DampingProfile,
}

impl ModelSpec {
    pub fn wave_boundary(elements: usize) -> Self {
        Self {
            kind: ModelKind::WaveBoundary,
            elements,
            damping: DampingProfile::Constant(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least 2 elements, got {}",
                self.elements
            )));
        }
        if self.kind == ModelKind::WaveBoundary {
            return Ok(());
        }
        match self.damping {
            DampingProfile::Constant(c) => {
                if !(c > 0.0) || !c.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "constant damping must be positive, got {c}"
                    )));
                }
            }
            DampingProfile::Plateau { left, right, floor } => {
                for (name, w) in [("left", left), ("right", right)] {
                    if !(0.0..=0.5).contains(&w) {
                        return Err(Error::InvalidModel(format!(
                            "{name} damping width {w} outside [0, 1/2]"
                        )));
                    }
                }
                if left + right >= 1.0 {
                    return Err(Error::InvalidModel(
                        "damping widths must sum below 1".into(),
                    ));
                }
                if left + right == 0.0 {
                    return Err(Error::InvalidModel("damping region is empty".into()));
                }
                if !(floor > 0.0) || !floor.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "damping floor must be positive, got {floor}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// What a scalar unknown of the discrete model represents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DofLabel {
    Value {
        x: f64,
    },
    Slope {
        x: f64,
    },
    /// Unknown of a model given directly by its matrices.
    Abstract,
}

#[derive(Debug, Clone)]
pub struct DiscreteModel {
    kind: Option<ModelKind>,
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    damping: DMatrix<f64>,
    labels: Vec<DofLabel>,
    mass_band: SymBand,
    stiffness_band: SymBand,
    damping_band: SymBand,
}

impl DiscreteModel {
    /// A model given directly by its three matrices (e.g. a scalar oscillator).
    pub fn from_matrices(
        mass: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        damping: DMatrix<f64>,
    ) -> Result<Self> {
        let n = mass.nrows();
        let labels = vec![DofLabel::Abstract; n];
        Self::build(None, mass, stiffness, damping, labels)
    }

    fn build(
        kind: Option<ModelKind>,
        mass: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        damping: DMatrix<f64>,
        labels: Vec<DofLabel>,
    ) -> Result<Self> {
        let n = mass.nrows();
        for (name, m) in [
            ("mass", &mass),
            ("stiffness", &stiffness),
            ("damping", &damping),
        ] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Dimension(format!(
                    "{name} matrix is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if asymmetry(m) > 1e-12 * max_abs(m) {
                return Err(Error::Assembly(format!("{name} matrix is not symmetric")));
            }
        }
        if n == 0 {
            return Err(Error::Assembly("model has no unknowns".into()));
        }
        for (name, m) in [("mass", &mass), ("stiffness", &stiffness)] {
            if Cholesky::new(symmetrize(m)).is_none() {
                return Err(Error::Assembly(format!(
                    "{name} matrix is not positive definite"
                )));
            }
        }
        let ev = symmetrize(&damping).symmetric_eigenvalues();
        if ev.min() < -1e-12 * ev.amax().max(0.0) {
            return Err(Error::Assembly(
                "damping form is not positive semi-definite".into(),
            ));
        }
        Ok(Self {
            kind,
            mass_band: SymBand::from_dense(&mass),
            stiffness_band: SymBand::from_dense(&stiffness),
            damping_band: SymBand::from_dense(&damping),
            mass,
            stiffness,
            damping,
            labels,
        })
    }

    pub fn kind(&self) -> Option<ModelKind> {
        self.kind
    }

    pub fn dof(&self) -> usize {
        self.mass.nrows()
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn damping(&self) -> &DMatrix<f64> {
        &self.damping
    }

    pub fn labels(&self) -> &[DofLabel] {
        &self.labels
    }

    pub fn mass_band(&self) -> &SymBand {
        &self.mass_band
    }

    pub fn stiffness_band(&self) -> &SymBand {
        &self.stiffness_band
    }

    pub fn damping_band(&self) -> &SymBand {
        &self.damping_band
    }

    /// Nodal interpolant: values get `f(x)`, slope unknowns get `df(x)`.
    pub fn interpolate(
        &self,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
    ) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.dof());
        for (i, label) in self.labels.iter().enumerate() {
            out[i] = match *label {
                DofLabel::Value { x } => f(x),
                DofLabel::Slope { x } => df(x),
                DofLabel::Abstract => {
                    return Err(Error::InvalidModel(
                        "closed-form fields need a mesh-based model".into(),
                    ))
                }
            };
        }
        Ok(out)
    }

    /// Generalized eigenpairs of `K_h φ = λ M_h φ`, ascending, with
    /// `M_h`-orthonormal eigenvectors as columns.
    pub fn eigenmodes(&self) -> (DVector<f64>, DMatrix<f64>) {
        let chol = Cholesky::new(self.mass.clone()).expect("mass matrix is SPD");
        let l = chol.l();
        let l_inv = l
            .clone()
            .try_inverse()
            .expect("Cholesky factor is invertible");
        let reduced = symmetrize(&(&l_inv * &self.stiffness * l_inv.transpose()));
        let eig = SymmetricEigen::new(reduced);
        let mut order: Vec<usize> = (0..self.dof()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
        let back = l_inv.transpose();
        let vectors = DMatrix::from_columns(
            &order
                .iter()
                .map(|&i| &back * eig.eigenvectors.column(i))
                .collect::<Vec<_>>(),
        );
        (values, vectors)
    }
}

const GAUSS2: [(f64, f64); 2] = [
    (-0.577_350_269_189_625_8, 1.0),
    (0.577_350_269_189_625_8, 1.0),
];

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

fn linear_shapes(xi: f64) -> [f64; 2] {
    [1.0 - xi, xi]
}

/// Cubic Hermite shape functions on `[0, h]` in local coordinate `xi ∈ [0, 1]`,
/// ordered `(w_0, θ_0, w_1, θ_1)`.
fn hermite_shapes(xi: f64, h: f64) -> [f64; 4] {
    let xi2 = xi * xi;
    let xi3 = xi2 * xi;
    [
        1.0 - 3.0 * xi2 + 2.0 * xi3,
        h * (xi - 2.0 * xi2 + xi3),
        3.0 * xi2 - 2.0 * xi3,
        h * (xi3 - xi2),
    ]
}

/// `∫ a φ_i φ_j` over one element, split at the profile's kinks so that the
/// Gauss rule integrates the piecewise polynomial exactly.
fn weighted_mass<const K: usize>(
    x0: f64,
    h: f64,
    profile: &DampingProfile,
    mesh_h: f64,
    rule: &[(f64, f64)],
    shapes: impl Fn(f64) -> [f64; K],
) -> [[f64; K]; K] {
    let mut cuts = vec![x0];
    cuts.extend(
        profile
            .kinks(mesh_h)
            .into_iter()
            .filter(|x| *x > x0 && *x < x0 + h),
    );
    cuts.push(x0 + h);
    let mut out = [[0.0; K]; K];
    for seg in cuts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for &(g, w) in rule {
            let x = mid + half * g;
            let phi = shapes((x - x0) / h);
            let weight = w * half * profile.eval(x, mesh_h);
            for i in 0..K {
                for j in 0..K {
                    out[i][j] += weight * phi[i] * phi[j];
                }
            }
        }
    }
    out
}

fn scatter<const K: usize>(
    global: &mut DMatrix<f64>,
    map: &[Option<usize>; K],
    local: &[[f64; K]; K],
) {
    for i in 0..K {
        let Some(gi) = map[i] else { continue };
        for j in 0..K {
            if let Some(gj) = map[j] {
                global[(gi, gj)] += local[i][j];
            }
        }
    }
}

/// Assembles mass, stiffness and damping-form matrices for one scalar model.
pub fn assemble(spec: &ModelSpec) -> Result<DiscreteModel> {
    spec.validate()?;
    let ne = spec.elements;
    let h = 1.0 / ne as f64;
    match spec.kind {
        ModelKind::WaveBoundary | ModelKind::WaveDistributed => {
            let dirichlet_right = spec.kind == ModelKind::WaveDistributed;
            // Node 0 is always eliminated; node ne too when both ends are fixed.
            let last_free = if dirichlet_right { ne - 1 } else { ne };
            let dof_of = |node: usize| (node >= 1 && node <= last_free).then(|| node - 1);
            let n = last_free;
            let mut mass = DMatrix::zeros(n, n);
            let mut stiff = DMatrix::zeros(n, n);
            let mut damp = DMatrix::zeros(n, n);
            let ke = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
            let me = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
            for e in 0..ne {
                let map = [dof_of(e), dof_of(e + 1)];
                scatter(&mut stiff, &map, &ke);
                scatter(&mut mass, &map, &me);
                if dirichlet_right {
                    let ge =
                        weighted_mass(e as f64 * h, h, &spec.damping, h, &GAUSS2, linear_shapes);
                    scatter(&mut damp, &map, &ge);
                }
            }
            if !dirichlet_right {
                damp[(n - 1, n - 1)] = 1.0;
            }
            let labels = (1..=last_free)
                .map(|node| DofLabel::Value { x: node as f64 * h })
                .collect();
            DiscreteModel::build(
                Some(spec.kind),
                mass,
                symmetrize(&stiff),
                symmetrize(&damp),
                labels,
            )
        }
        ModelKind::BeamDistributed => {
            // Interior nodes 1..ne-1 carry (w, θ); both ends clamped.
            let dof_of =
                |node: usize, k: usize| (node >= 1 && node < ne).then(|| 2 * (node - 1) + k);
            let n = 2 * (ne - 1);
            let mut mass = DMatrix::zeros(n, n);
            let mut stiff = DMatrix::zeros(n, n);
            let mut damp = DMatrix::zeros(n, n);
            let (h2, h3) = (h * h, h * h * h);
            let ke = [
                [12.0 / h3, 6.0 / h2, -12.0 / h3, 6.0 / h2],
                [6.0 / h2, 4.0 / h, -6.0 / h2, 2.0 / h],
                [-12.0 / h3, -6.0 / h2, 12.0 / h3, -6.0 / h2],
                [6.0 / h2, 2.0 / h, -6.0 / h2, 4.0 / h],
            ];
            let c = h / 420.0;
            let me = [
                [156.0 * c, 22.0 * h * c, 54.0 * c, -13.0 * h * c],
                [22.0 * h * c, 4.0 * h2 * c, 13.0 * h * c, -3.0 * h2 * c],
                [54.0 * c, 13.0 * h * c, 156.0 * c, -22.0 * h * c],
                [-13.0 * h * c, -3.0 * h2 * c, -22.0 * h * c, 4.0 * h2 * c],
            ];
            for e in 0..ne {
                let map = [
                    dof_of(e, 0),
                    dof_of(e, 1),
                    dof_of(e + 1, 0),
                    dof_of(e + 1, 1),
                ];
                scatter(&mut stiff, &map, &ke);
                scatter(&mut mass, &map, &me);
                let ge = weighted_mass(e as f64 * h, h, &spec.damping, h, &GAUSS4, |xi| {
                    hermite_shapes(xi, h)
                });
                scatter(&mut damp, &map, &ge);
            }
            let labels = (1..ne)
                .flat_map(|node| {
                    let x = node as f64 * h;
                    [DofLabel::Value { x }, DofLabel::Slope { x }]
                })
                .collect();
            DiscreteModel::build(
                Some(spec.kind),
                mass,
                symmetrize(&stiff),
                symmetrize(&damp),
                labels,
            )
        }
    }
}

/// The `N`-component semi-discrete system built from one scalar model.
#[derive(Debug, Clone)]
pub struct CoupledSystem {
    model: DiscreteModel,
    a: CouplingMatrix,
    d: CouplingMatrix,
    mass: SymBand,
    stiffness: SymBand,
    damping: SymBand,
}

pub fn couple(
    model: &DiscreteModel,
    a: &CouplingMatrix,
    d: &CouplingMatrix,
) -> Result<CoupledSystem> {
    if a.order() != d.order() {
        return Err(Error::Dimension(format!(
            "A has order {} but D has order {}",
            a.order(),
            d.order()
        )));
    }
    let n = a.order();
    let eye = DMatrix::identity(n, n);
    let mass = model.mass_band().kron(&eye);
    let stiffness =
        model
            .stiffness_band()
            .kron(&eye)
            .combine(1.0, &model.mass_band().kron(a.matrix()), 1.0);
    let damping = model.damping_band().kron(d.matrix());
    Ok(CoupledSystem {
        model: model.clone(),
        a: a.clone(),
        d: d.clone(),
        mass,
        stiffness,
        damping,
    })
}

impl CoupledSystem {
    pub fn model(&self) -> &DiscreteModel {
        &self.model
    }

    pub fn a(&self) -> &CouplingMatrix {
        &self.a
    }

    pub fn d(&self) -> &CouplingMatrix {
        &self.d
    }

    /// Number of components `N`.
    pub fn components(&self) -> usize {
        self.a.order()
    }

    /// `dof * N`.
    pub fn unknowns(&self) -> usize {
        self.model.dof() * self.components()
    }

    /// `M_h ⊗ I_N`.
    pub fn mass(&self) -> &SymBand {
        &self.mass
    }

    /// `K_h ⊗ I_N + M_h ⊗ A`.
    pub fn stiffness(&self) -> &SymBand {
        &self.stiffness
    }

    /// `G_h ⊗ D`.
    pub fn damping(&self) -> &SymBand {
        &self.damping
    }
}
