//! The five scenario commands. Each writes its artifacts into a directory and
//! returns a summary for the caller to print.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::algebra::{
    beta_matrix, build_sync_matrix, check_cp_compatibility, check_strong_compatibility,
    rank_diagnostics, reduce_system, CpCompatibility, RankReport, StrongCompatibility, DEFAULT_TOL,
};
use crate::csvio::{fmt_g17, read_table, save_matrix, write_trajectory};
use crate::diagnostics::{
    decay_verdict, fit_decay, spectrum, DecayFit, SpectrumReport, StandardObserver, Verdict,
    DEFAULT_SPECTRUM_CAP,
};
use crate::error::{Error, Result};
use crate::integrator::{simulate, Trajectory};
use crate::linalg::numerical_rank;
use crate::models::{couple, CoupledSystem, DiscreteModel};
use crate::scenario::{initial_state, InitialData, ModelSource, Scenario};

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn describe_model(sc: &Scenario) -> String {
    match &sc.model {
        ModelSource::Mesh(spec) => format!("{} ({} elements)", spec.kind.name(), spec.elements),
        ModelSource::Matrices(m) => format!("matrices ({} dof)", m.dof()),
    }
}

fn describe_initial(sc: &Scenario) -> String {
    match &sc.initial {
        InitialData::Random => format!("random (seed {})", sc.seed),
        InitialData::Groups { .. } => "group fields".into(),
        InitialData::Perturbed { epsilon, .. } => {
            format!(
                "group fields perturbed by {} (seed {})",
                fmt_g17(*epsilon),
                sc.seed
            )
        }
    }
}

fn build_system(sc: &Scenario) -> Result<(DiscreteModel, CoupledSystem)> {
    let model = sc.model.build()?;
    let system = couple(&model, &sc.a, &sc.d)?;
    Ok((model, system))
}

/// Saves the model and coupling matrices as CSV.
pub fn export_matrices(sc: &Scenario, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let model = sc.model.build()?;
    save_matrix(&dir.join("mass.csv"), model.mass())?;
    save_matrix(&dir.join("stiffness.csv"), model.stiffness())?;
    save_matrix(&dir.join("damping.csv"), model.damping())?;
    save_matrix(&dir.join("a.csv"), sc.a.matrix())?;
    save_matrix(&dir.join("d.csv"), sc.d.matrix())?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub compat: CpCompatibility,
    pub strong: StrongCompatibility,
    pub ranks: RankReport,
    pub rank_r: Option<usize>,
    /// First violated condition, if any.
    pub violation: Option<String>,
    pub text: String,
}

impl CheckReport {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

/// Compatibility of `A`, strong compatibility of `D` and `rank(R) = N - p`.
/// Writes `check.txt` and `check.csv`.
pub fn cmd_check(sc: &Scenario, dir: &Path) -> Result<CheckReport> {
    let part = sc.require_partition()?;
    let basis = build_sync_matrix(part);
    let compat = check_cp_compatibility(&sc.a, &basis, DEFAULT_TOL)?;
    let strong = check_strong_compatibility(&sc.d, &basis, DEFAULT_TOL)?;
    let ranks = rank_diagnostics(&sc.a, &sc.d, &basis)?;
    let (n, p) = (part.components(), part.groups());
    let rank_r = strong.r.as_ref().map(numerical_rank);

    let violation = if !compat.compatible {
        Some(format!(
            "C_p-compatibility: C_p A e_{} ≠ 0",
            compat.worst_group + 1
        ))
    } else if !strong.strong {
        Some(format!(
            "strong C_p-compatibility: D e_{} ≠ 0",
            strong.worst_group + 1
        ))
    } else if rank_r != Some(n - p) {
        Some(format!(
            "rank(R) = {} < N - p = {}",
            rank_r.unwrap_or(0),
            n - p
        ))
    } else {
        None
    };

    let mut t = String::new();
    let yes = |b: bool| if b { "holds" } else { "fails" };
    writeln!(t, "scenario: {}", sc.name).unwrap();
    writeln!(t, "seed: {}", sc.seed).unwrap();
    writeln!(t, "partition: {:?} (N = {n}, p = {p})", part.sizes()).unwrap();
    writeln!(
        t,
        "C_p-compatibility of A: {} (residual {:e}, threshold {:e})",
        yes(compat.compatible),
        compat.residual,
        compat.threshold
    )
    .unwrap();
    writeln!(
        t,
        "  block row sums: {} (largest spread {:e})",
        if compat.row_sums_constant {
            "constant"
        } else {
            "not constant"
        },
        compat.row_sum_deviation
    )
    .unwrap();
    writeln!(t, "  alpha:").unwrap();
    for r in 0..p {
        let row: Vec<String> = (0..p).map(|s| fmt_g17(compat.alpha[(r, s)])).collect();
        writeln!(t, "    {}", row.join(" ")).unwrap();
    }
    writeln!(
        t,
        "strong C_p-compatibility of D: {} (residual {:e}, threshold {:e})",
        yes(strong.strong),
        strong.residual,
        strong.threshold
    )
    .unwrap();
    match rank_r {
        Some(k) => writeln!(t, "  rank(R) = {k} (N - p = {})", n - p).unwrap(),
        None => writeln!(t, "  R undefined").unwrap(),
    }
    writeln!(t, "{ranks}").unwrap();
    match &violation {
        None => writeln!(t, "result: all conditions hold").unwrap(),
        Some(v) => writeln!(t, "result: violated {v}").unwrap(),
    }

    let flag = |b: bool| if b { "1".to_string() } else { "0".to_string() };
    let mut rows: Vec<(String, String)> = vec![
        ("seed".into(), sc.seed.to_string()),
        ("cp_compatible".into(), flag(compat.compatible)),
        ("cp_residual".into(), fmt_g17(compat.residual)),
        ("row_sums_constant".into(), flag(compat.row_sums_constant)),
        (
            "row_sum_deviation".into(),
            fmt_g17(compat.row_sum_deviation),
        ),
    ];
    for r in 0..p {
        for s in 0..p {
            rows.push((
                format!("alpha_{}_{}", r + 1, s + 1),
                fmt_g17(compat.alpha[(r, s)]),
            ));
        }
    }
    rows.extend([
        ("strong".into(), flag(strong.strong)),
        ("strong_residual".into(), fmt_g17(strong.residual)),
        (
            "rank_r".into(),
            rank_r.map_or("nan".to_string(), |k| k.to_string()),
        ),
        ("rank_d".into(), ranks.rank_d.to_string()),
        ("rank_cpd".into(), ranks.rank_cpd.to_string()),
        ("minimal_rank".into(), flag(ranks.minimal_rank_ok)),
        ("biorthogonal".into(), flag(ranks.biorthogonal)),
        ("pairing_sigma_min".into(), fmt_g17(ranks.pairing_sigma_min)),
        ("kalman_rank".into(), ranks.kalman_rank.to_string()),
        ("conditions_hold".into(), flag(violation.is_none())),
    ]);
    let mut csv = String::from("quantity,value\n");
    for (k, v) in rows {
        writeln!(csv, "{k},{v}").unwrap();
    }

    fs::create_dir_all(dir)?;
    write_file(dir, "check.txt", &t)?;
    write_file(dir, "check.csv", &csv)?;
    Ok(CheckReport {
        compat,
        strong,
        ranks,
        rank_r,
        violation,
        text: t,
    })
}

/// Writes `a_reduced.csv`, `d_reduced.csv`, `r.csv`, `b.csv`, `normalizer.csv`.
pub fn cmd_reduce(sc: &Scenario, dir: &Path) -> Result<String> {
    let basis = build_sync_matrix(sc.require_partition()?);
    let red = reduce_system(&sc.a, &sc.d, &basis, DEFAULT_TOL)?;
    fs::create_dir_all(dir)?;
    save_matrix(&dir.join("a_reduced.csv"), &red.a_reduced)?;
    save_matrix(&dir.join("d_reduced.csv"), &red.d_reduced)?;
    if let Some(r) = &red.r {
        save_matrix(&dir.join("r.csv"), r)?;
    }
    save_matrix(&dir.join("b.csv"), &red.b)?;
    save_matrix(&dir.join("normalizer.csv"), basis.normalizer())?;
    let mut t = String::new();
    writeln!(t, "scenario: {}", sc.name).unwrap();
    writeln!(t, "seed: {}", sc.seed).unwrap();
    writeln!(t, "reduced order: {}", red.a_reduced.nrows()).unwrap();
    writeln!(t, "intertwining residual: {:e}", red.intertwining_residual).unwrap();
    writeln!(t, "factor residual: {:e}", red.factor_residual).unwrap();
    write_file(dir, "reduce.txt", &t)?;
    Ok(t)
}

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub trajectory: Trajectory,
    pub fit: Option<DecayFit>,
    /// `sync_total(T) / sync_total(0)`.
    pub ratio: f64,
    pub verdict: Verdict,
    /// Verdict agrees with the scenario's `expect`, or nothing was expected.
    pub expectation_met: bool,
    pub text: String,
}

/// Runs the scenario; writes `trajectory.csv`, `verdict.txt`, `plot.gp` and
/// `manifest.txt`.
pub fn cmd_simulate(sc: &Scenario, dir: &Path) -> Result<SimulateOutcome> {
    let part = sc.require_partition()?;
    let basis = build_sync_matrix(part);
    let (_, system) = build_system(sc)?;
    let init = initial_state(sc, &system)?;
    let beta = beta_matrix(&sc.a, &basis, DEFAULT_TOL).ok();
    let observer = StandardObserver::new(&system, &basis, beta);
    let traj = simulate(&system, &init, &sc.sim, &[&observer])?;

    let sync = traj.column("sync_total").expect("standard observer column");
    let first = sync[0];
    let last = *sync.last().expect("at least one row");
    let ratio = if first > 0.0 { last / first } else { 0.0 };
    let fit = fit_decay(&traj.times, &sync, sc.window()).ok();
    let verdict = decay_verdict(fit.as_ref(), ratio);
    let expectation_met = sc.expect.is_none_or(|e| e == verdict);

    fs::create_dir_all(dir)?;
    write_trajectory(fs::File::create(dir.join("trajectory.csv"))?, &traj)?;

    let mut t = String::new();
    writeln!(t, "scenario: {}", sc.name).unwrap();
    writeln!(t, "seed: {}", sc.seed).unwrap();
    writeln!(t, "sync_error(0) = {}", fmt_g17(first)).unwrap();
    writeln!(t, "sync_error(T) = {}", fmt_g17(last)).unwrap();
    writeln!(t, "ratio = {}", fmt_g17(ratio)).unwrap();
    match &fit {
        Some(f) => {
            writeln!(
                t,
                "fit window = [{}, {}]",
                fmt_g17(f.window.0),
                fmt_g17(f.window.1)
            )
            .unwrap();
            writeln!(t, "omega = {}", fmt_g17(f.omega)).unwrap();
            writeln!(t, "M = {}", fmt_g17(f.m_const)).unwrap();
            writeln!(t, "r_squared = {}", fmt_g17(f.r_squared)).unwrap();
        }
        None => writeln!(t, "fit: not enough samples above the floor").unwrap(),
    }
    writeln!(t, "verdict: {verdict}").unwrap();
    if let Some(e) = sc.expect {
        writeln!(
            t,
            "expected: {e} ({})",
            if expectation_met { "met" } else { "not met" }
        )
        .unwrap();
    }
    write_file(dir, "verdict.txt", &t)?;
    write_file(dir, "plot.gp", &plot_script(&traj.columns))?;

    let mut m = String::new();
    writeln!(m, "scenario = {}", sc.name).unwrap();
    writeln!(m, "seed = {}", sc.seed).unwrap();
    writeln!(m, "model = {}", describe_model(sc)).unwrap();
    writeln!(m, "partition = {:?}", part.sizes()).unwrap();
    writeln!(m, "unknowns = {}", system.unknowns()).unwrap();
    writeln!(m, "dt = {}", fmt_g17(sc.sim.dt)).unwrap();
    writeln!(m, "horizon = {}", fmt_g17(sc.sim.horizon)).unwrap();
    writeln!(m, "stride = {}", sc.sim.stride).unwrap();
    writeln!(m, "initial = {}", describe_initial(sc)).unwrap();
    writeln!(m, "files = trajectory.csv, verdict.txt, plot.gp").unwrap();
    write_file(dir, "manifest.txt", &m)?;

    Ok(SimulateOutcome {
        trajectory: traj,
        fit,
        ratio,
        verdict,
        expectation_met,
        text: t,
    })
}

fn plot_script(columns: &[String]) -> String {
    let mut s = String::from(
        "set datafile separator ','\nset key autotitle columnhead\nset logscale y\nset xlabel 't'\n",
    );
    let plots: Vec<String> = columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.starts_with("sync_"))
        .map(|(i, _)| format!("'trajectory.csv' using 1:{} with lines", i + 2))
        .collect();
    writeln!(s, "plot {}", plots.join(", \\\n     ")).unwrap();
    s
}

/// Writes `spectrum.csv` (`re,im`) and `spectrum.txt` with the abscissa.
pub fn cmd_spectrum(sc: &Scenario, dir: &Path) -> Result<SpectrumReport> {
    let (_, system) = build_system(sc)?;
    let report = spectrum(&system, DEFAULT_SPECTRUM_CAP)?;
    fs::create_dir_all(dir)?;
    let mut csv = String::from("re,im\n");
    for z in &report.eigenvalues {
        writeln!(csv, "{},{}", fmt_g17(z.re), fmt_g17(z.im)).unwrap();
    }
    write_file(dir, "spectrum.csv", &csv)?;
    let mut t = String::new();
    writeln!(t, "scenario: {}", sc.name).unwrap();
    writeln!(t, "seed: {}", sc.seed).unwrap();
    writeln!(t, "eigenvalues: {}", report.eigenvalues.len()).unwrap();
    writeln!(t, "abscissa: {}", fmt_g17(report.abscissa)).unwrap();
    writeln!(t, "near-imaginary: {}", report.near_imaginary_count).unwrap();
    write_file(dir, "spectrum.txt", &t)?;
    Ok(report)
}

/// Re-fits decay from a trajectory CSV. Uses `column` if given, otherwise
/// `sync_total`, otherwise the first column after `t`. The window defaults to
/// the last three quarters of the recorded time span.
pub fn cmd_rate(
    input: &Path,
    column: Option<&str>,
    window: Option<(f64, f64)>,
) -> Result<DecayFit> {
    let file = fs::File::open(input)
        .map_err(|e| Error::Scenario(format!("cannot open {}: {e}", input.display())))?;
    let table = read_table(file)?;
    let times = table
        .column("t")
        .ok_or_else(|| Error::Scenario("CSV has no `t` column".into()))?;
    let name = match column {
        Some(c) => c.to_string(),
        None if table.columns.iter().any(|c| c == "sync_total") => "sync_total".into(),
        None => table
            .columns
            .iter()
            .find(|c| c.as_str() != "t")
            .cloned()
            .ok_or_else(|| Error::Scenario("CSV has no data column".into()))?,
    };
    let values = table
        .column(&name)
        .ok_or_else(|| Error::Scenario(format!("CSV has no column {name:?}")))?;
    let window = window.unwrap_or_else(|| {
        let t0 = times.first().copied().unwrap_or(0.0);
        let t1 = times.last().copied().unwrap_or(0.0);
        (t0 + 0.25 * (t1 - t0), t1)
    });
    fit_decay(&times, &values, window)
}

pub fn describe_fit(fit: &DecayFit) -> String {
    format!(
        "omega = {}\nM = {}\nr_squared = {}\nwindow = [{}, {}]\nsamples = {}\n",
        fmt_g17(fit.omega),
        fmt_g17(fit.m_const),
        fmt_g17(fit.r_squared),
        fmt_g17(fit.window.0),
        fmt_g17(fit.window.1),
        fit.samples
    )
}
