use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Command, ExperimentConfig, Model};
use super::record::{Check, ResultRecord, Table};
use crate::classical::{compare_classical_quantum, hamilton_flow};
use crate::fock::{
    exact_propagator, overlap_analytic, resolution_of_unity_check, DiscGrid, FockSpace, PhasePoint,
    PhasePoly,
};
use crate::propagators::{
    convergence_study, cs_exact_propagator, propagate, Endpoints, LatticeSpec, Method, PositionGrid,
};
use crate::rotsym::{
    h1_symbol, h1_symbol_fock, h2_symbol_closed, reduction_check, rotsym_flow, ReducibleSpec,
    ReducibleSystem, RotSymSpec,
};
use crate::wiener::{
    covariance_check, nu_extrapolate_with, wiener_propagator_mc, EstimateWithError, WienerConfig,
};
use crate::{Error, Result, C64};

/// Runs `cfg` on a pool of `cfg.workers` threads (the rayon default for 0)
/// and stamps each record with the elapsed time.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let started = Instant::now();
    let mut records = if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.workers)))?
            .install(|| dispatch(cfg))
    } else {
        dispatch(cfg)
    }
    .map_err(|e| with_context(cfg, e))?;
    let elapsed = started.elapsed().as_secs_f64();
    for r in &mut records {
        r.wall_time_s = elapsed;
    }
    Ok(records)
}

fn with_context(cfg: &ExperimentConfig, e: Error) -> Error {
    match e {
        Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Parameter { .. } => e,
        other => Error::Context {
            context: cfg.command.to_string(),
            source: Box::new(other),
        },
    }
}

fn dispatch(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    match cfg.command {
        Command::Overlap => overlap(cfg).map(|r| vec![r]),
        Command::ResolveUnity => resolve_unity(cfg).map(|r| vec![r]),
        Command::Propagate => propagate_cmd(cfg).map(|r| vec![r]),
        Command::Wiener => wiener(cfg),
        Command::Covariance => covariance(cfg).map(|r| vec![r]),
        Command::Classical => classical(cfg).map(|r| vec![r]),
        Command::RotsymClassical => rotsym_classical(cfg).map(|r| vec![r]),
        Command::RotsymQuantum => rotsym_quantum(cfg).map(|r| vec![r]),
        Command::Audit => audit(cfg).map(|r| vec![r]),
    }
}

fn overlap(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    let space = FockSpace::with_hbar(cfg.dim, cfg.hbar)?;
    let numeric = space
        .coherent_state(cfg.start())?
        .inner(&space.coherent_state(cfg.end())?);
    let exact = overlap_analytic(cfg.start(), cfg.end(), cfg.hbar);
    let mut r = ResultRecord::new("overlap", cfg);
    r.complex("overlap", numeric)
        .oracle_complex("analytic", exact)
        .oracle_value("deviation", (numeric - exact).norm());
    r.check(Check::at_most("deviation", (numeric - exact).norm(), 1e-8));
    Ok(r)
}

fn resolve_unity(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    let dev = resolution_of_unity_check(cfg.dim, cfg.disc_radius, cfg.disc_spacing, cfg.hbar)?;
    let mut r = ResultRecord::new("resolve-unity", cfg);
    r.value("states", (cfg.dim / 2).max(1) as f64)
        .value("max_deviation", dev);
    r.check(Check::at_most("max_deviation", dev, 1e-6));
    Ok(r)
}

fn lattice(cfg: &ExperimentConfig) -> Result<LatticeSpec> {
    Ok(LatticeSpec::new(cfg.slices, cfg.time, cfg.hbar)?
        .with_position_grid(PositionGrid::new(cfg.grid_points, cfg.grid_spacing)?)
        .with_phase_grid(DiscGrid::new(cfg.disc_radius, cfg.disc_spacing)?))
}

fn endpoints(cfg: &ExperimentConfig) -> Endpoints {
    match cfg.method {
        Method::SlicedPosition => Endpoints::Position {
            q_initial: cfg.q,
            q_final: cfg.q2,
        },
        _ => Endpoints::Phase {
            start: cfg.start(),
            end: cfg.end(),
        },
    }
}

fn propagate_cmd(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    let h = cfg.operator();
    let lat = lattice(cfg)?;
    let ends = endpoints(cfg);
    let mut r = ResultRecord::new("propagate", cfg);
    if !cfg.slices_list.is_empty() {
        let study = convergence_study(cfg.method, &h, ends, &lat, &cfg.slices_list)?;
        let mut t = Table::new(&["N", "re", "im", "error"]);
        for row in &study.rows {
            t.push(vec![
                row.slices as f64,
                row.value.re,
                row.value.im,
                row.error,
            ]);
        }
        t.sort();
        r.kind = "convergence".into();
        r.value("slope", study.slope)
            .oracle_complex("exact", study.exact);
        r.table = Some(t);
        return Ok(r);
    }
    let res = propagate(cfg.method, ends, &lat, &h)?;
    r.complex("value", res.value)
        .value("momentum_sums", res.momentum_sums as f64)
        .value("position_sums", res.position_sums as f64)
        .value("phase_sums", res.phase_sums as f64)
        .error("error_estimate", res.error_estimate);
    if res.boundary_warning {
        r.notes
            .push("coherent-state lattice carries weight at the rim of its disc".into());
    }
    if cfg.method == Method::Exact {
        let space = FockSpace::new(cfg.dim, cfg.mode())?;
        let u = exact_propagator(&space.operator(&h), cfg.time)?;
        let m = u.matrix();
        let defect = (m.adjoint() * m - nalgebra::DMatrix::<C64>::identity(cfg.dim, cfg.dim))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        r.value("unitarity_defect", defect);
        r.check(Check::at_most("unitarity_defect", defect, 1e-10));
    } else {
        let exact = propagate(Method::Exact, ends, &lat, &h)?.value;
        r.oracle_complex("exact", exact)
            .oracle_value("deviation", (res.value - exact).norm());
    }
    Ok(r)
}

fn require_unit_mass(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.mass != 1.0 {
        return Err(Error::param(
            "mass",
            "the Wiener estimator uses unit-mass coherent states",
        ));
    }
    Ok(())
}

fn wiener_config(cfg: &ExperimentConfig, nu: f64) -> WienerConfig {
    let mut w = WienerConfig::new(nu, cfg.steps, cfg.samples, cfg.start(), cfg.end(), cfg.time);
    w.seed = cfg.seed;
    w.hbar = cfg.hbar;
    w.estimator = cfg.estimator;
    w.prefactor = cfg.prefactor;
    w
}

fn wiener_oracle(cfg: &ExperimentConfig) -> Result<C64> {
    match cfg.hamiltonian {
        Model::Free => Ok(overlap_analytic(cfg.start(), cfg.end(), cfg.hbar)),
        _ => cs_exact_propagator(cfg.start(), cfg.end(), cfg.time, &cfg.operator(), cfg.dim),
    }
}

fn wiener(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    require_unit_mass(cfg)?;
    let symbol = cfg.symbol();
    let exact = wiener_oracle(cfg)?;
    let mut records = Vec::new();
    let mut estimates: Vec<EstimateWithError> = Vec::new();
    for run in cfg.schedule_wiener() {
        let est = wiener_propagator_mc(&wiener_config(&run, run.nu[0]), &symbol)?;
        let mut r = ResultRecord::new("wiener", &run);
        r.value("nu", est.nu)
            .complex("value", est.value)
            .value("stderr", est.stderr)
            .value("relative_error", est.relative_error())
            .value("low_confidence", if est.low_confidence { 1.0 } else { 0.0 })
            .oracle_complex("exact", exact);
        records.push(r);
        estimates.push(est);
    }
    if estimates.len() >= 3 {
        let fit = nu_extrapolate_with(&estimates, cfg.ansatz())?;
        let dev = (fit.value - exact).norm();
        let mut r = ResultRecord::new("wiener-extrapolation", cfg);
        r.complex("value", fit.value)
            .value("chi2_per_dof", fit.chi2_per_dof)
            .value("reliable", if fit.reliable { 1.0 } else { 0.0 })
            .error("statistical", fit.statistical_error)
            .error("fit", fit.fit_error)
            .error("combined", fit.combined_error())
            .oracle_complex("exact", exact)
            .oracle_value("deviation", dev);
        r.check(Check::at_most(
            "deviation_over_combined",
            dev / fit.combined_error(),
            3.0,
        ));
        let mut t = Table::new(&["nu", "re", "im", "stderr"]);
        for e in &estimates {
            t.push(vec![e.nu, e.value.re, e.value.im, e.stderr]);
        }
        t.sort();
        r.table = Some(t);
        records.push(r);
    }
    Ok(records)
}

fn covariance(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    require_unit_mass(cfg)?;
    let map = cfg.canonical_map();
    let res = covariance_check(&map, &wiener_config(cfg, cfg.nu[0]), &cfg.symbol())?;
    let mut r = ResultRecord::new("covariance", cfg);
    r.complex("original", res.original.value)
        .complex("transformed", res.transformed.value)
        .value("discrepancy", res.discrepancy)
        .error("original", res.original.stderr)
        .error("transformed", res.transformed.stderr)
        .error("combined", res.combined_stderr);
    let ratio = if res.combined_stderr > 0.0 {
        res.discrepancy / res.combined_stderr
    } else {
        res.discrepancy
    };
    r.check(Check::at_most("discrepancy_over_combined", ratio, 3.0));
    Ok(r)
}

fn classical(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    let rep = compare_classical_quantum(&cfg.operator(), cfg.start(), cfg.time, cfg.dt, cfg.dim)?;
    let mut r = ResultRecord::new("classical", cfg);
    r.value("max_deviation", rep.max_deviation)
        .value("rms_deviation", rep.rms_deviation)
        .value("energy_drift", rep.classical.energy_drift());
    let mut t = Table::new(&["t", "p_classical", "q_classical", "p_quantum", "q_quantum"]);
    for ((time, a), b) in rep
        .classical
        .times
        .iter()
        .zip(&rep.classical.points)
        .zip(&rep.quantum.points)
    {
        t.push(vec![*time, a.p, a.q, b.p, b.q]);
    }
    r.table = Some(t);
    Ok(r)
}

fn rotsym_classical(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    let spec = RotSymSpec {
        n: cfg.n,
        m0: cfg.m0,
        lambda0: cfg.lambda0,
        hbar: cfg.hbar,
    };
    let (p0, q0) = cfg.rotsym_initial();
    let traj = rotsym_flow(&spec, &p0, &q0, cfg.time, cfg.dt)?;
    let red = reduction_check(&traj);
    let mut r = ResultRecord::new("rotsym-classical", cfg);
    r.value("energy_drift", traj.energy_drift())
        .value("l2_drift", traj.l2_drift())
        .value("min_l2", traj.min_l2())
        .value("reduction_residual", red.residual);
    r.notes.push(format!("reduction: {:?}", red.reduction));
    r.check(Check::at_most("energy_drift", traj.energy_drift(), 1e-8))
        .check(Check::at_most("l2_drift", traj.l2_drift(), 1e-8))
        .check(Check::at_least("min_l2", traj.min_l2(), -1e-12))
        .check(Check::at_most("reduction_residual", red.residual, 1e-8));
    let mut t = Table::new(&["t", "E", "X", "Y", "Z", "L2"]);
    for ((time, e), inv) in traj.times.iter().zip(&traj.energy).zip(&traj.invariants) {
        t.push(vec![*time, *e, inv.x, inv.y, inv.z, inv.l2()]);
    }
    r.table = Some(t);
    Ok(r)
}

/// Parameter ranges of the randomized `rotsym-quantum` audit.
pub const DRAW_MASS: (f64, f64) = (0.5, 2.0);
pub const DRAW_ZETA_MAX: f64 = 0.7;
pub const DRAW_BETA: (f64, f64) = (0.0, 2.0);
pub const DRAW_POINT: f64 = 1.5;

/// One draw: `(m, ζ, β, p, q)` with `0 < ζ ≤ 0.7`.
pub fn draw_parameters(seed: u64, index: u64) -> (f64, f64, f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let m = rng.random_range(DRAW_MASS.0..DRAW_MASS.1);
    let zeta = DRAW_ZETA_MAX * (1.0 - rng.random::<f64>());
    let beta = rng.random_range(DRAW_BETA.0..DRAW_BETA.1);
    let p = rng.random_range(-DRAW_POINT..DRAW_POINT);
    let q = rng.random_range(-DRAW_POINT..DRAW_POINT);
    (m, zeta, beta, p, q)
}

/// Outcome of one randomized draw.
#[derive(Clone, Debug, PartialEq)]
pub struct DrawOutcome {
    pub spec: ReducibleSpec,
    pub p: f64,
    pub q: f64,
    pub closed: f64,
    pub fock: Result<f64, String>,
}

/// Closed form against the Fock construction for `draws` seeded parameter
/// sets at `dim_per_mode`, in parallel.
pub fn h2_audit(seed: u64, draws: usize, dim_per_mode: usize, hbar: f64) -> Vec<DrawOutcome> {
    (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let (m, zeta, beta, p, q) = draw_parameters(seed, i);
            let spec = ReducibleSpec {
                m,
                zeta,
                beta,
                hbar,
                dim_per_mode,
            };
            let fock = ReducibleSystem::new(&spec)
                .and_then(|s| s.symbol(p, q))
                .map_err(|e| e.to_string());
            DrawOutcome {
                spec,
                p,
                q,
                closed: h2_symbol_closed(&spec, p, q),
                fock,
            }
        })
        .collect()
}

fn rotsym_quantum(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    let spec = ReducibleSpec {
        m: cfg.m,
        zeta: cfg.zeta,
        beta: cfg.beta,
        hbar: cfg.hbar,
        dim_per_mode: cfg.dim_per_mode,
    };
    let sys = ReducibleSystem::new(&spec)?;
    let fock = sys.symbol(cfg.p, cfg.q)?;
    let closed = h2_symbol_closed(&spec, cfg.p, cfg.q);
    let (m0_sq, lambda0) = spec.induced();
    let pt = PhasePoint::new(cfg.p, cfg.q);
    let h1_fock = h1_symbol_fock(cfg.m, pt, cfg.hbar, cfg.dim)?;
    let h1_closed = h1_symbol(cfg.m, pt);
    let mut r = ResultRecord::new("rotsym-quantum", cfg);
    r.value("h2_fock", fock)
        .value("h2_closed", closed)
        .value("h2_difference", fock - closed)
        .value("m0_squared", m0_sq)
        .value("lambda0", lambda0)
        .value("vacuum_defect_a", sys.vacuum_defect.0)
        .value("vacuum_defect_b", sys.vacuum_defect.1)
        .value("h1_fock", h1_fock)
        .value("h1_closed", h1_closed)
        .value("h1_difference", h1_fock - h1_closed)
        .value("states", (cfg.dim_per_mode * cfg.dim_per_mode) as f64);
    r.check(Check::at_most("h2_difference", (fock - closed).abs(), 1e-5))
        .check(Check::at_most(
            "h1_difference",
            (h1_fock - h1_closed).abs(),
            1e-8,
        ));
    if cfg.draws > 0 {
        let outcomes = h2_audit(cfg.seed, cfg.draws, cfg.dim_per_mode, cfg.hbar);
        let residuals: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.fock.as_ref().ok().map(|f| (f - o.closed).abs()))
            .collect();
        let failures = outcomes.len() - residuals.len();
        let max = residuals.iter().copied().fold(0.0, f64::max);
        let mean = if residuals.is_empty() {
            0.0
        } else {
            residuals.iter().sum::<f64>() / residuals.len() as f64
        };
        r.value("draws", cfg.draws as f64)
            .value("draw_failures", failures as f64)
            .value("max_residual", max)
            .value("mean_residual", mean);
        r.check(Check::at_most("max_residual", max, 1e-5))
            .check(Check::at_most("draw_failures", failures as f64, 0.0));
        for o in outcomes.iter().filter(|o| o.fock.is_err()) {
            r.notes.push(format!(
                "draw m={:.4} zeta={:.4} beta={:.4} (p,q)=({:.4},{:.4}): {}",
                o.spec.m,
                o.spec.zeta,
                o.spec.beta,
                o.p,
                o.q,
                o.fock.as_ref().unwrap_err()
            ));
        }
    }
    Ok(r)
}

/// Fast invariant suite.
fn audit(cfg: &ExperimentConfig) -> Result<ResultRecord> {
    let mut r = ResultRecord::new("audit", cfg);

    // overlaps on a 10×10 grid of pairs at the configured truncation
    let space = FockSpace::with_hbar(cfg.dim, 1.0)?;
    let pts: Vec<PhasePoint> = (0..10)
        .map(|i| {
            let s = -2.0 + 4.0 * i as f64 / 9.0;
            PhasePoint::new(s, 2.0 - 0.37 * (i as f64))
        })
        .collect();
    let states: Vec<_> = pts.iter().map(|&z| space.coherent_amplitudes(z)).collect();
    let mut worst = 0.0f64;
    for (a, za) in states.iter().zip(&pts) {
        for (b, zb) in states.iter().zip(&pts) {
            worst = worst.max((a.inner(b) - overlap_analytic(*za, *zb, 1.0)).norm());
        }
    }
    r.check(Check::at_most("overlap", worst, 1e-8));

    // hermiticity of the selected Hamiltonian
    let op = FockSpace::new(cfg.dim, cfg.mode())?.operator(&cfg.operator());
    let herm = (op.matrix() - op.matrix().adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    r.check(Check::at_most("hermiticity", herm, 1e-12));

    // one more momentum than position integration
    let h = cfg.operator();
    let mut count_defect = 0.0f64;
    for n in [1usize, 3, 7] {
        let lat = lattice(cfg)?.with_slices(n);
        let res = propagate(
            Method::SlicedPosition,
            Endpoints::Position {
                q_initial: 0.0,
                q_final: 0.4,
            },
            &lat,
            &h,
        )?;
        count_defect += ((res.momentum_sums as f64) - (n as f64 + 1.0)).abs()
            + ((res.position_sums as f64) - n as f64).abs();
    }
    r.check(Check::at_most("integration_counts", count_defect, 0.0));

    // quadratic symbols: Ehrenfest means follow the classical flow
    let quad = crate::fock::LadderPoly::normal_ordered(
        crate::fock::Mode::unit(),
        &PhasePoly::oscillator(1.0),
    );
    let rep = compare_classical_quantum(&quad, PhasePoint::new(0.3, 1.0), 10.0, 1e-2, 64)?;
    r.check(Check::at_most(
        "quadratic_ehrenfest",
        rep.max_deviation,
        1e-8,
    ));
    let flow = hamilton_flow(
        &PhasePoly::oscillator(1.0),
        PhasePoint::new(0.3, 1.0),
        10.0,
        1e-2,
    )?;
    r.check(Check::at_most("energy_drift", flow.energy_drift(), 1e-8));

    // rotationally symmetric flow
    let rs = RotSymSpec::new(3, 1.0, 0.1)?;
    let traj = rotsym_flow(&rs, &[0.1, 0.5, -0.2], &[1.0, 0.0, 0.3], 10.0, 1e-3)?;
    r.check(Check::at_most(
        "rotsym_energy_drift",
        traj.energy_drift(),
        1e-8,
    ))
    .check(Check::at_most("rotsym_l2_drift", traj.l2_drift(), 1e-8))
    .check(Check::at_least("rotsym_min_l2", traj.min_l2(), -1e-12))
    .check(Check::at_most(
        "rotsym_reduction",
        reduction_check(&traj).residual,
        1e-8,
    ));

    // symbols of the quartic models
    let h1 = (h1_symbol_fock(2.0, PhasePoint::new(0.0, 1.0), 1.0, 64)? - 6.0).abs();
    r.check(Check::at_most("h1_symbol", h1, 1e-8));
    let spec = ReducibleSpec::new(1.0, 0.5, 2.0)?;
    let sys = ReducibleSystem::new(&spec)?;
    r.check(Check::at_most(
        "h2_symbol",
        (sys.symbol(0.0, 1.0)? - 0.75).abs(),
        1e-6,
    ))
    .check(Check::at_least(
        "h2_min_eigenvalue",
        sys.min_eigenvalue(),
        -1e-8,
    ));

    // Wiener estimates do not depend on the thread count
    let mut w = WienerConfig::new(
        4.0,
        8,
        20_000,
        PhasePoint::ORIGIN,
        PhasePoint::new(0.5, 0.5),
        1.0,
    );
    w.seed = cfg.seed;
    let sym = PhasePoly::oscillator(1.0);
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?
        .install(|| wiener_propagator_mc(&w, &sym))?;
    let many = wiener_propagator_mc(&w, &sym)?;
    let same = one.value.re.to_bits() == many.value.re.to_bits()
        && one.value.im.to_bits() == many.value.im.to_bits()
        && one.stderr.to_bits() == many.stderr.to_bits();
    r.check(Check::at_most(
        "thread_determinism",
        if same { 0.0 } else { 1.0 },
        0.0,
    ));

    for c in r.checks.clone() {
        r.values.insert(c.name.clone(), c.value);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(command: Command, kv: &[(&str, &str)]) -> ExperimentConfig {
        let overrides: Vec<(String, String)> = kv
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        ExperimentConfig::parse(command, None, &overrides).unwrap()
    }

    #[test]
    fn exact_propagate_has_unitarity_field() {
        let r = run_experiment(&quick(Command::Propagate, &[("dim", "32")])).unwrap();
        assert!(r[0].values["unitarity_defect"] < 1e-10);
        assert!(r[0].passed());
    }

    #[test]
    fn convergence_table_ascending() {
        let cfg = quick(
            Command::Propagate,
            &[
                ("method", "sliced-q"),
                ("slices_list", "2,4,8"),
                ("q", "0"),
                ("q2", "0.4"),
                ("time", "0.5"),
            ],
        );
        let r = run_experiment(&cfg).unwrap();
        let t = r[0].table.as_ref().unwrap();
        assert_eq!(t.columns[0], "N");
        assert!(t.rows.windows(2).all(|w| w[0][0] < w[1][0]));
    }

    #[test]
    fn wiener_rerun_is_bit_identical() {
        let cfg = quick(
            Command::Wiener,
            &[
                ("nu", "4,8,16"),
                ("samples", "4000"),
                ("steps", "8"),
                ("seed", "3"),
                ("workers", "2"),
            ],
        );
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.len(), 4);
        assert!(a.iter().zip(&b).all(|(x, y)| x.same_values(y)));
        assert_eq!(a[0].values["nu"], 4.0);
        assert!(a[0].values.contains_key("stderr"));
    }

    #[test]
    fn rotsym_quantum_record_has_both_symbols() {
        let r = run_experiment(&quick(Command::RotsymQuantum, &[("p", "0"), ("q", "1")])).unwrap();
        let v = &r[0].values;
        assert!((v["h2_closed"] - 0.75).abs() < 1e-15);
        assert!(v["h2_difference"].abs() < 1e-6);
        assert!(r[0].passed());
    }

    #[test]
    fn draws_are_reproducible() {
        assert_eq!(draw_parameters(7, 3), draw_parameters(7, 3));
        assert_ne!(draw_parameters(7, 3), draw_parameters(7, 4));
        for i in 0..100 {
            let (_, zeta, ..) = draw_parameters(1, i);
            assert!(zeta > 0.0 && zeta <= DRAW_ZETA_MAX);
        }
    }

    #[test]
    fn wiener_needs_unit_mass() {
        let cfg = quick(Command::Wiener, &[("mass", "2")]);
        assert!(matches!(
            run_experiment(&cfg),
            Err(Error::Parameter { field: "mass", .. })
        ));
    }

    #[test]
    fn audit_passes() {
        let r = run_experiment(&ExperimentConfig::for_command(Command::Audit)).unwrap();
        let failed: Vec<_> = r[0].checks.iter().filter(|c| !c.passed).collect();
        assert!(failed.is_empty(), "{failed:?}");
    }
}
