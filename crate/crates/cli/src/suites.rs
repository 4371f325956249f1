//! End-to-end acceptance suites run by `psdid verify <suite>`.
//!
//! Each suite prints what it measured next to what it expected and passes
//! only if every check does.

use std::fmt;
use std::time::{Duration, Instant};

use psdid::analysis::{
    dense_oracle, effective_form, larger_shift_bounds, quality_epsilon, sharpness_probe, verify_trace, NuRule,
    QualityObserver, RestrictedOperators, SkipReason, SpectralOracle, VerifyConfig,
};
use psdid::linalg::{norm2, DenseBlock, Pencil, SparseMatrix, DEFAULT_DENSE_LIMIT};
use psdid::preconditioner::{Preconditioner, PreconditionerSpec, Variant};
use psdid::problems::{build_slit_laplacian, mm_format, mm_parse, SlitRectangleSpec};
use psdid::solver::{
    psd_id_step, random_block, run_observed, DeflationSet, RunConfig, ShiftStrategy, StepSettings, StopCriterion,
};

use crate::commands::{quality_for, solve, solve_observed};
use crate::config::{ExperimentConfig, Overrides, PreconditionerConfig};
use crate::error::{CliError, Result};

/// The six smallest eigenvalues of the short-slit Laplacian at `h = 1/80`
/// as published, to five decimals.
pub const REFERENCE_EIGENVALUES: [f64; 6] = [27.07834, 38.24327, 45.24858, 49.32646, 58.36810, 78.91626];

/// Suite names with the acceptance criterion each one covers.
pub const SUITES: [(&str, u8); 10] = [
    ("node-counts", 1),
    ("eigenvalues", 2),
    ("bound-validity", 3),
    ("sharpness", 4),
    ("epsilon-exact", 5),
    ("monotonicity", 6),
    ("supercubic", 7),
    ("cluster", 8),
    ("matrix-market", 9),
    ("determinism", 10),
];

#[derive(Debug, Clone)]
pub struct Check {
    pub what: String,
    pub measured: String,
    pub expected: String,
    pub passed: bool,
}

impl Check {
    fn new(what: impl Into<String>, measured: impl Into<String>, expected: impl Into<String>, passed: bool) -> Self {
        Self {
            what: what.into(),
            measured: measured.into(),
            expected: expected.into(),
            passed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub criterion: u8,
    pub checks: Vec<Check>,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    /// `PASS [3] bound-validity (12 checks, 11.2 s)`.
    pub fn headline(&self) -> String {
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        format!(
            "{} [{}] {} ({} checks, {} failed, {:.1} s)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.criterion,
            self.name,
            self.checks.len(),
            failed,
            self.elapsed.as_secs_f64()
        )
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.headline())?;
        for c in &self.checks {
            writeln!(
                f,
                "  {} {}: measured {}; expected {}",
                if c.passed { "ok  " } else { "FAIL" },
                c.what,
                c.measured,
                c.expected
            )?;
        }
        Ok(())
    }
}

pub fn run_suite(name: &str) -> Result<SuiteReport> {
    let Some(&(name, criterion)) = SUITES.iter().find(|(n, _)| *n == name) else {
        let known: Vec<_> = SUITES.iter().map(|(n, _)| *n).collect();
        return Err(CliError::Config(format!(
            "unknown suite {name:?}; known: {}",
            known.join(", ")
        )));
    };
    let start = Instant::now();
    let checks = match name {
        "node-counts" => node_counts()?,
        "eigenvalues" => eigenvalues()?,
        "bound-validity" => bound_validity()?,
        "sharpness" => sharpness()?,
        "epsilon-exact" => epsilon_exact()?,
        "monotonicity" => monotonicity()?,
        "supercubic" => supercubic()?,
        "cluster" => cluster()?,
        "matrix-market" => matrix_market()?,
        "determinism" => determinism()?,
        _ => unreachable!("listed in SUITES"),
    };
    Ok(SuiteReport {
        name,
        criterion,
        checks,
        elapsed: start.elapsed(),
    })
}

fn count_check(what: &str, found: usize, want: usize) -> Check {
    Check::new(what, format!("n = {found}"), format!("n = {want}"), found == want)
}

fn node_counts() -> Result<Vec<Check>> {
    let start = Instant::now();
    let (short, _) = build_slit_laplacian(&SlitRectangleSpec::two_short_slits(1.0 / 80.0))?;
    let (long, _) = build_slit_laplacian(&SlitRectangleSpec::two_long_slits(1.0 / 80.0))?;
    let (square, _) = build_slit_laplacian(&SlitRectangleSpec::unit_square(0.25))?;
    let secs = start.elapsed().as_secs_f64();
    Ok(vec![
        count_check("short slits, h = 1/80", short.n(), 9383),
        count_check("long slits, h = 1/80", long.n(), 9271),
        count_check("unit square, h = 1/4", square.n(), 9),
        Check::new("generation time", format!("{secs:.3} s"), "< 1 s", secs < 1.0),
    ])
}

/// Six eigenvalues of the short-slit Laplacian with `{k, k̃} = {2, 3}` and
/// exact shift-invert, `σ = 20` and then the last accepted eigenvalue.
pub fn short_slit_experiment(h: f64) -> ExperimentConfig {
    ExperimentConfig::generated(
        SlitRectangleSpec::two_short_slits(h),
        6,
        2,
        3,
        ShiftStrategy::PrevEig {
            initial: 20.0,
            offset: 0.0,
        },
        PreconditionerConfig::new(Variant::ExactShiftInvert),
        StopCriterion::SInvResidual { tol: 1e-8 },
    )
}

fn tempdir() -> Result<tempfile::TempDir> {
    tempfile::tempdir().map_err(|e| CliError::io(std::env::temp_dir(), e))
}

fn eigenvalues() -> Result<Vec<Check>> {
    let dir = tempdir()?;
    let out = solve(&short_slit_experiment(1.0 / 80.0), dir.path(), Overrides::default())?;
    let s = &out.summary;
    let mut checks = vec![
        Check::new("order", s.n.to_string(), "9383", s.n == 9383),
        Check::new(
            "all runs converged",
            format!("{} ({} outer steps)", s.converged, s.total_steps),
            "true",
            s.converged,
        ),
    ];
    for (j, &want) in REFERENCE_EIGENVALUES.iter().enumerate() {
        let (measured, ok) = match s.eigenvalues.get(j) {
            Some(&got) => (format!("{got:.9}"), (got - want).abs() <= 5e-4),
            None => ("missing".to_owned(), false),
        };
        checks.push(Check::new(
            format!("λ{}", j + 1),
            measured,
            format!("{want} ± 5e-4"),
            ok,
        ));
    }
    let max_radius = s.radii.iter().copied().fold(0.0, f64::max);
    checks.push(Check::new(
        "largest certificate radius",
        format!("{max_radius:.2e}"),
        "≤ 1e-6",
        s.radii.len() == 6 && max_radius <= 1e-6,
    ));
    Ok(checks)
}

/// The desk-scale short-slit pencil (`h = 1/16`, `n = 343`) with its oracle.
fn desk_pencil() -> Result<(Pencil, SpectralOracle)> {
    let (p, _) = build_slit_laplacian(&SlitRectangleSpec::two_short_slits(1.0 / 16.0))?;
    let o = dense_oracle(&p, DEFAULT_DENSE_LIMIT)?;
    Ok((p, o))
}

fn desk_experiment(variant: Variant, tol: f64, seed: u64) -> ExperimentConfig {
    let mut pre = PreconditionerConfig::new(variant);
    pre.tolerance = tol;
    let mut cfg = ExperimentConfig::generated(
        SlitRectangleSpec::two_short_slits(1.0 / 16.0),
        4,
        2,
        3,
        ShiftStrategy::PrevEig {
            initial: 15.0,
            offset: 0.0,
        },
        pre,
        StopCriterion::SInvResidual { tol: 1e-8 },
    );
    cfg.seed = seed;
    cfg
}

#[derive(Debug, Default)]
struct SweepStats {
    checked: usize,
    violations: usize,
    max_slack: f64,
    monotone_checked: usize,
    monotone_violations: usize,
    unconverged: usize,
    no_quality: usize,
    max_epsilon: f64,
}

/// Solves the desk problem for every seed and checks each trace against
/// the single-step estimate with measured quality.
fn sweep(
    p: &Pencil,
    o: &SpectralOracle,
    variant: Variant,
    tol: f64,
    seeds: std::ops::Range<u64>,
) -> Result<SweepStats> {
    let mut st = SweepStats::default();
    for seed in seeds {
        let cfg = desk_experiment(variant, tol, seed);
        let (res, realized, taus) = solve_observed(p, o, &cfg, Overrides::default())?;
        if !res.converged {
            st.unconverged += 1;
        }
        let (sched, _) = quality_for(p, o, &cfg, &res.traces, realized)?;
        let rep = verify_trace(&res.traces, o, &sched, &taus, &VerifyConfig::default())?;
        st.checked += rep.checked;
        st.violations += rep.violations;
        st.max_slack = st.max_slack.max(rep.max_slack);
        st.monotone_violations += rep.monotone_violations;
        st.monotone_checked += rep.rows.iter().filter(|r| r.epsilon.is_some()).count();
        st.no_quality += rep
            .rows
            .iter()
            .filter(|r| r.skip == Some(SkipReason::NoQuality))
            .count();
        for r in &rep.rows {
            if let Some(e) = r.epsilon {
                st.max_epsilon = st.max_epsilon.max(e);
            }
        }
    }
    Ok(st)
}

const DESK_CONFIGS: [(Variant, f64); 4] = [
    (Variant::ExactShiftInvert, 0.01),
    (Variant::InnerKrylov, 0.5),
    (Variant::InnerKrylov, 0.1),
    (Variant::InnerKrylov, 0.01),
];

fn label(variant: Variant, tol: f64) -> String {
    if variant.is_krylov() {
        format!("{variant} tol {tol}")
    } else {
        variant.to_string()
    }
}

fn bound_validity() -> Result<Vec<Check>> {
    let (p, o) = desk_pencil()?;
    let mut checks = vec![Check::new("order", p.n().to_string(), "≤ 1500", p.n() <= 1500)];
    for (variant, tol) in DESK_CONFIGS {
        let st = sweep(&p, &o, variant, tol, 0..20)?;
        checks.push(Check::new(
            format!("{}, 20 seeds", label(variant, tol)),
            format!(
                "{} steps checked, {} violations (max slack {:.1e}), max ε {:.4}, {} without usable ε, {} unconverged",
                st.checked, st.violations, st.max_slack, st.max_epsilon, st.no_quality, st.unconverged
            ),
            "0 violations",
            st.violations == 0 && st.checked > 0,
        ));
    }
    Ok(checks)
}

fn sharpness() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let d: Vec<f64> = (1..=10).map(f64::from).collect();
    let diag = Pencil::standard(SparseMatrix::diagonal(&d))?;
    let (lap, _) = build_slit_laplacian(&SlitRectangleSpec::two_short_slits(1.0 / 8.0))?;
    let cases = [
        ("diag(1..10), j = 1, ν = 0", &diag, 1, 0.0),
        ("slit Laplacian h = 1/8, j = 2, ν = λ₁/2", &lap, 2, 0.5),
    ];
    for (what, p, j, nu_scale) in cases {
        let o = dense_oracle(p, DEFAULT_DENSE_LIMIT)?;
        let nu = nu_scale * o.lambda(1);
        let rep = sharpness_probe(p, &o, j, nu, 0.0, &[1e-8])?;
        let rel = rep.points[0].relative;
        checks.push(Check::new(
            what,
            format!(
                "observed/limit = {} (limit {:.6})",
                rel.map_or("n/a".into(), |r| format!("{r:.6}")),
                rep.limit
            ),
            "∈ [0.99, 1.0]",
            rel.is_some_and(|r| (0.99..=1.0 + 1e-9).contains(&r)),
        ));
    }
    Ok(checks)
}

fn epsilon_exact() -> Result<Vec<Check>> {
    let (p, o) = desk_pencil()?;
    let mut checks = Vec::new();
    for (i, sigma) in [(1, 15.0), (1, 0.0), (3, o.lambda(2))] {
        let k = Preconditioner::build(PreconditionerSpec::new(Variant::ExactShiftInvert, sigma), &p)?;
        let (ro, def) = effective_form(&k, &p, &o, i, sigma)?;
        let q = quality_epsilon(&ro)?;
        checks.push(Check::new(
            format!("exact shift-invert, i = {i}, σ = {sigma:.4}"),
            format!("ε = {:.2e}, positive definite {}", q.epsilon, def.positive_definite),
            "ε ≤ 1e-10",
            q.epsilon <= 1e-10 && def.positive_definite,
        ));
    }
    let identity = RestrictedOperators::from_parts(1, 0.0, vec![1.0, 4.0], DenseBlock::identity(2))?;
    let q = quality_epsilon(&identity)?;
    checks.push(Check::new(
        "K = I with Λν = diag(1, 4)",
        format!("ε = {}", q.epsilon),
        "ε = 0.6",
        q.epsilon == 0.6,
    ));
    Ok(checks)
}

fn monotonicity() -> Result<Vec<Check>> {
    let (p, o) = desk_pencil()?;
    let mut checks = Vec::new();
    let configs = DESK_CONFIGS
        .iter()
        .copied()
        .chain([(Variant::ProjectedInnerKrylov, 0.1), (Variant::Diagonal, 0.01)]);
    for (variant, tol) in configs {
        let st = sweep(&p, &o, variant, tol, 100..106)?;
        checks.push(Check::new(
            format!("{}, 6 seeds", label(variant, tol)),
            format!(
                "{} increases in {} certified Ritz-value updates",
                st.monotone_violations, st.monotone_checked
            ),
            "0 increases beyond 1e-10 relative",
            st.monotone_violations == 0,
        ));
    }
    Ok(checks)
}

/// Ratio `(ρ(x)−λᵢ)/(λᵢ₊₁−ρ(x))` from the eigen-coefficients of `x`, free of
/// cancellation near `λᵢ`.
fn coefficient_ratio(p: &Pencil, o: &SpectralOracle, x: &[f64], i: usize) -> Result<f64> {
    let xb = DenseBlock::from_col_major(x.len(), 1, x.to_vec())?;
    let c = o.coefficients(p, 1, &xb);
    let (li, lnext) = (o.lambda(i), o.lambda(i + 1));
    let (mut below, mut above) = (0.0, 0.0);
    for (k, &l) in o.values().iter().enumerate() {
        let w = c[(k, 0)] * c[(k, 0)];
        below += w * (l - li);
        above += w * (lnext - l);
    }
    Ok(below / above)
}

fn supercubic() -> Result<Vec<Check>> {
    let (p, o) = desk_pencil()?;
    let n = p.n();
    let mut checks = Vec::new();
    for i in [1usize, 2] {
        let defl = DeflationSet::from_parts(o.deflated_basis(i), o.values()[..i - 1].to_vec())?;
        let (li, lnext) = (o.lambda(i), o.lambda(i + 1));
        let (mut worst_super, mut worst_cubic, mut bad, mut tried) = (0.0f64, 0.0f64, 0, 0);
        for seed in 0..20u64 {
            // z = vᵢ + s·Σ_{k>i} c_k v_k with s set so the ratio is δ.
            let c = random_block(n, 1, seed);
            let (mut below, mut above) = (0.0, 0.0);
            for k in i..n {
                let w = c[(k, 0)] * c[(k, 0)];
                below += w * (o.values()[k] - li);
                above += w * (lnext - o.values()[k]);
            }
            let delta = [0.3, 0.1, 0.01][seed as usize % 3];
            let s = (delta * (lnext - li) / (below - delta * above)).sqrt();
            let mut z = o.vectors().col(i - 1).to_vec();
            for k in i..n {
                let coef = s * c[(k, 0)];
                for (r, zr) in z.iter_mut().enumerate() {
                    *zr += coef * o.vectors()[(r, k)];
                }
            }
            let rho = p.rayleigh_quotient(&z)?;
            tried += 1;
            let spec = PreconditionerSpec::new(Variant::ProjectedInnerKrylov, rho).with_tolerance(1e-12);
            let k = Preconditioner::build(spec, &p)?;
            let (_, next) = psd_id_step(&z, &defl, &k, &p, StepSettings::default())?;
            let before = coefficient_ratio(&p, &o, &z, i)?;
            let after = coefficient_ratio(&p, &o, &next, i)?;
            let b = larger_shift_bounds(li, lnext, o.lambda_max(), rho, rho, 0.0)?;
            debug_assert!((before / delta - 1.0).abs() < 1e-6);
            let within = after <= b.supercubic * (1.0 + 1e-8) && after <= b.cubic * (1.0 + 1e-8);
            if !within {
                bad += 1;
            }
            worst_super = worst_super.max(after / b.supercubic);
            worst_cubic = worst_cubic.max(after / b.cubic);
        }
        checks.push(Check::new(
            format!("i = {i}, σ = ρ(z), {tried} seeded starts"),
            format!(
                "{bad} above a bound; max observed/(κ/(2−κ))²·ratio = {worst_super:.2e}, max observed/ratio³ = {worst_cubic:.2e}"
            ),
            "observed ≤ both bounds",
            bad == 0 && tried == 20,
        ));
    }
    Ok(checks)
}

fn cluster() -> Result<Vec<Check>> {
    let (p, _) = build_slit_laplacian(&SlitRectangleSpec::two_long_slits(1.0 / 20.0))?;
    let o = dense_oracle(&p, DEFAULT_DENSE_LIMIT)?;
    let (i, kt) = (4, 3);
    let defl = DeflationSet::from_parts(o.deflated_basis(i), o.values()[..i - 1].to_vec())?;
    let sigma = o.lambda(i - 1);
    let spec = PreconditionerSpec::new(Variant::InnerKrylov, sigma).with_tolerance(0.3);
    let (mut steps, mut dominated, mut n3, mut ordered, mut n2, mut unconverged) = (0, 0, 0, 0, 0, 0);
    let mut min_factor1 = [f64::INFINITY; 2];
    let mut n1 = [0usize; 2];
    for seed in 0..5u64 {
        let mut cfg = RunConfig::new(kt, kt, spec, StopCriterion::SInvResidual { tol: 1e-8 });
        cfg.max_steps = 60;
        let z0 = random_block(p.n(), kt, seed);
        let mut obs = QualityObserver::new(&p, &o, NuRule::Sigma);
        let (res, trace) = run_observed(&p, &defl, &z0, &cfg, &mut obs)?;
        if !res.converged {
            unconverged += 1;
        }
        let (sched, taus) = obs.into_parts();
        let rep = verify_trace(&trace, &o, &sched, &taus, &VerifyConfig::default())?;
        steps += trace.len() - 1;
        for r in &rep.rows {
            if let (Some(obs3), Some(b3)) = (r.multi.observed23, r.multi.bound3) {
                n3 += 1;
                if obs3 <= b3 * (1.0 + 1e-10) + 1e-13 {
                    dominated += 1;
                }
            }
            if let (Some(b2), Some(b3)) = (r.multi.bound2, r.multi.bound3) {
                n2 += 1;
                if b3 <= b2 * (1.0 + 1e-12) {
                    ordered += 1;
                }
            }
            if let (Some(f), true) = (r.multi.factor1, r.t <= 2) {
                min_factor1[r.t - 1] = min_factor1[r.t - 1].min(f);
                n1[r.t - 1] += 1;
            }
        }
    }
    let mut checks = vec![
        Check::new(
            "configuration",
            format!(
                "n = {}, λ₄..λ₆ = {:.3}, {:.3}, {:.3}, {steps} steps over 5 seeds, {unconverged} unconverged",
                p.n(),
                o.lambda(4),
                o.lambda(5),
                o.lambda(6)
            ),
            "clustered λ₄..λ₆ with k̃ = 3",
            unconverged == 0,
        ),
        Check::new(
            "Bound₃ dominates the observed ratio",
            format!("{dominated} of {n3} steps"),
            "every step",
            n3 > 0 && dominated == n3,
        ),
        Check::new(
            "Bound₃ ≤ Bound₂",
            format!("{ordered} of {n2} steps"),
            "every step",
            n2 > 0 && ordered == n2,
        ),
    ];
    for (t, (&f, &cnt)) in min_factor1.iter().zip(&n1).enumerate() {
        checks.push(Check::new(
            format!("Bound₁ factor for λ{}", i + t),
            format!("min {f:.4} over {cnt} steps"),
            "≥ 0.99 (non-informative)",
            cnt > 0 && f >= 0.99,
        ));
    }
    Ok(checks)
}

fn bit_exact(a: &SparseMatrix, b: &SparseMatrix) -> bool {
    a.row_ptr() == b.row_ptr()
        && a.col_idx() == b.col_idx()
        && a.values().len() == b.values().len()
        && a.values()
            .iter()
            .zip(b.values())
            .all(|(x, y)| x.to_bits() == y.to_bits())
}

fn round_trip(a: &SparseMatrix) -> Result<SparseMatrix> {
    let mut bytes = Vec::new();
    mm_format(a, &mut bytes)?;
    Ok(mm_parse(bytes.as_slice())?)
}

/// `max_j ‖H uⱼ − λⱼ S uⱼ‖₂ / (‖H uⱼ‖₂ + |λⱼ|‖S uⱼ‖₂)` over accepted pairs.
fn max_psi(p: &Pencil, defl: &DeflationSet) -> f64 {
    let u = defl.u();
    let mut worst = 0.0f64;
    for (j, &lambda) in defl.eigenvalues().iter().enumerate() {
        let hu = p.apply_h(u.col(j));
        let su = p.apply_s(u.col(j));
        let r: Vec<f64> = hu.iter().zip(&su).map(|(h, s)| h - lambda * s).collect();
        worst = worst.max(norm2(&r) / (norm2(&hu) + lambda.abs() * norm2(&su)));
    }
    worst
}

fn matrix_market() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let (p, _) = build_slit_laplacian(&SlitRectangleSpec::two_short_slits(1.0 / 80.0))?;
    let back = round_trip(p.h())?;
    let same_print = Pencil::standard(back.clone())?.fingerprint() == p.fingerprint();
    checks.push(Check::new(
        "short-slit H (n = 9383) through Matrix Market",
        format!("bit-exact {}, fingerprint equal {same_print}", bit_exact(&back, p.h())),
        "bit-exact",
        bit_exact(&back, p.h()) && same_print,
    ));
    // Awkward values: subnormal, huge, thirds.
    let n = 50;
    let mut triplets = Vec::new();
    for r in 0..n {
        let x = (r as f64 + 1.0) / 3.0;
        triplets.push((r, r, 4.0 + x));
        if r + 1 < n {
            let v = if r % 7 == 0 { 5e-324 } else { -x };
            triplets.push((r, r + 1, v));
            triplets.push((r + 1, r, v));
        }
    }
    let odd = SparseMatrix::from_triplets(n, &triplets)?;
    let odd_ok = bit_exact(&round_trip(&odd)?, &odd);
    checks.push(Check::new(
        "matrix with subnormal and repeating values",
        format!("bit-exact {odd_ok}"),
        "bit-exact",
        odd_ok,
    ));

    let (p, _) = build_slit_laplacian(&SlitRectangleSpec::two_short_slits(1.0 / 16.0))?;
    for tol in [1e-6, 1e-10] {
        let spec = PreconditionerSpec::new(Variant::ExactShiftInvert, 15.0);
        let mut cfg = RunConfig::new(2, 3, spec, StopCriterion::RelativePsi { tol });
        cfg.shift = ShiftStrategy::PrevEig {
            initial: 15.0,
            offset: 0.0,
        };
        let res = psdid::solver::multi_run(&p, 4, &cfg)?;
        let psi = max_psi(&p, &res.deflation);
        checks.push(Check::new(
            format!("relative residual stopping rule, tol {tol:e}"),
            format!("converged {}, max ψ of accepted pairs {psi:.2e}", res.converged),
            format!("ψ ≤ {tol:e}"),
            res.converged && psi <= tol,
        ));
    }
    Ok(checks)
}

fn determinism() -> Result<Vec<Check>> {
    let mut cfg = desk_experiment(Variant::InnerKrylov, 0.1, 7);
    cfg.m = 3;
    let (a, b) = (tempdir()?, tempdir()?);
    solve(&cfg, a.path(), Overrides::default())?;
    solve(&cfg, b.path(), Overrides::default())?;
    let read = |d: &tempfile::TempDir| {
        let path = d.path().join("trace.csv");
        std::fs::read(&path).map_err(|e| CliError::io(&path, e))
    };
    let (ta, tb) = (read(&a)?, read(&b)?);
    Ok(vec![Check::new(
        "two in-process solves, same config and seed",
        format!("{} bytes vs {} bytes, identical {}", ta.len(), tb.len(), ta == tb),
        "byte-identical trace.csv",
        ta == tb && !ta.is_empty(),
    )])
}
