//! Command implementations behind the CLI: single-path simulations,
//! convergence studies, bound reports and property checks. All numeric
//! output is CSV with full-precision decimals so runs can be diffed and
//! plotted externally.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::bounds::{
    bound_constant_j, bound_constant_z, default_a_alpha, lambda_gate, r_star, sweep_j_margins,
    sweep_z_margins, z_trace_constants, SweepOutcome, DEFAULT_B_FRACTION,
};
use crate::filters::{run_j_filter, run_r_filter, run_z_filter, FilterState, Regime};
use crate::linalg::{check_trace_properties, loewner_leq, random_psd};
use crate::market::{MarketBundle, SimOptions};
use crate::montecarlo::{convergence_study, MCResult};
use crate::params::ModelParams;
use crate::scenario::{Mode, ScenarioConfig};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Formatting and file helpers
// ---------------------------------------------------------------------------

/// Full-precision decimal (17 significant digits).
fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Intensity as a file-name token.
fn fmt_lambda(lambda: f64) -> String {
    format!("{lambda}")
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Run summary: flat key/value lines recording the config hash, seed and
/// version next to the produced files.
fn write_manifest(dir: &Path, config: &ScenarioConfig, mode: Mode, files: &[PathBuf]) -> Result<PathBuf> {
    let toml = config.to_toml_string()?;
    let mut out = String::new();
    let _ = writeln!(out, "tool=driftlab");
    let _ = writeln!(out, "version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "mode={mode}");
    let _ = writeln!(out, "seed={}", config.run.seed);
    let _ = writeln!(out, "config_hash={:016x}", fnv1a64(toml.as_bytes()));
    for f in files {
        let _ = writeln!(out, "file={}", f.display());
    }
    let path = dir.join("manifest.txt");
    write_file(&path, &out)?;
    Ok(path)
}

/// Column names for a vector quantity: plain for d = 1, suffixed otherwise.
fn vec_cols(name: &str, d: usize) -> Vec<String> {
    if d == 1 {
        vec![name.to_string()]
    } else {
        (1..=d).map(|i| format!("{name}_{i}")).collect()
    }
}

/// Column names for a symmetric matrix: plain for d = 1, upper triangle
/// (row-major, i ≤ j) otherwise.
fn mat_cols(name: &str, d: usize) -> Vec<String> {
    if d == 1 {
        vec![name.to_string()]
    } else {
        let mut cols = Vec::with_capacity(d * (d + 1) / 2);
        for i in 1..=d {
            for j in i..=d {
                cols.push(format!("{name}_{i}{j}"));
            }
        }
        cols
    }
}

fn push_vec(row: &mut Vec<String>, v: &nalgebra::DVector<f64>) {
    for i in 0..v.len() {
        row.push(fmt_full(v[i]));
    }
}

fn push_mat_upper(row: &mut Vec<String>, q: &crate::linalg::SymMatrix) {
    let d = q.dim();
    for i in 0..d {
        for j in i..d {
            row.push(fmt_full(q.entry(i, j)));
        }
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// One seeded path per intensity with all three filters; writes
/// `path_<λ>.csv` and `events_<λ>.csv` per λ plus a run manifest. The same
/// underlying noise drives every λ so the curves are directly comparable.
pub fn cmd_simulate(config: &ScenarioConfig) -> Result<Vec<PathBuf>> {
    let params = config.to_model_params()?;
    let run = &config.run;
    if run.lambdas.is_empty() {
        return Err(Error::Config("run.lambdas must not be empty".into()));
    }
    ensure_dir(&run.output_dir)?;
    let lambda_max = run.lambdas.iter().cloned().fold(0.0, f64::max);
    let opts = SimOptions {
        dt_max: run.dt_max,
        lambda_max,
        extra_times: Vec::new(),
        continuous_expert: lambda_max > 0.0,
    };
    let bundle = MarketBundle::simulate(&params, &opts, run.seed, 0)?;

    let mut files = Vec::new();
    for &lambda in &run.lambdas {
        let path = bundle.realize(lambda)?;
        let r = run_r_filter(&path, &params)?;
        let z = run_z_filter(&path, &params)?;
        let j = if lambda > 0.0 {
            Some(run_j_filter(&path, &params, lambda)?)
        } else {
            None // the expert channel vanishes as λ → 0: report the R filter
        };
        let j_states: &[FilterState] = j.as_ref().map_or(&r.states, |fp| &fp.states);

        let d = params.dim;
        let mut header: Vec<String> = vec!["t".into()];
        header.extend(vec_cols("mu", d));
        header.extend(vec_cols("m_r", d));
        header.extend(mat_cols("q_r", d));
        header.extend(vec_cols("m_z", d));
        header.extend(mat_cols("q_z", d));
        header.extend(vec_cols("m_j", d));
        header.extend(mat_cols("q_j", d));
        header.push("arrival_flag".into());

        let mut csv = String::with_capacity(64 * path.grid.len() * header.len());
        csv.push_str(&header.join(","));
        csv.push('\n');
        for i in 0..path.grid.len() {
            let mut row: Vec<String> = vec![fmt_full(path.grid.point(i))];
            push_vec(&mut row, &path.mu[i]);
            push_vec(&mut row, &r.states[i].m);
            push_mat_upper(&mut row, &r.states[i].q);
            push_vec(&mut row, &z.states[i].m);
            push_mat_upper(&mut row, &z.states[i].q);
            push_vec(&mut row, &j_states[i].m);
            push_mat_upper(&mut row, &j_states[i].q);
            row.push(if path.grid.is_arrival(i) { "1" } else { "0" }.into());
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
        let path_file = run.output_dir.join(format!("path_{}.csv", fmt_lambda(lambda)));
        write_file(&path_file, &csv)?;
        files.push(path_file);

        let mut events = String::new();
        let mut ev_header: Vec<String> = vec!["k".into(), "t_k".into()];
        ev_header.extend(vec_cols("z_k", d));
        events.push_str(&ev_header.join(","));
        events.push('\n');
        for (k, ev) in path.expert_events.iter().enumerate() {
            let mut row: Vec<String> = vec![(k + 1).to_string(), fmt_full(ev.time)];
            push_vec(&mut row, &ev.value);
            events.push_str(&row.join(","));
            events.push('\n');
        }
        let events_file = run.output_dir.join(format!("events_{}.csv", fmt_lambda(lambda)));
        write_file(&events_file, &events)?;
        files.push(events_file);
    }
    files.push(write_manifest(&run.output_dir, config, Mode::Simulate, &files)?);
    Ok(files)
}

// ---------------------------------------------------------------------------
// convergence
// ---------------------------------------------------------------------------

/// Renders a convergence study as `convergence.csv`.
pub fn render_convergence_csv(result: &MCResult) -> String {
    let mut csv = String::from(
        "regime,lambda,t,trq_mean,trq_stderr,mse_mean,mse_stderr,bound,slope,gated\n",
    );
    for c in &result.cells {
        let slope = if c.regime == Regime::R {
            String::new()
        } else {
            result.slope(c.regime, c.t).map(fmt_full).unwrap_or_default()
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            c.regime,
            fmt_lambda(c.lambda),
            fmt_full(c.t),
            fmt_full(c.trq_mean),
            fmt_full(c.trq_stderr),
            fmt_full(c.mse_mean),
            fmt_full(c.mse_stderr),
            c.bound.map(fmt_full).unwrap_or_default(),
            slope,
            c.gated.map(|g| g.to_string()).unwrap_or_default(),
        );
    }
    csv
}

/// Monte Carlo convergence study over the configured intensities and
/// regimes; writes `convergence.csv`.
pub fn cmd_convergence(config: &ScenarioConfig) -> Result<Vec<PathBuf>> {
    let params = config.to_model_params()?;
    let mc = config.to_mc_config()?;
    ensure_dir(&config.run.output_dir)?;
    let result = convergence_study(&mc, &params)?;
    let csv = render_convergence_csv(&result);
    let file = config.run.output_dir.join("convergence.csv");
    write_file(&file, &csv)?;
    let mut files = vec![file];
    files.push(write_manifest(&config.run.output_dir, config, Mode::Convergence, &files)?);
    Ok(files)
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

/// Text and file output of the bound report.
pub struct BoundsOutput {
    pub text: String,
    pub files: Vec<PathBuf>,
}

/// Computes the bound constants for the scenario and writes
/// `scaled_variance.csv` with √λ-scaled covariance traces per intensity,
/// enabling a direct visual comparison against the constants.
pub fn cmd_bounds(config: &ScenarioConfig) -> Result<BoundsOutput> {
    let params = config.to_model_params()?;
    let run = &config.run;
    ensure_dir(&run.output_dir)?;
    let delta = run.delta;

    let c_z = bound_constant_z(&params, delta)?;
    let c_j = bound_constant_j(&params, delta)?;
    let a_alpha = default_a_alpha(&params, delta)?;
    let constants = z_trace_constants(&params, a_alpha, DEFAULT_B_FRACTION)?;
    let gate = lambda_gate(&params, delta, DEFAULT_B_FRACTION)?;
    let r_opt = r_star(&params, delta)?;

    let mut text = String::new();
    let _ = writeln!(text, "bound constants at delta = {delta}:");
    let _ = writeln!(text, "  c_z           = {c_z:.6}");
    let _ = writeln!(text, "  c_j           = {c_j:.6}");
    let _ = writeln!(text, "  a_alpha       = {a_alpha:.6}  (bound-minimizing default)");
    let _ = writeln!(
        text,
        "  b_alpha_bar   = {:.6}, b_alpha = {:.6}  (fraction {DEFAULT_B_FRACTION})",
        constants.b_alpha_bar.unwrap_or(f64::NAN),
        constants.b_alpha
    );
    let _ = writeln!(text, "  lambda_0      = {:.6}", gate.lambda0);
    let _ = writeln!(text, "  lambda_star   = {:.6}", gate.lambda_star);
    let _ = writeln!(
        text,
        "  lambda_q      = {:.6}  (the gate takes the larger of lambda_0 and lambda_star; both shown)",
        gate.lambda_q
    );
    let _ = writeln!(text, "  r_star        = {r_opt:.6}");

    // scaled-variance table for the two standard anchors
    let delta1 = 0.1_f64.min(params.horizon);
    let delta2 = 0.5_f64.min(params.horizon);
    let c_j_d1 = bound_constant_j(&params, delta1)?;
    let c_j_d2 = bound_constant_j(&params, delta2)?;

    let lambda_max = run.lambdas.iter().cloned().fold(0.0, f64::max);
    let mut csv =
        String::from("lambda,t,sqrtlambda_q_j,sqrtlambda_q_z,c_j_delta1,c_j_delta2\n");
    if lambda_max > 0.0 {
        let opts = SimOptions {
            dt_max: run.dt_max,
            lambda_max,
            extra_times: Vec::new(),
            continuous_expert: true,
        };
        let bundle = MarketBundle::simulate(&params, &opts, run.seed, 0)?;
        for &lambda in run.lambdas.iter().filter(|&&l| l > 0.0) {
            let path = bundle.realize(lambda)?;
            let z = run_z_filter(&path, &params)?;
            let j = run_j_filter(&path, &params, lambda)?;
            let scale = lambda.sqrt();
            for i in 0..path.grid.len() {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    fmt_lambda(lambda),
                    fmt_full(path.grid.point(i)),
                    fmt_full(scale * j.states[i].q.trace()),
                    fmt_full(scale * z.states[i].q.trace()),
                    fmt_full(c_j_d1),
                    fmt_full(c_j_d2),
                );
            }
        }
    }
    let csv_file = run.output_dir.join("scaled_variance.csv");
    write_file(&csv_file, &csv)?;
    let mut files = vec![csv_file];
    let report_file = run.output_dir.join("bounds.txt");
    write_file(&report_file, &text)?;
    files.push(report_file);
    files.push(write_manifest(&run.output_dir, config, Mode::Bounds, &files)?);
    Ok(BoundsOutput { text, files })
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

/// One section of the property-check report.
#[derive(Debug, Clone)]
pub struct CheckSection {
    pub name: String,
    pub pass: bool,
    pub min_margin: f64,
    pub detail: String,
}

/// Output of the check command.
#[derive(Debug)]
pub struct CheckReport {
    pub sections: Vec<CheckSection>,
    /// Serialized offending sample, when a property failed.
    pub failure_file: Option<PathBuf>,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.sections.iter().all(|s| s.pass)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.sections {
            let _ = writeln!(
                out,
                "[{}] {} (min margin {:.3e}) {}",
                if s.pass { "PASS" } else { "FAIL" },
                s.name,
                s.min_margin,
                s.detail
            );
        }
        let _ = writeln!(out, "overall: {}", if self.all_pass() { "PASS" } else { "FAIL" });
        out
    }
}

fn sweep_section(name: &str, outcome: &SweepOutcome, detail: String) -> CheckSection {
    CheckSection {
        name: name.to_string(),
        pass: outcome.all_pass(),
        min_margin: outcome.min_margin,
        detail,
    }
}

fn describe_failure(outcome: &SweepOutcome) -> String {
    match &outcome.worst {
        Some(w) => format!(
            "worst sample: d={} lambda={} r={:?} q={:?} margin={:.6e}",
            w.dim, w.lambda, w.r, w.q_row_major, w.margin
        ),
        None => String::new(),
    }
}

/// Runs the matrix-property suite, the trace-inequality margin sweeps and
/// the covariance-ordering path checks. All properties are theorems for
/// valid inputs, so any failure indicates an implementation bug; the
/// offending sample is serialized for replay.
pub fn cmd_check(config: &ScenarioConfig) -> Result<CheckReport> {
    let params = config.to_model_params()?;
    let run = &config.run;
    ensure_dir(&run.output_dir)?;
    let mut sections = Vec::new();
    let mut failure_notes: Vec<String> = Vec::new();
    let mut rng = ChaCha12Rng::seed_from_u64(run.seed ^ 0x5eed_c0de);

    // symmetric/PSD matrix properties on random pairs
    for &d in &[1usize, 2, 3, 5] {
        let mut min_margin = f64::INFINITY;
        let mut pass = true;
        let mut worst = String::new();
        for _ in 0..1000 {
            let a = random_psd(d, &mut rng);
            let b = random_psd(d, &mut rng);
            let report = check_trace_properties(&a, &b)?;
            if report.min_margin() < min_margin {
                min_margin = report.min_margin();
            }
            if !report.all_pass() {
                pass = false;
                worst = format!(
                    "a={:?} b={:?} report:\n{report}",
                    a.matrix().as_slice(),
                    b.matrix().as_slice()
                );
            }
        }
        if !pass {
            failure_notes.push(format!("matrix_properties d={d}: {worst}"));
        }
        sections.push(CheckSection {
            name: format!("matrix_properties_d{d}"),
            pass,
            min_margin,
            detail: "1000 random PSD pairs".into(),
        });
    }

    // trace-inequality margins for the discrete-expert drift map
    for d in 1..=3usize {
        let p = ModelParams::reference_with_dim(d);
        let a_alpha = default_a_alpha(&p, run.delta)?;
        let constants = z_trace_constants(&p, a_alpha, DEFAULT_B_FRACTION)?;
        let lambda0 = constants.lambda0.expect("discrete constants carry lambda0");
        let outcome = sweep_z_margins(&p, &constants, &[lambda0, 10.0 * lambda0], 1000, &mut rng)?;
        if !outcome.all_pass() {
            failure_notes.push(format!("z_trace_margins d={d}: {}", describe_failure(&outcome)));
        }
        sections.push(sweep_section(
            &format!("z_trace_margins_d{d}"),
            &outcome,
            format!("lambda in {{lambda_0, 10 lambda_0}}, lambda_0 = {lambda0:.3}"),
        ));
    }

    // trace-inequality margins for the continuous-expert drift map
    for d in 1..=3usize {
        let p = ModelParams::reference_with_dim(d);
        let r_opt = r_star(&p, run.delta)?;
        let outcome = sweep_j_margins(
            &p,
            &[0.1, 1.0, r_opt],
            &[1e-3, 1.0, 1e3, 1e6],
            1000,
            &mut rng,
        )?;
        if !outcome.all_pass() {
            failure_notes.push(format!("j_trace_margins d={d}: {}", describe_failure(&outcome)));
        }
        sections.push(sweep_section(
            &format!("j_trace_margins_d{d}"),
            &outcome,
            "r in {0.1, 1, r_star}, lambda in {1e-3, 1, 1e3, 1e6}".into(),
        ));
    }

    // covariance ordering and jump shrinkage on simulated paths
    let lambda_check = 20.0;
    let n_paths = 10u64;
    let mut order_margin = f64::INFINITY;
    let mut order_pass = true;
    let mut shrink_pass = true;
    let mut shrink_margin = f64::INFINITY;
    for p_idx in 0..n_paths {
        let opts = SimOptions {
            dt_max: run.dt_max,
            lambda_max: lambda_check,
            extra_times: Vec::new(),
            continuous_expert: true,
        };
        let bundle = MarketBundle::simulate(&params, &opts, run.seed, p_idx)?;
        let path = bundle.realize(lambda_check)?;
        let r = run_r_filter(&path, &params)?;
        let z = run_z_filter(&path, &params)?;
        let j = run_j_filter(&path, &params, lambda_check)?;
        for i in 0..path.grid.len() {
            for (label, fp) in [("Z", &z), ("J", &j)] {
                let diff = (&r.states[i].q - &fp.states[i].q).min_eigenvalue()?;
                order_margin = order_margin.min(diff);
                if !loewner_leq(&fp.states[i].q, &r.states[i].q, 1e-9)? {
                    order_pass = false;
                    failure_notes.push(format!(
                        "covariance_ordering: path {p_idx} point {i} regime {label} margin {diff:.3e}"
                    ));
                }
            }
        }
        for jump in &z.jumps {
            let post = &z.states[jump.grid_index].q;
            let diff = (&jump.q_minus - post).min_eigenvalue()?;
            shrink_margin = shrink_margin.min(diff);
            if !loewner_leq(post, &jump.q_minus, 1e-12)? {
                shrink_pass = false;
                failure_notes.push(format!(
                    "jump_shrinkage: path {p_idx} point {} margin {diff:.3e}",
                    jump.grid_index
                ));
            }
        }
    }
    sections.push(CheckSection {
        name: "covariance_ordering".into(),
        pass: order_pass,
        min_margin: order_margin,
        detail: format!("{n_paths} paths at lambda = {lambda_check}"),
    });
    sections.push(CheckSection {
        name: "jump_shrinkage".into(),
        pass: shrink_pass,
        min_margin: shrink_margin,
        detail: "every expert-opinion update".into(),
    });

    let failure_file = if failure_notes.is_empty() {
        None
    } else {
        let file = run.output_dir.join("check_failure.txt");
        write_file(&file, &(failure_notes.join("\n") + "\n"))?;
        Some(file)
    };
    Ok(CheckReport { sections, failure_file })
}
