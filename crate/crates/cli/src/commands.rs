// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dfm_core::bloch::{build_bilinear, BilinearModel, CoordinateMode};
use dfm_core::claims::{is_skew, off_diagonal_max, verify_two_qubit_dephasing};
use dfm_core::geometry::{dimension_report, format_multiset, table_generate, DfmSpec};
use dfm_core::linalg::DensityMatrix;
use dfm_core::lindblad::{propagate, ControlSchedule, PropagateOptions};
use dfm_core::presets::{PRESETS, TWO_QUBIT_DEPHASING};
use dfm_core::reach::{
    degree0_check, reachability_distribution, ClosureOptions, ClosureReport, Origin, Partner,
    Variant, DEFAULT_MAX_ITER, DEFAULT_RANK_TOL,
};
use dfm_core::spectral::{
    consistency_residual, dfs_hamiltonian, eigenframe_path, eigenvalue_preservation_report,
    spectral_blocks, BlockSelection, DEFAULT_CLUSTER_TOL, DEFAULT_FD_TOL, DEFAULT_PRESERVE_TOL,
};
use dfm_core::RealMatrix;
use serde_json::{json, Value};

use crate::model::{preset_file, resolve_state, ModelFile, ParsedModel, StateSpec};
use crate::report::{digest, Check, CliError, Outcome, RunReport};

#[derive(Debug, Parser)]
#[command(
    name = "dfm",
    version,
    about = "Decoherence-free manifolds: simulation, dimensions, reachability"
)]
pub struct Cli {
    /// Print the run report as JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    /// Write the CSV table (simulate) or the JSON run report (other
    /// commands) to this file.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Tolerance override KEY=VALUE, repeatable. Keys: hermiticity, trace,
    /// psd, hard, step, cluster, preserve, fd, rank.
    #[arg(long = "tol", global = true, value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the master equation and track eigenvalue blocks.
    Simulate(SimulateArgs),
    /// DFM dimensions: the full table for n, or one (m_K, m_K̄) pair.
    DfmDim(DfmDimArgs),
    /// Build the bilinear coherence-vector model.
    BlochBuild(BlochArgs),
    /// Close the reachability distribution under brackets.
    Reach(ReachArgs),
    /// Run the reference checks for a preset.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ModelSource {
    /// JSON model file.
    pub model: Option<PathBuf>,
    /// Built-in model instead of a file.
    #[arg(long, conflicts_with = "model")]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long)]
    pub t_final: f64,
    /// Number of reporting intervals.
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Selected blocks K, as indices into the initial block spectrum
    /// (descending eigenvalues).
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub select: Vec<usize>,
    /// Constant knob values, one per control (default: all zero).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub controls: Vec<f64>,
    /// Constant rates replacing the file's rates, one per jump.
    #[arg(long, value_delimiter = ',')]
    pub rates: Vec<f64>,
    /// Initial state: a name such as `maximally-mixed` or `|01>`, or a JSON
    /// state object.
    #[arg(long)]
    pub initial: Option<String>,
}

#[derive(Debug, Args)]
pub struct DfmDimArgs {
    #[arg(long)]
    pub n: usize,
    /// Multiplicities of the fixed blocks, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Multiplicities of the free blocks, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub kbar: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct BlochArgs {
    #[command(flatten)]
    pub source: ModelSource,
    /// paper_15, paper_16 or pauli_full (default: the file's mode, else
    /// paper_16).
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<CoordinateMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Stochastic,
    Constant,
}

#[derive(Debug, Args)]
pub struct ReachArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long, value_enum, default_value = "stochastic")]
    pub variant: VariantArg,
    /// Constant variant with every rate equal to one.
    #[arg(long)]
    pub equal_rates: bool,
    /// Constant variant with these rates, one per jump.
    #[arg(long, value_delimiter = ',', conflicts_with = "equal_rates")]
    pub rates: Vec<f64>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<CoordinateMode>,
    #[arg(long)]
    pub rank_tol: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub preset: String,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let v: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("not a number: `{v}`"))?;
    if !(v > 0.0) {
        return Err(format!("tolerance `{k}` must be positive"));
    }
    Ok((k.trim().to_string(), v))
}

fn parse_mode(s: &str) -> Result<CoordinateMode, String> {
    s.parse().map_err(|e: dfm_core::Error| e.to_string())
}

/// Tolerances after `--tol` overrides.
#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub propagate: PropagateOptions,
    pub cluster: f64,
    pub preserve: f64,
    pub fd: f64,
    pub rank: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            propagate: PropagateOptions::default(),
            cluster: DEFAULT_CLUSTER_TOL,
            preserve: DEFAULT_PRESERVE_TOL,
            fd: DEFAULT_FD_TOL,
            rank: DEFAULT_RANK_TOL,
        }
    }
}

impl Settings {
    pub fn from_overrides(tol: &[(String, f64)]) -> Result<Self, CliError> {
        let mut s = Self::default();
        for (k, v) in tol {
            let v = *v;
            match k.as_str() {
                "hermiticity" => s.propagate.tolerances.hermiticity = v,
                "trace" => s.propagate.tolerances.trace = v,
                "psd" => s.propagate.tolerances.psd = v,
                "hard" => s.propagate.hard_tol = v,
                "step" => s.propagate.step = v,
                "cluster" => s.cluster = v,
                "preserve" => s.preserve = v,
                "fd" => s.fd = v,
                "rank" => s.rank = v,
                other => return Err(CliError::Input(format!("unknown tolerance key `{other}`"))),
            }
        }
        Ok(s)
    }

    fn to_json(self) -> Value {
        let t = self.propagate.tolerances;
        json!({
            "hermiticity": t.hermiticity,
            "trace": t.trace,
            "psd": t.psd,
            "hard": self.propagate.hard_tol,
            "step": self.propagate.step,
            "cluster": self.cluster,
            "preserve": self.preserve,
            "fd": self.fd,
            "rank": self.rank,
        })
    }
}

fn load(source: &ModelSource) -> Result<(ModelFile, ParsedModel), CliError> {
    match (&source.model, &source.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            let file = ModelFile::from_json(&text)?;
            let parsed = file.resolve(Some(&text))?;
            Ok((file, parsed))
        }
        (None, Some(name)) => {
            let file = preset_file(name)?;
            let parsed = file.resolve(None)?;
            Ok((file, parsed))
        }
        (None, None) => Err(CliError::Input("give a model file or --preset NAME".into())),
    }
}

fn finish(
    argv: &[String],
    config: Value,
    results: Value,
    checks: Vec<Check>,
    text: String,
    exit_code: u8,
) -> Outcome {
    Outcome {
        report: RunReport {
            command: argv.to_vec(),
            config_digest: digest(&config),
            results,
            checks,
            timing_ms: 0.0,
        },
        text,
        csv: None,
        exit_code,
    }
}

/// Runs one parsed invocation. `argv` is echoed into the report.
pub fn run(cli: &Cli, argv: &[String]) -> Result<Outcome, CliError> {
    let settings = Settings::from_overrides(&cli.tol)?;
    match &cli.command {
        Command::Simulate(a) => simulate(a, &settings, argv),
        Command::DfmDim(a) => dfm_dim(a, argv),
        Command::BlochBuild(a) => bloch_build(a, &settings, argv),
        Command::Reach(a) => reach(a, &settings, argv),
        Command::Verify(a) => verify(a, argv),
    }
}

fn initial_state(arg: &str, n: usize) -> Result<DensityMatrix<f64>, CliError> {
    let spec: StateSpec = if arg.trim_start().starts_with('{') {
        serde_json::from_str(arg).map_err(|e| CliError::Input(format!("--initial: {e}")))?
    } else {
        StateSpec::Named(arg.to_string())
    };
    Ok(resolve_state(&spec, n)?)
}

fn simulate(a: &SimulateArgs, s: &Settings, argv: &[String]) -> Result<Outcome, CliError> {
    if !(a.t_final > 0.0) {
        return Err(CliError::Input("--t-final must be positive".into()));
    }
    if a.steps == 0 {
        return Err(CliError::Input("--steps must be at least 1".into()));
    }
    let (file, parsed) = load(&a.source)?;
    let mut model = parsed.model.clone();
    let n = model.dim();
    if !a.rates.is_empty() {
        model = model.with_constant_rates(&a.rates)?;
    } else if parsed.any_stochastic() {
        return Err(CliError::Input(
            "the model declares stochastic rates; pass --rates to simulate a realization".into(),
        ));
    }
    let rho0 = match (&a.initial, &parsed.initial_state) {
        (Some(arg), _) => initial_state(arg, n)?,
        (None, Some(rho)) => rho.clone(),
        (None, None) => {
            return Err(CliError::Input(
                "no initial state: set initial_state or pass --initial".into(),
            ))
        }
    };
    let schedule = if a.controls.is_empty() {
        ControlSchedule::zeros(model.controls().len())
    } else if a.controls.len() == model.controls().len() {
        ControlSchedule::constant(&a.controls)
    } else {
        return Err(CliError::Input(format!(
            "--controls needs {} values, got {}",
            model.controls().len(),
            a.controls.len()
        )));
    };
    let grid: Vec<f64> = (0..=a.steps)
        .map(|k| a.t_final * k as f64 / a.steps as f64)
        .collect();
    let traj = propagate(&model, &rho0, &schedule, &grid, &s.propagate)?;
    let spec0 = spectral_blocks(&rho0, s.cluster)?;
    let sel = BlockSelection::new(a.select.iter().copied(), &spec0)?;
    let rep = eigenvalue_preservation_report(&traj, &sel, s.cluster, s.preserve)?;

    // pointwise consistency of the selected sub-dynamics with a unitary
    let consistency: Result<f64, String> = if rep.df_compatible {
        (|| -> Result<f64, dfm_core::Error> {
            let path = eigenframe_path(&traj, &sel, s.cluster)?;
            let hs = dfs_hamiltonian(&path, s.fd)?;
            let mut worst: f64 = 0.0;
            for (k, state) in traj.states.iter().enumerate() {
                let spec = spectral_blocks(state, s.cluster)?;
                let sel_k = BlockSelection::new(sel.indices(), &spec)?;
                let r = consistency_residual(
                    &model,
                    state.hermitian(),
                    &traj.controls[k],
                    &traj.rates[k],
                    &hs[k],
                    &spec,
                    &sel_k,
                )?;
                worst = worst.max(r);
            }
            Ok(worst)
        })()
        .map_err(|e| e.to_string())
    } else {
        Err("not evaluated (eigenvalues not preserved)".into())
    };

    let selected: Vec<usize> = sel.indices().collect();
    let mut header = vec!["t".to_string()];
    header.extend((0..spec0.len()).map(|k| format!("lambda_{k}")));
    header.extend(selected.iter().map(|k| format!("dev_{k}")));
    header.push("dev_max".into());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)
        .map_err(|e| CliError::Compute(e.to_string()))?;
    for (i, t) in rep.times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(rep.block_values[i].iter().map(|v| v.to_string()));
        row.extend(selected.iter().map(|&k| {
            (rep.block_values[i][k] - rep.initial_values[k])
                .abs()
                .to_string()
        }));
        row.push(rep.deviations[i].to_string());
        w.write_record(&row)
            .map_err(|e| CliError::Compute(e.to_string()))?;
    }
    let csv = String::from_utf8(
        w.into_inner()
            .map_err(|e| CliError::Compute(e.to_string()))?,
    )
    .expect("csv output is UTF-8");

    let kbar_changes = rep.kbar_changed.iter().filter(|&&b| b).count();
    let mut text = String::new();
    let _ = writeln!(
        text,
        "simulate: n = {n}, {} points on [0, {}]",
        grid.len(),
        a.t_final
    );
    for (k, b) in spec0.blocks().iter().enumerate() {
        let mark = if sel.contains(k) { "K" } else { " " };
        let _ = writeln!(
            text,
            "  block {k} {mark} λ = {} (multiplicity {})",
            b.value, b.multiplicity
        );
    }
    let _ = writeln!(
        text,
        "max K deviation: {:e} (tolerance {:e})",
        rep.max_deviation, s.preserve
    );
    let _ = writeln!(text, "K̄ multiplicity changes: {kbar_changes}");
    let _ = writeln!(text, "tracking failures: {}", rep.tracking_failures.len());
    let _ = writeln!(text, "invariant violations: {}", traj.violations.len());
    match &consistency {
        Ok(r) => {
            let _ = writeln!(text, "DFS consistency residual: {r:e}");
        }
        Err(why) => {
            let _ = writeln!(text, "DFS consistency residual: {why}");
        }
    }
    let verdict = if rep.df_compatible {
        "DF-compatible"
    } else {
        "not DF-compatible"
    };
    let _ = writeln!(text, "verdict: {verdict}");

    let config = json!({
        "command": "simulate",
        "model": serde_json::to_value(&file).expect("model files serialize"),
        "t_final": a.t_final,
        "steps": a.steps,
        "select": selected,
        "controls": a.controls,
        "rates": a.rates,
        "initial": a.initial,
        "settings": s.to_json(),
    });
    let results = json!({
        "initial_values": rep.initial_values,
        "multiplicities": spec0.signature(),
        "selected": selected,
        "max_deviation": rep.max_deviation,
        "kbar_changes": kbar_changes,
        "tracking_failures": rep.tracking_failures,
        "violations": traj.violations.len(),
        "consistency_residual": consistency.as_ref().ok(),
        "df_compatible": rep.df_compatible,
    });
    let checks = vec![
        Check::new("df-compatible", rep.df_compatible, verdict),
        Check::new(
            "state-invariants",
            traj.violations.is_empty(),
            format!("{} violations", traj.violations.len()),
        ),
    ];
    let mut out = finish(argv, config, results, checks, text, 0);
    out.csv = Some(csv);
    Ok(out)
}

fn dfm_dim(a: &DfmDimArgs, argv: &[String]) -> Result<Outcome, CliError> {
    let config = json!({"command": "dfm-dim", "n": a.n, "k": a.k, "kbar": a.kbar});
    if a.k.is_empty() {
        if !a.kbar.is_empty() {
            return Err(CliError::Input("--kbar needs --k".into()));
        }
        let rows = table_generate(a.n)?;
        let mut text = format!(
            "{:<14} {:<14} {:>5} {:>13}\n",
            "m_K", "m_K̄", "dim", "construction"
        );
        let mut out = Vec::new();
        for r in &rows {
            let (k, kb) = (
                format_multiset(r.spec.m_k()),
                format_multiset(r.spec.m_kbar()),
            );
            let _ = writeln!(
                text,
                "{k:<14} {kb:<14} {:>5} {:>13}",
                r.dimension, r.construction
            );
            out.push(json!({"m_k": k, "m_kbar": kb, "dimension": r.dimension, "construction": r.construction}));
        }
        let results = json!({ "n": a.n, "rows": out });
        return Ok(finish(argv, config, results, Vec::new(), text, 0));
    }
    let spec = DfmSpec::with_dim(a.k.clone(), a.kbar.clone(), a.n)?;
    let r = dimension_report(&spec);
    let mut text = format!(
        "{spec}\ndim = {}\nconstruction = {}\n",
        r.theorem, r.construction
    );
    if !r.agree() {
        text.push_str(
            "note: the tangent construction spans fewer directions than the dimension count\n",
        );
    }
    let results = json!({
        "m_k": format_multiset(spec.m_k()),
        "m_kbar": format_multiset(spec.m_kbar()),
        "dimension": r.theorem,
        "construction": r.construction,
    });
    Ok(finish(argv, config, results, Vec::new(), text, 0))
}

fn rows(m: &RealMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn describe(m: &RealMatrix) -> String {
    if m.amax() == 0.0 {
        return "zero".into();
    }
    let mut tags = Vec::new();
    if is_skew(m, 1e-12) {
        tags.push("skew");
    }
    if off_diagonal_max(m) <= 1e-12 {
        tags.push("diagonal");
    }
    if tags.is_empty() {
        tags.push("general");
    }
    format!("{} (‖·‖_F = {})", tags.join(", "), m.norm())
}

fn bloch_build(a: &BlochArgs, _s: &Settings, argv: &[String]) -> Result<Outcome, CliError> {
    let (file, parsed) = load(&a.source)?;
    let mode = a.mode.or(parsed.mode).unwrap_or(CoordinateMode::Paper16);
    let bm = build_bilinear(&parsed.model, mode)?;
    let mut text = format!("bilinear model: mode {mode}, N = {}\n", bm.dim());
    let _ = writeln!(text, "  A: {}", describe(&bm.a));
    for (l, b) in bm.control_labels.iter().zip(&bm.b) {
        let _ = writeln!(text, "  B[{l}]: {}", describe(b));
    }
    for (l, g) in bm.jump_labels.iter().zip(&bm.g) {
        let _ = writeln!(text, "  G[{l}]: {}", describe(g));
    }
    let named = |labels: &[String], ms: &[RealMatrix]| -> Value {
        labels
            .iter()
            .zip(ms)
            .map(|(l, m)| json!({"label": l, "matrix": rows(m)}))
            .collect()
    };
    let results = json!({
        "mode": mode.name(),
        "dim": bm.dim(),
        "a": rows(&bm.a),
        "b": named(&bm.control_labels, &bm.b),
        "g": named(&bm.jump_labels, &bm.g),
    });
    let config = json!({
        "command": "bloch-build",
        "model": serde_json::to_value(&file).expect("model files serialize"),
        "mode": mode.name(),
    });
    Ok(finish(argv, config, results, Vec::new(), text, 0))
}

fn origin_text(bm: &BilinearModel<f64>, o: Origin) -> String {
    match o {
        Origin::Seed(i) => format!("seed G[{}]", bm.jump_labels[i]),
        Origin::SeedSum => "seed Σ γ·G".into(),
        Origin::Bracket { partner, parent } => match partner {
            Partner::Drift => format!("[A, V{parent}]"),
            Partner::Control(i) => match bm.control_labels.get(i) {
                Some(l) => format!("[B[{l}], V{parent}]"),
                None => format!("[extra{i}, V{parent}]"),
            },
        },
    }
}

fn closure_json(bm: &BilinearModel<f64>, rep: &ClosureReport<f64>) -> Value {
    json!({
        "variant": rep.variant,
        "mode": rep.mode.name(),
        "dim": rep.dimension(),
        "stable": rep.stable,
        "iterations": rep.iterations,
        "min_singular": rep.min_singular,
        "rank_warning": rep.rank_warning,
        "generators": rep.generators.iter().enumerate().map(|(i, g)| json!({
            "index": i,
            "origin": origin_text(bm, g.origin),
            "round": g.round,
        })).collect::<Vec<_>>(),
        "rounds": rep.log.iter().map(|l| json!({
            "round": l.round,
            "candidates": l.candidates,
            "added": l.added,
            "absorbed_by_controls": l.absorbed_by_controls,
        })).collect::<Vec<_>>(),
    })
}

fn reach(a: &ReachArgs, s: &Settings, argv: &[String]) -> Result<Outcome, CliError> {
    let (file, parsed) = load(&a.source)?;
    let mode = a.mode.or(parsed.mode).unwrap_or(CoordinateMode::Paper16);
    let bm = build_bilinear(&parsed.model, mode)?;
    let jumps = parsed.model.jumps().len();
    let variant = match a.variant {
        VariantArg::Stochastic => {
            if a.equal_rates || !a.rates.is_empty() {
                return Err(CliError::Input(
                    "rates apply to --variant constant only".into(),
                ));
            }
            Variant::Stochastic
        }
        VariantArg::Constant if a.equal_rates => Variant::Constant(vec![1.0; jumps]),
        VariantArg::Constant if !a.rates.is_empty() => Variant::Constant(a.rates.clone()),
        VariantArg::Constant => {
            let mut rates = Vec::with_capacity(jumps);
            for (j, &stoch) in parsed.model.jumps().iter().zip(&parsed.stochastic) {
                match (&j.rate, stoch) {
                    (dfm_core::lindblad::Signal::Constant(g), false) => rates.push(*g),
                    _ => {
                        return Err(CliError::Input(format!(
                            "jump `{}` has no constant rate; pass --rates or --equal-rates",
                            j.label
                        )))
                    }
                }
            }
            Variant::Constant(rates)
        }
    };
    let opts = ClosureOptions {
        rank_tol: a.rank_tol.unwrap_or(s.rank),
        max_iter: a.max_iter,
    };
    let rep = reachability_distribution(&bm, &variant, &opts)?;

    // degree-0 check on the traceless sector when the model allows it
    let (d0_mode, d0_bm) = match build_bilinear(&parsed.model, CoordinateMode::Paper15) {
        Ok(p15) => (CoordinateMode::Paper15, p15),
        Err(_) => (mode, bm.clone()),
    };
    let d0 = degree0_check(&d0_bm.a, &d0_bm.b, 1e-10)?;
    let d0_count = d0.vectors().len();

    let mut text = String::new();
    let _ = writeln!(text, "mode = {mode}, variant = {}", rep.variant);
    let _ = writeln!(text, "dim V = {}", rep.dimension());
    if rep.stable {
        let _ = writeln!(text, "stabilized after {} bracket rounds", rep.iterations);
    } else {
        let _ = writeln!(text, "NOT stabilized within {} rounds", opts.max_iter);
    }
    let _ = writeln!(
        text,
        "smallest singular value {:e}{}",
        rep.min_singular,
        if rep.rank_warning {
            " (close to rank_tol)"
        } else {
            ""
        }
    );
    let _ = writeln!(text, "basis:");
    for (i, g) in rep.generators.iter().enumerate() {
        let _ = writeln!(
            text,
            "  V{i:<3} round {} {}",
            g.round,
            origin_text(&bm, g.origin)
        );
    }
    for l in &rep.log {
        let _ = writeln!(
            text,
            "round {}: {} candidates, {} added, {} absorbed by controls",
            l.round,
            l.candidates,
            l.added.len(),
            l.absorbed_by_controls
        );
    }
    if d0.full_space {
        let _ = writeln!(
            text,
            "degree-0 ({d0_mode}): every vector is a common eigenvector"
        );
    } else if d0.is_empty() {
        let _ = writeln!(text, "degree-0 ({d0_mode}): no common real eigenvector");
    } else {
        let _ = writeln!(
            text,
            "degree-0 ({d0_mode}): {d0_count} common real eigenvector(s)"
        );
    }

    let mut results = closure_json(&bm, &rep);
    results["degree0"] = json!({
        "mode": d0_mode.name(),
        "common_eigenvectors": d0_count,
        "full_space": d0.full_space,
    });
    let config = json!({
        "command": "reach",
        "model": serde_json::to_value(&file).expect("model files serialize"),
        "mode": mode.name(),
        "variant": rep.variant,
        "rates": match &variant { Variant::Constant(r) => json!(r), Variant::Stochastic => Value::Null },
        "rank_tol": opts.rank_tol,
        "max_iter": opts.max_iter,
    });
    let checks = vec![Check::new(
        "stabilized",
        rep.stable,
        format!("{} rounds, max {}", rep.iterations, opts.max_iter),
    )];
    let code = if rep.stable { 0 } else { 1 };
    Ok(finish(argv, config, results, checks, text, code))
}

fn verify(a: &VerifyArgs, argv: &[String]) -> Result<Outcome, CliError> {
    if !PRESETS.contains(&a.preset.as_str()) {
        return Err(CliError::Input(format!(
            "unknown preset `{}` (available: {})",
            a.preset,
            PRESETS.join(", ")
        )));
    }
    debug_assert_eq!(a.preset, TWO_QUBIT_DEPHASING);
    let claims = verify_two_qubit_dephasing()?;
    let mut text = String::new();
    let mut checks = Vec::new();
    for c in &claims {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(
            text,
            "{tag} {:<22} {} (expected {}, observed {})",
            c.id, c.statement, c.expected, c.observed
        );
        checks.push(Check::new(
            c.id,
            c.passed,
            format!("expected {}, observed {}", c.expected, c.observed),
        ));
    }
    let passed = claims.iter().filter(|c| c.passed).count();
    let _ = writeln!(text, "{passed}/{} checks passed", claims.len());
    let results = json!({
        "preset": a.preset,
        "claims": claims.iter().map(|c| json!({
            "id": c.id,
            "statement": c.statement,
            "expected": c.expected,
            "observed": c.observed,
            "passed": c.passed,
        })).collect::<Vec<_>>(),
        "passed": passed,
        "total": claims.len(),
    });
    let config = json!({"command": "verify", "preset": a.preset});
    let code = if passed == claims.len() { 0 } else { 1 };
    Ok(finish(argv, config, results, checks, text, code))
}
