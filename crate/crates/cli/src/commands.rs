//! One pipeline per subcommand. Each returns a JSON payload and the tables
//! written in CSV mode.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use coten::ansatz::{
    build_copeps_block, build_urbm_site_tensor, copeps_log_amplitude_torus, mapping_suite,
    MappingAnsatz, MappingReport, SpinGrid, Urbm2dParameters, UrbmParameters1D, PARAMETER_SCALE,
};
use coten::comps::{connected_zz_correlators, UniformRingMps};
use coten::lattice::{
    ed_ground_state, exact_ising_ground_energy, exact_zz_correlator, relative_error,
    IsingChainSpec, ED_MAX_SITES,
};
use coten::optim::{
    optimize_uniform_mps_from, optimize_urbm_from, scan_lambda_urbm, OptimizerConfig, UrbmMethod,
    VariationalRun,
};
use coten::scaling::{
    extract_nstar, fit_descriptive_exponent, fit_power_law, DELTA_E_FLOOR, FIT_WEIGHTING,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;
use crate::output::{num, Table};
use crate::{
    Command, Common, CopepsCheckArgs, CorrArgs, FssArgs, IsingExactArgs, MapAnsatz, MapCheckArgs,
    Method, OptimizeMpsArgs, OptimizeUrbmArgs, ScanLambdaArgs, SearchArgs, VariationalAnsatz,
};

pub struct Report {
    pub payload: Value,
    /// Named tables; the first is the one written in CSV mode.
    pub tables: Vec<(&'static str, Table)>,
    /// Set when a verification ran to completion but failed its tolerance.
    pub failure: Option<String>,
}

impl Report {
    fn new(payload: Value, table: Table) -> Self {
        Self {
            payload,
            tables: vec![("main", table)],
            failure: None,
        }
    }
}

pub fn execute(command: &Command, common: &Common) -> Result<Report, CliError> {
    match command {
        Command::IsingExact(a) => ising_exact(a),
        Command::MapCheck(a) => map_check(a, common),
        Command::OptimizeUrbm(a) => optimize_urbm(a, common),
        Command::OptimizeMps(a) => optimize_mps(a, common),
        Command::ScanLambda(a) => scan_lambda(a, common),
        Command::Corr(a) => corr(a),
        Command::Fss(a) => fss(a, common),
        Command::CopepsCheck(a) => copeps_check(a, common),
    }
}

fn ising_exact(a: &IsingExactArgs) -> Result<Report, CliError> {
    let spec = IsingChainSpec::new(a.n, a.lambda)?;
    let exact = exact_ising_ground_energy(&spec);
    let mut t = Table::new(&["N", "lambda", "energy", "energy_density"]);
    t.push(vec![
        a.n.to_string(),
        num(a.lambda),
        num(exact.ground_energy),
        num(exact.energy_density),
    ]);
    let payload = json!({
        "N": a.n,
        "lambda": a.lambda,
        "energy": exact.ground_energy,
        "energy_density": exact.energy_density,
    });
    Ok(Report::new(payload, t))
}

/// Tolerances applied to the exhaustive mapping checks.
fn mapping_tolerance(ansatz: MappingAnsatz) -> f64 {
    match ansatz {
        MappingAnsatz::Rbm => 1e-12,
        MappingAnsatz::Urbm => 1e-10,
        MappingAnsatz::Urbm2d => 1e-8,
    }
}

fn mapping_report(r: MappingReport, extra: Value) -> Report {
    let tol = mapping_tolerance(r.ansatz);
    let pass = r.max_rel_dev <= tol;
    let mut t = Table::new(&["draw", "seed", "max_rel_dev"]);
    for (i, d) in r.per_draw.iter().enumerate() {
        t.push(vec![
            i.to_string(),
            (r.seed + i as u64).to_string(),
            num(*d),
        ]);
    }
    let mut payload = json!({
        "ansatz": r.ansatz,
        "size": r.size,
        "hidden": r.hidden,
        "seed": r.seed,
        "draws": r.draws,
        "parameter_scale": PARAMETER_SCALE,
        "max_rel_dev": r.max_rel_dev,
        "per_draw": r.per_draw,
        "tolerance": tol,
        "pass": pass,
    });
    if let (Value::Object(p), Value::Object(e)) = (&mut payload, extra) {
        p.extend(e);
    }
    let mut report = Report::new(payload, t);
    if !pass {
        report.failure = Some(format!(
            "maximum relative deviation {:e} exceeds {tol:e}",
            r.max_rel_dev
        ));
    }
    report
}

fn map_check(a: &MapCheckArgs, common: &Common) -> Result<Report, CliError> {
    let (ansatz, hidden) = match a.ansatz {
        MapAnsatz::Rbm => (MappingAnsatz::Rbm, a.hidden.unwrap_or(a.n)),
        MapAnsatz::Urbm => (MappingAnsatz::Urbm, a.layers),
        MapAnsatz::Urbm2d => (MappingAnsatz::Urbm2d, a.layers),
    };
    let r = mapping_suite(ansatz, a.n, hidden, common.seed, a.draws)?;
    Ok(mapping_report(r, json!({})))
}

fn copeps_check(a: &CopepsCheckArgs, common: &Common) -> Result<Report, CliError> {
    let r = mapping_suite(
        MappingAnsatz::Urbm2d,
        a.side,
        a.layers,
        common.seed,
        a.draws,
    )?;
    // Column shifts and a global flip must leave the contraction unchanged.
    let mut shift_dev: f64 = 0.0;
    let mut flip_dev: f64 = 0.0;
    for i in 0..a.draws as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(common.seed.wrapping_add(i));
        let params = Urbm2dParameters::random(a.layers, PARAMETER_SCALE, &mut rng);
        let block = build_copeps_block(&params);
        for bits in 0..1u64 << (a.side * a.side) {
            let grid = SpinGrid::from_bits(a.side, bits);
            let base = copeps_log_amplitude_torus(&block, &grid)?;
            let shifted = copeps_log_amplitude_torus(&block, &grid.shifted_columns(1))?;
            let flipped = copeps_log_amplitude_torus(&block, &grid.flipped())?;
            shift_dev = shift_dev.max(shifted.relative_deviation(&base));
            flip_dev = flip_dev.max(flipped.relative_deviation(&base));
        }
    }
    let tol = mapping_tolerance(MappingAnsatz::Urbm2d);
    let mut report = mapping_report(
        r,
        json!({ "max_shift_dev": shift_dev, "max_flip_dev": flip_dev }),
    );
    if report.failure.is_none() && shift_dev.max(flip_dev) > tol {
        report.failure = Some(format!(
            "symmetry deviation {:e} exceeds {tol:e}",
            shift_dev.max(flip_dev)
        ));
    }
    if let Value::Object(p) = &mut report.payload {
        p.insert("pass".into(), Value::Bool(report.failure.is_none()));
    }
    Ok(report)
}

fn optimizer_config(
    common: &Common,
    search: &SearchArgs,
    max_rounds: Option<usize>,
    max_iterations: Option<u64>,
) -> Result<OptimizerConfig, CliError> {
    let mut c = OptimizerConfig {
        seed: common.seed,
        starts: search.seeds,
        urbm_method: match search.method {
            Method::Rotation => UrbmMethod::SubspaceRotation,
            Method::Gradient => UrbmMethod::Gradient,
            Method::Hybrid => UrbmMethod::Hybrid,
        },
        ..OptimizerConfig::default()
    };
    if let Some(r) = search.init_range {
        c.init_range = r;
    }
    if let Some(r) = max_rounds {
        c.max_rounds = r;
    }
    if let Some(i) = max_iterations {
        c.gradient.max_iterations = i;
    }
    c.validate()?;
    Ok(c)
}

/// Reads parameters from an `optimize-*` envelope, a bare JSON array, an
/// object with `best_params`, or plain numbers separated by whitespace or
/// commas (`#` starts a comment).
pub fn read_params(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_params(&text).map_err(|m| CliError::Input(format!("{}: {m}", path.display())))
}

fn parse_params(text: &str) -> Result<Vec<f64>, String> {
    if let Ok(v) = serde_json::from_str::<Value>(text) {
        let arr = match &v {
            Value::Array(_) => Some(&v),
            Value::Object(_) => v
                .get("best_params")
                .or_else(|| v.get("payload").and_then(|p| p.get("best_params"))),
            _ => None,
        };
        let arr = arr
            .and_then(Value::as_array)
            .ok_or("JSON input needs an array or a best_params field")?;
        return arr
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| format!("not a number: {x}")))
            .collect();
    }
    let values = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: {t:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("no parameters found".into());
    }
    Ok(values)
}

fn warm_start(search: &SearchArgs) -> Result<Option<Vec<f64>>, CliError> {
    search.warm_start.as_deref().map(read_params).transpose()
}

#[derive(Serialize)]
struct SeedRow {
    /// `null` for the warm-started trajectory.
    seed: Option<u64>,
    energy_density: f64,
    #[serde(rename = "delta_E")]
    delta_e: f64,
    rounds: usize,
    evaluations: u64,
    converged: bool,
}

fn variational_report(run: &VariationalRun, head: Value) -> Report {
    let rows: Vec<SeedRow> = run
        .runs
        .iter()
        .map(|s| SeedRow {
            seed: s.seed,
            energy_density: s.result.best_energy_density,
            delta_e: relative_error(s.result.best_energy_density, run.exact_energy_density),
            rounds: s.result.rounds_used,
            evaluations: s.result.evaluations_used,
            converged: s.result.converged,
        })
        .collect();
    let mut t = Table::new(&[
        "seed",
        "energy_density",
        "delta_E",
        "rounds",
        "evaluations",
        "converged",
    ]);
    for r in &rows {
        t.push(vec![
            r.seed.map_or_else(|| "warm".into(), |s| s.to_string()),
            num(r.energy_density),
            num(r.delta_e),
            r.rounds.to_string(),
            r.evaluations.to_string(),
            r.converged.to_string(),
        ]);
    }
    let mut payload = head;
    if let Value::Object(p) = &mut payload {
        p.extend([
            ("best_params".into(), json!(run.best.best_params)),
            ("energy_density".into(), json!(run.best.best_energy_density)),
            (
                "exact_energy_density".into(),
                json!(run.exact_energy_density),
            ),
            ("delta_E".into(), json!(run.delta_e)),
            ("seeds".into(), json!(rows)),
        ]);
    }
    Report::new(payload, t)
}

fn optimize_urbm(a: &OptimizeUrbmArgs, common: &Common) -> Result<Report, CliError> {
    let cfg = optimizer_config(common, &a.search, a.max_rounds, None)?;
    let warm = warm_start(&a.search)?;
    let run = optimize_urbm_from(a.layers, a.lambda, a.n, &cfg, warm.as_deref())?;
    let head = json!({
        "ansatz": "urbm",
        "layers": a.layers,
        "chi": 1usize << (a.layers + 1),
        "lambda": a.lambda,
        "N": a.n,
        "parameter_order": "K0, K1..Kl, J1..Jl",
    });
    Ok(variational_report(&run, head))
}

fn optimize_mps(a: &OptimizeMpsArgs, common: &Common) -> Result<Report, CliError> {
    let cfg = optimizer_config(common, &a.search, None, a.max_iterations)?;
    let warm = warm_start(&a.search)?;
    let run = optimize_uniform_mps_from(a.chi, a.lambda, a.n, &cfg, warm.as_deref())?;
    let head = json!({
        "ansatz": "mps",
        "chi": a.chi,
        "lambda": a.lambda,
        "N": a.n,
        "parameter_order": "M[sigma][left][right], sigma = up, down",
    });
    Ok(variational_report(&run, head))
}

fn scan_lambda(a: &ScanLambdaArgs, common: &Common) -> Result<Report, CliError> {
    if a.steps == 0 || !(a.lambda_min <= a.lambda_max) {
        return Err(CliError::Invalid(
            "need steps >= 1 and lambda-min <= lambda-max".into(),
        ));
    }
    let cfg = optimizer_config(common, &a.search, a.max_rounds, None)?;
    let lambdas: Vec<f64> = if a.steps == 1 {
        vec![a.lambda_min]
    } else {
        let h = (a.lambda_max - a.lambda_min) / (a.steps - 1) as f64;
        (0..a.steps).map(|i| a.lambda_min + h * i as f64).collect()
    };
    let points = scan_lambda_urbm(a.layers, a.n, &lambdas, &cfg)?;
    let mut t = Table::new(&["lambda", "energy_density", "exact_density", "delta_E"]);
    for p in &points {
        t.push(vec![
            num(p.lambda),
            num(p.energy_density),
            num(p.exact_energy_density),
            num(p.delta_e),
        ]);
    }
    let payload = json!({
        "ansatz": "urbm",
        "layers": a.layers,
        "N": a.n,
        "points": points.iter().map(|p| json!({
            "lambda": p.lambda,
            "energy_density": p.energy_density,
            "exact_density": p.exact_energy_density,
            "delta_E": p.delta_e,
            "params": p.params,
        })).collect::<Vec<_>>(),
    });
    Ok(Report::new(payload, t))
}

fn variational_mps(
    ansatz: VariationalAnsatz,
    params: &[f64],
    n: usize,
) -> Result<UniformRingMps, CliError> {
    match ansatz {
        VariationalAnsatz::Urbm => {
            if params.len() < 3 || params.len() % 2 == 0 {
                return Err(CliError::Invalid(format!(
                    "a uRBM needs 2l + 1 parameters, got {}",
                    params.len()
                )));
            }
            let p = UrbmParameters1D::from_vector((params.len() - 1) / 2, params)?;
            Ok(UniformRingMps::new(build_urbm_site_tensor(&p)?, n)?)
        }
        VariationalAnsatz::Mps => {
            let chi = ((params.len() / 2) as f64).sqrt().round() as usize;
            if chi == 0 || 2 * chi * chi != params.len() {
                return Err(CliError::Invalid(format!(
                    "an MPS needs 2 chi^2 entries, got {}",
                    params.len()
                )));
            }
            Ok(UniformRingMps::from_entries(chi, params, n)?)
        }
    }
}

fn corr(a: &CorrArgs) -> Result<Report, CliError> {
    if a.rmax == 0 || a.rmax >= a.n {
        return Err(CliError::Invalid(format!(
            "rmax must lie in 1..{}, got {}",
            a.n, a.rmax
        )));
    }
    let params = read_params(&a.params)?;
    let spec = IsingChainSpec::new(a.n, a.lambda)?;
    let mps = variational_mps(a.ansatz, &params, a.n)?;
    let values = connected_zz_correlators(&mps, a.rmax)?;
    let (reference, source) = if a.n <= ED_MAX_SITES {
        let ed = ed_ground_state(&spec)?;
        (ed.zz_correlator[..a.rmax].to_vec(), "exact diagonalization")
    } else {
        (
            exact_zz_correlator(&spec, a.rmax),
            "free-fermion determinant",
        )
    };
    let mut t = Table::new(&["r", "correlator", "reference", "rel_error"]);
    let mut rows = Vec::new();
    for (i, (c, r)) in values.iter().zip(&reference).enumerate() {
        let err = relative_error(*c, *r);
        t.push(vec![(i + 1).to_string(), num(*c), num(*r), num(err)]);
        rows.push(json!({"r": i + 1, "correlator": c, "reference": r, "rel_error": err}));
    }
    let payload = json!({
        "ansatz": a.ansatz,
        "N": a.n,
        "lambda": a.lambda,
        "chi": mps.chi(),
        "reference_source": source,
        "rows": rows,
    });
    Ok(Report::new(payload, t))
}

/// Optimization results along the size grid for one bond dimension.
struct SizeSweep {
    chi: usize,
    points: Vec<(usize, f64)>,
}

fn sweep(a: &FssArgs, chi: usize, cfg: &OptimizerConfig) -> Result<SizeSweep, CliError> {
    let sizes = &a.n_grid.0;
    let anchor = match a.anchor {
        None => 0,
        Some(n) => sizes
            .iter()
            .position(|&m| m == n)
            .ok_or_else(|| CliError::Invalid(format!("anchor {n} is not one of the grid sizes")))?,
    };
    let layers = match a.ansatz {
        VariationalAnsatz::Urbm => urbm_layers(chi)?,
        VariationalAnsatz::Mps => 0,
    };
    let optimize = |n: usize, c: &OptimizerConfig, warm: Option<&[f64]>| match a.ansatz {
        VariationalAnsatz::Urbm => optimize_urbm_from(layers, a.lambda, n, c, warm),
        VariationalAnsatz::Mps => optimize_uniform_mps_from(chi, a.lambda, n, c, warm),
    };
    let continued = OptimizerConfig {
        starts: a.refresh_seeds,
        ..*cfg
    };
    let first = optimize(sizes[anchor], cfg, None)?;
    let mut delta = vec![0.0; sizes.len()];
    delta[anchor] = first.delta_e;
    let order = (anchor + 1..sizes.len()).chain((0..anchor).rev());
    let mut last_up = first.best.best_params.clone();
    let mut last_down = first.best.best_params;
    for i in order {
        let run = if a.cold {
            optimize(sizes[i], cfg, None)?
        } else {
            let warm = if i > anchor { &last_up } else { &last_down };
            optimize(sizes[i], &continued, Some(warm))?
        };
        delta[i] = run.delta_e;
        if i > anchor {
            last_up = run.best.best_params;
        } else {
            last_down = run.best.best_params;
        }
    }
    Ok(SizeSweep {
        chi,
        points: sizes.iter().copied().zip(delta).collect(),
    })
}

fn urbm_layers(chi: usize) -> Result<usize, CliError> {
    match chi {
        4 => Ok(1),
        8 => Ok(2),
        16 => Ok(3),
        _ => Err(CliError::Invalid(format!(
            "uRBM bond dimension must be 4, 8 or 16, got {chi}"
        ))),
    }
}

fn fss(a: &FssArgs, common: &Common) -> Result<Report, CliError> {
    if a.chis.is_empty() {
        return Err(CliError::Invalid("no bond dimensions given".into()));
    }
    if a.ansatz == VariationalAnsatz::Urbm {
        for &c in &a.chis {
            urbm_layers(c)?;
        }
    }
    let cfg = optimizer_config(common, &a.search, a.max_rounds, a.max_iterations)?;
    let sweeps = a
        .chis
        .par_iter()
        .map(|&chi| sweep(a, chi, &cfg))
        .collect::<Result<Vec<_>, _>>()?;

    let mut detail = Table::new(&["chi", "n", "delta_E"]);
    let mut nstar_table = Table::new(&[
        "chi",
        "nstar",
        "nstar_error",
        "extrapolated",
        "status",
        "reason",
    ]);
    let mut fits = Vec::new();
    let mut crossings = Vec::new();
    for s in &sweeps {
        for &(n, d) in &s.points {
            detail.push(vec![s.chi.to_string(), n.to_string(), num(d)]);
        }
        let data: Vec<(f64, f64)> = s.points.iter().map(|&(n, d)| (n as f64, d)).collect();
        let (fit_json, row) = match fit_power_law(&data) {
            Ok(fit) => {
                let fj = json!({
                    "chi": s.chi, "a": fit.a, "b": fit.b, "c": fit.c,
                    "std_errors": fit.std_errors, "residual_norm": fit.residual_norm,
                });
                let row = match extract_nstar(&fit, a.goal) {
                    Ok(ns) => {
                        crossings.push((s.chi as f64, ns.value));
                        vec![
                            num(ns.value),
                            num(ns.error),
                            ns.extrapolated.to_string(),
                            "crossing".into(),
                            String::new(),
                        ]
                    }
                    Err(e) => vec![
                        String::new(),
                        String::new(),
                        String::new(),
                        "no_crossing".into(),
                        e.to_string(),
                    ],
                };
                (fj, row)
            }
            Err(e) => (
                json!({"chi": s.chi, "error": e.to_string()}),
                vec![
                    String::new(),
                    String::new(),
                    String::new(),
                    "fit_failed".into(),
                    e.to_string(),
                ],
            ),
        };
        fits.push(fit_json);
        let mut full = vec![s.chi.to_string()];
        full.extend(row.into_iter().map(|c| c.replace(',', ";")));
        nstar_table.push(full);
    }
    let exponent = match fit_descriptive_exponent(&crossings, a.goal) {
        Ok(r) => json!({"value": r.exponent, "stderr": r.exponent_error, "intercept": r.intercept}),
        Err(e) => json!({"value": null, "stderr": null, "reason": e.to_string()}),
    };
    let nstar_rows: Vec<Value> = nstar_table
        .rows
        .iter()
        .map(|r| {
            json!({
                "chi": r[0].parse::<usize>().unwrap_or(0),
                "nstar": r[1].parse::<f64>().ok(),
                "nstar_error": r[2].parse::<f64>().ok(),
                "extrapolated": r[3].parse::<bool>().ok(),
                "status": r[4],
                "reason": (!r[5].is_empty()).then(|| r[5].clone()),
            })
        })
        .collect();
    let payload = json!({
        "ansatz": a.ansatz,
        "lambda": a.lambda,
        "goal": a.goal,
        "fit_model": "delta_E = a + b N^c",
        "fit_weighting": FIT_WEIGHTING,
        "delta_E_floor": DELTA_E_FLOOR,
        "warm_start_along_n": !a.cold,
        "anchor": a.anchor.unwrap_or(a.n_grid.0[0]),
        "refresh_seeds": a.refresh_seeds,
        "chi": crossings.iter().map(|p| p.0 as usize).collect::<Vec<_>>(),
        "nstar": crossings.iter().map(|p| p.1).collect::<Vec<_>>(),
        "exponent": exponent,
        "per_chi": nstar_rows,
        "fits": fits,
        "detail": sweeps.iter().flat_map(|s| s.points.iter().map(move |&(n, d)| {
            json!({"chi": s.chi, "n": n, "delta_E": d})
        })).collect::<Vec<_>>(),
    });
    Ok(Report {
        payload,
        tables: vec![("detail", detail), ("nstar", nstar_table)],
        failure: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_files_in_every_form() {
        assert_eq!(parse_params("[1, -2.5]").unwrap(), vec![1.0, -2.5]);
        assert_eq!(
            parse_params(r#"{"payload": {"best_params": [0.5]}}"#).unwrap(),
            vec![0.5]
        );
        assert_eq!(parse_params(r#"{"best_params": [3]}"#).unwrap(), vec![3.0]);
        assert_eq!(
            parse_params("# header\n0.1, 0.2\n0.3 # tail\n").unwrap(),
            vec![0.1, 0.2, 0.3]
        );
        assert!(parse_params("").is_err());
        assert!(parse_params("1 x").is_err());
        assert!(parse_params(r#"{"other": 1}"#).is_err());
    }

    #[test]
    fn layer_counts_follow_bond_dimension() {
        assert_eq!(urbm_layers(8).unwrap(), 2);
        assert!(urbm_layers(6).is_err());
    }
}
