use adx_core::pcm::{c_q_entropy_coded, c_q_fixed_length, pcm_distortion, pcm_optimal_rate, PcmSearch};
use adx_core::sampling::{
    adx_lower_bound, allocate_branches, critical_rate, d_si, mmse_si, optimal_single_branch_filter,
    ou_critical_rate_closed_form, ou_critical_rate_exact, verify_achievability, AdxPoint, FilterSpec,
};
use adx_core::simulate::{
    empirical_mmse_si, run_pcm_pipeline, synthesize, write_ensemble, QuantizerMode, SynthesisConfig,
};
use adx_core::spectra::{Psd, PsdKind};
use adx_core::waterfill::{shannon_drf, SolveStatus};
use adx_core::AdxError;
use rayon::prelude::*;

use crate::args::{parse_cq, parse_filter, parse_psd, parse_quantizer, parse_range, Command, FilterMode, PsdChoice};
use crate::output::{Record, Report, Value};
use crate::CliError;

pub fn status_name(status: &SolveStatus) -> &'static str {
    match status {
        SolveStatus::Converged => "converged",
        SolveStatus::ClosedForm => "closed_form",
        SolveStatus::ZeroRate => "zero_rate",
        SolveStatus::Degenerate => "degenerate",
        SolveStatus::Saturated => "saturated",
        SolveStatus::NotConverged { .. } => "not_converged",
    }
}

fn meta(command: &str, sweep: &str, psd: &PsdChoice) -> Record {
    Record::new()
        .with("command", command)
        .with("sweep", sweep)
        .with("psd", psd.spec.as_str())
        .with("kind", psd.psd.kind().name())
        .with("f_max", psd.psd.f_max())
        .with("grid_step", psd.psd.grid_step())
        .with("version", env!("CARGO_PKG_VERSION"))
}

/// Evaluates sweep points in parallel, keeping sweep order.
fn sweep<F>(points: &[f64], f: F) -> Result<Vec<Record>, CliError>
where
    F: Fn(f64) -> Result<Record, CliError> + Sync,
{
    points.par_iter().map(|&x| f(x)).collect()
}

fn finish(meta: Record, records: Vec<Record>, mut warnings: Vec<String>) -> Report {
    let stalled: Vec<String> = records
        .iter()
        .filter(|r| r.get("status") == Some(&Value::from("not_converged")))
        .map(|r| match r.0.first() {
            Some((k, v)) => format!("water level did not converge at {k} = {v:?}"),
            None => "water level did not converge".to_string(),
        })
        .collect();
    let not_converged = !stalled.is_empty();
    warnings.extend(stalled);
    Report { meta, records, warnings, not_converged }
}

pub fn execute(command: &Command) -> Result<Report, CliError> {
    match command {
        Command::Drf { psd, rate } => drf(&parse_psd(&psd.psd)?, &parse_range(rate)?),
        Command::Critical { psd, rate } => critical(&parse_psd(&psd.psd)?, &parse_range(rate)?),
        Command::Adx { psd, rate, fs, filter, noise } => {
            let noise = noise.as_deref().map(parse_psd).transpose()?;
            adx(&parse_psd(&psd.psd)?, *rate, &parse_range(fs)?, parse_filter(filter)?, noise.as_ref())
        }
        Command::Pcm { psd, rate, fs, cq, optimum, fcap, grid_points } => {
            let psd = parse_psd(&psd.psd)?;
            let c_q = parse_cq(cq)?;
            if *optimum {
                pcm_optimum(&psd, *rate, PcmSearch { f_cap: *fcap, grid_points: *grid_points, c_q })
            } else {
                pcm(&psd, *rate, &parse_range(fs)?, c_q)
            }
        }
        Command::Simulate { psd, fs, rate, trials, seed, dense_rate, samples, quantizer, filter, export } => {
            let plan = SimulationPlan {
                f_s: *fs,
                rate: rate.unwrap_or(8.0 * fs),
                trials: *trials,
                seed: *seed,
                dense_rate: *dense_rate,
                samples: *samples,
                quantizer: parse_quantizer(quantizer)?,
                filter: filter.clone(),
                export: export.clone(),
            };
            simulate(&parse_psd(&psd.psd)?, &plan)
        }
    }
}

pub fn drf(psd: &PsdChoice, rates: &[f64]) -> Result<Report, CliError> {
    let records = sweep(rates, |r| {
        let s = shannon_drf(&psd.psd, r)?;
        Ok(Record::new()
            .with("rate", r)
            .with("theta", s.theta)
            .with("distortion", s.distortion)
            .with("f_r", s.active.measure())
            .with("status", status_name(&s.status)))
    })?;
    Ok(finish(meta("drf", "rate", psd), records, vec![]))
}

pub fn critical(psd: &PsdChoice, rates: &[f64]) -> Result<Report, CliError> {
    let f0 = match psd.psd.kind() {
        PsdKind::OrnsteinUhlenbeck { f0 } => Some(*f0),
        _ => None,
    };
    let records = sweep(rates, |r| {
        let s = shannon_drf(&psd.psd, r)?;
        let mut rec = Record::new()
            .with("rate", r)
            .with("f_r", critical_rate(&psd.psd, r)?)
            .with("distortion", s.distortion);
        if let Some(f0) = f0 {
            rec = rec
                .with("f_r_closed_form", ou_critical_rate_closed_form(f0, r)?)
                .with("f_r_corrected", ou_critical_rate_exact(f0, r)?);
        }
        Ok(rec.with("status", status_name(&s.status)))
    })?;
    let mut warnings = vec![];
    if f0.is_some() {
        warnings.push(
            "f_r_closed_form evaluates the published closed form, which departs from water-filling; \
             f_r_corrected solves the water-filling condition exactly"
                .to_string(),
        );
    }
    Ok(finish(meta("critical", "rate", psd), records, warnings))
}

fn adx_point(
    psd: &Psd<f64>,
    f_s: f64,
    rate: f64,
    mode: FilterMode,
    noise: Option<&Psd<f64>>,
) -> Result<(AdxPoint<f64>, usize), CliError> {
    let single = |h: FilterSpec<f64>| Ok((d_si(psd, &h, f_s, rate, noise)?, 1));
    match mode {
        FilterMode::LowPass => single(FilterSpec::low_pass(f_s / 2.0)),
        FilterMode::AllPass => single(FilterSpec::all_pass()),
        FilterMode::Optimal => single(optimal_single_branch_filter(psd, f_s)?),
        FilterMode::Branches(l) => {
            let config = allocate_branches(psd, f_s, l)?;
            Ok((verify_achievability(psd, &config, rate)?, config.branch_count()))
        }
    }
}

pub fn adx(
    psd: &PsdChoice,
    rate: f64,
    rates: &[f64],
    mode: FilterMode,
    noise: Option<&PsdChoice>,
) -> Result<Report, CliError> {
    if noise.is_some() && matches!(mode, FilterMode::Branches(_)) {
        return Err(CliError::Input("--noise is not supported with branches:L".into()));
    }
    let warnings = std::sync::Mutex::new(Vec::new());
    let records = sweep(rates, |f_s| {
        let bound = match noise {
            Some(_) => f64::NAN,
            None => adx_lower_bound(&psd.psd, f_s, rate)?.total,
        };
        let rec = Record::new().with("f_s", f_s).with("rate", rate);
        match adx_point(&psd.psd, f_s, rate, mode, noise.map(|n| &n.psd)) {
            Ok((p, branches)) => Ok(rec
                .with("mmse", p.mmse_part)
                .with("lossy", p.lossy_part)
                .with("total", p.total)
                .with("theta", p.theta)
                .with("branches", branches)
                .with("bound", bound)
                .with("status", status_name(&p.status))),
            // a sweep keeps going past rates the allocation cannot serve
            Err(CliError::Core(e @ AdxError::InsufficientBranches { .. })) => {
                warnings.lock().unwrap_or_else(|p| p.into_inner()).push(format!("f_s = {f_s}: {e}"));
                Ok(rec
                    .with("mmse", f64::NAN)
                    .with("lossy", f64::NAN)
                    .with("total", f64::NAN)
                    .with("theta", f64::NAN)
                    .with("branches", 0usize)
                    .with("bound", bound)
                    .with("status", "insufficient_branches"))
            }
            Err(e) => Err(e),
        }
    })?;
    let filter = match mode {
        FilterMode::LowPass => "lpf".to_string(),
        FilterMode::AllPass => "allpass".to_string(),
        FilterMode::Optimal => "optimal".to_string(),
        FilterMode::Branches(l) => format!("branches:{l}"),
    };
    let mut m = meta("adx", "f_s", psd).with("filter", filter);
    if let Some(n) = noise {
        m = m.with("noise", n.spec.as_str());
    }
    let mut warnings = warnings.into_inner().unwrap_or_else(|p| p.into_inner());
    warnings.sort();
    Ok(finish(m, records, warnings))
}

pub fn pcm(psd: &PsdChoice, rate: f64, rates: &[f64], c_q: f64) -> Result<Report, CliError> {
    let records = sweep(rates, |f_s| {
        let p = pcm_distortion(&psd.psd, f_s, rate, c_q)?;
        Ok(Record::new()
            .with("f_s", f_s)
            .with("rate", rate)
            .with("bits_per_sample", p.bits_per_sample)
            .with("d_smp", p.d_smp)
            .with("d_qnt", p.d_qnt)
            .with("total", p.total)
            .with("bound", adx_lower_bound(&psd.psd, f_s, rate)?.total))
    })?;
    Ok(finish(meta("pcm", "f_s", psd).with("c_q", c_q), records, vec![]))
}

pub fn pcm_optimum(psd: &PsdChoice, rate: f64, search: PcmSearch<f64>) -> Result<Report, CliError> {
    let opt = pcm_optimal_rate(&psd.psd, rate, search)?;
    let p = opt.point;
    let record = Record::new()
        .with("f_s", opt.f_s)
        .with("rate", rate)
        .with("bits_per_sample", p.bits_per_sample)
        .with("d_smp", p.d_smp)
        .with("d_qnt", p.d_qnt)
        .with("total", p.total)
        .with("grid_f_s", opt.grid_f_s)
        .with("grid_step", opt.grid_step)
        .with("grid_agrees", opt.grid_agrees)
        .with("hit_cap", opt.hit_cap);
    let mut warnings = vec![];
    if opt.hit_cap {
        warnings.push("optimum sits at the search cap; raise --fcap".to_string());
    }
    Ok(finish(meta("pcm", "none", psd).with("c_q", search.c_q), vec![record], warnings))
}

#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub f_s: f64,
    pub rate: f64,
    pub trials: usize,
    pub seed: u64,
    pub dense_rate: Option<f64>,
    pub samples: usize,
    pub quantizer: QuantizerMode,
    pub filter: String,
    pub export: Option<std::path::PathBuf>,
}

pub fn simulate(psd: &PsdChoice, plan: &SimulationPlan) -> Result<Report, CliError> {
    let source = &psd.psd;
    let dense_rate = plan
        .dense_rate
        .unwrap_or_else(|| source.f_nyq().map_or(2.0 * source.f_max(), |n| 4.0 * n));
    let ensemble = synthesize(
        source,
        SynthesisConfig {
            duration: plan.samples as f64 / dense_rate,
            dense_rate,
            trials: plan.trials,
            master_seed: plan.seed,
        },
    )?;
    if let Some(path) = &plan.export {
        let file = std::fs::File::create(path)?;
        write_ensemble(&ensemble, std::io::BufWriter::new(file))?;
    }
    let filter = match plan.filter.as_str() {
        "allpass" => FilterSpec::all_pass(),
        "lpf" => FilterSpec::low_pass(plan.f_s / 2.0),
        other => return Err(CliError::Input(format!("unknown estimator filter `{other}`"))),
    };
    let mmse = empirical_mmse_si(&ensemble, source, &filter, plan.f_s)?;
    let pipeline = run_pcm_pipeline(&ensemble, source, plan.f_s, plan.rate, plan.quantizer)?;
    let (quantizer, model) = match plan.quantizer {
        QuantizerMode::Disabled => ("off", pcm_distortion(source, plan.f_s, plan.rate, 1.0)?.d_smp),
        QuantizerMode::FixedLength => {
            ("fixed", pcm_distortion(source, plan.f_s, plan.rate, c_q_fixed_length())?.total)
        }
        QuantizerMode::EntropyCoded => {
            ("entropy", pcm_distortion(source, plan.f_s, plan.rate, c_q_entropy_coded())?.total)
        }
    };
    let records = vec![
        Record::new()
            .with("quantity", "mmse_si")
            .with("empirical", mmse.mean)
            .with("std_error", mmse.std_error)
            .with("analytic", mmse_si(source, &filter, plan.f_s, None)?)
            .with("trials", mmse.trials),
        Record::new()
            .with("quantity", "pcm")
            .with("empirical", pipeline.distortion.mean)
            .with("std_error", pipeline.distortion.std_error)
            .with("analytic", model)
            .with("trials", pipeline.distortion.trials),
    ];
    let mut m = meta("simulate", "none", psd)
        .with("f_s", plan.f_s)
        .with("rate", plan.rate)
        .with("seed", plan.seed)
        .with("dense_rate", dense_rate)
        .with("samples", plan.samples)
        .with("quantizer", quantizer)
        .with("filter", plan.filter.as_str())
        .with("tail_mass", source.tail_mass());
    let mut warnings = vec![];
    if plan.quantizer == QuantizerMode::FixedLength {
        let note = "fixed-length quantizer: 2^ceil(rate/f_s) levels over +-4 sigma stands in for an \
                    expected code length of rate/f_s bits";
        m = m.with("note", note);
        warnings.push(note.to_string());
    }
    if source.tail_mass() > 0.0 {
        warnings.push(format!(
            "paths omit the spectral tail beyond f_max; add tail_mass = {:.3e} to empirical errors",
            source.tail_mass()
        ));
    }
    Ok(finish(m, records, warnings))
}
