use std::path::PathBuf;

use adx_core::pcm::{c_q_entropy_coded, c_q_fixed_length};
use adx_core::simulate::QuantizerMode;
use adx_core::spectra::{load_piecewise, GridOptions, Lobe, Psd, PsdKind};
use clap::{Args, Parser, Subcommand};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "adx-lab", version, about = "Distortion, bitrate and sampling-rate sweeps for Gaussian stationary sources")]
pub struct Cli {
    /// Emit one JSON document instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct PsdArg {
    /// Source spectrum as `kind:key=val,...`. Kinds: flat:W, tri:W, ou:f0,
    /// bimodal, multimodal:lobes=c/w/a+c/w/a, piecewise:file=PATH. Every kind
    /// also accepts fmax, step and tail.
    #[arg(long, value_name = "SPEC")]
    pub psd: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distortion-rate function by reverse water-filling.
    ///
    /// Columns: rate, theta, distortion, f_r, status, then run metadata.
    Drf {
        #[command(flatten)]
        psd: PsdArg,
        /// Bitrate(s) in bits per second: a value or `start:stop:count`,
        /// optionally prefixed with `log:`.
        #[arg(long, default_value = "1")]
        rate: String,
    },
    /// Critical sampling rate f_R as a function of the bitrate.
    ///
    /// Columns: rate, f_r, distortion, plus f_r_closed_form and f_r_corrected
    /// for the ou kind, then run metadata.
    Critical {
        #[command(flatten)]
        psd: PsdArg,
        #[arg(long, default_value = "1")]
        rate: String,
    },
    /// Distortion of a sampler followed by an optimal encoder, swept over f_s.
    ///
    /// Columns: f_s, rate, mmse, lossy, total, theta, branches, bound, status,
    /// then run metadata. `bound` is the lower bound over all samplers.
    Adx {
        #[command(flatten)]
        psd: PsdArg,
        /// Bitrate in bits per second.
        #[arg(long)]
        rate: f64,
        /// Sampling rate(s): a value or `start:stop:count`.
        #[arg(long)]
        fs: String,
        /// Pre-sampling filter: lpf, allpass, optimal or branches:L.
        #[arg(long, default_value = "lpf")]
        filter: String,
        /// Additive noise spectrum, same syntax as --psd.
        #[arg(long, value_name = "SPEC")]
        noise: Option<String>,
    },
    /// Pulse-code modulation under the white quantization-noise model.
    ///
    /// Columns: f_s, rate, bits_per_sample, d_smp, d_qnt, total, bound, then
    /// run metadata. With --optimum: f_s, rate, bits_per_sample, d_smp, d_qnt,
    /// total, grid_f_s, grid_step, grid_agrees, hit_cap.
    Pcm {
        #[command(flatten)]
        psd: PsdArg,
        #[arg(long)]
        rate: f64,
        /// Sampling rate(s); ignored with --optimum.
        #[arg(long, default_value = "1")]
        fs: String,
        /// Quantizer constant: entropy (pi e / 6), fixed (sqrt(3) pi / 2) or a number.
        #[arg(long, default_value = "entropy")]
        cq: String,
        /// Report the optimal sampling rate instead of a sweep.
        #[arg(long)]
        optimum: bool,
        /// Search cap for spectra without a Nyquist rate.
        #[arg(long)]
        fcap: Option<f64>,
        #[arg(long, default_value_t = 500)]
        grid_points: usize,
    },
    /// Monte Carlo run of the PCM chain and of the sampled MMSE estimator.
    ///
    /// Columns: quantity, empirical, std_error, analytic, trials, then run
    /// metadata.
    Simulate {
        #[command(flatten)]
        psd: PsdArg,
        #[arg(long)]
        fs: f64,
        /// Bitrate; defaults to 8 bits per sample.
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Dense grid rate; defaults to 4 f_Nyq, or 2 f_max without a Nyquist rate.
        #[arg(long)]
        dense_rate: Option<f64>,
        /// Points per path, a power of two.
        #[arg(long, default_value_t = 1024)]
        samples: usize,
        /// Quantizer in the PCM chain: off, fixed or entropy.
        #[arg(long, default_value = "fixed")]
        quantizer: String,
        /// Pre-sampling filter of the MMSE estimate: allpass or lpf.
        #[arg(long, default_value = "allpass")]
        filter: String,
        /// Also write the path ensemble to this file.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

/// A parsed `--psd` value and the string it came from.
#[derive(Debug, Clone)]
pub struct PsdChoice {
    pub spec: String,
    pub psd: Psd<f64>,
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn number(key: &str, value: &str) -> Result<f64, CliError> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| input(format!("`{key}={value}`: not a number")))
}

fn lobes(value: &str) -> Result<Vec<Lobe<f64>>, CliError> {
    value
        .split('+')
        .map(|lobe| {
            let parts: Vec<&str> = lobe.split('/').collect();
            let [c, w, a] = parts[..] else {
                return Err(input(format!("lobe `{lobe}`: expected center/half_width/weight")));
            };
            Ok(Lobe::new(number("center", c)?, number("half_width", w)?, number("weight", a)?))
        })
        .collect()
}

/// Parses the `kind:key=val,key=val` micro-syntax.
pub fn parse_psd(spec: &str) -> Result<PsdChoice, CliError> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut pairs = Vec::new();
    for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| input(format!("`{item}`: expected key=value")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    let mut opts = GridOptions::<f64>::default();
    let mut take = |key: &str| pairs.iter().position(|(k, _)| k == key).map(|i| pairs.remove(i).1);
    if let Some(v) = take("fmax") {
        opts.f_max = Some(number("fmax", &v)?);
    }
    if let Some(v) = take("step") {
        opts.grid_step = Some(number("step", &v)?);
    }
    if let Some(v) = take("tail") {
        opts.tail_tolerance = number("tail", &v)?;
    }
    let mut required = |key: &str| take(key).ok_or_else(|| input(format!("psd kind `{kind}` needs `{key}=`")));
    let parsed = match kind {
        "flat" => PsdKind::Flat { half_width: number("W", &required("W")?)? },
        "tri" | "triangular" => PsdKind::Triangular { half_width: number("W", &required("W")?)? },
        "ou" => PsdKind::OrnsteinUhlenbeck { f0: number("f0", &required("f0")?)? },
        "bimodal" => PsdKind::bimodal_fixture(),
        "multimodal" => PsdKind::Multimodal { lobes: lobes(&required("lobes")?)? },
        "piecewise" => load_piecewise(std::path::Path::new(&required("file")?))?,
        other => return Err(input(format!("unknown psd kind `{other}`"))),
    };
    if let Some((k, _)) = pairs.first() {
        return Err(input(format!("unknown key `{k}` for psd kind `{kind}`")));
    }
    Ok(PsdChoice { spec: spec.to_string(), psd: Psd::with_options(parsed, opts)? })
}

/// Parses a value, `start:stop:count` or `log:start:stop:count`.
pub fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let (log, body) = match text.strip_prefix("log:") {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let parts: Vec<&str> = body.split(':').collect();
    let values = match parts[..] {
        [single] if !log => vec![number("value", single)?],
        [start, stop, count] => {
            let (a, b) = (number("start", start)?, number("stop", stop)?);
            let n: usize = count
                .trim()
                .parse()
                .map_err(|_| input(format!("range count `{count}` is not a positive integer")))?;
            if n == 0 {
                return Err(input("range count must be positive"));
            }
            if log && !(a > 0.0 && b > 0.0) {
                return Err(input("log ranges need positive endpoints"));
            }
            let at = |t: f64| if log { (a.ln() + t * (b.ln() - a.ln())).exp() } else { a + t * (b - a) };
            if n == 1 {
                vec![a]
            } else {
                (0..n).map(|i| at(i as f64 / (n - 1) as f64)).collect()
            }
        }
        _ => return Err(input(format!("`{text}`: expected a number or start:stop:count"))),
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(input(format!("`{text}`: non-finite value")));
    }
    Ok(values)
}

/// Filter modes of the `adx` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    LowPass,
    AllPass,
    Optimal,
    Branches(usize),
}

pub fn parse_filter(text: &str) -> Result<FilterMode, CliError> {
    match text {
        "lpf" => Ok(FilterMode::LowPass),
        "allpass" => Ok(FilterMode::AllPass),
        "optimal" => Ok(FilterMode::Optimal),
        _ => {
            let l = text
                .strip_prefix("branches:")
                .and_then(|l| l.parse::<usize>().ok())
                .filter(|&l| l > 0)
                .ok_or_else(|| input(format!("unknown filter mode `{text}`")))?;
            Ok(FilterMode::Branches(l))
        }
    }
}

pub fn parse_cq(text: &str) -> Result<f64, CliError> {
    match text {
        "entropy" => Ok(c_q_entropy_coded()),
        "fixed" => Ok(c_q_fixed_length()),
        other => {
            let c = number("cq", other)?;
            if c > 0.0 {
                Ok(c)
            } else {
                Err(input("cq must be positive"))
            }
        }
    }
}

pub fn parse_quantizer(text: &str) -> Result<QuantizerMode, CliError> {
    match text {
        "off" => Ok(QuantizerMode::Disabled),
        "fixed" => Ok(QuantizerMode::FixedLength),
        "entropy" => Ok(QuantizerMode::EntropyCoded),
        other => Err(input(format!("unknown quantizer `{other}`"))),
    }
}
