//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints a PASS/FAIL line on each run.
//!
//! Criteria listed in `EXPECTED_FAILURES` are implemented at their stated
//! tolerances but cannot be met by a correct implementation; they still
//! print FAIL. The process exits nonzero when any other criterion fails, or
//! when an expected failure starts passing. Set `ADX_ACCEPTANCE_STRICT=1`
//! to count every failure.

use std::f64::consts::{LN_2, PI};
use std::process::ExitCode;
use std::time::Instant;

use adx_core::pcm::{c_q_entropy_coded, pcm_distortion, pcm_optimal_rate, PcmSearch};
use adx_core::quantize::{entropy_rate, lloyd, mse, uniform_quantizer_for_entropy, InputDensity};
use adx_core::sampling::{
    adx_lower_bound, allocate_branches, critical_rate, d_si, is_aliasing_free, mmse_lower_bound, mmse_si,
    optimal_single_branch_filter, ou_critical_rate_closed_form, ou_critical_rate_exact, verify_achievability,
    FilterSpec,
};
use adx_core::simulate::{empirical_mmse_si, run_pcm_pipeline, synthesize, QuantizerMode, SynthesisConfig};
use adx_core::spectra::{Psd, PsdKind};
use adx_core::waterfill::{discrete_waterfill, kkt_violation, shannon_drf};

const EXPECTED_FAILURES: &[(usize, &str)] = &[
    (2, "the closed form does not describe the water-filling solution; see the decisions ledger"),
    (3, "water-filling gives f_R/(R ln2) near 1.022 and no loss at f_s = 2R; see the decisions ledger"),
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn flat() -> Psd<f64> {
    Psd::flat(0.5).unwrap()
}

fn criterion_1() -> Outcome {
    let psd = flat();
    let mut worst = 0.0f64;
    for r in [0.5, 1.0, 2.0] {
        for f_s in [0.25, 0.5, 0.75, 1.0, 1.5] {
            let got = d_si(&psd, &FilterSpec::low_pass(f_s / 2.0), f_s, r, None).unwrap().total;
            let passed = f64::min(f_s, 1.0);
            let oracle = (1.0 - passed) + passed * (-2.0 * r / passed).exp2();
            worst = worst.max(rel(got, oracle));
        }
    }
    let a = d_si(&psd, &FilterSpec::low_pass(0.25), 0.5, 1.0, None).unwrap().total;
    let b = d_si(&psd, &FilterSpec::low_pass(0.75), 1.5, 1.0, None).unwrap().total;
    let pass = worst <= 1e-6 && rel(a, 0.53125) <= 1e-6 && rel(b, 0.25) <= 1e-6;
    outcome(pass, format!("worst relative error {worst:.2e}; (0.5, 1) -> {a:.8}; (1.5, 1) -> {b:.8}"))
}

fn criterion_2() -> Outcome {
    let ou = Psd::ornstein_uhlenbeck(1.0).unwrap();
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for r in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let f_r = critical_rate(&ou, r).unwrap();
        let closed = ou_critical_rate_closed_form(1.0, r).unwrap();
        let exact = ou_critical_rate_exact(1.0, r).unwrap();
        let e = rel(f_r, closed);
        worst = worst.max(e);
        notes.push(format!("R={r}: {f_r:.5} vs {closed:.5} (corrected {exact:.5})"));
    }
    outcome(worst <= 1e-3, format!("worst relative error {worst:.2e}; {}", notes.join("; ")))
}

fn criterion_3() -> Outcome {
    let ou = Psd::ornstein_uhlenbeck(1.0).unwrap();
    let r = 64.0;
    let drf = shannon_drf(&ou, r).unwrap();
    let f_r = drf.active.measure();
    let bits = f_r / (r * LN_2);
    let ratios = |f_s: f64| {
        let d = adx_lower_bound(&ou, f_s, r).unwrap().total;
        (d / drf.distortion, d / mmse_lower_bound(&ou, f_s).unwrap())
    };
    let (to_drf, to_mmse) = ratios(2.0 * r);
    // two bits per sample read as f_s = R / 2
    let (alt_drf, alt_mmse) = ratios(r / 2.0);
    let pass = (0.99..=1.01).contains(&bits) && (1.06..=1.10).contains(&to_drf) && (1.44..=1.52).contains(&to_mmse);
    outcome(
        pass,
        format!(
            "f_R/(R ln2) = {bits:.4}; at f_s=2R: D/D(R) = {to_drf:.4}, D/mmse = {to_mmse:.4}; \
             at f_s=R/2: {alt_drf:.4}, {alt_mmse:.4}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let kinds = [
        PsdKind::Flat { half_width: 0.5 },
        PsdKind::Triangular { half_width: 0.5 },
        PsdKind::OrnsteinUhlenbeck { f0: 1.0 },
        PsdKind::bimodal_fixture(),
    ];
    let mut failures = Vec::new();
    let mut checked = 0usize;
    for kind in kinds {
        let name = kind.name();
        let psd: Psd<f64> = Psd::new(kind).unwrap();
        for r in [1.0, 2.0] {
            let drf = shannon_drf(&psd, r).unwrap();
            let f_r: f64 = drf.active.measure();
            let top = 2.0 * f_r.max(psd.f_nyq().unwrap_or(0.0));
            let mut prev = f64::INFINITY;
            for k in 1..=120 {
                let f_s = top * k as f64 / 120.0;
                let lb = adx_lower_bound(&psd, f_s, r).unwrap().total;
                let floor = mmse_lower_bound(&psd, f_s).unwrap().max(drf.distortion);
                if lb > prev + 1e-9 {
                    failures.push(format!("{name} R={r}: increase at f_s={f_s:.4}"));
                }
                if lb < floor - 1e-9 {
                    failures.push(format!("{name} R={r}: below floor at f_s={f_s:.4}"));
                }
                if f_s >= f_r && (lb - drf.distortion).abs() > 1e-6 {
                    failures.push(format!("{name} R={r}: {lb} != DRF {} at f_s={f_s:.4}", drf.distortion));
                }
                prev = lb;
                checked += 1;
            }
            // exactly at the critical rate
            let at = adx_lower_bound(&psd, f_r, r).unwrap().total;
            if (at - drf.distortion).abs() > 1e-6 {
                failures.push(format!("{name} R={r}: {at} != DRF at f_R={f_r:.5}"));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{checked} sweep points")
    } else {
        failures.into_iter().take(5).collect::<Vec<_>>().join("; ")
    };
    outcome(detail.ends_with("sweep points"), detail)
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for r in [1.0, 2.0] {
        let opt = pcm_optimal_rate(&flat(), r, PcmSearch::default()).unwrap();
        let ok = (opt.f_s - 1.0).abs() <= opt.grid_step;
        pass &= ok;
        notes.push(format!("flat R={r}: f_s*={:.4}", opt.f_s));
        let tri = Psd::triangular(0.5).unwrap();
        let opt = pcm_optimal_rate(&tri, r, PcmSearch::default()).unwrap();
        let steps = (1.0 - opt.f_s) / opt.grid_step;
        pass &= steps >= 5.0;
        notes.push(format!("triangular R={r}: f_s*={:.4} ({steps:.0} steps below)", opt.f_s));
    }
    outcome(pass, notes.join("; "))
}

fn criterion_6() -> Outcome {
    let normal = InputDensity::<f64>::standard_normal();
    let l8 = lloyd(&normal, 256, 1e-7, 20_000).unwrap();
    let lloyd_const = l8.mse * 2f64.powi(16);
    let u = uniform_quantizer_for_entropy(&normal, 8.0).unwrap();
    let h = entropy_rate(&u, &normal);
    let uniform_const = mse(&u, &normal) * (2.0 * h).exp2();
    let l2 = lloyd(&normal, 2, 1e-12, 1000).unwrap();
    let pass = (2.59..=2.86).contains(&lloyd_const)
        && (1.35..=1.50).contains(&uniform_const)
        && (l2.mse - 0.3634).abs() <= 1e-3
        && (l2.mse - (1.0 - 2.0 / PI)).abs() <= 1e-9;
    outcome(
        pass,
        format!(
            "Lloyd K=256: {lloyd_const:.4} ({} iterations); uniform at H={h:.6}: {uniform_const:.4}; Lloyd K=2: {:.6}",
            l8.iterations, l2.mse
        ),
    )
}

/// Exhaustive search over rate splits on a 1e-3-bit lattice.
fn brute_force(vars: &[f64], total: f64) -> f64 {
    let steps = (total * 1000.0).round() as usize;
    let d = |v: f64, k: usize| v * (-2.0 * k as f64 * 1e-3).exp2();
    match vars {
        [a, b] => (0..=steps).map(|i| d(*a, i) + d(*b, steps - i)).fold(f64::INFINITY, f64::min),
        [a, b, c] => {
            let mut best = f64::INFINITY;
            for i in 0..=steps {
                let head = d(*a, i);
                for j in 0..=steps - i {
                    best = best.min(head + d(*b, j) + d(*c, steps - i - j));
                }
            }
            best
        }
        _ => unreachable!(),
    }
}

fn criterion_7() -> Outcome {
    let grid = [0.25, 1.0, 2.5, 4.0];
    let mut cases: Vec<Vec<f64>> = Vec::new();
    for i in 0..grid.len() {
        for j in i..grid.len() {
            cases.push(vec![grid[i], grid[j]]);
            for k in j..grid.len() {
                cases.push(vec![grid[i], grid[j], grid[k]]);
            }
        }
    }
    let (mut worst_gap, mut worst_kkt) = (0.0f64, 0.0f64);
    let mut count = 0;
    for vars in &cases {
        for avg in [0.5, 1.0, 2.0] {
            let total = avg * vars.len() as f64;
            let alloc = discrete_waterfill(vars, total).unwrap();
            worst_gap = worst_gap.max((alloc.solution.distortion - brute_force(vars, total)).abs());
            worst_kkt = worst_kkt.max(kkt_violation(vars, &alloc));
            count += 1;
        }
    }
    outcome(
        worst_gap <= 1e-5 && worst_kkt <= 1e-9,
        format!("{count} cases; worst gap {worst_gap:.2e}; worst KKT violation {worst_kkt:.2e}"),
    )
}

fn criterion_8() -> Outcome {
    let psd = flat();
    let ensemble = synthesize(
        &psd,
        SynthesisConfig { duration: 256.0, dense_rate: 4.0, trials: 200, master_seed: 20_240_611 },
    )
    .unwrap();
    let est = empirical_mmse_si(&ensemble, &psd, &FilterSpec::all_pass(), 0.5).unwrap();
    let analytic = mmse_si(&psd, &FilterSpec::all_pass(), 0.5, None).unwrap();
    let mmse_gap = rel(est.mean, 0.5);
    let mmse_ok = mmse_gap <= 0.05
        && (est.mean - analytic).abs() <= 3.0 * est.std_error + 0.5 / 256.0
        && 3.0 * est.std_error < 0.05 * 0.5;

    let model = pcm_distortion(&psd, 1.0, 8.0, c_q_entropy_coded()).unwrap().total;
    let sim = run_pcm_pipeline(&ensemble, &psd, 1.0, 8.0, QuantizerMode::EntropyCoded).unwrap();
    let pcm_gap = rel(sim.distortion.mean, model);
    let bound = adx_lower_bound(&psd, 1.0, 8.0).unwrap().total;
    let pcm_ok = pcm_gap <= 0.10
        && 3.0 * sim.distortion.std_error < 0.10 * model
        && sim.distortion.mean >= bound - 3.0 * sim.distortion.std_error;
    outcome(
        mmse_ok && pcm_ok,
        format!(
            "mmse {:.4} +- {:.4} (gap {:.1}%); PCM {:.4e} +- {:.1e} vs model {model:.4e} (gap {:.1}%)",
            est.mean,
            est.std_error,
            100.0 * mmse_gap,
            sim.distortion.mean,
            sim.distortion.std_error,
            100.0 * pcm_gap
        ),
    )
}

fn criterion_9() -> Outcome {
    let psd = Psd::bimodal().unwrap();
    let sigma2 = psd.total_variance();
    let f_s = 0.4;
    let config = allocate_branches(&psd, f_s, 5).unwrap();
    let branch_rate = config.branch_rate();
    let clean = config.branches.iter().all(|b| is_aliasing_free(b, branch_rate));
    let single = optimal_single_branch_filter(&psd, f_s).unwrap();
    let mut pass = clean;
    let mut notes = vec![format!("L={}", config.branch_count())];
    for r in [0.5, 1.0, 2.0] {
        let bank = verify_achievability(&psd, &config, r).unwrap().total;
        let bound = adx_lower_bound(&psd, f_s, r).unwrap().total;
        let best_single = [single.clone(), FilterSpec::all_pass(), FilterSpec::low_pass(f_s / 2.0)]
            .iter()
            .map(|h| d_si(&psd, h, f_s, r, None).unwrap().total)
            .fold(f64::INFINITY, f64::min);
        let margin = best_single - bank;
        pass &= (bank - bound).abs() <= 1e-4 * sigma2 && margin > 1e-3 * sigma2;
        notes.push(format!("R={r}: bank {bank:.5} bound {bound:.5} single {best_single:.5}"));
    }
    outcome(pass, notes.join("; "))
}

fn criterion_10() -> Outcome {
    let psd = flat();
    let noise = flat();
    let got = d_si(&psd, &FilterSpec::all_pass(), 1.0, 1.0, Some(&noise)).unwrap().total;
    // one component: estimator variance 1/2, estimation error 1/2
    let discrete = discrete_waterfill(&[0.5], 1.0).unwrap().solution.distortion + 0.5;
    let pass = rel(got, 0.625) <= 1e-2 && rel(discrete, 0.625) <= 1e-12;
    outcome(pass, format!("sampled pathway {got:.6}; discrete {discrete:.6}"))
}

fn main() -> ExitCode {
    let strict = std::env::var("ADX_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [fn() -> Outcome; 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    let mut bad = 0;
    for (i, run) in criteria.iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let expected = EXPECTED_FAILURES.iter().find(|(k, _)| *k == n).map(|(_, why)| *why);
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2}: {verdict}  [{secs:.1}s] {}", o.detail);
        match (o.pass, expected) {
            (false, Some(why)) => {
                println!("              expected failure: {why}");
                if strict {
                    bad += 1;
                }
            }
            (false, None) => bad += 1,
            (true, Some(_)) => {
                println!("              listed as an expected failure but passed");
                bad += 1;
            }
            (true, None) => {}
        }
    }
    if bad == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{bad} unexpected result(s)");
        ExitCode::FAILURE
    }
}
