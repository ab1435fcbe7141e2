use adx_core::pcm::{c_q_entropy_coded, pcm_distortion};
use adx_core::sampling::{adx_lower_bound, d_si, FilterSpec};
use adx_core::spectra::Psd;
use adx_core::waterfill::{discrete_waterfill, shannon_drf};
use adx_core::{Psd32, Psd64};

#[test]
fn single_and_double_precision_agree() {
    let a: Psd32 = Psd::triangular(0.5).unwrap();
    let b: Psd64 = Psd::triangular(0.5).unwrap();
    for r in [0.25f32, 1.0, 3.0] {
        let d32 = shannon_drf(&a, r).unwrap().distortion;
        let d64 = shannon_drf(&b, f64::from(r)).unwrap().distortion;
        assert!((f64::from(d32) - d64).abs() < 1e-4 * d64.max(1e-3), "{d32} {d64}");
        for f_s in [0.3f32, 0.7, 1.2] {
            let s32 = d_si(&a, &FilterSpec::all_pass(), f_s, r, None).unwrap().total;
            let s64 = d_si(&b, &FilterSpec::all_pass(), f64::from(f_s), f64::from(r), None).unwrap().total;
            assert!((f64::from(s32) - s64).abs() < 1e-4, "{s32} {s64}");
            let l32 = adx_lower_bound(&a, f_s, r).unwrap().total;
            let l64 = adx_lower_bound(&b, f64::from(f_s), f64::from(r)).unwrap().total;
            assert!((f64::from(l32) - l64).abs() < 1e-4, "{l32} {l64}");
            let p32 = pcm_distortion(&a, f_s, r, c_q_entropy_coded()).unwrap().total;
            let p64 = pcm_distortion(&b, f64::from(f_s), f64::from(r), c_q_entropy_coded()).unwrap().total;
            assert!((f64::from(p32) - p64).abs() < 1e-4, "{p32} {p64}");
        }
    }
    let w = discrete_waterfill(&[1.0f32, 0.25], 1.0).unwrap();
    assert!((w.solution.distortion - 0.5).abs() < 1e-6);
}
