//! Release-gate invariant suites, runnable from the CLI without the test
//! harness.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::augment::{
    build_augmented_set, expected_count, replace_detail, AugmentationPlan, Method, PowerMode,
    ReplaceMode,
};
use crate::classifier::{grad_check, GradCheckConfig};
use crate::dataset::{read_dataset, write_dataset, Dataset, DatasetHeader, Split};
use crate::error::Result;
use crate::exec::Execution;
use crate::frame::IqFrame;
use crate::rng::rng_for;
use crate::synthesis::{add_awgn, synthesize_split, Profile};
use crate::wavelet::{basis, decompose, decompose_rows, reconstruct_rows, WaveletName};

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfTestReport {
    pub suites: Vec<SuiteResult>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

type Suite = fn(Execution) -> Result<(bool, String)>;

const SUITES: [(&str, Suite); 7] = [
    ("reconstruction", reconstruction),
    ("filters", filters),
    ("rnsr_power", rnsr_power),
    ("counts", counts),
    ("snr_calibration", snr_calibration),
    ("gradient_check", gradient),
    ("dataset_io", dataset_io),
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|(n, _)| *n).collect()
}

/// Runs the suites named in `only` (all of them when empty); a suite that
/// errors counts as failed.
pub fn run_selftest(exec: Execution, only: &[&str]) -> SelfTestReport {
    let suites = SUITES
        .iter()
        .filter(|(name, _)| only.is_empty() || only.contains(name))
        .map(|(name, f)| {
            let start = Instant::now();
            let (passed, detail) = f(exec).unwrap_or_else(|e| (false, format!("error: {e}")));
            SuiteResult {
                name,
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect();
    SelfTestReport { suites }
}

fn gaussian_rows(seed: u64, len: usize) -> [Vec<f64>; 2] {
    let mut rng = rng_for(seed, &[]);
    [0, 1].map(|_| (0..len).map(|_| rng.sample(StandardNormal)).collect())
}

fn reconstruction(exec: Execution) -> Result<(bool, String)> {
    let errs = exec.try_map_range(20, |k| -> Result<f64> {
        let rows = gaussian_rows(k as u64, 1024);
        let mut worst = 0.0f64;
        for name in WaveletName::ALL {
            for depth in 1..=5 {
                let back = reconstruct_rows(&decompose_rows(&rows, name, depth)?)?;
                for (a, b) in rows.iter().flatten().zip(back.iter().flatten()) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        Ok(worst)
    })?;
    let worst = errs.into_iter().fold(0.0, f64::max);
    Ok((
        worst < 1e-8,
        format!("max |x - R(D(x))| = {worst:.3e} over 20 frames, 5 bases, E = 1..5"),
    ))
}

fn filters(_: Execution) -> Result<(bool, String)> {
    // Loading a basis runs the full filter validation; reaching here means
    // every table passed.
    for name in WaveletName::ALL {
        basis(name);
    }
    let hi = &basis(WaveletName::Coif3).hi_d;
    let worst = (0..6)
        .map(|k| {
            hi.iter()
                .enumerate()
                .map(|(n, h)| (n as f64).powi(k) * h)
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max);
    Ok((
        worst < 1e-6,
        format!("all bases validated; coif3 max moment |Σ nᵏ hi_d[n]| = {worst:.3e}"),
    ))
}

fn rnsr_power(_: Execution) -> Result<(bool, String)> {
    let rows = gaussian_rows(99, 64);
    let coeffs = decompose_rows(&rows, WaveletName::Haar, 3)?;
    let l = 0;
    let band = &coeffs.details[l];
    let beta: f64 = band.iter().map(|v| v * v).sum();
    let l0 = band.len() as f64;
    let energy =
        |c: &crate::wavelet::CoefficientSet| -> f64 { c.details[l].iter().map(|v| v * v).sum() };

    let mut rng = rng_for(5, &[]);
    let draws = 1000;
    let mut total = 0.0;
    for _ in 0..draws {
        total += energy(&replace_detail(
            &coeffs,
            l,
            ReplaceMode::Rnsr(PowerMode::Paper),
            &mut rng,
        )?);
    }
    let paper_rel = (total / draws as f64 / (beta * l0) - 1.0).abs();
    let mut exact_rel = 0.0f64;
    for _ in 0..draws {
        let e = energy(&replace_detail(
            &coeffs,
            l,
            ReplaceMode::Rnsr(PowerMode::EnergyExact),
            &mut rng,
        )?);
        exact_rel = exact_rel.max((e / beta - 1.0).abs());
    }
    Ok((
        paper_rel < 0.05 && exact_rel < 1e-10,
        format!(
            "paper mode mean energy off β·L₀ by {:.2}%; energy_exact max rel error {exact_rel:.2e}",
            paper_rel * 100.0
        ),
    ))
}

fn toy_set() -> Result<Dataset> {
    let frames = (0..3)
        .map(|k| {
            let rows = gaussian_rows(k, 64);
            IqFrame::from_rows_f64(&rows, 0, 10)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        header: DatasetHeader {
            frame_len: 64,
            label_map: vec!["BPSK".into()],
            snr_grid: vec![10],
            split: Split::Train,
            master_seed: 0,
            generation: serde_json::Value::Null,
        },
        frames,
    })
}

fn counts(exec: Execution) -> Result<(bool, String)> {
    let set = toy_set()?;
    let mut plans = Vec::new();
    for d in [0, 1, 2, 4] {
        for e in [1, 3] {
            for m in [Method::Azsr, Method::Rzsr, Method::Rnsr] {
                plans.push(AugmentationPlan::new(m, d, e, 1));
            }
            for w in [2, 5] {
                plans.push(
                    AugmentationPlan::new(Method::RnsrMw, d, e, 1)
                        .with_wavelets(WaveletName::ALL[..w].to_vec()),
                );
            }
        }
        plans.push(AugmentationPlan::new(Method::Flip, d, 3, 1));
    }
    let mut mismatches = Vec::new();
    for plan in &plans {
        let got = build_augmented_set(&set, plan, exec)?.len();
        if got != expected_count(set.len(), plan) {
            mismatches.push(format!("{}: {got}", plan.label()));
        }
    }
    let detail = if mismatches.is_empty() {
        format!("{} plans match the count formulas", plans.len())
    } else {
        format!("count mismatches: {}", mismatches.join(", "))
    };
    Ok((mismatches.is_empty(), detail))
}

fn snr_calibration(_: Execution) -> Result<(bool, String)> {
    let n = 100_000;
    let i: Vec<f32> = (0..n)
        .map(|t| (2.0 * PI * 0.013 * t as f64).cos() as f32)
        .collect();
    let q: Vec<f32> = (0..n)
        .map(|t| (2.0 * PI * 0.013 * t as f64).sin() as f32)
        .collect();
    let clean = IqFrame::new(&i, &q, 0, 0)?;
    let p_clean: f64 = clean.as_slice().iter().map(|&v| f64::from(v).powi(2)).sum();
    let mut worst = 0.0f64;
    for (k, target) in [-10.0, 0.0, 10.0, 20.0].into_iter().enumerate() {
        let noisy = add_awgn(&clean, target, &mut rng_for(21, &[k as u64]))?;
        let p_noise: f64 = noisy
            .as_slice()
            .iter()
            .zip(clean.as_slice())
            .map(|(a, b)| (f64::from(*a) - f64::from(*b)).powi(2))
            .sum();
        worst = worst.max((10.0 * (p_clean / p_noise).log10() - target).abs());
    }
    Ok((
        worst < 0.1,
        format!("max SNR error {worst:.4} dB at -10/0/10/20 dB over 1e5 samples"),
    ))
}

fn gradient(_: Execution) -> Result<(bool, String)> {
    let r = grad_check(&GradCheckConfig::default())?;
    let checked: usize = r.tensors.iter().map(|t| t.checked).sum();
    let mut detail = format!(
        "{checked} parameters, max rel error {:.3e}",
        r.max_rel_error
    );
    if !r.passed() {
        detail.push_str(&format!("; offending: {}", r.offending().join(" ")));
    }
    Ok((r.passed(), detail))
}

struct ScratchDir(PathBuf);

impl Drop for ScratchDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn dataset_io(exec: Execution) -> Result<(bool, String)> {
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_nanos());
    let dir = ScratchDir(
        std::env::temp_dir().join(format!("wavaug-selftest-{}-{nanos}", std::process::id())),
    );
    std::fs::create_dir_all(&dir.0)?;
    let mut profile = Profile::rml1024_mini(17);
    profile.train_per_cell = 2;
    let a = synthesize_split(&profile, Split::Train, exec)?;
    let b = synthesize_split(&profile, Split::Train, exec)?;
    write_dataset(&a, &dir.0.join("a"))?;
    write_dataset(&b, &dir.0.join("b"))?;
    let same_bytes = ["manifest", "iq"].iter().all(|ext| {
        let read = |p: &str| std::fs::read(dir.0.join(format!("{p}.{ext}"))).ok();
        read("a").is_some() && read("a") == read("b")
    });
    let back = read_dataset(&dir.0.join("a"))?;
    let round_trip = back.frames == a.frames && back.header == a.header;
    let payload = std::fs::metadata(dir.0.join("a.iq"))?.len();
    let size_ok = payload == crate::dataset::payload_bytes(a.len(), profile.frame_len);
    // Augmentation works on the decoded frames too.
    decompose(&back.frames[0], WaveletName::Db5, 3)?;
    Ok((
        same_bytes && round_trip && size_ok,
        format!("regeneration byte-identical: {same_bytes}; read∘write identity: {round_trip}; payload {payload} bytes matches: {size_ok}"),
    ))
}
