//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Every reference value here is computed in this file from first
//! principles; library helpers are only used as the system under test.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wavaug::augment::{
    build_augmented_set, replace_detail, AugmentationPlan, Method, PowerMode, ReplaceMode,
};
use wavaug::classifier::{Model, ModelSpec};
use wavaug::dataset::{payload_path, read_dataset, write_dataset, Dataset, DatasetHeader, Split};
use wavaug::experiment::{run_experiment, ExperimentConfig, ExperimentReport};
use wavaug::synthesis::{add_awgn, synthesize_split, ModulationScheme, Profile};
use wavaug::wavelet::{basis, decompose_rows, reconstruct_rows, BasisClass, WaveletName};
use wavaug::{Execution, IqFrame};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64, what: &str) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_s {
        Ok(())
    } else {
        Err(format!(
            "{what} took {:.1} s, limit {limit_s} s",
            elapsed.as_secs_f64()
        ))
    }
}

fn gaussian_rows(rng: &mut ChaCha8Rng, len: usize) -> [Vec<f64>; 2] {
    let mut row = || {
        (0..len)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect()
    };
    [row(), row()]
}

fn gaussian_frame(rng: &mut ChaCha8Rng, len: usize, label: u16) -> IqFrame {
    let mut row = || -> Vec<f32> {
        (0..len)
            .map(|_| rng.sample::<f32, _>(StandardNormal))
            .collect()
    };
    let (i, q) = (row(), row());
    IqFrame::new(&i, &q, label, 0).unwrap()
}

fn perfect_reconstruction() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let frames: Vec<_> = (0..100).map(|_| gaussian_rows(&mut rng, 1024)).collect();
    let mut worst = 0.0f64;
    for name in WaveletName::ALL {
        for depth in 1..=5 {
            for x in &frames {
                let y = reconstruct_rows(&decompose_rows(x, name, depth).unwrap()).unwrap();
                for r in 0..2 {
                    for (a, b) in x[r].iter().zip(&y[r]) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
        }
    }
    within(start.elapsed(), 5.0, "reconstruction")?;
    check(
        worst < 1e-8,
        format!("max |x - x'| = {worst:.2e} over 5 bases x E=1..5 x 100 frames"),
    )
}

fn filter_identities() -> Outcome {
    let mut notes = Vec::new();
    let mut fail = Vec::new();
    let sqrt2 = std::f64::consts::SQRT_2;
    for name in WaveletName::ALL {
        let b = basis(name);
        let f = b.lo_d.len();
        for (label, lo) in [("lo_d", &b.lo_d), ("lo_r", &b.lo_r)] {
            let s: f64 = lo.iter().sum();
            if (s - sqrt2).abs() > 1e-10 {
                fail.push(format!("{name} sum {label} = {s}"));
            }
        }
        // Alternating-sign mirror relation between analysis and synthesis.
        for n in 0..f {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            if (b.hi_d[n] - sign * b.lo_r[n]).abs() > 1e-14
                || (b.hi_r[n] + sign * b.lo_d[n]).abs() > 1e-14
            {
                fail.push(format!("{name} QMF relation at n={n}"));
            }
        }
        if b.class == BasisClass::Orthogonal {
            for n in 0..f {
                if (b.lo_r[n] - b.lo_d[f - 1 - n]).abs() > 1e-14 {
                    fail.push(format!("{name} lo_r is not lo_d reversed at n={n}"));
                }
            }
            // Orthonormality of even shifts covers unit energy at shift 0.
            for k in 0..f / 2 {
                let c: f64 = (0..f - 2 * k).map(|n| b.lo_d[n] * b.lo_d[n + 2 * k]).sum();
                let want = if k == 0 { 1.0 } else { 0.0 };
                if (c - want).abs() > 1e-10 {
                    fail.push(format!("{name} shift-{} autocorrelation = {c:.3e}", 2 * k));
                }
            }
        } else {
            // Biorthogonality of the analysis/synthesis lowpass pair.
            for k in -(f as isize)..=(f as isize) {
                let c: f64 = (0..f as isize)
                    .filter_map(|n| {
                        let m = n + 2 * k;
                        (0..f as isize)
                            .contains(&m)
                            .then(|| b.lo_d[(f as isize - 1 - n) as usize] * b.lo_r[m as usize])
                    })
                    .sum();
                let want = if k == 0 { 1.0 } else { 0.0 };
                if (c - want).abs() > 1e-10 {
                    fail.push(format!("{name} biorthogonality at shift {}", 2 * k));
                }
            }
        }
    }
    let mut worst_coif = 0.0f64;
    let hi = &basis(WaveletName::Coif3).hi_d;
    for k in 0..=5 {
        let m: f64 = hi
            .iter()
            .enumerate()
            .map(|(n, h)| (n as f64).powi(k) * h)
            .sum();
        worst_coif = worst_coif.max(m.abs());
    }
    if worst_coif >= 1e-6 {
        fail.push(format!("coif3 moment {worst_coif:.2e}"));
    }
    notes.push(format!(
        "coif3 max |sum n^k hi_d[n]| (k<=5) = {worst_coif:.2e}"
    ));
    // db5 and sym5 carry five vanishing moments; this pins their tables.
    for name in [WaveletName::Db5, WaveletName::Sym5] {
        let hi = &basis(name).hi_d;
        let worst = (0..5)
            .map(|k| {
                hi.iter()
                    .enumerate()
                    .map(|(n, h)| (n as f64).powi(k) * h)
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max);
        if worst >= 1e-7 {
            fail.push(format!("{name} moment {worst:.2e}"));
        }
    }
    if fail.is_empty() {
        Ok(notes.join("; "))
    } else {
        Err(fail.join("; "))
    }
}

fn toy_set() -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // Same cell for all three frames so SegMC has a pool.
    let frames = (0..3).map(|_| gaussian_frame(&mut rng, 64, 0)).collect();
    Dataset {
        header: DatasetHeader {
            frame_len: 64,
            label_map: vec!["BPSK".into()],
            snr_grid: vec![0],
            split: Split::Train,
            master_seed: 0,
            generation: serde_json::Value::Null,
        },
        frames,
    }
}

fn count_contracts() -> Outcome {
    let set = toy_set();
    let n = set.len();
    let mut cases = 0;
    let mut fail = Vec::new();
    let mut run = |plan: AugmentationPlan, want: usize| {
        cases += 1;
        let got = build_augmented_set(&set, &plan, Execution::Sequential)
            .unwrap()
            .len();
        if got != want {
            fail.push(format!("{}: {got} != {want}", plan.label()));
        }
    };
    let all = WaveletName::ALL;
    for d in [0, 1, 2, 4] {
        for e in [1, 3] {
            for m in [Method::Azsr, Method::Rzsr, Method::Rnsr] {
                run(AugmentationPlan::new(m, d, e, 9), n * (1 + d * (e + 2)));
            }
            for w in [2, 5] {
                let plan =
                    AugmentationPlan::new(Method::RnsrMw, d, e, 9).with_wavelets(all[..w].to_vec());
                run(plan, n * (1 + d * (e + 2) * w));
            }
        }
        run(AugmentationPlan::new(Method::Flip, d, 3, 9), n * 4);
    }
    check(
        fail.is_empty(),
        if fail.is_empty() {
            format!("{cases} plans on N={n}")
        } else {
            fail.join("; ")
        },
    )
}

fn rnsr_power() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let coeffs = decompose_rows(&gaussian_rows(&mut rng, 1024), WaveletName::Haar, 3).unwrap();
    let energy = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let mut worst_paper = 0.0f64;
    let mut worst_exact = 0.0f64;
    for l in 0..coeffs.details.len() {
        let beta = energy(&coeffs.details[l]);
        let l0 = coeffs.details[l].len() as f64;
        let mut total = 0.0;
        for _ in 0..1000 {
            let out =
                replace_detail(&coeffs, l, ReplaceMode::Rnsr(PowerMode::Paper), &mut rng).unwrap();
            total += energy(&out.details[l]);
            let out = replace_detail(
                &coeffs,
                l,
                ReplaceMode::Rnsr(PowerMode::EnergyExact),
                &mut rng,
            )
            .unwrap();
            worst_exact = worst_exact.max((energy(&out.details[l]) - beta).abs() / beta);
        }
        worst_paper = worst_paper.max((total / 1000.0 / (beta * l0) - 1.0).abs());
    }
    within(start.elapsed(), 5.0, "power draws")?;
    check(
        worst_paper < 0.05 && worst_exact < 1e-10,
        format!(
            "paper mean deviation {:.3}% of beta*L0, exact max rel error {worst_exact:.1e}",
            100.0 * worst_paper
        ),
    )
}

fn snr_calibration() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let len = 100_000;
    // Unit-power QPSK-like samples.
    let h = std::f32::consts::FRAC_1_SQRT_2;
    let mut row = || -> Vec<f32> {
        (0..len)
            .map(|_| if rng.random_bool(0.5) { h } else { -h })
            .collect()
    };
    let (i, q) = (row(), row());
    let clean = IqFrame::new(&i, &q, 0, 0).unwrap();
    let power = |a: &[f32], b: &[f32]| {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| (x as f64).powi(2) + (y as f64).powi(2))
            .sum::<f64>()
            / a.len() as f64
    };
    let ps = power(clean.i(), clean.q());
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for target in [-10.0, 0.0, 10.0, 20.0] {
        let noisy = add_awgn(&clean, target, &mut rng).unwrap();
        let ni: Vec<f32> = noisy
            .i()
            .iter()
            .zip(clean.i())
            .map(|(a, b)| a - b)
            .collect();
        let nq: Vec<f32> = noisy
            .q()
            .iter()
            .zip(clean.q())
            .map(|(a, b)| a - b)
            .collect();
        let snr = 10.0 * (ps / power(&ni, &nq)).log10();
        worst = worst.max((snr - target).abs());
        parts.push(format!("{target}:{snr:.3}"));
    }
    within(start.elapsed(), 5.0, "calibration")?;
    check(
        worst <= 0.1,
        format!("measured dB {} (max error {worst:.3} dB)", parts.join(" ")),
    )
}

fn gradient_check() -> Outcome {
    const H: f64 = 1e-5;
    const TOL: f64 = 1e-4;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let spec = ModelSpec::new(256, 4);
    let labels_map = (0..4).map(|k| format!("c{k}")).collect();
    let mut model = Model::init(spec, labels_map, &mut rng).unwrap();
    for t in spec.tensors().iter().filter(|t| t.is_bias()) {
        for v in &mut model.params_mut()[t.range()] {
            *v = 0.1 * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let frames: Vec<IqFrame> = (0..4).map(|k| gaussian_frame(&mut rng, 256, k)).collect();
    let refs: Vec<&IqFrame> = frames.iter().collect();
    let labels = [0, 1, 2, 3];
    let (f0, grad) = model
        .loss_and_grads(&refs, &labels, Execution::Sequential)
        .unwrap();
    let loss_at = |idx: usize, v: f64, model: &mut Model| {
        let old = model.params()[idx];
        model.params_mut()[idx] = v;
        let l = model
            .loss_and_grads(&refs, &labels, Execution::Sequential)
            .unwrap()
            .0;
        model.params_mut()[idx] = old;
        l
    };
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut checked = 0;
    let mut kinks = 0;
    let mut short = Vec::new();
    for t in spec.tensors() {
        let mut order: Vec<usize> = t.range().collect();
        // Partial Fisher-Yates: a random draw without replacement.
        let mut done = 0;
        for k in 0..order.len() {
            if done == 50 {
                break;
            }
            let j = rng.random_range(k..order.len());
            order.swap(k, j);
            let idx = order[k];
            let p = model.params()[idx];
            let fp = loss_at(idx, p + H, &mut model);
            let fm = loss_at(idx, p - H, &mut model);
            let (right, left) = ((fp - f0) / H, (f0 - fm) / H);
            // A ReLU kink inside [p-h, p+h] shows up as disagreeing one-sided slopes.
            if (right - left).abs() > 1e-3 * right.abs().max(left.abs()).max(1e-3) {
                kinks += 1;
                continue;
            }
            let num = (fp - fm) / (2.0 * H);
            let rel = (grad[idx] - num).abs() / grad[idx].abs().max(num.abs()).max(1e-6);
            if rel > worst {
                worst = rel;
                worst_at = format!("{}[{}]", t.name, idx - t.offset);
            }
            done += 1;
        }
        checked += done;
        if done < 50.min(t.len) {
            short.push(t.name);
        }
    }
    within(start.elapsed(), 30.0, "gradient check")?;
    if !short.is_empty() {
        return Err(format!("too few usable samples in {short:?}"));
    }
    check(
        worst < TOL,
        format!(
            "max rel error {worst:.2e} at {worst_at}; {checked} params over {} tensors (min(50, len) each), {kinks} kinks skipped",
            spec.tensors().len()
        ),
    )
}

fn print_report(report: &ExperimentReport) {
    println!("{}", report.table().trim_end());
    println!("{}", report.snr_table().trim_end());
}

fn mean_of(report: &ExperimentReport, arm: &str) -> Result<f64, String> {
    report
        .arm(arm)
        .map(|a| a.mean_accuracy())
        .ok_or_else(|| format!("arm {arm} missing"))
}

fn desk_benefit(report: &ExperimentReport, elapsed: Duration) -> Outcome {
    within(elapsed, 600.0, "desk-scale experiment")?;
    let none = mean_of(report, "none")?;
    let d4 = mean_of(report, "rnsr_d4")?;
    let d1 = mean_of(report, "rnsr_d1")?;
    let mw = mean_of(report, "rnsr_mw_d1")?;
    check(
        d4 - none >= 0.03 && mw >= d1 - 0.01,
        format!(
            "none {:.1}%, RNSR D4 {:.1}% (+{:.1} pp), RNSR D1 {:.1}%, RNSR-MW D1 {:.1}%; {:.0} s",
            100.0 * none,
            100.0 * d4,
            100.0 * (d4 - none),
            100.0 * d1,
            100.0 * mw,
            elapsed.as_secs_f64()
        ),
    )
}

fn fsk_direction(report: &ExperimentReport) -> Outcome {
    let class = |arm: &str| {
        report
            .arm(arm)
            .and_then(|a| a.mean_class_accuracy(ModulationScheme::Fsk2.name()))
            .ok_or_else(|| format!("no 2FSK accuracy for {arm}"))
    };
    let (none, rnsr) = (class("none")?, class("rnsr_d4")?);
    check(
        rnsr > none,
        format!(
            "2FSK none {:.1}% -> RNSR D4 {:.1}%",
            100.0 * none,
            100.0 * rnsr
        ),
    )
}

fn baseline_ordering(report: &ExperimentReport) -> Outcome {
    let d4 = mean_of(report, "rnsr_d4")?;
    let mut parts = vec![format!("RNSR D4 {:.1}%", 100.0 * d4)];
    let mut ok = true;
    for arm in ["flip", "segcs3", "segmc2"] {
        let acc = mean_of(report, arm)?;
        ok &= d4 >= acc;
        parts.push(format!("{arm} {:.1}%", 100.0 * acc));
    }
    check(ok, parts.join(", "))
}

fn dataset_io() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let profile = Profile::rml1024(2024);
    let a = synthesize_split(&profile, Split::Train, Execution::Parallel).unwrap();
    let b = synthesize_split(&profile, Split::Train, Execution::Sequential).unwrap();
    let write = |set: &Dataset, name: &str| {
        let prefix = dir.path().join(name);
        write_dataset(set, &prefix).unwrap();
        prefix
    };
    let files = |p: &Path| -> Vec<(String, Vec<u8>)> {
        let stem = p.file_name().unwrap().to_string_lossy().into_owned();
        let mut out: Vec<_> = std::fs::read_dir(p.parent().unwrap())
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|f| {
                f.file_name()
                    .unwrap()
                    .to_string_lossy()
                    .starts_with(&format!("{stem}."))
            })
            .map(|f| {
                (
                    f.extension().unwrap().to_string_lossy().into_owned(),
                    std::fs::read(&f).unwrap(),
                )
            })
            .collect();
        out.sort();
        out
    };
    let (pa, pb) = (write(&a, "a"), write(&b, "b"));
    let (fa, fb) = (files(&pa), files(&pb));
    if fa.len() < 2 || fa != fb {
        return Err("regenerated dataset files differ".into());
    }
    let back = read_dataset(&pa).unwrap();
    if back != a {
        return Err("read(write(x)) != x".into());
    }
    let pc = write(&back, "c");
    if files(&pc) != fa {
        return Err("write(read(write(x))) changed bytes".into());
    }
    // 12 schemes x 26 SNRs x 10 frames, 2 rows of 1024 f32 each.
    let want: u64 = 12 * 26 * 10 * 2 * 1024 * 4;
    let size = std::fs::metadata(payload_path(&pa)).unwrap().len();
    check(
        size == want && want == 25_559_040 && a.len() == 3120,
        format!(
            "{} frames, payload {size} bytes, files identical across regenerations",
            a.len()
        ),
    )
}

fn run(id: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("criterion {id:>2} {tag} {name} ({secs:.2} s): {detail}");
    outcome.is_ok()
}

fn main() {
    let mut ok = true;
    ok &= run(1, "perfect reconstruction", perfect_reconstruction);
    ok &= run(2, "filter identities", filter_identities);
    ok &= run(3, "count contracts", count_contracts);
    ok &= run(4, "RNSR power", rnsr_power);
    ok &= run(5, "SNR calibration", snr_calibration);
    ok &= run(6, "gradient check", gradient_check);

    let start = Instant::now();
    let desk = catch_unwind(|| {
        run_experiment(
            &ExperimentConfig::desk_scale(),
            Execution::Parallel,
            &mut |m| eprintln!("{m}"),
        )
    });
    let elapsed = start.elapsed();
    match desk {
        Ok(Ok(report)) => {
            print_report(&report);
            ok &= run(7, "desk-scale augmentation benefit", || {
                desk_benefit(&report, elapsed)
            });
            ok &= run(8, "2FSK direction", || fsk_direction(&report));
            ok &= run(9, "baseline ordering", || baseline_ordering(&report));
        }
        failure => {
            let why = match failure {
                Ok(Err(e)) => e.to_string(),
                _ => "panicked".into(),
            };
            for (id, name) in [
                (7, "desk-scale augmentation benefit"),
                (8, "2FSK direction"),
                (9, "baseline ordering"),
            ] {
                ok &= run(id, name, || Err(format!("experiment failed: {why}")));
            }
        }
    }
    ok &= run(10, "dataset determinism and I/O", dataset_io);
    if !ok {
        std::process::exit(1);
    }
}
