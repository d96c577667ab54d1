use std::collections::BTreeMap;

use super::{augment_once, flip, seg_cs, seg_mc, AugmentationPlan, FlipAxis, Method};
use crate::dataset::{Dataset, DatasetHeader, Split};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::frame::{IqFrame, Origin};
use crate::rng::rng_for;
use crate::wavelet::check_depth;

/// Number of frames [`build_augmented_set`] produces from `n` sources.
pub fn expected_count(n: usize, plan: &AugmentationPlan) -> usize {
    let d = plan.operations;
    if is_identity(plan) {
        return n;
    }
    let bands = plan.depth + 2;
    match plan.method {
        Method::None => n,
        Method::Azsr | Method::Rzsr | Method::Rnsr => n * (1 + d * bands),
        Method::RnsrMw => n * (1 + d * bands * plan.wavelets.len()),
        Method::Flip => 4 * n,
        Method::SegCs | Method::SegMc => n * (1 + d),
    }
}

/// Flip has no operation count: it always adds the three flipped copies.
/// Every other method is the identity at D = 0.
fn is_identity(plan: &AugmentationPlan) -> bool {
    plan.method == Method::None || (plan.operations == 0 && plan.method != Method::Flip)
}

fn tag(mut f: IqFrame, op: usize) -> IqFrame {
    if let Origin::Augmented { op: o, .. } = &mut f.origin {
        *o = op as u32;
    }
    f
}

/// Per-source output: the original frame followed by its augmented frames
/// ordered by (operation, detail band, wavelet).
fn expand(
    idx: usize,
    frame: &IqFrame,
    plan: &AugmentationPlan,
    pools: &BTreeMap<(u16, i32), Vec<usize>>,
    all: &[IqFrame],
) -> Result<Vec<IqFrame>> {
    let mut out = vec![frame.clone()];
    let id = idx as u64;
    match plan.method {
        Method::None => {}
        Method::Azsr | Method::Rzsr | Method::Rnsr | Method::RnsrMw => {
            let mode = plan.replace_mode().expect("wavelet method");
            for d in 0..plan.operations {
                // per_wavelet[j][l]
                let per_wavelet = plan
                    .wavelets
                    .iter()
                    .enumerate()
                    .map(|(j, &w)| {
                        let mut rng = rng_for(plan.seed, &[id, d as u64, j as u64]);
                        augment_once(frame, w, plan.depth, mode, &mut rng)
                    })
                    .collect::<Result<Vec<_>>>()?;
                for l in 0..plan.depth + 2 {
                    for frames in &per_wavelet {
                        let mut f = tag(frames[l].clone(), d);
                        if plan.method == Method::RnsrMw {
                            if let Origin::Augmented { method, .. } = &mut f.origin {
                                *method = Method::RnsrMw;
                            }
                        }
                        out.push(f);
                    }
                }
            }
        }
        Method::Flip => {
            let v = flip(frame, FlipAxis::Vertical);
            let h = flip(frame, FlipAxis::Horizontal);
            let vh = flip(&v, FlipAxis::Horizontal);
            for (k, f) in [v, h, vh].into_iter().enumerate() {
                out.push(f.with_origin(Origin::Augmented {
                    method: Method::Flip,
                    op: 0,
                    index: k as u32 + 1,
                    wavelet: None,
                }));
            }
        }
        Method::SegCs => {
            for d in 0..plan.operations {
                let mut rng = rng_for(plan.seed, &[id, d as u64]);
                out.push(tag(seg_cs(frame, plan.segments(), &mut rng)?, d));
            }
        }
        Method::SegMc => {
            let pool: Vec<&IqFrame> = pools[&(frame.label, frame.snr_db)]
                .iter()
                .map(|&k| &all[k])
                .collect();
            for d in 0..plan.operations {
                let mut rng = rng_for(plan.seed, &[id, d as u64]);
                out.push(tag(seg_mc(&pool, plan.segments(), &mut rng)?, d));
            }
        }
    }
    Ok(out)
}

/// Expands every training frame according to `plan`. The result holds each
/// original frame followed by its augmented frames; test splits are refused.
/// All preconditions are checked before any frame is produced.
pub fn build_augmented_set(
    dataset: &Dataset,
    plan: &AugmentationPlan,
    exec: Execution,
) -> Result<Dataset> {
    plan.validate()?;
    if dataset.header.split == Split::Test {
        return Err(Error::Incompatible("test sets are never augmented".into()));
    }
    dataset.validate()?;
    if plan.method.is_wavelet() && plan.operations > 0 {
        check_depth(dataset.header.frame_len, plan.depth)?;
    }
    let mut pools: BTreeMap<(u16, i32), Vec<usize>> = BTreeMap::new();
    if plan.method == Method::SegMc && plan.operations > 0 {
        for (k, f) in dataset.frames.iter().enumerate() {
            pools.entry((f.label, f.snr_db)).or_default().push(k);
        }
        let k = plan.segments();
        if let Some((cell, members)) = pools.iter().find(|(_, m)| m.len() < k.max(2)) {
            return Err(Error::Incompatible(format!(
                "cell {cell:?} has {} frames, SEGMC{k} needs {}",
                members.len(),
                k.max(2)
            )));
        }
    }

    let frames = if is_identity(plan) {
        dataset.frames.clone()
    } else {
        let groups = exec.try_map_range(dataset.len(), |i| {
            expand(i, &dataset.frames[i], plan, &pools, &dataset.frames)
        })?;
        groups.into_iter().flatten().collect()
    };
    debug_assert_eq!(frames.len(), expected_count(dataset.len(), plan));

    let header = if is_identity(plan) {
        dataset.header.clone()
    } else {
        DatasetHeader {
            generation: serde_json::json!({
                "source": dataset.header.generation,
                "augmentation": plan,
            }),
            ..dataset.header.clone()
        }
    };
    Ok(Dataset { header, frames })
}
