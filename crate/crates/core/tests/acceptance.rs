//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Every oracle here is computed independently of the library code paths
//! it checks (closed forms, brute-force enumeration, naive formulas).

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use n2d3::degnce::{
    adversarial_losses, deg_nce_loss, ot_reweight, patch_nce, sample_patches, similarity_block,
    weighted_nce, FeatureGrid, LayerPlans, NegativeMass, SinkhornConfig, DEFAULT_TAU,
};
use n2d3::disentangle::{illuminance, kmeans_partition};
use n2d3::io::{self, FormatError, Tensor};
use n2d3::photometric::{gaussian_derivative, rgb_to_gaussian, Axis};
use n2d3::synth::{self, CorollaryConfig, CorollaryStatus};
use n2d3::{disentangle, DisentangleConfig, DisentanglementMap, Plane, Region, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances and budgets.
const C1_RATIO: f64 = 1e-2;
const C1_DECREASE: f64 = 2.0;
const C1_STABILITY: f64 = 0.1;
const C1_BUDGET: Duration = Duration::from_secs(10);
const C2_LINEAR_TOL: f64 = 1e-12;
const C3_TOL: f64 = 1e-4;
const C5_ACCURACY: f64 = 0.90;
const C5_BUDGET: Duration = Duration::from_secs(1);
const C6_MARGINAL: f64 = 1e-6;
const C6_LP_GAP: f64 = 1e-3;
const C6_EPSILON: f64 = 1e-3;
const C7_REL: f64 = 1e-12;
const C7_LN2: f64 = 1e-12;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool")
        .install(f)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cfg = CorollaryConfig {
        refine: Some(2),
        ..CorollaryConfig::default()
    };
    let r = synth::verify_corollary1(&synth::corollary_pair(), &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let ratio = r.ratio.ok_or("bundled pair reported as degenerate")?;
    check(r.status == CorollaryStatus::Pass, || {
        format!("status {}", r.status.name())
    })?;
    check(ratio <= C1_RATIO, || {
        format!("ratio {ratio:e} > {C1_RATIO:e}")
    })?;
    let f = r.refinement.ok_or("no refinement result")?;
    let ill = r.illumination_edge_response.unwrap_or(0.0);
    let ill_f = f.illumination_edge_response.unwrap_or(0.0);
    let change = (ill_f - ill).abs() / ill;
    check(change < C1_STABILITY, || {
        format!("illumination response moved {change:.3}")
    })?;
    let shrink = if f.at_rounding_floor {
        format!(
            "material response at rounding floor ({:.2e} -> {:.2e}, nothing left to halve)",
            r.material_edge_response, f.material_edge_response
        )
    } else {
        check(f.material_decrease >= C1_DECREASE, || {
            format!("material response shrank only {:.3}x", f.material_decrease)
        })?;
        format!("material response shrank {:.2}x", f.material_decrease)
    };
    check(elapsed < C1_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "ratio {ratio:.2e}; refine 2x: illumination change {:.2}%, {shrink}; {elapsed:.2?}",
        change * 100.0
    ))
}

fn criterion_2() -> Outcome {
    let columns = [
        ([1.0, 0.0, 0.0], [0.06, 0.3, 0.34]),
        ([0.0, 1.0, 0.0], [0.63, 0.04, -0.6]),
        ([0.0, 0.0, 1.0], [0.27, -0.35, 0.17]),
    ];
    for (rgb, want) in columns {
        let img = RgbImage::new(1, 1, rgb.to_vec()).map_err(|e| e.to_string())?;
        let s = rgb_to_gaussian(&img);
        let got = [s.e.data()[0], s.e_lambda.data()[0], s.e_lambda2.data()[0]];
        check(got == want, || {
            format!("{rgb:?} -> {got:?}, expected {want:?}")
        })?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p: [f64; 3] = std::array::from_fn(|_| rng.random());
        let q: [f64; 3] = std::array::from_fn(|_| rng.random());
        let a: f64 = rng.random();
        let b = 1.0 - a;
        let mix: Vec<f64> = (0..3).map(|c| a * p[c] + b * q[c]).collect();
        let mut data = p.to_vec();
        data.extend_from_slice(&q);
        data.extend_from_slice(&mix);
        let img = RgbImage::new(3, 1, data).map_err(|e| e.to_string())?;
        let s = rgb_to_gaussian(&img);
        for plane in [&s.e, &s.e_lambda, &s.e_lambda2] {
            let v = plane.data();
            worst = worst.max((v[2] - (a * v[0] + b * v[1])).abs());
        }
    }
    check(worst <= C2_LINEAR_TOL, || {
        format!("linearity defect {worst:e}")
    })?;
    Ok(format!(
        "matrix columns exact; linearity defect {worst:.1e} over 1000 pairs"
    ))
}

/// `∂x` of a unit Gaussian blob of scale `s` smoothed by a Gaussian of
/// scale `sigma`, evaluated in closed form.
fn blob_derivative(dx: f64, dy: f64, s: f64, sigma: f64) -> f64 {
    let v = s * s + sigma * sigma;
    -(dx / v) * (s * s / v) * (-(dx * dx + dy * dy) / (2.0 * v)).exp()
}

fn criterion_3() -> Outcome {
    let (w, h, s) = (64usize, 64usize, 3.0);
    let (cx, cy) = (31.7, 32.2);
    let blob = Plane::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        (-(dx * dx + dy * dy) / (2.0 * s * s)).exp()
    })
    .map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for sigma in [0.8, 1.0, 2.0] {
        let d = gaussian_derivative(&blob, sigma, Axis::Horizontal).map_err(|e| e.to_string())?;
        let margin = (4.0 * sigma).ceil() as usize;
        let mut worst = 0.0f64;
        for y in margin..h - margin {
            for x in margin..w - margin {
                let want = blob_derivative(x as f64 - cx, y as f64 - cy, s, sigma);
                worst = worst.max((d.plane.get(x, y) - want).abs());
            }
        }
        check(worst <= C3_TOL, || {
            format!("sigma {sigma}: max error {worst:e}")
        })?;
        summary.push(format!("σ={sigma}: {worst:.1e}"));
    }
    Ok(format!("max-abs error {}", summary.join(", ")))
}

fn random_image(rng: &mut ChaCha8Rng) -> RgbImage {
    let (w, h) = (rng.random_range(1..=24), rng.random_range(1..=24));
    let style = rng.random_range(0..3);
    let levels: Vec<f64> = (0..4).map(|_| rng.random()).collect();
    RgbImage::new(
        w,
        h,
        (0..w * h * 3)
            .map(|_| match style {
                0 => rng.random(),
                1 => levels[rng.random_range(0..levels.len())],
                _ => (rng.random::<f64>() * 4.0).floor() / 4.0,
            })
            .collect(),
    )
    .expect("valid image")
}

fn partition_sound(img: &RgbImage, cfg: &DisentangleConfig) -> Result<DisentanglementMap, String> {
    let map = disentangle(img, cfg).map_err(|e| e.to_string())?;
    let n = img.len();
    for i in 0..n {
        let members = map.masks().iter().filter(|m| m.contains(i)).count();
        check(members == 1, || format!("pixel {i} is in {members} masks"))?;
        check(map.mask(map.labels()[i]).contains(i), || {
            format!("label and mask disagree at pixel {i}")
        })?;
    }
    let parts = kmeans_partition(&illuminance(img), cfg.seed, cfg.max_iters, cfg.tol)
        .map_err(|e| e.to_string())?;
    check(
        map.mask(Region::LightEffects).is_subset_of(&parts.well_lit),
        || "light effects escape the original well-lit mask".into(),
    )?;
    check(
        parts.objective_history.windows(2).all(|p| p[1] <= p[0]),
        || format!("k-means objective increased: {:?}", parts.objective_history),
    )?;
    Ok(map)
}

fn criterion_4() -> Outcome {
    let cfg = DisentangleConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut images: Vec<RgbImage> = (0..100).map(|_| random_image(&mut rng)).collect();
    let two_valued = RgbImage::from_fn(9, 7, |x, _| if x < 4 { [0.1; 3] } else { [0.8, 0.7, 0.2] });
    images.extend(
        [
            RgbImage::filled(16, 16, [0.4, 0.4, 0.4]),
            RgbImage::filled(16, 16, [0.0; 3]),
            two_valued,
            RgbImage::filled(1, 1, [0.3, 0.6, 0.9]),
        ]
        .into_iter()
        .map(|r| r.expect("valid image")),
    );
    for (i, img) in images.iter().enumerate() {
        partition_sound(img, &cfg).map_err(|e| format!("image {i}: {e}"))?;
    }

    let (scene, _) =
        synth::render_scene(&synth::lamp_scene(), 1, None).map_err(|e| e.to_string())?;
    let probes = [&scene, &images[0], &images[1]];
    for (i, img) in probes.into_iter().enumerate() {
        let reference = single_threaded(|| disentangle(img, &cfg)).map_err(|e| e.to_string())?;
        for threads in 2..=8 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| e.to_string())?;
            let map = pool
                .install(|| disentangle(img, &cfg))
                .map_err(|e| e.to_string())?;
            check(map == reference, || {
                format!("probe {i} differs with {threads} threads")
            })?;
        }
    }
    Ok(format!(
        "{} images sound; bit-identical maps across 1-8 threads",
        images.len()
    ))
}

fn criterion_5() -> Outcome {
    let (img, spec) =
        synth::render_scene(&synth::lamp_scene(), 1, None).map_err(|e| e.to_string())?;
    check((img.width(), img.height()) == (512, 256), || {
        format!("lamp scene is {}x{}", img.width(), img.height())
    })?;
    let cfg = DisentangleConfig::default();
    let start = Instant::now();
    let map = single_threaded(|| disentangle(&img, &cfg)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let mut hits = [0usize; 4];
    let mut totals = [0usize; 4];
    for (truth, got) in spec.labels().iter().zip(map.labels()) {
        totals[truth.index()] += 1;
        if truth == got {
            hits[truth.index()] += 1;
        }
    }
    let mut parts = Vec::new();
    for r in Region::ALL {
        let t = totals[r.index()];
        check(t > 0, || format!("scene has no {} pixels", r.name()))?;
        let acc = hits[r.index()] as f64 / t as f64;
        check(acc >= C5_ACCURACY, || {
            format!("{} accuracy {:.2}%", r.name(), acc * 100.0)
        })?;
        parts.push(format!("{} {:.1}%", r.name(), acc * 100.0));
    }
    check(elapsed < C5_BUDGET, || {
        format!("single-threaded run took {elapsed:?}")
    })?;
    Ok(format!("{}; 1 thread {elapsed:.2?}", parts.join(", ")))
}

fn unit_vectors(rng: &mut ChaCha8Rng, k: usize, dim: usize) -> Vec<f64> {
    (0..k)
        .flat_map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(move |x| x / norm)
        })
        .collect()
}

/// Min and max of `Σ c_{i,π(i)}` over permutations without fixed points.
fn derangement_extremes(cost: &[f64], k: usize) -> (f64, f64) {
    fn walk(cost: &[f64], k: usize, row: usize, used: &mut [bool], acc: f64, out: &mut (f64, f64)) {
        if row == k {
            out.0 = out.0.min(acc);
            out.1 = out.1.max(acc);
            return;
        }
        for col in 0..k {
            if col != row && !used[col] {
                used[col] = true;
                walk(cost, k, row + 1, used, acc + cost[row * k + col], out);
                used[col] = false;
            }
        }
    }
    let mut out = (f64::INFINITY, f64::NEG_INFINITY);
    walk(cost, k, 0, &mut vec![false; k], 0.0, &mut out);
    out
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let defaults = SinkhornConfig::default();
    let sharp = SinkhornConfig {
        epsilon: C6_EPSILON,
        ..defaults
    };
    let (mut worst_marginal, mut worst_gap, mut small) = (0.0f64, 0.0f64, 0);
    for b in 0..1000 {
        let k = rng.random_range(2..=16);
        let dim = 8;
        let anchors = unit_vectors(&mut rng, k, dim);
        let negatives = unit_vectors(&mut rng, k, dim);
        let block = similarity_block(Region::WellLit, &anchors, &negatives, dim, DEFAULT_TAU)
            .map_err(|e| e.to_string())?;
        let cost = block.costs();

        let plan = ot_reweight(&cost, k, &defaults).map_err(|e| e.to_string())?;
        check(plan.converged, || {
            format!("block {b} (K={k}) did not converge")
        })?;
        check(
            plan.residual_history.windows(2).all(|p| p[1] <= p[0]),
            || format!("block {b}: residual increased"),
        )?;
        let w = plan.weights();
        check((0..k).all(|i| w[i * k + i] == 0.0), || {
            format!("block {b}: nonzero diagonal")
        })?;
        check(w.iter().all(|v| *v >= 0.0), || {
            format!("block {b}: negative weight")
        })?;
        for i in 0..k {
            let row: f64 = (0..k).map(|j| w[i * k + j]).sum();
            let col: f64 = (0..k).map(|j| w[j * k + i]).sum();
            worst_marginal = worst_marginal.max((row - 1.0).abs()).max((col - 1.0).abs());
        }

        if k <= 5 {
            small += 1;
            let plan = ot_reweight(&cost, k, &sharp).map_err(|e| e.to_string())?;
            check(plan.converged, || {
                format!("block {b} (K={k}) at ε={C6_EPSILON} did not converge")
            })?;
            let (lo, hi) = derangement_extremes(&cost, k);
            let value = plan.linear_cost(&cost);
            check(value >= lo - C6_LP_GAP && value <= hi + C6_LP_GAP, || {
                format!("block {b}: cost {value} outside [{lo}, {hi}]")
            })?;
            worst_gap = worst_gap.max(value - lo);
        }
    }
    check(worst_marginal <= C6_MARGINAL, || {
        format!("marginal residual {worst_marginal:e}")
    })?;
    check(worst_gap <= C6_LP_GAP, || format!("LP gap {worst_gap:e}"))?;
    Ok(format!(
        "1000 blocks: max marginal {worst_marginal:.1e}; {small} blocks K≤5 at ε={C6_EPSILON}: max LP gap {worst_gap:.1e}"
    ))
}

/// `−log(e^{p} / (e^{p} + Σ e^{n}))` with no stabilization.
fn naive_nce(v: &[f64], pos: &[f64], negs: &[Vec<f64>], tau: f64) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let p = (dot(v, pos) / tau).exp();
    let n: f64 = negs.iter().map(|u| (dot(v, u) / tau).exp()).sum();
    -(p / (p + n)).ln()
}

fn feature_grid(
    rng: &mut ChaCha8Rng,
    layer: usize,
    gh: usize,
    gw: usize,
    dim: usize,
) -> FeatureGrid {
    FeatureGrid::new(layer, gh, gw, dim, unit_vectors(rng, gh * gw, dim)).expect("valid grid")
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let dim = rng.random_range(1..=16);
        let q = rng.random_range(0..=12);
        let tau = rng.random_range(0.07..=1.0);
        let v = unit_vectors(&mut rng, 1, dim);
        let pos = unit_vectors(&mut rng, 1, dim);
        let negs: Vec<Vec<f64>> = (0..q).map(|_| unit_vectors(&mut rng, 1, dim)).collect();
        let refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let got = weighted_nce(&v, &pos, &refs, &vec![1.0; q], tau).map_err(|e| e.to_string())?;
        let want = naive_nce(&v, &pos, &negs, tau);
        let unweighted = patch_nce(&v, &pos, &refs, tau).map_err(|e| e.to_string())?;
        for value in [got, unweighted] {
            let rel = (value - want).abs() / want.abs().max(f64::MIN_POSITIVE);
            worst = worst.max(rel);
        }
    }
    check(worst <= C7_REL, || format!("relative error {worst:e}"))?;

    let mut ln2 = 0.0f64;
    for tau in [0.07, 0.5, 1.0, 3.0] {
        let v = [0.6, 0.8];
        let l = weighted_nce(&v, &[1.0, 0.0], &[&[1.0, 0.0]], &[1.0], tau)
            .map_err(|e| e.to_string())?;
        ln2 = ln2.max((l - std::f64::consts::LN_2).abs());
    }
    check(ln2 <= C7_LN2, || {
        format!("symmetric case off ln 2 by {ln2:e}")
    })?;

    let (gh, gw) = (6, 8);
    let labels: Vec<Region> = (0..48 * 64).map(|i| Region::ALL[(i % 64) / 16]).collect();
    let dmap = DisentanglementMap::from_labels(64, 48, labels).map_err(|e| e.to_string())?;
    let mut sets = Vec::new();
    let mut plans: Vec<LayerPlans> = Vec::new();
    for layer in 0..3 {
        let src = feature_grid(&mut rng, layer, gh, gw, 4);
        let gen = feature_grid(&mut rng, layer, gh, gw, 4);
        let set = sample_patches(&src, &gen, &dmap, 9, 5).map_err(|e| e.to_string())?;
        plans.push(
            n2d3::degnce::region_plans(&set, DEFAULT_TAU, &SinkhornConfig::default())
                .map_err(|e| e.to_string())?,
        );
        sets.push(set);
    }
    let all = deg_nce_loss(&sets, &plans, DEFAULT_TAU, NegativeMass::PlanRows)
        .map_err(|e| e.to_string())?;
    let mut sum = 0.0;
    for l in 0..3 {
        let one = deg_nce_loss(
            &sets[l..=l],
            &plans[l..=l],
            DEFAULT_TAU,
            NegativeMass::PlanRows,
        )
        .map_err(|e| e.to_string())?;
        sum += one.total;
    }
    check(all.total == sum, || {
        format!("3-layer total {} != sum of layers {sum}", all.total)
    })?;
    let doubled = deg_nce_loss(
        &[sets[0].clone(), sets[0].clone()],
        &[plans[0].clone(), plans[0].clone()],
        DEFAULT_TAU,
        NegativeMass::PlanRows,
    )
    .map_err(|e| e.to_string())?;
    check(doubled.total == 2.0 * all.layers[0].value, || {
        "duplicated layer is not 2x".into()
    })?;

    Ok(format!(
        "unit weights rel err {worst:.1e}; ln 2 err {ln2:.1e}; layer sums exact"
    ))
}

fn criterion_8() -> Outcome {
    let a = adversarial_losses(&[0.3, 0.9], &[1.0, 1.0]).map_err(|e| e.to_string())?;
    check(a.generator == 0.0, || {
        format!("d_fake ≡ 1 gives L_adv(F) = {}", a.generator)
    })?;
    let b = adversarial_losses(&[1.0; 4], &[0.0; 4]).map_err(|e| e.to_string())?;
    check(b.discriminator == 0.0, || {
        format!(
            "d_real ≡ 1, d_fake ≡ 0 gives L_adv(D) = {}",
            b.discriminator
        )
    })?;
    let c = adversarial_losses(&[0.5], &[0.5]).map_err(|e| e.to_string())?;
    check(c.generator == 0.25 && c.discriminator == 0.5, || {
        format!("halves give ({}, {})", c.generator, c.discriminator)
    })?;
    Ok("L_adv(F)=0, L_adv(D)=0, (0.25, 0.5) exact".into())
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for i in 0..200 {
        let rank = rng.random_range(1..=4);
        let dims: Vec<usize> = (0..rank).map(|_| rng.random_range(1..=5)).collect();
        let n: usize = dims.iter().product();
        let data: Vec<f32> = (0..n).map(|_| f32::from_bits(rng.random())).collect();
        let t = Tensor::new(dims, data).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("t{i}.bin"));
        io::write_tensor(&t, &path).map_err(|e| e.to_string())?;
        let back = io::read_tensor(&path).map_err(|e| e.to_string())?;
        let same = back.dims() == t.dims()
            && back
                .data()
                .iter()
                .map(|v| v.to_bits())
                .eq(t.data().iter().map(|v| v.to_bits()));
        check(same, || format!("tensor {i} did not round-trip"))?;
    }
    for i in 0..100 {
        let (w, h) = (rng.random_range(1..=20), rng.random_range(1..=20));
        let labels: Vec<Region> = (0..w * h)
            .map(|_| Region::ALL[rng.random_range(0..4)])
            .collect();
        let map = DisentanglementMap::from_labels(w, h, labels).map_err(|e| e.to_string())?;
        let ext = if i % 2 == 0 { "png" } else { "pgm" };
        let path = dir.path().join(format!("l{i}.{ext}"));
        io::write_label_map(&map, &path).map_err(|e| e.to_string())?;
        let back = io::read_label_map(&path).map_err(|e| e.to_string())?;
        check(back.labels() == map.labels(), || {
            format!("label map {i} did not round-trip")
        })?;
    }

    let good_tensor =
        io::encode_tensor(&Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).expect("tensor"));
    let mut bad_version = good_tensor.clone();
    bad_version[8] = 2;
    let mut bad_rank = good_tensor.clone();
    bad_rank[12] = 5;
    let mut trailing = good_tensor.clone();
    trailing.push(0);
    let mut huge = b"N2D3TENS".to_vec();
    for v in [1u32, 4, u32::MAX, u32::MAX, u32::MAX, u32::MAX] {
        huge.extend_from_slice(&v.to_le_bytes());
    }
    type Check = fn(&FormatError) -> bool;
    let tensor_cases: Vec<(&str, Vec<u8>, Check)> = vec![
        (
            "bad magic",
            b"BADMAGIC\x01\0\0\0\x01\0\0\0\x01\0\0\0\0\0\0\0".to_vec(),
            |e| matches!(e, FormatError::BadMagic(_)),
        ),
        ("empty", Vec::new(), |e| {
            matches!(e, FormatError::Truncated { .. })
        }),
        ("bad version", bad_version, |e| {
            matches!(e, FormatError::BadVersion(2))
        }),
        ("bad rank", bad_rank, |e| {
            matches!(e, FormatError::BadRank(5))
        }),
        (
            "truncated",
            good_tensor[..good_tensor.len() - 1].to_vec(),
            |e| matches!(e, FormatError::Truncated { .. }),
        ),
        ("trailing", trailing, |e| {
            matches!(e, FormatError::TrailingBytes { extra: 1 })
        }),
        ("overflow", huge, |e| {
            matches!(
                e,
                FormatError::DimOverflow(_) | FormatError::Truncated { .. }
            )
        }),
    ];
    for (name, bytes, ok) in &tensor_cases {
        match io::decode_tensor(bytes) {
            Err(e) if ok(&e) => {}
            other => return Err(format!("tensor fixture {name}: {other:?}")),
        }
    }

    let image_cases: Vec<(&str, &[u8], Check)> = vec![
        ("unknown container", b"GIF89a", |e| {
            matches!(e, FormatError::UnsupportedFormat(_))
        }),
        ("ascii ppm", b"P3\n1 1\n255\n0 0 0\n", |e| {
            matches!(e, FormatError::UnsupportedFormat(_))
        }),
        ("16-bit ppm", b"P6\n1 1\n65535\n\0\0\0\0\0\0", |e| {
            matches!(e, FormatError::UnsupportedBitDepth(_))
        }),
        ("truncated ppm", b"P6\n2 1\n255\n\0\0\0", |e| {
            matches!(e, FormatError::Truncated { .. })
        }),
        ("bad width", b"P6\nx 1\n255\n\0\0\0", |e| {
            matches!(e, FormatError::BadHeader(_))
        }),
        ("zero size", b"P6\n0 1\n255\n", |e| {
            matches!(e, FormatError::BadHeader(_))
        }),
        ("cut header", b"P6\n1", |e| {
            matches!(e, FormatError::BadHeader(_))
        }),
        ("gray as rgb", b"P5\n1 1\n255\n\0", |e| {
            matches!(e, FormatError::UnsupportedColor(_))
        }),
        ("broken png", b"\x89PNG\r\n\x1a\n\0\0\0\x0dIHDR", |e| {
            matches!(e, FormatError::Png(_))
        }),
    ];
    for (name, bytes, ok) in &image_cases {
        match io::decode_image(bytes) {
            Err(e) if ok(&e) => {}
            other => return Err(format!("image fixture {name}: {other:?}")),
        }
    }
    match io::decode_label_map(b"P5\n2 1\n255\n\x01\x07") {
        Err(FormatError::LabelOutOfRange { index: 1, value: 7 }) => {}
        other => return Err(format!("label fixture out of range: {other:?}")),
    }

    // Random corruption of valid files must never panic.
    let mut seeds: Vec<Vec<u8>> = vec![good_tensor, b"P6\n2 2\n255\n0123456789ab".to_vec()];
    let map = DisentanglementMap::from_labels(3, 2, vec![Region::WellLit; 6])
        .map_err(|e| e.to_string())?;
    let png_path = dir.path().join("seed.png");
    io::write_label_map(&map, &png_path).map_err(|e| e.to_string())?;
    seeds.push(std::fs::read(&png_path).map_err(|e| e.to_string())?);
    let mut mutated = 0;
    for seed in &seeds {
        for _ in 0..2000 {
            let mut bytes = seed.clone();
            match rng.random_range(0..3) {
                0 => {
                    let at = rng.random_range(0..bytes.len());
                    bytes[at] = rng.random();
                }
                1 => bytes.truncate(rng.random_range(0..bytes.len())),
                _ => bytes.extend((0..rng.random_range(1..8)).map(|_| rng.random::<u8>())),
            }
            let survived = catch_unwind(AssertUnwindSafe(|| {
                let _ = io::decode_tensor(&bytes);
                let _ = io::decode_image(&bytes);
                let _ = io::decode_label_map(&bytes);
            }));
            check(survived.is_ok(), || {
                format!("decoder panicked on {bytes:?}")
            })?;
            mutated += 1;
        }
    }
    Ok(format!(
        "200 tensors, 100 label maps bit-exact; {} typed-error fixtures; {mutated} corrupted inputs without panic",
        tensor_cases.len() + image_cases.len() + 1
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("corollary verification", criterion_1),
        ("gaussian color model", criterion_2),
        ("derivative correctness", criterion_3),
        ("partition soundness", criterion_4),
        ("disentanglement accuracy", criterion_5),
        ("transport plan contract", criterion_6),
        ("nce reductions", criterion_7),
        ("adversarial calculators", criterion_8),
        ("format round-trips", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
