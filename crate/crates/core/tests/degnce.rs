use n2d3::degnce::{
    deg_nce_loss, ot_reweight, patch_nce, region_plans, run_degnce, sample_patches, weighted_nce,
    CostSign, DegNceConfig, FeatureGrid, LayerPlans, LossReport, NegativeMass, SinkhornConfig,
};
use n2d3::{DisentanglementMap, Error, Region};
use proptest::prelude::*;

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, k - 1);
            out.push(q);
        }
    }
    out
}

fn derangement_costs(cost: &[f64], k: usize) -> Vec<(f64, Vec<usize>)> {
    let mut v: Vec<(f64, Vec<usize>)> = permutations(k)
        .into_iter()
        .filter(|p| p.iter().enumerate().all(|(i, j)| i != *j))
        .map(|p| ((0..k).map(|i| cost[i * k + p[i]]).sum(), p))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

fn map(w: usize, h: usize, f: impl Fn(usize) -> Region) -> DisentanglementMap {
    DisentanglementMap::from_labels(w, h, (0..w * h).map(f).collect()).unwrap()
}

fn one_hot_grid(layer: usize, gh: usize, gw: usize) -> FeatureGrid {
    let n = gh * gw;
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    FeatureGrid::new(layer, gh, gw, n, v).unwrap()
}

#[test]
fn three_by_three_sharpens_to_best_derangement() {
    let cost = [0.0, 0.7, 0.2, 0.4, 0.0, 0.9, 0.5, 0.1, 0.0];
    let ranked = derangement_costs(&cost, 3);
    assert_eq!(ranked.len(), 2);
    let best = &ranked[0].1;
    let mut last_tv = f64::INFINITY;
    for eps in [0.3, 0.1, 0.03, 0.01, 0.001] {
        let cfg = SinkhornConfig {
            epsilon: eps,
            ..SinkhornConfig::default()
        };
        let plan = ot_reweight(&cost, 3, &cfg).unwrap();
        assert!(plan.converged);
        let tv: f64 = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| (plan.get(i, j) - if best[i] == j { 1.0 } else { 0.0 }).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv <= last_tv + 1e-12, "eps {eps}: {tv} after {last_tv}");
        last_tv = tv;
    }
    assert!(last_tv < 1e-3);
}

#[test]
fn sign_switch_targets_the_other_extreme() {
    let cost = [0.0, 3.0, 1.0, 2.0, 0.0, 5.0, 4.0, 1.5, 0.0];
    let ranked = derangement_costs(&cost, 3);
    let cfg = SinkhornConfig {
        epsilon: 1e-3,
        sign: CostSign::Maximize,
        ..SinkhornConfig::default()
    };
    let plan = ot_reweight(&cost, 3, &cfg).unwrap();
    assert!((plan.linear_cost(&cost) - ranked[1].0).abs() < 1e-3);
}

#[test]
fn rejects_degenerate_blocks() {
    let cfg = SinkhornConfig::default();
    assert!(matches!(
        ot_reweight(&[1.0], 1, &cfg),
        Err(Error::BlockTooSmall(1))
    ));
    let bad = SinkhornConfig {
        epsilon: 0.0,
        ..cfg
    };
    assert!(matches!(
        ot_reweight(&[0.0; 9], 3, &bad),
        Err(Error::InvalidEpsilon(_))
    ));
    let mut cost = vec![1.0; 9];
    cost[5] = f64::NAN;
    assert!(ot_reweight(&cost, 3, &cfg).is_err());
    // A non-finite diagonal is ignored.
    cost[5] = 1.0;
    cost[4] = f64::INFINITY;
    assert!(ot_reweight(&cost, 3, &cfg).is_ok());
}

#[test]
fn weighted_nce_scalar_oracles() {
    let l = weighted_nce(&[1.0], &[1.0], &[&[0.0]], &[2.0], 1.0).unwrap();
    let e = std::f64::consts::E;
    assert!((l - (-(e / (e + 2.0)).ln())).abs() < 1e-15);
    assert!((l - 0.55).abs() < 5e-3);
    assert_eq!(weighted_nce(&[1.0], &[1.0], &[], &[], 0.5).unwrap(), 0.0);
    assert!(matches!(
        weighted_nce(&[1.0], &[1.0], &[&[1.0]], &[1.0, 1.0], 1.0),
        Err(Error::WeightCount { .. })
    ));
    assert!(weighted_nce(&[1.0], &[1.0], &[&[1.0]], &[-1.0], 1.0).is_err());
    assert!(weighted_nce(&[1.0], &[1.0], &[&[1.0]], &[1.0], 0.0).is_err());
}

#[test]
fn uniform_plan_times_count_is_mean_patch_nce() {
    // One-hot features: every off-diagonal similarity is exp(0), so the plan
    // is uniform 1/(K−1) and count scaling restores unit weights.
    let (gh, gw) = (3, 4);
    let g = one_hot_grid(0, gh, gw);
    let dmap = map(8, 6, |_| Region::WellLit);
    let tau = 0.2;
    let set = sample_patches(&g, &g, &dmap, 3, 7).unwrap();
    let plans = region_plans(&set, tau, &SinkhornConfig::default()).unwrap();
    let plan = plans[Region::WellLit.index()].as_ref().unwrap();
    for i in 0..7 {
        for j in 0..7 {
            let want = if i == j { 0.0 } else { 1.0 / 6.0 };
            assert!((plan.get(i, j) - want).abs() < 1e-9);
        }
    }
    let loss = deg_nce_loss(
        std::slice::from_ref(&set),
        std::slice::from_ref(&plans),
        tau,
        NegativeMass::Count,
    )
    .unwrap();
    let rs = set.region(Region::WellLit);
    let mean: f64 = (0..rs.k())
        .map(|i| {
            let negs: Vec<&[f64]> = rs.negatives(i).map(|(_, v)| v).collect();
            patch_nce(rs.anchor(i), rs.positive(i), &negs, tau).unwrap()
        })
        .sum::<f64>()
        / rs.k() as f64;
    assert!((loss.total - mean).abs() < 1e-9);
    assert!((mean - (1.0 + 6.0 * (-1.0 / tau).exp()).ln()).abs() < 1e-12);

    let rows = deg_nce_loss(&[set], &[plans], tau, NegativeMass::PlanRows).unwrap();
    assert!(rows.total <= loss.total);
}

#[test]
fn empty_inputs_give_zero_loss() {
    assert_eq!(
        deg_nce_loss(&[], &[], 0.07, NegativeMass::PlanRows)
            .unwrap()
            .total,
        0.0
    );
    let g = one_hot_grid(0, 2, 2);
    let set = sample_patches(&g, &g, &map(2, 2, |_| Region::Darkness), 0, 0).unwrap();
    assert_eq!(set.anchor_count(), 0);
    let plans: LayerPlans = Default::default();
    let loss = deg_nce_loss(&[set], &[plans], 0.07, NegativeMass::PlanRows).unwrap();
    assert_eq!(loss.total, 0.0);
}

#[test]
fn mismatched_plans_are_rejected() {
    let g = one_hot_grid(0, 2, 2);
    let set = sample_patches(&g, &g, &map(2, 2, |_| Region::WellLit), 0, 4).unwrap();
    let empty: LayerPlans = Default::default();
    assert!(matches!(
        deg_nce_loss(
            std::slice::from_ref(&set),
            &[empty],
            0.07,
            NegativeMass::PlanRows
        ),
        Err(Error::RegionMismatch(_))
    ));
    assert!(deg_nce_loss(&[set], &[], 0.07, NegativeMass::PlanRows).is_err());
}

#[test]
fn single_region_report_lists_one_region() {
    let g = one_hot_grid(0, 2, 3);
    let dmap = map(6, 4, |_| Region::HighLight);
    let cfg = DegNceConfig::default();
    let run = run_degnce(
        std::slice::from_ref(&g),
        std::slice::from_ref(&g),
        &dmap,
        &cfg,
    )
    .unwrap();
    let report = LossReport {
        config: cfg,
        run,
        adversarial: None,
    }
    .to_report();
    let regions: Vec<&str> = report
        .keys()
        .filter(|k| k.ends_with(".anchors") && k.matches('.').count() == 2)
        .collect();
    assert_eq!(regions, ["layer0.high_light.anchors"]);
    assert_eq!(report.get("tau"), Some("0.07"));
    assert_eq!(report.get("epsilon"), Some("0.05"));
}

fn cost_block() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (3usize..=6).prop_flat_map(|k| (Just(k), prop::collection::vec(0.0f64..2.0, k * k)))
}

proptest! {
    #[test]
    fn plans_meet_their_contract((k, cost) in cost_block(), eps in 0.01f64..0.5) {
        let cfg = SinkhornConfig { epsilon: eps, ..SinkhornConfig::default() };
        let plan = ot_reweight(&cost, k, &cfg).unwrap();
        prop_assert!(plan.converged);
        let (row, col) = plan.marginal_errors();
        prop_assert!(row <= 1e-6 && col <= 1e-6);
        for i in 0..k {
            prop_assert_eq!(plan.get(i, i), 0.0);
            prop_assert!(plan.row(i).iter().all(|w| *w >= 0.0));
        }
        prop_assert!(plan.residual_history.windows(2).all(|w| w[1] <= w[0]));
        let ranked = derangement_costs(&cost, k);
        let v = plan.linear_cost(&cost);
        prop_assert!(v >= ranked[0].0 - 1e-9 && v <= ranked.last().unwrap().0 + 1e-9);
    }

    #[test]
    fn weighted_nce_grows_with_each_weight(pos in -1.0f64..1.0,
                                           negs in prop::collection::vec(-1.0f64..1.0, 1..6),
                                           weights in prop::collection::vec(0.0f64..3.0, 6),
                                           which in any::<prop::sample::Index>(),
                                           bump in 0.01f64..1.0, tau in 0.1f64..1.0) {
        let nv: Vec<[f64; 1]> = negs.iter().map(|n| [*n]).collect();
        let refs: Vec<&[f64]> = nv.iter().map(|n| n.as_slice()).collect();
        let mut w = weights[..negs.len()].to_vec();
        let base = weighted_nce(&[1.0], &[pos], &refs, &w, tau).unwrap();
        w[which.index(negs.len())] += bump;
        let more = weighted_nce(&[1.0], &[pos], &refs, &w, tau).unwrap();
        prop_assert!(more > base);
    }

    #[test]
    fn samples_respect_regions(labels in prop::collection::vec(0u8..4, 48),
                               seed in any::<u64>(), cap in 0usize..10) {
        let dmap = DisentanglementMap::from_labels(
            8, 6, labels.iter().map(|l| Region::from_u8(*l).unwrap()).collect(),
        ).unwrap();
        let src = FeatureGrid::new(1, 3, 4, 2, (0..24).map(|v| v as f64).collect()).unwrap();
        let gen = FeatureGrid::new(1, 3, 4, 2, (0..24).map(|v| -(v as f64)).collect()).unwrap();
        let set = sample_patches(&src, &gen, &dmap, seed, cap).unwrap();
        prop_assert_eq!(&set, &sample_patches(&src, &gen, &dmap, seed, cap).unwrap());
        for region in Region::ALL {
            let rs = set.region(region);
            let available = set.cell_labels().iter().filter(|l| **l == region).count();
            prop_assert_eq!(rs.k(), available.min(cap));
            let locs = rs.locations();
            prop_assert!(locs.windows(2).all(|w| w[0] < w[1]));
            for (i, &cell) in locs.iter().enumerate() {
                prop_assert_eq!(set.cell_labels()[cell], region);
                prop_assert_eq!(rs.anchor(i), gen.cell(cell));
                prop_assert_eq!(rs.positive(i), src.cell(cell));
                for (j, v) in rs.negatives(i) {
                    prop_assert!(j != i);
                    prop_assert_eq!(set.cell_labels()[locs[j]], region);
                    prop_assert_eq!(v, src.cell(locs[j]));
                }
            }
        }
    }
}
