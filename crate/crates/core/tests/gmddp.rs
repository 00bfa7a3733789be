use pyics_core::gmddp::{gmddp_ics_step, GmddpParams, GmddpState, GroupedData, WeightUpdater};
use pyics_core::model::{BaseMeasure, Dataset, NigBase};
use pyics_core::rng::RngStream;
use pyics_core::synthetic::two_group;

fn base() -> BaseMeasure {
    BaseMeasure::Nig(NigBase::new(0.0, 0.2, 2.0, 1.0).unwrap())
}

fn synthetic(seed: u64, per_group: usize) -> GroupedData {
    let (labels, values) = two_group(&mut RngStream::new(seed, 0), per_group);
    let labels: Vec<i64> = labels.iter().map(|&l| l as i64).collect();
    GroupedData::from_labels(values, &labels).unwrap().0
}

#[test]
fn bookkeeping_survives_a_thousand_sweeps() {
    let data = synthetic(1, 50);
    let params = GmddpParams::new(1.0, 0.5, 2).unwrap();
    let mut rng = RngStream::chain(2, 0);
    let mut state = GmddpState::new(&mut rng, &data, params, &base()).unwrap();
    state.check(&data).unwrap();
    let mut updater = WeightUpdater::new(2);
    for it in 0..1000 {
        let summary = gmddp_ics_step(
            &mut rng,
            it,
            &mut state,
            &mut updater,
            it < 500,
            &data,
            params,
            &base(),
            10,
        )
        .unwrap();
        state.check(&data).unwrap();
        assert!(summary
            .summaries
            .iter()
            .all(|s| (s.total_weight() - 1.0).abs() < 1e-9));
    }
    let rates = updater.acceptance_rates();
    assert!(rates.iter().all(|&r| r > 0.2 && r < 0.7), "{rates:?}");
}

#[test]
fn identical_groups_share_the_common_process() {
    let params = GmddpParams::new(1.0, 0.5, 2).unwrap();
    let mut shares = Vec::new();
    for seed in 0..20 {
        let one = synthetic(100 + seed, 40).group(0);
        let values: Vec<f64> = one.values().iter().chain(one.values()).copied().collect();
        let groups = (0..2 * one.len()).map(|i| i / one.len()).collect();
        let data = GroupedData::new(Dataset::univariate(values).unwrap(), groups, 2).unwrap();
        let mut rng = RngStream::chain(seed, 0);
        let mut state = GmddpState::new(&mut rng, &data, params, &base()).unwrap();
        let mut updater = WeightUpdater::new(2);
        let mut share = 0.0;
        for it in 0..200 {
            gmddp_ics_step(
                &mut rng,
                it,
                &mut state,
                &mut updater,
                it < 100,
                &data,
                params,
                &base(),
                10,
            )
            .unwrap();
            if it >= 100 {
                share += state.common_share() / 100.0;
            }
        }
        shares.push(share);
    }
    let mean = shares.iter().sum::<f64>() / shares.len() as f64;
    assert!(mean > 0.1, "common share {mean}");
}

#[test]
fn group_densities_integrate_to_one() {
    let data = synthetic(3, 60);
    let params = GmddpParams::new(1.0, 0.5, 2).unwrap();
    let mut rng = RngStream::chain(4, 0);
    let mut state = GmddpState::new(&mut rng, &data, params, &base()).unwrap();
    let mut updater = WeightUpdater::new(2);
    let grid: Vec<f64> = (0..2001)
        .map(|i| -15.0 + 30.0 * i as f64 / 2000.0)
        .collect();
    let points = Dataset::univariate(grid).unwrap();
    for it in 0..30 {
        let summary = gmddp_ics_step(
            &mut rng,
            it,
            &mut state,
            &mut updater,
            true,
            &data,
            params,
            &base(),
            10,
        )
        .unwrap();
        for l in 0..2 {
            let f = summary.group_density(l, &points);
            let mass: f64 = f.windows(2).map(|w| 0.5 * (w[0] + w[1]) * 0.015).sum();
            assert!((mass - 1.0).abs() < 1e-2, "group {l}: mass {mass}");
        }
    }
}
