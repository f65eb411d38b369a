use glottochron::io::config::RunConfig;
use glottochron::mcmc::{run_mc3, McmcSetup};
use glottochron::model::TreePriorKind;
use glottochron::tree::TaxonSet;

fn batch_mean_se(x: &[f64], batches: usize) -> (f64, f64) {
    let size = x.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| x[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (m, (var / batches as f64).sqrt())
}

#[test]
fn scalar_hyperpriors_are_recovered_without_data() {
    let config = RunConfig {
        tree_prior: TreePriorKind::Uniform,
        root_bounds: (1000.0, 5000.0),
        chain_length: 300_000,
        thin: 10,
        n_runs: 1,
        n_chains: 1,
        seed: 3,
        prior_only: true,
        print_every: 0,
        ..RunConfig::default()
    };
    let taxa = TaxonSet::new(["A", "B", "C", "D"].map(String::from)).unwrap();
    let setup = McmcSetup {
        config,
        taxa,
        start_tree: None,
    };
    let out = run_mc3(&setup, None, 1, &mut |_| {}).unwrap();
    let samples = &out[0].samples[out[0].samples.len() / 10..];
    for (name, mean) in [("alpha", 1.0), ("clock_rate", 1e-4), ("igr_variance", 0.005)] {
        let x: Vec<f64> = samples.iter().map(|s| s.params[name]).collect();
        let (m, se) = batch_mean_se(&x, 50);
        assert!(
            (m - mean).abs() < 4.0 * se,
            "{name}: mean {m} vs {mean} (se {se})"
        );
    }
    let lnl: Vec<f64> = samples.iter().map(|s| s.log_likelihood).collect();
    assert!(lnl.iter().all(|&l| l == 0.0));
    let roots: Vec<f64> = samples.iter().map(|s| s.tree_height).collect();
    assert!(roots.iter().all(|r| (1000.0..=5000.0).contains(r)));
}
