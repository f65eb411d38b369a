use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use glottochron::analysis::{
    aicm as aicm_of, discard_burn_in, majority_consensus, node_age_report, parse_subgroups,
    BayesFactor, HypothesisWindows, WindowCounts,
};
use glottochron::io::calibration::{parse_calibrations, write_calibrations};
use glottochron::io::config::{parse_config, RunConfig};
use glottochron::io::matrix::{parse_matrix, write_matrix, CognateMatrix};
use glottochron::io::newick::{parse_newick, parse_trees, write_newick, write_trees};
use glottochron::io::trace::{parse_trace, write_trace};
use glottochron::mcmc::{asdsf, initial_state, run_mc3, sampling_fraction, McmcSetup, Progress};
use glottochron::model::TreePriorKind;
use glottochron::simulate::{simulate as simulate_data, SimulationSpec};
use glottochron::tree::{validate_tree, TaxonSet, TimeTree};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;
use crate::Common;

/// ASDSF above this is reported as a convergence warning.
const ASDSF_WARNING: f64 = 0.01;

struct Project {
    config: RunConfig,
    prefix: String,
    taxa: TaxonSet,
    matrix: CognateMatrix,
    start_tree: Option<TimeTree>,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::data(path.display(), e))
}

/// Paths in a config are relative to the config file's directory.
fn load_config(path: &Path) -> Result<(RunConfig, PathBuf), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    cfg.dataset = cfg.dataset.map(|p| dir.join(p));
    cfg.calibrations = cfg.calibrations.map(|p| dir.join(p));
    cfg.start_tree = cfg.start_tree.map(|p| dir.join(p));
    Ok((cfg, dir))
}

fn prefix_of(cfg: &RunConfig, dir: &Path) -> String {
    dir.join(&cfg.output).to_string_lossy().into_owned()
}

fn load_project(config_path: &Path) -> Result<Project, CliError> {
    let (config, dir) = load_config(config_path)?;
    let prefix = prefix_of(&config, &dir);
    let dataset = config
        .dataset
        .clone()
        .ok_or_else(|| CliError::Config("config key `dataset`: required".into()))?;
    let matrix = parse_matrix(&read(&dataset)?).map_err(|e| CliError::data(dataset.display(), e))?;
    let names = matrix.taxa().to_vec();
    let mut taxa = TaxonSet::new(names.clone()).map_err(|e| CliError::data(dataset.display(), e))?;
    if let Some(path) = &config.calibrations {
        let cals = parse_calibrations(&read(path)?, &names).map_err(|e| CliError::data(path.display(), e))?;
        for (i, c) in cals.into_iter().enumerate() {
            taxa.set_calibration(i, c);
        }
    }
    let start_tree = match &config.start_tree {
        Some(path) => {
            let cals = taxa.calibrations();
            let tree = parse_newick(read(path)?.trim(), &names, Some(&cals))
                .map_err(|e| CliError::data(path.display(), e))?;
            let bounds = (config.tree_prior != TreePriorKind::Coalescent).then_some(config.root_bounds);
            if let Some(v) = validate_tree(&tree, &cals, bounds).first() {
                return Err(CliError::data(path.display(), v));
            }
            Some(tree)
        }
        None => None,
    };
    Ok(Project {
        config,
        prefix,
        taxa,
        matrix,
        start_tree,
    })
}

fn refuse_overwrite(paths: &[PathBuf], force: bool) -> Result<(), CliError> {
    if force {
        return Ok(());
    }
    match paths.iter().find(|p| p.exists()) {
        Some(p) => Err(CliError::Config(format!(
            "{} exists; pass --force to overwrite",
            p.display()
        ))),
        None => Ok(()),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::data(path.display(), e))
}

fn check_burn_in(burn_in: f64) -> Result<(), CliError> {
    if (0.0..1.0).contains(&burn_in) {
        Ok(())
    } else {
        Err(CliError::Config(format!("burn-in {burn_in} must lie in [0, 1)")))
    }
}

fn run_paths(prefix: &str, n_runs: usize) -> (Vec<PathBuf>, Vec<PathBuf>) {
    (1..=n_runs)
        .map(|i| {
            (
                PathBuf::from(format!("{prefix}.run{i}.trace.tsv")),
                PathBuf::from(format!("{prefix}.run{i}.trees")),
            )
        })
        .unzip()
}

pub fn run(common: &Common, threads: usize) -> Result<(), CliError> {
    let project = load_project(&common.config)?;
    let cfg = &project.config;
    let (traces, tree_files) = run_paths(&project.prefix, cfg.n_runs);
    let stats_path = PathBuf::from(format!("{}.stats.txt", project.prefix));
    let mut outputs = traces.clone();
    outputs.extend(tree_files.iter().cloned());
    outputs.push(stats_path.clone());
    refuse_overwrite(&outputs, common.force)?;

    let names = project.taxa.names();
    let setup = McmcSetup {
        config: cfg.clone(),
        taxa: project.taxa,
        start_tree: project.start_tree,
    };
    let mut report = |p: &Progress| {
        let lnl: Vec<String> = p.cold_log_likelihoods.iter().map(|l| format!("{l:.3}")).collect();
        match p.asdsf {
            Some(a) => eprintln!("{}\tlnL {}\tASDSF {a:.4}", p.iteration, lnl.join(" ")),
            None => eprintln!("{}\tlnL {}", p.iteration, lnl.join(" ")),
        }
    };
    let outputs = run_mc3(&setup, Some(&project.matrix), threads.max(1), &mut report)?;

    let mut stats = String::new();
    for (i, out) in outputs.iter().enumerate() {
        let mut buf = Vec::new();
        write_trace(&out.samples, &mut buf).map_err(|e| CliError::data(traces[i].display(), e))?;
        write_file(&traces[i], &buf)?;
        let mut buf = Vec::new();
        write_trees(&out.trees, &names, &mut buf).map_err(|e| CliError::data(tree_files[i].display(), e))?;
        write_file(&tree_files[i], &buf)?;
        let _ = writeln!(stats, "run {}\n{}", i + 1, out.stats.report());
    }
    let runs: Vec<Vec<TimeTree>> = outputs
        .iter()
        .map(|o| o.trees.iter().map(|(_, t)| t.clone()).collect())
        .collect();
    if runs.len() >= 2 {
        match asdsf(&runs, cfg.burn_in) {
            Ok(a) => {
                let _ = writeln!(stats, "final ASDSF\t{a:.6}");
                println!("final ASDSF: {a:.6}");
                if a >= ASDSF_WARNING {
                    eprintln!("warning: ASDSF {a:.4} is at or above {ASDSF_WARNING}; runs may not have converged");
                }
            }
            Err(e) => eprintln!("warning: ASDSF unavailable: {e}"),
        }
    }
    write_file(&stats_path, stats.as_bytes())?;
    for p in traces.iter().chain(&tree_files).chain([&stats_path]) {
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub fn summarize(common: &Common, burn_in: Option<f64>, subgroups: Option<&Path>) -> Result<(), CliError> {
    let project = load_project(&common.config)?;
    let cfg = &project.config;
    let burn_in = burn_in.unwrap_or(cfg.burn_in);
    check_burn_in(burn_in)?;
    let consensus_path = PathBuf::from(format!("{}.consensus.tree", project.prefix));
    let report_path = PathBuf::from(format!("{}.report.txt", project.prefix));
    refuse_overwrite(&[consensus_path.clone(), report_path.clone()], common.force)?;

    let names = project.taxa.names();
    let cals = project.taxa.calibrations();
    let (_, tree_files) = run_paths(&project.prefix, cfg.n_runs);
    let mut runs = Vec::new();
    for path in &tree_files {
        let trees = parse_trees(&read(path)?, &names, Some(&cals)).map_err(|e| CliError::data(path.display(), e))?;
        runs.push(trees.into_iter().map(|(_, t)| t).collect::<Vec<_>>());
    }
    let pooled: Vec<TimeTree> = runs
        .iter()
        .flat_map(|r| discard_burn_in(r, burn_in).iter().cloned())
        .collect();
    if pooled.is_empty() {
        return Err(CliError::Data("no trees left after burn-in".into()));
    }
    let consensus = majority_consensus(&pooled, &names, 0.5).map_err(|e| CliError::data("consensus", e))?;
    let root = consensus.root_summary();

    let mut report = String::new();
    let _ = writeln!(report, "trees\t{} from {} runs, burn-in {burn_in}", pooled.len(), runs.len());
    let _ = writeln!(report, "root age median\t{:.1}", root.age_median);
    let _ = writeln!(report, "root age 95% HPD\t{:.1}\t{:.1}", root.age_hpd.0, root.age_hpd.1);
    if runs.len() >= 2 {
        match asdsf(&runs, burn_in) {
            Ok(a) => {
                let _ = writeln!(report, "ASDSF\t{a:.6}");
            }
            Err(e) => {
                let _ = writeln!(report, "ASDSF\tunavailable ({e})");
            }
        }
    }
    if let Some(path) = subgroups {
        let groups = parse_subgroups(&read(path)?, &names).map_err(|e| CliError::data(path.display(), e))?;
        let table = node_age_report(&consensus, &pooled, &groups).map_err(|e| CliError::data(path.display(), e))?;
        report.push('\n');
        report.push_str(&table.render());
    }
    let newick = consensus.to_newick();
    write_file(&consensus_path, format!("{newick}\n").as_bytes())?;
    write_file(&report_path, report.as_bytes())?;
    print!("{report}");
    println!("wrote {}\nwrote {}", consensus_path.display(), report_path.display());
    Ok(())
}

fn tree_heights(paths: &[PathBuf], burn_in: f64) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for path in paths {
        let samples = parse_trace(&read(path)?).map_err(|e| CliError::data(path.display(), e))?;
        out.extend(discard_burn_in(&samples, burn_in).iter().map(|s| s.tree_height));
    }
    Ok(out)
}

pub fn bf(
    posterior: &[PathBuf],
    prior: &[PathBuf],
    burn_in: f64,
    steppe: Option<(f64, f64)>,
    anatolian: Option<(f64, f64)>,
) -> Result<(), CliError> {
    check_burn_in(burn_in)?;
    let mut windows = HypothesisWindows::default();
    if let Some(w) = steppe {
        windows.steppe = w;
    }
    if let Some(w) = anatolian {
        windows.anatolian = w;
    }
    let post = tree_heights(posterior, burn_in)?;
    let pri = tree_heights(prior, burn_in)?;
    if post.is_empty() || pri.is_empty() {
        return Err(CliError::Data("no samples left after burn-in".into()));
    }
    let counts = WindowCounts::from_samples(&post, &pri, &windows);
    println!(
        "posterior\tsteppe {}/{}\tanatolian {}/{}",
        counts.posterior_steppe, counts.posterior_total, counts.posterior_anatolian, counts.posterior_total
    );
    println!(
        "prior\tsteppe {}/{}\tanatolian {}/{}",
        counts.prior_steppe, counts.prior_total, counts.prior_anatolian, counts.prior_total
    );
    println!("{}", BayesFactor::from_counts(&counts));
    Ok(())
}

pub fn aicm(traces: &[PathBuf], burn_in: f64) -> Result<(), CliError> {
    check_burn_in(burn_in)?;
    for path in traces {
        let samples = parse_trace(&read(path)?).map_err(|e| CliError::data(path.display(), e))?;
        let lnl: Vec<f64> = discard_burn_in(&samples, burn_in)
            .iter()
            .map(|s| s.log_likelihood)
            .collect();
        let value = aicm_of(&lnl).map_err(|e| CliError::data(path.display(), e))?;
        println!("{}\t{value:.3}\t{} samples", path.display(), lnl.len());
    }
    Ok(())
}

pub fn validate(config: &Path) -> Result<(), CliError> {
    let project = load_project(config)?;
    let cfg = &project.config;
    let fossils = project.taxa.iter().filter(|t| !t.calibration.is_extant()).count();
    if cfg.tree_prior == TreePriorKind::Fbd {
        sampling_fraction(&project.taxa, cfg.n_extant_family)?;
    }
    let fully_missing = project.matrix.fully_missing().iter().filter(|&&m| m).count();
    let setup = McmcSetup {
        config: cfg.clone(),
        taxa: project.taxa.clone(),
        start_tree: project.start_tree.clone(),
    };
    initial_state(&setup, &mut ChaCha8Rng::seed_from_u64(cfg.seed))?;
    println!(
        "ok: {} taxa ({fossils} dated), {} sites, {fully_missing} taxa with no data",
        project.matrix.n_taxa(),
        project.matrix.n_sites()
    );
    Ok(())
}

pub fn simulate(common: &Common, taxa: usize, fossils: usize, sites: usize) -> Result<(), CliError> {
    let (cfg, dir) = load_config(&common.config)?;
    let prefix = prefix_of(&cfg, &dir);
    let matrix_path = PathBuf::from(format!("{prefix}.sim.matrix.txt"));
    let cal_path = PathBuf::from(format!("{prefix}.sim.calibrations.csv"));
    let tree_path = PathBuf::from(format!("{prefix}.sim.tree"));
    refuse_overwrite(&[matrix_path.clone(), cal_path.clone(), tree_path.clone()], common.force)?;
    let spec = SimulationSpec {
        n_taxa: taxa,
        n_fossils: fossils,
        n_sites: sites,
        ..SimulationSpec::default()
    };
    let sim = simulate_data(&cfg, &spec)?;
    write_file(&matrix_path, write_matrix(&sim.matrix).as_bytes())?;
    write_file(&cal_path, write_calibrations(&sim.taxa).as_bytes())?;
    let newick = write_newick(sim.tree(), &sim.taxa.names());
    write_file(&tree_path, format!("{newick}\n").as_bytes())?;
    println!("true root age\t{:.1}", sim.tree().root_age());
    for p in [&matrix_path, &cal_path, &tree_path] {
        println!("wrote {}", p.display());
    }
    Ok(())
}
