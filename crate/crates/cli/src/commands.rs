use std::path::Path;

use rigidock::fsutil::write_atomic;
use rigidock::linalg::{norm, Vec3};
use rigidock::protein::{read_pdb, transform_pdb_text, write_ca_pdb};
use rigidock::train::{
    evaluate, evaluate_model, loss_csv, write_synthetic, Dataset, EvalOptions,
    SynthConfig, TrainConfig,
};
use rigidock::{
    build_graph, check_pairwise_equivariance, parse_pdb, predict_dock, random_se3, Model,
    ModelConfig, ProteinGraph, RigidTransform,
};
use serde_json::{json, Value};

use crate::args::{CheckArgs, DockArgs, EvalArgs, FeaturesArgs, GenArgs, TrainArgs};
use crate::{CliError, CliResult};

fn require_file(path: &Path) -> CliResult<()> {
    match std::fs::metadata(path) {
        Ok(m) if m.is_file() => Ok(()),
        Ok(_) => Err(CliError::Input(format!("{}: not a regular file", path.display()))),
        Err(e) => Err(CliError::Input(format!("{}: {e}", path.display()))),
    }
}

fn require_dir(path: &Path) -> CliResult<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Input(format!("{}: not a directory", path.display())))
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Prefixes input errors with the offending file.
fn in_file(path: &Path) -> impl Fn(rigidock::Error) -> CliError + '_ {
    move |e| match CliError::from(e) {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(rigidock::Error::from)?;
    write_atomic(path, format!("{text}\n").as_bytes())?;
    Ok(())
}

fn points_json(points: &[Vec3]) -> Value {
    json!(points)
}

fn graph_of(path: &Path, chains: Option<&[char]>, k: usize) -> CliResult<(ProteinGraph, String)> {
    let text = read_text(path)?;
    let rs = parse_pdb(&text, chains).map_err(in_file(path))?;
    let graph = build_graph(&rs, k).map_err(in_file(path))?;
    Ok((graph, text))
}

pub fn dock(a: DockArgs) -> CliResult<()> {
    for p in [&a.ligand, &a.receptor, &a.model] {
        require_file(p)?;
    }
    let model = Model::load(&a.model).map_err(in_file(&a.model))?;
    let k = model.config.knn;
    let lig_text = read_text(&a.ligand)?;
    let lig = parse_pdb(&lig_text, a.chains_ligand.as_deref()).map_err(in_file(&a.ligand))?;
    let lig_graph = build_graph(&lig, k).map_err(in_file(&a.ligand))?;
    let (rec_graph, _) = graph_of(&a.receptor, a.chains_receptor.as_deref(), k)?;

    let pred = predict_dock(&model, &lig_graph, &rec_graph)?;
    let t = &pred.transform;
    let pdb = if a.copy_full_atoms {
        transform_pdb_text(&lig_text, &t.r, &t.t).map_err(in_file(&a.ligand))?
    } else {
        write_ca_pdb(&lig, &t.apply_all(&lig.ca_coords()))
    };
    // Everything is computed before the first file is written.
    let keypoints = a.out_keypoints.as_ref().map(|path| {
        let v = json!({
            "ligand": points_json(&t.apply_all(&pred.keypoints_ligand)),
            "receptor": points_json(&pred.keypoints_receptor),
        });
        (path, v)
    });
    write_atomic(&a.out_pdb, pdb.as_bytes())?;
    write_json(&a.out_transform, &t.to_json())?;
    if let Some((path, v)) = keypoints {
        write_json(path, &v)?;
    }
    log::info!("docked {} onto {}", a.ligand.display(), a.receptor.display());
    Ok(())
}

/// Recursively overlays `patch` onto `base`.
fn merge_json(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Preset, then the config file, then individual flags.
fn resolve_train_config(a: &TrainArgs) -> CliResult<TrainConfig> {
    let preset = TrainConfig::preset(&a.preset)?;
    let mut value = serde_json::to_value(preset).map_err(rigidock::Error::from)?;
    if let Some(path) = &a.config {
        let patch: Value = serde_json::from_str(&read_text(path)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        merge_json(&mut value, patch);
    }
    let mut config: TrainConfig = serde_json::from_value(value).map_err(|e| {
        let name = a.config.as_deref().unwrap_or(Path::new("config"));
        CliError::Input(format!("{}: {e}", name.display()))
    })?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(lr) = a.lr {
        config.lr = lr;
    }
    if let Some(p) = a.patience {
        config.patience = p;
    }
    if let Some(m) = a.max_epochs {
        config.max_epochs = m;
    }
    config.validate()?;
    Ok(config)
}

pub fn train(a: TrainArgs) -> CliResult<()> {
    require_dir(&a.data)?;
    if let Some(c) = &a.config {
        require_file(c)?;
    }
    let config = resolve_train_config(&a)?;
    let data = Dataset::load(&a.data)?;
    std::fs::create_dir_all(&a.out).map_err(rigidock::Error::from)?;
    write_json(
        &a.out.join("config.json"),
        &serde_json::to_value(&config).map_err(rigidock::Error::from)?,
    )?;
    let outcome = rigidock::train::train(&config, &data, Some(&a.out))?;
    write_atomic(&a.out.join("losses.csv"), loss_csv(&outcome.history).as_bytes())?;
    let mut val = String::from("epoch,val_ligand_rmsd\n");
    for (i, s) in outcome.val_scores.iter().enumerate() {
        val.push_str(&format!("{},{s:.6}\n", i + 1));
    }
    write_atomic(&a.out.join("validation.csv"), val.as_bytes())?;
    let ckpt = outcome
        .checkpoint
        .clone()
        .unwrap_or_else(|| a.out.join("best.ckpt"));
    if !ckpt.exists() {
        outcome.best.save(&ckpt)?;
    }
    println!(
        "best validation ligand RMSD {:.4} Å at epoch {} ({} epochs, {} skipped steps); checkpoint {}",
        outcome.best_score,
        outcome.best_epoch,
        outcome.epochs_run,
        outcome.skipped_steps,
        ckpt.display()
    );
    Ok(())
}

pub fn eval(a: EvalArgs) -> CliResult<()> {
    require_dir(&a.data)?;
    if let Some(m) = &a.model {
        require_file(m)?;
    }
    if a.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let model = a
        .model
        .as_deref()
        .map(|p| Model::load(p).map_err(in_file(p)))
        .transpose()?;
    let data = Dataset::load(&a.data)?;
    let pairs = data.split(&a.split)?;
    let opts = EvalOptions {
        seed: a.seed,
        jobs: a.jobs,
        knn: model.as_ref().map_or(EvalOptions::default().knn, |m| m.config.knn),
        ..EvalOptions::default()
    };
    let report = match &model {
        Some(m) => evaluate_model(m, &pairs, &opts),
        None => evaluate(&pairs, &opts, |input| Ok(input.oracle())),
    };
    write_atomic(&a.out, report.to_csv().as_bytes())?;
    println!("pairs     {}", report.pairs.len());
    println!("failures  {}", report.failures);
    for (name, s) in [("crmsd", &report.crmsd), ("irmsd", &report.irmsd)] {
        println!(
            "{name:<9} median {:.4}  mean {:.4}  std {:.4}",
            s.median, s.mean, s.std
        );
    }
    Ok(())
}

pub fn gen_synthetic(a: GenArgs) -> CliResult<()> {
    if a.num_pairs == 0 {
        return Err(CliError::Usage("--num-pairs must be at least 1".into()));
    }
    let data = write_synthetic(&a.out, a.num_pairs, a.seed, &SynthConfig::default())?;
    println!(
        "wrote {} pairs to {} (train {}, val {}, test {})",
        data.pairs.len(),
        a.out.display(),
        data.splits.train.len(),
        data.splits.val.len(),
        data.splits.test.len()
    );
    Ok(())
}

pub fn features(a: FeaturesArgs) -> CliResult<()> {
    require_file(&a.pdb)?;
    if a.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let rs = read_pdb(&a.pdb, a.chains.as_deref()).map_err(in_file(&a.pdb))?;
    let graph = build_graph(&rs, a.k).map_err(in_file(&a.pdb))?;
    let text = serde_json::to_string_pretty(&graph.to_json()).map_err(rigidock::Error::from)?;
    match &a.out {
        Some(path) => write_atomic(path, format!("{text}\n").as_bytes())?,
        None => println!("{text}"),
    }
    Ok(())
}

/// `max |a − b|` relative to the translation magnitudes involved.
fn transform_deviation(a: &RigidTransform, b: &RigidTransform) -> f64 {
    a.max_abs_diff(b) / norm(&a.t).max(norm(&b.t)).max(1.0)
}

pub fn check_equivariance(a: CheckArgs) -> CliResult<()> {
    if let Some(m) = &a.model {
        require_file(m)?;
    }
    for p in a.ligand.iter().chain(&a.receptor) {
        require_file(p)?;
    }
    let mut model = match &a.model {
        Some(p) => Model::load(p).map_err(in_file(p))?,
        None => Model::new(ModelConfig::default(), a.seed)?,
    };
    if a.perturb > 0.0 {
        model.perturb(a.perturb, a.seed ^ 0x7065_7274);
    }
    let k = model.config.knn;
    let (lig, rec) = match (&a.ligand, &a.receptor) {
        (Some(l), Some(r)) => (graph_of(l, None, k)?.0, graph_of(r, None, k)?.0),
        _ => {
            let pair = rigidock::train::gen_synthetic(1, a.seed, &SynthConfig::default())?.remove(0).data;
            (build_graph(&pair.ligand, k)?, build_graph(&pair.receptor, k)?)
        }
    };

    let base = predict_dock(&model, &lig, &rec)?.transform;
    let swapped = predict_dock(&model, &rec, &lig)?.transform;
    let swap_dev = transform_deviation(&swapped, &base.inverse());

    let mut pairwise: f64 = 0.0;
    let mut motion: f64 = 0.0;
    for trial in 0..a.trials.max(1) {
        let s = a.seed.wrapping_add(1000 + 2 * trial as u64);
        pairwise = pairwise.max(check_pairwise_equivariance(&model, &lig, &rec, s)?.max_relative());
        let m_l = random_se3(s);
        let m_r = random_se3(s + 1);
        let moved = predict_dock(
            &model,
            &lig.transformed(&m_l.r, &m_l.t),
            &rec.transformed(&m_r.r, &m_r.t),
        )?
        .transform;
        let expected = m_r.compose(&base).compose(&m_l.inverse());
        motion = motion.max(transform_deviation(&moved, &expected));
    }

    let checks = [
        ("pairwise_equivariance", pairwise),
        ("dock_under_input_motion", motion),
        ("role_swap_inverse", swap_dev),
    ];
    let mut failed = Vec::new();
    for (name, dev) in checks {
        let ok = dev <= a.tolerance;
        println!(
            "{name:<24} max_rel_dev {dev:.3e}  {}",
            if ok { "ok" } else { "FAIL" }
        );
        if !ok {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "deviation above {:e}: {}",
            a.tolerance,
            failed.join(", ")
        )))
    }
}

