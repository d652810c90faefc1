use std::fs;
use std::path::{Path, PathBuf};

use nmrqsim::circuit::{build_fid_circuit, NativeBasis, ProductFormula};
use nmrqsim::spectro::{fid_csv, spectrum_csv, sweep_csv};
use nmrqsim::transpiler::StudyOptions;
use nmrqsim::{
    acquire_fid, decompose_clusters, heavy_hex, parse_spin_system, scaling_study, to_spectrum, trotter_error_sweep,
    AcquisitionConfig, Engine, Error, Result, SpinSystem, SweepPlan, Topology,
};

use crate::manifest::{sha256_hex, InputRef, RunManifest};
use crate::{ClustersArgs, Command, CompareArgs, GatesArgs, ReplayArgs, SimulateArgs};

pub fn run(command: Command, argv: &[String]) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a, argv),
        Command::Compare(a) => compare(a, argv),
        Command::Gates(a) => gates(a, argv),
        Command::Clusters(a) => clusters(a),
        Command::Replay(a) => replay(a, argv),
    }
}

struct Loaded {
    system: SpinSystem,
    input: InputRef,
}

fn load_file(path: &Path) -> Result<Loaded> {
    let bytes = fs::read(path).map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Error::Schema(format!("{} is not UTF-8", path.display())))?;
    let system = parse_spin_system(&text).map_err(|e| match e {
        Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
        Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
        other => other,
    })?;
    let resolved = fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
    Ok(Loaded { system, input: InputRef { path: resolved.display().to_string(), sha256: sha256_hex(&bytes) } })
}

/// A single file, or every `*.json` in a directory in file-name order.
fn load_inputs(path: &Path) -> Result<Vec<Loaded>> {
    if !path.is_dir() {
        return Ok(vec![load_file(path)?]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::Validation(format!("cannot list {}: {e}", path.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Validation(format!("no .json spin systems in {}", path.display())));
    }
    files.iter().map(|p| load_file(p)).collect()
}

fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}

fn manifest_header(manifest_name: &str, inputs: &[InputRef]) -> Vec<String> {
    let mut header = vec![format!("manifest: {manifest_name}")];
    header.extend(inputs.iter().map(|i| format!("input_sha256: {}", i.sha256)));
    header
}

fn simulate(mut args: SimulateArgs, argv: &[String]) -> Result<()> {
    let formula: ProductFormula = args.formula.parse()?;
    let engine: Engine = args.engine.parse()?;
    let loaded = load_file(&args.input)?;
    let sys = &loaded.system;
    let cfg = AcquisitionConfig {
        n_points: args.points,
        sample_rate_hz: args.rate_hz,
        shots: args.shots,
        runs: args.runs,
        repetitions: args.reps,
        formula,
        seed: args.seed,
    };
    cfg.validate()?;

    let fid = acquire_fid(sys, &cfg, engine)?;
    let spectrum = to_spectrum(&fid, args.lb_hz)?;

    fs::create_dir_all(&args.out_dir)?;
    args.input = PathBuf::from(&loaded.input.path);
    args.out_dir = absolute(&args.out_dir);
    args.formula = formula.to_string();
    args.engine = engine.to_string();

    let mut header = manifest_header("manifest.json", std::slice::from_ref(&loaded.input));
    header.extend([
        format!("system: {}", sys.name()),
        format!("engine: {engine}"),
        format!("formula: {formula}"),
        format!("reps: {}", cfg.repetitions),
        format!("shots: {}", cfg.shots),
        format!("runs: {}", cfg.runs),
        format!("seed: {}", cfg.seed),
        format!("points: {}", cfg.n_points),
        format!("rate_hz: {}", cfg.sample_rate_hz),
    ]);
    fs::write(args.out_dir.join("fid.csv"), fid_csv(&fid, &header))?;
    header.push(format!("lb_hz: {}", args.lb_hz));
    fs::write(args.out_dir.join("spectrum.csv"), spectrum_csv(&spectrum, &header))?;

    if args.dump_circuit {
        let t_last = *fid.times.last().expect("at least two points");
        let circuit = build_fid_circuit(sys, t_last, cfg.repetitions, formula)?;
        let text = format!("# manifest: manifest.json\n# t_s: {t_last:?}\n# n_qubits: {}\n{circuit}", circuit.n_qubits());
        fs::write(args.out_dir.join("circuit.txt"), text)?;
    }

    let config = serde_json::to_value(&args).expect("arguments serialize");
    RunManifest::new("simulate", argv, config, vec![loaded.input], args.seed)
        .write(&args.out_dir.join("manifest.json"))?;

    println!(
        "{}: {} points, engine {engine}, peak at {:.3} Hz; wrote {}",
        sys.name(),
        fid.len(),
        spectrum.freqs[spectrum.peak_bin()],
        args.out_dir.display()
    );
    Ok(())
}

fn compare(mut args: CompareArgs, argv: &[String]) -> Result<()> {
    let loaded = load_inputs(&args.input)?;
    if args.reps.is_empty() && args.orders.is_empty() {
        args.reps = vec![1, 2, 3, 4];
    }
    let plan = SweepPlan { repetitions: args.reps.clone(), suzuki_orders: args.orders.clone() };
    let cfg = AcquisitionConfig { n_points: args.points, sample_rate_hz: args.rate_hz, ..AcquisitionConfig::default() };
    cfg.validate()?;
    let systems: Vec<SpinSystem> = loaded.iter().map(|l| l.system.clone()).collect();
    let rows = trotter_error_sweep(&systems, &plan, &cfg)?;

    println!("{:<24} {:>8} {:>5} {:>6} {:>16}", "system", "formula", "reps", "depth", "cosine_distance");
    for r in &rows {
        println!(
            "{:<24} {:>8} {:>5} {:>6} {:>16.6e}",
            r.system,
            r.formula.to_string(),
            r.repetitions,
            r.twoq_depth,
            r.cosine_distance
        );
    }

    if let Some(path) = &args.csv {
        let manifest_path = sidecar_manifest(path);
        let inputs: Vec<InputRef> = loaded.into_iter().map(|l| l.input).collect();
        let mut text = comment_lines(&manifest_header(&file_name(&manifest_path), &inputs));
        text.push_str(&sweep_csv(&rows));
        fs::write(path, text)?;
        args.input = absolute(&args.input);
        args.csv = Some(absolute(path));
        let config = serde_json::to_value(&args).expect("arguments serialize");
        RunManifest::new("compare", argv, config, inputs, 0).write(&manifest_path)?;
    }
    Ok(())
}

fn resolve_topology(spec: &str) -> Result<Topology> {
    if let Some(n) = spec.strip_prefix("heavy-hex-") {
        let n: usize = n.parse().map_err(|_| Error::Parameter(format!("bad topology name {spec:?}")))?;
        return heavy_hex(n);
    }
    let text = fs::read_to_string(spec)
        .map_err(|e| Error::Validation(format!("topology {spec:?} is neither heavy-hex-<n> nor a readable file: {e}")))?;
    Topology::from_json_str(&text)
}

fn gates(mut args: GatesArgs, argv: &[String]) -> Result<()> {
    let loaded = load_inputs(&args.input)?;
    let topo = resolve_topology(&args.topology)?;
    let basis: NativeBasis = args.basis.parse()?;
    let opts = StudyOptions { repetitions: args.reps, basis, seed: args.seed, ..StudyOptions::default() };
    let systems: Vec<SpinSystem> = loaded.iter().map(|l| l.system.clone()).collect();
    let study = scaling_study(&systems, &topo, &opts)?;
    let csv = study.to_csv();

    match &args.out {
        Some(path) => {
            let manifest_path = sidecar_manifest(path);
            let inputs: Vec<InputRef> = loaded.into_iter().map(|l| l.input).collect();
            let mut text = comment_lines(&manifest_header(&file_name(&manifest_path), &inputs));
            text.push_str(&csv);
            fs::write(path, text)?;
            args.input = absolute(&args.input);
            args.out = Some(absolute(path));
            let config = serde_json::to_value(&args).expect("arguments serialize");
            RunManifest::new("gates", argv, config, inputs, args.seed).write(&manifest_path)?;
            print!("{csv}");
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn clusters(args: ClustersArgs) -> Result<()> {
    if !(args.threshold_hz.is_finite() && args.threshold_hz >= 0.0) {
        return Err(Error::Parameter(format!("threshold must be >= 0, got {}", args.threshold_hz)));
    }
    let loaded = load_file(&args.input)?;
    let sys = &loaded.system;
    let clusters = decompose_clusters(sys, args.threshold_hz);
    for (i, c) in clusters.iter().enumerate() {
        let labels: Vec<&str> = c.members.iter().map(|&k| sys.labels()[k].as_str()).collect();
        println!("cluster {} ({} spins): {}", i + 1, c.len(), labels.join(", "));
    }
    println!(
        "{}: {} spins in {} clusters at threshold {} Hz",
        sys.name(),
        sys.n_spins(),
        clusters.len(),
        args.threshold_hz
    );
    Ok(())
}

fn replay(args: ReplayArgs, argv: &[String]) -> Result<()> {
    let manifest = RunManifest::read(&args.manifest)?;
    manifest.verify_inputs()?;
    let bad = |e: serde_json::Error| Error::Schema(format!("manifest config: {e}"));
    match manifest.command.as_str() {
        "simulate" => {
            let mut a: SimulateArgs = serde_json::from_value(manifest.config).map_err(bad)?;
            if let Some(dir) = args.out_dir {
                a.out_dir = dir;
            }
            simulate(a, argv)
        }
        "compare" => {
            let mut a: CompareArgs = serde_json::from_value(manifest.config).map_err(bad)?;
            if let (Some(dir), Some(csv)) = (&args.out_dir, &a.csv) {
                a.csv = Some(dir.join(csv.file_name().unwrap_or_default()));
            }
            compare(a, argv)
        }
        "gates" => {
            let mut a: GatesArgs = serde_json::from_value(manifest.config).map_err(bad)?;
            if let (Some(dir), Some(out)) = (&args.out_dir, &a.out) {
                a.out = Some(dir.join(out.file_name().unwrap_or_default()));
            }
            gates(a, argv)
        }
        other => Err(Error::Schema(format!("manifest has unknown command {other:?}"))),
    }
}

/// `results.csv` -> `results.manifest.json` next to it.
fn sidecar_manifest(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.manifest.json"))
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn comment_lines(lines: &[String]) -> String {
    lines.iter().map(|l| format!("# {l}\n")).collect()
}
