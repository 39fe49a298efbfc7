use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use lidar_normals::bench::time_pair;
use lidar_normals::clustering::label_points;
use lidar_normals::eval::{evaluate, EvalReport};
use lidar_normals::normals::{normals_baseline, normals_labeled, slice_normals_2d};
use lidar_normals::scan::{export_ply, read_scan, write_scan};
use lidar_normals::sim::{self, GroundTruth, Preset, Scene};
use lidar_normals::{ClusteringParams, NormalField, NormalMethod, OrganizedScan};

#[derive(Parser)]
#[command(
    name = "lidar-normals",
    version,
    about = "Label-restricted normals for organized LiDAR scans"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scan of an analytic scene.
    Gen(GenArgs),
    /// Estimate normals for a scan.
    Normals(NormalsArgs),
    /// Export the labels and in-slice normals of one firing column.
    Slice(SliceArgs),
    /// Score both methods against simulator ground truth.
    Eval(EvalArgs),
    /// Time baseline and labeled normals on a simulated scan.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Vlp16,
    #[value(name = "os0-32")]
    Os0_32,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Vlp16 => Preset::Vlp16,
            PresetArg::Os0_32 => Preset::Os0_32,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SceneArg {
    Corner,
    Floor,
    Box,
}

fn build_scene(scene: SceneArg, wall_distance: f64) -> Result<Scene> {
    Ok(match scene {
        SceneArg::Corner => sim::make_corner_scene(wall_distance)?,
        SceneArg::Floor => sim::make_floor_scene(),
        SceneArg::Box => sim::make_box_scene(),
    })
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Baseline,
    Labeled,
}

#[derive(clap::Args)]
struct ThresholdArg {
    /// Angle between consecutive slice chords above which a component ends.
    #[arg(long = "alpha-threshold-deg", default_value_t = ClusteringParams::DEFAULT_THRESHOLD_DEG)]
    degrees: f64,
}

impl ThresholdArg {
    fn params(&self) -> Result<ClusteringParams> {
        Ok(ClusteringParams::from_degrees(self.degrees)?)
    }
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "vlp16")]
    preset: PresetArg,
    #[arg(long, value_enum, default_value = "corner")]
    scene: SceneArg,
    /// Distance of the wall in the corner scene, meters.
    #[arg(long, default_value_t = 5.0)]
    wall_distance: f64,
    /// Range noise standard deviation, meters.
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output scan (OSF).
    #[arg(long)]
    out: PathBuf,
    /// Optional ground-truth CSV.
    #[arg(long)]
    gt_out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct NormalsArgs {
    /// Input scan (OSF).
    scan: PathBuf,
    #[arg(long, value_enum, default_value = "labeled")]
    method: MethodArg,
    #[command(flatten)]
    threshold: ThresholdArg,
    /// Write a colored PLY point cloud.
    #[arg(long)]
    ply: Option<PathBuf>,
    /// Write per-cell `row,col,status,nx,ny,nz`.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SliceArgs {
    scan: PathBuf,
    #[arg(long)]
    column: usize,
    #[command(flatten)]
    threshold: ThresholdArg,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct EvalArgs {
    scan: PathBuf,
    /// Ground-truth CSV written by `gen --gt-out`.
    #[arg(long)]
    gt: PathBuf,
    #[command(flatten)]
    threshold: ThresholdArg,
    /// Also write the reports as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "vlp16")]
    preset: PresetArg,
    #[arg(long, value_enum, default_value = "corner")]
    scene: SceneArg,
    #[arg(long, default_value_t = 5.0)]
    wall_distance: f64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(10..))]
    repetitions: u64,
    #[arg(long, default_value_t = 10)]
    warmup: u64,
    #[command(flatten)]
    threshold: ThresholdArg,
}

fn load_scan(path: &Path) -> Result<OrganizedScan> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_scan(BufReader::new(file)).with_context(|| format!("cannot read scan {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let preset: Preset = args.preset.into();
    let rig = preset.rig().with_noise(args.noise_sigma, args.seed);
    let scene = build_scene(args.scene, args.wall_distance)?;
    let (scan, gt) = sim::simulate(&rig, &scene)?;
    write_scan(&scan, create(&args.out)?)?;
    if let Some(path) = &args.gt_out {
        let mut w = create(path)?;
        gt.write_csv(&mut w)?;
        w.flush()?;
    }
    println!(
        "wrote {}x{} scan ({} returns) to {}",
        scan.rows(),
        scan.cols(),
        scan.valid_count(),
        args.out.display()
    );
    Ok(())
}

fn write_normals_csv<W: Write>(field: &NormalField, mut w: W) -> Result<()> {
    writeln!(w, "row,col,status,nx,ny,nz")?;
    for row in 0..field.rows() {
        for col in 0..field.cols() {
            let cell = field.get(row, col);
            let n = cell.normal();
            writeln!(
                w,
                "{row},{col},{},{},{},{}",
                cell.status().as_str(),
                fmt_opt(n.map(|n| n.x)),
                fmt_opt(n.map(|n| n.y)),
                fmt_opt(n.map(|n| n.z))
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_normals(args: NormalsArgs) -> Result<()> {
    let scan = load_scan(&args.scan)?;
    let method = match args.method {
        MethodArg::Baseline => NormalMethod::Baseline,
        MethodArg::Labeled => NormalMethod::LabelRestricted(args.threshold.params()?),
    };
    let field = method.estimate(&scan);
    if let Some(path) = &args.ply {
        export_ply(&scan, &field, create(path)?)?;
    }
    if let Some(path) = &args.csv {
        write_normals_csv(&field, create(path)?)?;
    }
    println!(
        "{}: {} normals, {} high-curvature, {} invalid",
        method.name(),
        field.normal_count(),
        field.count(lidar_normals::NormalStatus::HighCurvature),
        field.count(lidar_normals::NormalStatus::Invalid)
    );
    Ok(())
}

fn cmd_slice(args: SliceArgs) -> Result<()> {
    let scan = load_scan(&args.scan)?;
    let params = args.threshold.params()?;
    if args.column >= scan.cols() {
        Cli::command()
            .error(
                ErrorKind::InvalidValue,
                format!(
                    "--column {} out of range, scan has {} columns",
                    args.column,
                    scan.cols()
                ),
            )
            .exit();
    }
    let slice = scan.extract_slice(args.column)?;
    let labels = label_points(&slice, &params).labels;
    let normals = slice_normals_2d(&slice, &params);

    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(out, "row,x,y,z,label,nx,ny,nz,has_normal")?;
    for ((e, label), (_, n)) in slice.entries().iter().zip(&labels).zip(&normals) {
        let p = e.point;
        writeln!(
            out,
            "{},{},{},{},{label},{},{},{},{}",
            e.row,
            p.x,
            p.y,
            p.z,
            fmt_opt(n.map(|n| n.x)),
            fmt_opt(n.map(|n| n.y)),
            fmt_opt(n.map(|n| n.z)),
            u8::from(n.is_some())
        )?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let scan = load_scan(&args.scan)?;
    let file =
        File::open(&args.gt).with_context(|| format!("cannot open {}", args.gt.display()))?;
    let gt = GroundTruth::read_csv(BufReader::new(file), scan.rows(), scan.cols())
        .with_context(|| format!("cannot read ground truth {}", args.gt.display()))?;
    let params = args.threshold.params()?;

    let reports: Vec<EvalReport> = [
        NormalMethod::Baseline,
        NormalMethod::LabelRestricted(params),
    ]
    .iter()
    .map(|m| evaluate(m.name(), &m.estimate(&scan), &gt))
    .collect::<Result<_, _>>()?;
    for r in &reports {
        print!("{r}");
    }
    if let Some(path) = &args.csv {
        let mut w = create(path)?;
        writeln!(w, "{}", EvalReport::CSV_HEADER)?;
        for r in &reports {
            writeln!(w, "{}", r.csv_row())?;
        }
        w.flush()?;
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let preset: Preset = args.preset.into();
    let scene = build_scene(args.scene, args.wall_distance)?;
    let (scan, _) = sim::simulate(&preset.rig(), &scene)?;
    let params = args.threshold.params()?;
    println!(
        "preset={} beams={} azimuth_steps={} points={} repetitions={} warmup={}",
        preset.name(),
        scan.rows(),
        scan.cols(),
        scan.valid_count(),
        args.repetitions,
        args.warmup
    );
    let (base, lab) = time_pair(
        args.warmup as usize,
        args.repetitions as usize,
        || normals_baseline(&scan),
        || normals_labeled(&scan, &params),
    );
    println!(
        "baseline: {:.3} ms ± {:.3} ms",
        base.mean_ms(),
        base.std_ms()
    );
    println!("labeled:  {:.3} ms ± {:.3} ms", lab.mean_ms(), lab.std_ms());
    println!("ratio:    {:.2}", lab.mean_ms() / base.mean_ms());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Normals(a) => cmd_normals(a),
        Command::Slice(a) => cmd_slice(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
