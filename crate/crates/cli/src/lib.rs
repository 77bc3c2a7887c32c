//! Command-line front end: argument and config-file parsing, dispatch, CSV
//! output.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use pullstream::harness::{
    compare, figure_preset, replicate, replicate_seeds, sweep, write_error_summary, write_model_csv,
    write_sim_csv, Preset, Run, RunReport, SweepParameter, SweepSpec, DEFAULT_TARGET,
};
use pullstream::model::{
    run_model, ModelOptions, PeerSelection, ReplyMode, Scheme, SchemeSpec, Strategy, SystemParams,
};
use pullstream::sim::{SimConfig, DEFAULT_MEASURED_SLOTS, DEFAULT_WARMUP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pullstream", version, about = "Model and simulate pull-based P2P live streaming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Iterate the mean-field model and write `model.csv`.
    Model(Common),
    /// Run the simulator and write `sim.csv`.
    Sim(Common),
    /// Run both and write `model.csv`, `sim.csv` and `errors.csv`.
    Compare(Common),
    /// Sweep one parameter; one CSV per point plus `index.csv`.
    Sweep(SweepArgs),
    /// Reproduce a figure: fig3, fig4a, fig4b, fig5, fig6, fig7a, fig7b.
    Preset(PresetArgs),
}

/// Values settable on the command line or in a config file.
#[derive(Debug, Clone, Default, Args)]
struct Overrides {
    /// Overlay size N.
    #[arg(short = 'N', long = "overlay-size")]
    overlay_size: Option<usize>,
    /// Buffer size n.
    #[arg(short = 'n', long = "buffer-size")]
    buffer_size: Option<usize>,
    /// Neighbors per peer v.
    #[arg(short = 'v', long = "neighbors")]
    neighbor_count: Option<usize>,
    /// Reply number U.
    #[arg(short = 'U', long = "reply-number")]
    reply_number: Option<usize>,
    /// Push-pull split point d.
    #[arg(short = 'd', long = "split-point")]
    split_point: Option<usize>,
    /// cf, pf, ep or pushpull.
    #[arg(long)]
    scheme: Option<String>,
    /// latest, greedy or random.
    #[arg(long)]
    strategy: Option<String>,
    /// random or useful (default useful, random for ep).
    #[arg(long = "peer-selection")]
    peer_selection: Option<String>,
    /// single or multi (default multi when U > 1).
    #[arg(long = "reply-mode")]
    reply_mode: Option<String>,
    /// Total simulated slots, warmup included.
    #[arg(long)]
    slots: Option<usize>,
    /// Slots discarded before measuring.
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulation seeds per point, derived from --seed.
    #[arg(long)]
    replicates: Option<usize>,
    /// Presence level for the playout-delay metric.
    #[arg(long)]
    target: Option<f64>,
}

#[derive(Debug, Clone, Args)]
struct Output {
    /// Output directory, created if absent.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overwrite existing files.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct Common {
    #[command(flatten)]
    overrides: Overrides,
    /// `key = value` file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// v, U, d or target.
    #[arg(long)]
    param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Skip the model.
    #[arg(long)]
    no_model: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct PresetArgs {
    name: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<pullstream::Error> for CliError {
    fn from(e: pullstream::Error) -> Self {
        if e.is_validation() {
            CliError::Invalid(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses `argv` (program name first), runs the command and returns the exit
/// code. Human-readable output goes to `out`, diagnostics to `err`.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                EXIT_INVALID
            } else {
                let _ = write!(out, "{rendered}");
                EXIT_OK
            };
        }
    };
    match run(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Model(c) => model(c, out),
        Command::Sim(c) => simulate(c, out),
        Command::Compare(c) => compare_cmd(c, out),
        Command::Sweep(s) => sweep_cmd(s, out),
        Command::Preset(p) => preset(p, out),
    }
}

/// Fully resolved settings for one configuration.
#[derive(Debug, Clone, PartialEq)]
struct Settings {
    params: SystemParams,
    spec: SchemeSpec,
    slots: usize,
    warmup: usize,
    seed: u64,
    replicates: usize,
    target: f64,
}

impl Settings {
    fn sim_config(&self) -> SimConfig {
        SimConfig {
            params: self.params,
            spec: self.spec,
            slots: self.slots,
            warmup: self.warmup,
            seed: self.seed,
        }
    }

    fn seeds(&self) -> Vec<u64> {
        replicate_seeds(self.seed, self.replicates)
    }
}

fn resolve(common: &Common) -> CliResult<Settings> {
    let file = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => Overrides::default(),
    };
    let o = merge(&common.overrides, &file);
    let base = SystemParams::reference();
    let buffer_size = o.buffer_size.unwrap_or(base.buffer_size);
    let params = SystemParams {
        overlay_size: o.overlay_size.unwrap_or(base.overlay_size),
        buffer_size,
        neighbor_count: o.neighbor_count.unwrap_or(base.neighbor_count),
        reply_number: o.reply_number.unwrap_or(base.reply_number),
        // The default d only matters for push-pull; keep it inside a short buffer.
        split_point: o.split_point.unwrap_or(base.split_point.min(buffer_size)),
    };
    let scheme: Scheme = parse_or(&o.scheme, Scheme::PeerFirst)?;
    let strategy: Strategy = parse_or(&o.strategy, Strategy::LatestFirst)?;
    let default_peer = match scheme {
        Scheme::ChunkFirst | Scheme::PeerFirst => PeerSelection::RandomUsefulPeer,
        _ => PeerSelection::RandomPeer,
    };
    let default_reply = if params.reply_number > 1 && matches!(scheme, Scheme::ChunkFirst | Scheme::PeerFirst) {
        ReplyMode::MultiReply
    } else {
        ReplyMode::SingleReply
    };
    let peer_selection = parse_or(&o.peer_selection, default_peer)?;
    let reply_mode = parse_or(&o.reply_mode, default_reply)?;
    let spec = match scheme {
        Scheme::PushPull => SchemeSpec::push_pull(),
        _ => SchemeSpec::new(scheme, strategy, peer_selection, reply_mode),
    };
    let warmup = o.warmup.unwrap_or(DEFAULT_WARMUP);
    let settings = Settings {
        params,
        spec,
        slots: o.slots.unwrap_or(warmup + DEFAULT_MEASURED_SLOTS),
        warmup,
        seed: o.seed.unwrap_or(0),
        replicates: o.replicates.unwrap_or(1),
        target: o.target.unwrap_or(DEFAULT_TARGET),
    };
    params.validate()?;
    spec.validate()?;
    settings.sim_config().validate()?;
    if settings.replicates == 0 {
        return Err(CliError::Invalid("replicates must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&settings.target) {
        return Err(CliError::Invalid(format!(
            "target must lie in [0, 1] (got {})",
            settings.target
        )));
    }
    Ok(settings)
}

fn parse_or<T>(raw: &Option<String>, default: T) -> CliResult<T>
where
    T: std::str::FromStr<Err = pullstream::Error>,
{
    match raw {
        Some(s) => Ok(s.parse()?),
        None => Ok(default),
    }
}

fn merge(cli: &Overrides, file: &Overrides) -> Overrides {
    Overrides {
        overlay_size: cli.overlay_size.or(file.overlay_size),
        buffer_size: cli.buffer_size.or(file.buffer_size),
        neighbor_count: cli.neighbor_count.or(file.neighbor_count),
        reply_number: cli.reply_number.or(file.reply_number),
        split_point: cli.split_point.or(file.split_point),
        scheme: cli.scheme.clone().or_else(|| file.scheme.clone()),
        strategy: cli.strategy.clone().or_else(|| file.strategy.clone()),
        peer_selection: cli.peer_selection.clone().or_else(|| file.peer_selection.clone()),
        reply_mode: cli.reply_mode.clone().or_else(|| file.reply_mode.clone()),
        slots: cli.slots.or(file.slots),
        warmup: cli.warmup.or(file.warmup),
        seed: cli.seed.or(file.seed),
        replicates: cli.replicates.or(file.replicates),
        target: cli.target.or(file.target),
    }
}

/// Parses `key = value` lines. `#` starts a comment. Keys are the flag
/// names, long or short, with `-` and `_` interchangeable.
fn parse_config(text: &str) -> CliResult<Overrides> {
    let mut o = Overrides::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| CliError::Invalid(format!("config line {}: {msg}", lineno + 1));
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let num = |v: &str| v.parse::<usize>().map_err(|_| bad(&format!("`{v}` is not a count")));
        match key.as_str() {
            "N" | "overlay-size" => o.overlay_size = Some(num(value)?),
            "n" | "buffer-size" => o.buffer_size = Some(num(value)?),
            "v" | "neighbors" => o.neighbor_count = Some(num(value)?),
            "U" | "reply-number" => o.reply_number = Some(num(value)?),
            "d" | "split-point" => o.split_point = Some(num(value)?),
            "scheme" => o.scheme = Some(value.to_string()),
            "strategy" => o.strategy = Some(value.to_string()),
            "peer-selection" => o.peer_selection = Some(value.to_string()),
            "reply-mode" => o.reply_mode = Some(value.to_string()),
            "slots" => o.slots = Some(num(value)?),
            "warmup" => o.warmup = Some(num(value)?),
            "replicates" => o.replicates = Some(num(value)?),
            "seed" => o.seed = Some(value.parse().map_err(|_| bad(&format!("`{value}` is not a seed")))?),
            "target" => o.target = Some(value.parse().map_err(|_| bad(&format!("`{value}` is not a number")))?),
            other => return Err(bad(&format!("unknown key `{other}`"))),
        }
    }
    Ok(o)
}

/// Refuses to clobber existing files unless forced, then creates the
/// directory.
fn prepare(output: &Output, files: &[PathBuf]) -> CliResult<()> {
    if !output.force {
        if let Some(existing) = files.iter().find(|f| f.exists()) {
            return Err(CliError::Invalid(format!(
                "{} exists; pass --force to overwrite",
                existing.display()
            )));
        }
    }
    for dir in files.iter().filter_map(|f| f.parent()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    Ok(())
}

fn create(path: &Path) -> CliResult<fs::File> {
    fs::File::create(path).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn runtime(e: std::io::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn describe(s: &Settings) -> String {
    let p = &s.params;
    format!(
        "scheme={} strategy={} peer-selection={} reply-mode={} N={} n={} v={} U={} d={}",
        s.spec.scheme,
        s.spec.strategy,
        s.spec.peer_selection,
        s.spec.reply_mode,
        p.overlay_size,
        p.buffer_size,
        p.neighbor_count,
        p.reply_number,
        p.split_point
    )
}

fn delay_text(delay: Option<usize>) -> String {
    delay.map_or_else(|| "never".to_string(), |d| d.to_string())
}

fn model(c: Common, out: &mut dyn Write) -> CliResult<()> {
    let s = resolve(&c)?;
    let path = c.output.out.join("model.csv");
    prepare(&c.output, std::slice::from_ref(&path))?;
    let run = run_model(&s.params, &s.spec, &ModelOptions::default())?;
    write_model_csv(create(&path)?, run.profile.values())?;
    let m = pullstream::model::playout_metrics(run.profile.values(), s.target);
    writeln!(out, "{}", describe(&s)).map_err(runtime)?;
    writeln!(
        out,
        "playout probability {:.6}; delay to reach {} at position {}; {} iterations, residual {:.3e}",
        m.probability,
        s.target,
        delay_text(m.delay),
        run.convergence.iterations,
        run.convergence.residual
    )
    .map_err(runtime)?;
    writeln!(out, "wrote {}", path.display()).map_err(runtime)?;
    Ok(())
}

fn simulate(c: Common, out: &mut dyn Write) -> CliResult<()> {
    let s = resolve(&c)?;
    let path = c.output.out.join("sim.csv");
    prepare(&c.output, std::slice::from_ref(&path))?;
    let profile = replicate(&s.sim_config(), &s.seeds())?;
    write_sim_csv(create(&path)?, &profile)?;
    let m = pullstream::model::playout_metrics(&profile.values, s.target);
    writeln!(out, "{}", describe(&s)).map_err(runtime)?;
    writeln!(
        out,
        "simulated playout probability {:.6}; delay to reach {} at position {}",
        m.probability,
        s.target,
        delay_text(m.delay)
    )
    .map_err(runtime)?;
    writeln!(out, "wrote {}", path.display()).map_err(runtime)?;
    Ok(())
}

fn compare_cmd(c: Common, out: &mut dyn Write) -> CliResult<()> {
    let s = resolve(&c)?;
    let dir = &c.output.out;
    let paths = [dir.join("model.csv"), dir.join("sim.csv"), dir.join("errors.csv")];
    prepare(&c.output, &paths)?;
    let run = run_model(&s.params, &s.spec, &ModelOptions::default())?;
    let empirical = replicate(&s.sim_config(), &s.seeds())?;
    let summary = compare(&run.profile, &empirical)?;
    write_model_csv(create(&paths[0])?, run.profile.values())?;
    write_sim_csv(create(&paths[1])?, &empirical)?;
    write_error_summary(create(&paths[2])?, &summary)?;
    writeln!(out, "{}", describe(&s)).map_err(runtime)?;
    writeln!(
        out,
        "playout probability model {:.6} sim {:.6}; mae {:.6}, max abs error {:.6}",
        run.profile.last(),
        empirical.last(),
        summary.mae,
        summary.max_abs_error
    )
    .map_err(runtime)?;
    writeln!(out, "wrote {}", dir.display()).map_err(runtime)?;
    Ok(())
}

/// File stem for a report label: `/` and `=` become `_`.
fn stem(label: &str) -> String {
    label.replace(['/', '='], "_")
}

fn report_files(dir: &Path, stem: &str, run: &Run) -> Vec<PathBuf> {
    let mut files = Vec::new();
    if run.model {
        files.push(dir.join(format!("{stem}_model.csv")));
    }
    if run.sim.is_some() {
        files.push(dir.join(format!("{stem}_sim.csv")));
    }
    if run.model && run.sim.is_some() {
        files.push(dir.join(format!("{stem}_errors.csv")));
    }
    files
}

fn write_report(dir: &Path, stem: &str, report: &RunReport) -> CliResult<()> {
    if let Some(m) = &report.model {
        write_model_csv(create(&dir.join(format!("{stem}_model.csv")))?, m.values())?;
    }
    if let Some(e) = &report.empirical {
        write_sim_csv(create(&dir.join(format!("{stem}_sim.csv")))?, e)?;
    }
    if let Some(s) = &report.errors {
        write_error_summary(create(&dir.join(format!("{stem}_errors.csv")))?, s)?;
    }
    Ok(())
}

fn opt6(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.6}"))
}

/// `index.csv`: one row per report with its files and headline numbers.
fn write_index(path: &Path, rows: &[(String, Option<f64>, &RunReport)]) -> CliResult<()> {
    let mut f = std::io::BufWriter::new(create(path)?);
    let io = |e: std::io::Error| CliError::Runtime(format!("cannot write {}: {e}", path.display()));
    writeln!(
        f,
        "label,value,model_playout,model_delay,sim_playout,sim_delay,mae,max_abs_error"
    )
    .map_err(io)?;
    for (label, value, r) in rows {
        let delay = |m: Option<pullstream::model::PlayoutMetrics>| {
            m.and_then(|m| m.delay).map_or_else(String::new, |d| d.to_string())
        };
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            label,
            value.map_or_else(String::new, |v| v.to_string()),
            opt6(r.model_metrics.map(|m| m.probability)),
            delay(r.model_metrics),
            opt6(r.empirical_metrics.map(|m| m.probability)),
            delay(r.empirical_metrics),
            opt6(r.errors.as_ref().map(|e| e.mae)),
            opt6(r.errors.as_ref().map(|e| e.max_abs_error)),
        )
        .map_err(io)?;
    }
    f.flush().map_err(io)?;
    Ok(())
}

fn sweep_cmd(a: SweepArgs, out: &mut dyn Write) -> CliResult<()> {
    let s = resolve(&a.common)?;
    let parameter: SweepParameter = a.param.parse()?;
    let replicates = if a.common.overrides.replicates.is_some() || a.no_model {
        s.replicates
    } else {
        0
    };
    let spec = SweepSpec {
        parameter,
        values: a.values.clone(),
        base: s.sim_config(),
        options: ModelOptions::default(),
        model: !a.no_model,
        replicates,
        target: s.target,
    };
    let runs = spec.runs()?;
    let dir = &a.common.output.out;
    let stems: Vec<String> = (0..runs.len()).map(|i| format!("point_{:03}", i + 1)).collect();
    let mut files: Vec<PathBuf> = runs
        .iter()
        .zip(&stems)
        .flat_map(|(r, st)| report_files(dir, st, r))
        .collect();
    files.push(dir.join("index.csv"));
    prepare(&a.common.output, &files)?;
    let reports = sweep(&spec)?;
    for (r, st) in reports.iter().zip(&stems) {
        write_report(dir, st, r)?;
    }
    let rows: Vec<_> = reports
        .iter()
        .zip(&stems)
        .zip(&a.values)
        .map(|((r, st), &v)| (st.clone(), Some(v), r))
        .collect();
    write_index(&dir.join("index.csv"), &rows)?;
    writeln!(out, "{}", describe(&s)).map_err(runtime)?;
    for ((r, st), v) in reports.iter().zip(&stems).zip(&a.values) {
        writeln!(
            out,
            "{st} {parameter}={v}: model {} sim {}",
            opt6(r.model_metrics.map(|m| m.probability)),
            opt6(r.empirical_metrics.map(|m| m.probability)),
        )
        .map_err(runtime)?;
    }
    writeln!(out, "wrote {}", dir.display()).map_err(runtime)?;
    Ok(())
}

fn preset(p: PresetArgs, out: &mut dyn Write) -> CliResult<()> {
    let preset: Preset = p.name.parse()?;
    let dir = p.output.out.join(preset.name());
    let runs = preset.runs();
    let stems: Vec<String> = runs
        .iter()
        .map(|r| stem(r.label.split_once('/').map_or(r.label.as_str(), |(_, rest)| rest)))
        .collect();
    let mut files: Vec<PathBuf> = runs
        .iter()
        .zip(&stems)
        .flat_map(|(r, st)| report_files(&dir, st, r))
        .collect();
    files.push(dir.join("index.csv"));
    prepare(&p.output, &files)?;
    let reports = figure_preset(preset.name())?;
    for (r, st) in reports.iter().zip(&stems) {
        write_report(&dir, st, r)?;
    }
    let rows: Vec<_> = reports.iter().zip(&stems).map(|(r, st)| (st.clone(), None, r)).collect();
    write_index(&dir.join("index.csv"), &rows)?;
    for (r, st) in reports.iter().zip(&stems) {
        writeln!(
            out,
            "{st}: model {} sim {} mae {}",
            opt6(r.model_metrics.map(|m| m.probability)),
            opt6(r.empirical_metrics.map(|m| m.probability)),
            opt6(r.errors.as_ref().map(|e| e.mae)),
        )
        .map_err(runtime)?;
    }
    if preset == Preset::Fig7b {
        let push = reports[0].model.as_ref().map(|m| m.last()).unwrap_or(f64::NAN);
        let pp = reports[1].model.as_ref().map(|m| m.last()).unwrap_or(f64::NAN);
        writeln!(
            out,
            "push-pull (d=20) raises the model playout probability from {push:.6} to {pp:.6}, {:+.1}% relative",
            100.0 * (pp / push - 1.0)
        )
        .map_err(runtime)?;
    }
    writeln!(out, "wrote {}", dir.display()).map_err(runtime)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing() {
        let o = parse_config("# comment\nN = 50\nscheme = cf  # trailing\npeer_selection = useful\n\nU=3\n").unwrap();
        assert_eq!(o.overlay_size, Some(50));
        assert_eq!(o.scheme.as_deref(), Some("cf"));
        assert_eq!(o.peer_selection.as_deref(), Some("useful"));
        assert_eq!(o.reply_number, Some(3));
        assert!(parse_config("bogus = 1").is_err());
        assert!(parse_config("N 50").is_err());
        assert!(parse_config("N = x").is_err());
    }

    #[test]
    fn flags_override_file() {
        let cli = Overrides {
            overlay_size: Some(10),
            ..Overrides::default()
        };
        let file = Overrides {
            overlay_size: Some(50),
            buffer_size: Some(8),
            ..Overrides::default()
        };
        let m = merge(&cli, &file);
        assert_eq!((m.overlay_size, m.buffer_size), (Some(10), Some(8)));
    }

    #[test]
    fn label_stems() {
        assert_eq!(stem("cf-greedy/v=12"), "cf-greedy_v_12");
    }
}
