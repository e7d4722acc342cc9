use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::{json, Map, Value};

use stopflow::classifier::{classify, predict_attractor, predict_period};
use stopflow::dsge::{random_dsge_start, simulate_dsge, DsgeParams, DsgeState, Preset, ShockSequence};
use stopflow::dynamics::{detect_attractor, find_periodic_orbits, simulate, DetectionConfig, ORBIT_GRID};
use stopflow::hitting_map::{build_t, default_k_max, fixed_points, ladder, t_star};
use stopflow::output::{
    dsge_rows, fmt_f64, fmt_opt, json_document, trajectory_rows, write_csv, DSGE_HEADER, TRAJECTORY_HEADER,
};
use stopflow::planar::{PlanarParams, PlanarState};
use stopflow::sweep::{omega_map, run_sweep, Axis, CellStatus, OmegaGrid, SweepConfig};

#[derive(Parser, Debug)]
#[command(name = "stopflow", version, about = "Stop-operator map laboratory", allow_negative_numbers = true)]
struct Cli {
    /// JSON file with default values for any flag (flags win).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Regime and stable-period prediction for one parameter pair.
    Classify(Common),
    /// Trajectory of the planar map.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_negative_numbers = true)]
        x0: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        s0: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        detection: DetectionFlags,
    },
    /// Regime atlas over a (lambda, beta) grid, checked against simulation.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `lo,hi`
        #[arg(long, allow_hyphen_values = true)]
        lambda_range: Option<String>,
        /// `lo,hi`
        #[arg(long, allow_hyphen_values = true)]
        beta_range: Option<String>,
        /// Cells per axis.
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long)]
        exclude_within: Option<f64>,
        #[command(flatten)]
        detection: DetectionFlags,
    },
    /// Stable-period domains over beta and -1/lambda.
    OmegaMap {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        beta_range: Option<String>,
        /// Range of -1/lambda, `lo,hi`.
        #[arg(long, allow_hyphen_values = true)]
        m_range: Option<String>,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Breakpoints, pieces and fixed points of the first-hitting map.
    HittingMap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kmax: Option<u32>,
    },
    /// Periodic points on the line s = 1.
    Orbits {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        period: Option<u32>,
        #[arg(long, allow_negative_numbers = true)]
        x_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        x_max: Option<f64>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Trajectory of the macroeconomic model.
    Dsge {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        /// Half-width of the random start box for (y, u, v).
        #[arg(long)]
        scale: Option<f64>,
        /// Explicit start `y,u,v,s`.
        #[arg(long, allow_hyphen_values = true)]
        start: Option<String>,
        /// JSON file `{"eps": [...], "eta": [...], "xi": [...]}`.
        #[arg(long)]
        shocks: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true, conflicts_with = "a")]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug, Clone)]
struct DetectionFlags {
    #[arg(long)]
    transient: Option<u64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    period_max: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

/// Failure that should exit with the I/O status.
#[derive(Debug)]
struct IoFailure(String);

impl std::fmt::Display for IoFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for IoFailure {}

/// Flag values with fallbacks from the config file.
struct Settings {
    file: Map<String, Value>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Settings { file: Map::new() }) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| IoFailure(format!("reading config {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        match value {
            Value::Object(file) => Ok(Settings { file }),
            _ => bail!("config {} must hold a JSON object", path.display()),
        }
    }

    fn get<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .with_context(|| format!("config key {key:?} has the wrong type")),
        }
    }

    fn or<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    fn planar(&self, c: &Common) -> Result<PlanarParams> {
        let lambda = self.get(c.lambda, "lambda")?.ok_or_else(|| anyhow!("--lambda is required"))?;
        let (beta, a) = if c.beta.is_some() || c.a.is_some() {
            (c.beta, c.a)
        } else {
            (self.get(None, "beta")?, self.get(None, "a")?)
        };
        Ok(match (beta, a) {
            (Some(b), None) => PlanarParams::from_beta(lambda, b)?,
            (None, Some(a)) => PlanarParams::new(lambda, a)?,
            (Some(_), Some(_)) => bail!("give either beta or a, not both"),
            (None, None) => bail!("--beta or --a is required"),
        })
    }

    fn detection(&self, c: &Common, d: &DetectionFlags, base: DetectionConfig) -> Result<DetectionConfig> {
        let cfg = DetectionConfig {
            transient: self.or(d.transient, "transient", base.transient)?,
            window: self.or(d.window, "window", base.window)?,
            tol: self.or(d.tol, "tol", base.tol)?,
            period_max: self.or(d.period_max, "period_max", base.period_max)?,
            seed: self.or(c.seed, "seed", base.seed)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn format(&self, c: &Common, default: Format) -> Result<Format> {
        self.or(c.format, "format", default)
    }

    fn out(&self, c: &Common) -> Result<Option<PathBuf>> {
        self.get(c.out.clone(), "out")
    }

    fn range(&self, flag: Option<String>, key: &str, default: (f64, f64)) -> Result<(f64, f64)> {
        if let Some(text) = flag {
            return parse_pair(&text).with_context(|| format!("--{} {text:?}", key.replace('_', "-")));
        }
        match self.file.get(key) {
            None => Ok(default),
            Some(v) => {
                let pair: [f64; 2] = serde_json::from_value(v.clone())
                    .with_context(|| format!("config key {key:?} must be [lo, hi]"))?;
                Ok((pair[0], pair[1]))
            }
        }
    }
}

fn parse_pair(text: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        bail!("expected lo,hi");
    }
    Ok((parts[0].parse()?, parts[1].parse()?))
}

fn parse_list(text: &str, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = text.split(',').map(|t| t.trim().parse::<f64>()).collect::<std::result::Result<_, _>>()?;
    if v.len() != n {
        bail!("expected {n} comma-separated numbers");
    }
    Ok(v)
}

/// Output sink, opened lazily so that argument errors leave no file behind.
fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| IoFailure(format!("creating {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(path: &Option<PathBuf>, kind: &str, data: &Value) -> Result<()> {
    let doc = json_document(kind, data)?;
    let mut out = open_out(path)?;
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| IoFailure(e.to_string()))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| io_err(path, e))?;
    Ok(())
}

fn write_table<I, R>(path: &Option<PathBuf>, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let out = open_out(path)?;
    write_csv(out, header, rows).map_err(|e| io_err(path, e))?;
    Ok(())
}

fn io_err(path: &Option<PathBuf>, e: io::Error) -> anyhow::Error {
    let target = path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "stdout".into());
    IoFailure(format!("writing {target}: {e}")).into()
}

fn params_json(p: &PlanarParams) -> Value {
    json!({ "lambda": p.lambda(), "a": p.a(), "beta": p.beta(), "x_star": p.x_star() })
}

fn cmd_classify(s: &Settings, c: &Common) -> Result<()> {
    let p = s.planar(c)?;
    let label = classify(&p)?;
    let period = predict_period(&p).ok();
    let attractor = predict_attractor(&p)?;
    match s.format(c, Format::Json)? {
        Format::Json => write_json(
            &s.out(c)?,
            "classification",
            &json!({
                "params": params_json(&p),
                "case": label.case,
                "descriptor": label.descriptor,
                "prediction": period,
                "predicted_period": attractor.predicted_period(),
                "attractor": attractor,
            }),
        ),
        Format::Csv => write_table(
            &s.out(c)?,
            &["lambda", "beta", "a", "case", "predicted_period", "descriptor"],
            [vec![
                fmt_f64(p.lambda()),
                fmt_f64(p.beta()),
                fmt_f64(p.a()),
                label.case.to_string(),
                fmt_opt(attractor.predicted_period()),
                label.descriptor.clone(),
            ]],
        ),
    }
}

fn cmd_simulate(s: &Settings, c: &Common, x0: Option<f64>, s0: Option<f64>, n: Option<usize>, d: &DetectionFlags) -> Result<()> {
    let p = s.planar(c)?;
    let st0 = PlanarState::new(s.or(x0, "x0", 0.1)?, s.or(s0, "s0", 0.0)?)?;
    let n = s.or(n, "n", 1000)?;
    let traj = simulate(&p, st0, n);
    match s.format(c, Format::Csv)? {
        Format::Csv => write_table(&s.out(c)?, &TRAJECTORY_HEADER, trajectory_rows(&traj)),
        Format::Json => {
            let cfg = s.detection(c, d, DetectionConfig::default())?;
            let report = detect_attractor(&p, st0, &cfg)?;
            let points: Vec<[f64; 2]> = traj.iter().map(|st| [st.x(), st.s()]).collect();
            write_json(
                &s.out(c)?,
                "trajectory",
                &json!({ "params": params_json(&p), "detection": cfg, "attractor": report, "trajectory": points }),
            )
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    s: &Settings,
    c: &Common,
    lambda_range: Option<String>,
    beta_range: Option<String>,
    resolution: Option<usize>,
    starts: Option<usize>,
    exclude_within: Option<f64>,
    d: &DetectionFlags,
) -> Result<()> {
    let base = SweepConfig::atlas();
    let res = s.get(resolution, "resolution")?;
    let (ll, lh) = s.range(lambda_range, "lambda_range", (base.lambda.lo, base.lambda.hi))?;
    let (bl, bh) = s.range(beta_range, "beta_range", (base.beta.lo, base.beta.hi))?;
    let cfg = SweepConfig {
        lambda: Axis::new(ll, lh, res.unwrap_or(base.lambda.n))?,
        beta: Axis::new(bl, bh, res.unwrap_or(base.beta.n))?,
        starts: s.or(starts, "starts", base.starts)?,
        exclude_within: s.or(exclude_within, "exclude_within", base.exclude_within)?,
        detection: s.detection(c, d, base.detection)?,
    };
    let rows = run_sweep(&cfg)?;
    match s.format(c, Format::Csv)? {
        Format::Csv => write_table(
            &s.out(c)?,
            &["lambda", "beta", "case", "predicted_period", "observed_period", "agreement", "status", "observed", "error"],
            rows.iter().map(|r| {
                vec![
                    fmt_f64(r.lambda),
                    fmt_f64(r.beta),
                    fmt_opt(r.case),
                    fmt_opt(r.predicted_period),
                    fmt_opt(r.observed_period),
                    match r.status {
                        CellStatus::Agree => "1".into(),
                        CellStatus::Disagree => "0".into(),
                        _ => String::new(),
                    },
                    r.status.to_string(),
                    r.observed.clone(),
                    r.error.clone().unwrap_or_default(),
                ]
            }),
        ),
        Format::Json => write_json(&s.out(c)?, "sweep", &json!({ "config": cfg, "rows": rows })),
    }
}

fn cmd_omega_map(s: &Settings, c: &Common, beta_range: Option<String>, m_range: Option<String>, resolution: Option<usize>) -> Result<()> {
    let base = OmegaGrid::default();
    let res = s.get(resolution, "resolution")?;
    let (bl, bh) = s.range(beta_range, "beta_range", (base.beta.lo, base.beta.hi))?;
    let (ml, mh) = s.range(m_range, "m_range", (base.m.lo, base.m.hi))?;
    let grid = OmegaGrid {
        beta: Axis::new(bl, bh, res.unwrap_or(base.beta.n))?,
        m: Axis::new(ml, mh, res.unwrap_or(base.m.n))?,
    };
    let rows = omega_map(&grid)?;
    match s.format(c, Format::Csv)? {
        Format::Csv => write_table(
            &s.out(c)?,
            &["beta", "m", "lambda", "k", "period"],
            rows.iter().map(|r| {
                vec![fmt_f64(r.beta), fmt_f64(r.m), fmt_f64(r.lambda), fmt_opt(r.k), fmt_opt(r.period)]
            }),
        ),
        Format::Json => write_json(&s.out(c)?, "omega_map", &json!({ "grid": grid, "rows": rows })),
    }
}

fn cmd_hitting_map(s: &Settings, c: &Common, kmax: Option<u32>) -> Result<()> {
    let p = s.planar(c)?;
    let k_max = match s.get(kmax, "kmax")? {
        Some(k) => k,
        None => default_k_max(&p)?,
    };
    let lad = ladder(&p, k_max)?;
    match s.format(c, Format::Csv)? {
        Format::Csv => write_table(
            &s.out(c)?,
            &["k", "r_k", "q_k", "T_r_k", "r_gap", "q_gap"],
            (0..k_max as usize).map(|i| {
                vec![
                    (i + 1).to_string(),
                    fmt_f64(lad.r[i]),
                    fmt_f64(lad.q[i]),
                    fmt_f64(lad.t_at_r(i as u32 + 1)),
                    fmt_f64(lad.r_gap[i]),
                    fmt_f64(lad.q_gap[i]),
                ]
            }),
        ),
        Format::Json => {
            let t = build_t(&p, k_max)?;
            write_json(
                &s.out(c)?,
                "hitting_map",
                &json!({
                    "params": params_json(&p),
                    "t_star": t_star(&p)?,
                    "ladder": lad,
                    "pieces": t.pieces,
                    "fixed_points": fixed_points(&p, k_max)?,
                }),
            )
        }
    }
}

fn cmd_orbits(s: &Settings, c: &Common, period: Option<u32>, x_min: Option<f64>, x_max: Option<f64>, grid: Option<usize>) -> Result<()> {
    let p = s.planar(c)?;
    let period = s.get(period, "period")?.ok_or_else(|| anyhow!("--period is required"))?;
    let reach = 2.0 * p.x_star().abs().max(1.0) + 2.0;
    let lo = s.or(x_min, "x_min", -reach)?;
    let hi = s.or(x_max, "x_max", reach)?;
    let grid = s.or(grid, "grid", ORBIT_GRID)?;
    let roots = find_periodic_orbits(&p, period, (lo, hi), grid)?;
    match s.format(c, Format::Csv)? {
        Format::Csv => write_table(
            &s.out(c)?,
            &["index", "x", "s"],
            roots.iter().enumerate().map(|(i, st)| vec![i.to_string(), fmt_f64(st.x()), fmt_f64(st.s())]),
        ),
        Format::Json => write_json(
            &s.out(c)?,
            "orbits",
            &json!({ "params": params_json(&p), "period": period, "x_range": [lo, hi], "grid": grid, "points": roots }),
        ),
    }
}

const DSGE_KEYS: [&str; 8] = ["a1", "b1", "b2", "c1", "c2", "c3", "rho", "u_target"];

#[allow(clippy::too_many_arguments)]
fn cmd_dsge(
    s: &Settings,
    c: &Common,
    preset: Option<String>,
    n: Option<usize>,
    scale: Option<f64>,
    start: Option<String>,
    shocks: Option<PathBuf>,
) -> Result<()> {
    let params = match s.get(preset, "preset")? {
        Some(name) => name.parse::<Preset>()?.params(),
        None => {
            let mut obj = Map::new();
            for k in DSGE_KEYS {
                if let Some(v) = s.file.get(k) {
                    obj.insert(k.into(), v.clone());
                }
            }
            if obj.is_empty() {
                bail!("give --preset or model parameters in --config");
            }
            serde_json::from_value::<DsgeParams>(Value::Object(obj)).context("model parameters")?
        }
    };
    let n = s.or(n, "n", 2000)?;
    let st0 = match s.get(start, "start")? {
        Some(text) => {
            let v = parse_list(&text, 4).context("--start")?;
            DsgeState::new(&params, v[0], v[1], v[2], v[3])?
        }
        None => random_dsge_start(&params, s.or(c.seed, "seed", 0)?, 0, s.or(scale, "scale", 1000.0)?),
    };
    let shocks = match s.get(shocks, "shocks")? {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| IoFailure(format!("reading shocks {}: {e}", path.display())))?;
            let raw: ShockFile = serde_json::from_str(&text).context("parsing shocks")?;
            ShockSequence::new(raw.eps, raw.eta, raw.xi)?
        }
        None => ShockSequence::zero(),
    };
    let traj = simulate_dsge(&params, st0, n, &shocks)?;
    match s.format(c, Format::Csv)? {
        Format::Csv => write_table(&s.out(c)?, &DSGE_HEADER, dsge_rows(&traj)),
        Format::Json => write_json(&s.out(c)?, "dsge_trajectory", &json!({ "params": params, "trajectory": traj })),
    }
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct ShockFile {
    eps: Vec<f64>,
    eta: Vec<f64>,
    xi: Vec<f64>,
}

fn run(cli: Cli) -> Result<()> {
    let s = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Classify(c) => cmd_classify(&s, &c),
        Command::Simulate { common, x0, s0, n, detection } => cmd_simulate(&s, &common, x0, s0, n, &detection),
        Command::Sweep { common, lambda_range, beta_range, resolution, starts, exclude_within, detection } => {
            cmd_sweep(&s, &common, lambda_range, beta_range, resolution, starts, exclude_within, &detection)
        }
        Command::OmegaMap { common, beta_range, m_range, resolution } => {
            cmd_omega_map(&s, &common, beta_range, m_range, resolution)
        }
        Command::HittingMap { common, kmax } => cmd_hitting_map(&s, &common, kmax),
        Command::Orbits { common, period, x_min, x_max, grid } => cmd_orbits(&s, &common, period, x_min, x_max, grid),
        Command::Dsge { common, preset, n, scale, start, shocks } => {
            cmd_dsge(&s, &common, preset, n, scale, start, shocks)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<IoFailure>() || c.is::<io::Error>()) {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
