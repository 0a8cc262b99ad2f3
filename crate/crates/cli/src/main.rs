//! `tsync` - generate training data, train the learned synchronizer and run
//! Monte-Carlo error-probability sweeps against the classic correlator.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ofdm_tsync::channel::{load_tdl_profile, DelayProfile};
use ofdm_tsync::dataset::{generate_dataset, train_pipeline, Dataset, Hyperparams};
use ofdm_tsync::eval::{
    complexity_cm, emit_results, emit_svg, preset_scenarios, run_curve, ChannelSpec,
    ComplexityMethod, ErrorCurve, Method, Preset, Scenario, ThetaPolicy,
};
use ofdm_tsync::label::{LabelMode, LosPrior};
use ofdm_tsync::network::Mlp;
use ofdm_tsync::rng::derive_seed;
use ofdm_tsync::signal::OfdmConfig;

#[derive(Parser)]
#[command(
    name = "tsync",
    about = "OFDM timing-synchronization laboratory",
    version,
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Frame config file (`n = ...`, `ng = ...`, `zc_root = ...`); the
    /// built-in default is n=128, ng=32, zc_root=25.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; every random stream derives from it.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a training dataset file.
    GenData {
        #[command(flatten)]
        common: CommonArgs,
        /// Output dataset path.
        #[arg(long)]
        out: PathBuf,
        /// Number of samples.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// LOS prior in samples; defaults to ceil(7 ng / 8).
        #[arg(long)]
        los_ratio: Option<usize>,
        /// Label shape.
        #[arg(long, value_enum, default_value_t = LabelArg::Triangular)]
        label: LabelArg,
    },
    /// Train the synchronizer network on a dataset file.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Input dataset path.
        #[arg(long)]
        data: PathBuf,
        /// Output model path.
        #[arg(long)]
        out: PathBuf,
        /// Maximum training epochs.
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        /// Minibatch size (1 = pure per-sample SGD).
        #[arg(long, default_value_t = 1)]
        batch: usize,
        /// SGD learning rate.
        #[arg(long, default_value_t = 0.001)]
        lr: f64,
        /// Early-stopping patience in epochs.
        #[arg(long, default_value_t = 10)]
        patience: usize,
        /// Optional CSV path for the per-epoch loss trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Evaluate methods on one scenario and write a results CSV.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Trained model file (needed when `learned` is among the methods).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Channel under test: `exp:<taps>:<eta>`, `tdl-b`, `tdl-c` or
        /// `tdl:<path>`.
        #[arg(long, default_value = "exp:28:0.08525")]
        channel: String,
        /// Comma-separated SNR list in dB.
        #[arg(long, default_value = "-2,0,2,4,6,8,10", value_delimiter = ',')]
        snrs: Vec<f64>,
        /// Trials per SNR point.
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        /// Normalized carrier frequency offset.
        #[arg(long, default_value_t = 0.0)]
        cfo: f64,
        /// Timing offset policy: `random` or a fixed integer.
        #[arg(long, default_value = "random")]
        theta: String,
        /// Methods to evaluate.
        #[arg(long, default_value = "classic,learned", value_delimiter = ',')]
        methods: Vec<MethodArg>,
        /// Optional SVG plot path.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run a preset experiment suite end to end (data, training, curves).
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory for datasets, models, CSVs and plots.
        #[arg(long)]
        out: PathBuf,
        /// Which preset group to run.
        #[arg(long, value_enum, default_value_t = PresetArg::Effectiveness)]
        preset: PresetArg,
        /// Training-set size per model.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Trials per SNR point.
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        /// Maximum training epochs.
        #[arg(long, default_value_t = 100)]
        epochs: usize,
    },
    /// Print the complex-multiplication counts of the compared methods.
    Complexity {
        #[command(flatten)]
        common: CommonArgs,
        /// Optional output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Channel tap count entering the iterative method's count.
        #[arg(long, default_value_t = 28)]
        taps: usize,
        /// Optional search-range sweep `start:end:step` (e.g. `160:1024:16`).
        #[arg(long)]
        ns_sweep: Option<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LabelArg {
    Triangular,
    Rectangular,
}

impl From<LabelArg> for LabelMode {
    fn from(value: LabelArg) -> Self {
        match value {
            LabelArg::Triangular => LabelMode::Triangular,
            LabelArg::Rectangular => LabelMode::Rectangular,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Classic,
    Learned,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PresetArg {
    Effectiveness,
    Robustness,
    Generalization,
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<OfdmConfig, Box<dyn std::error::Error>> {
    Ok(match &common.config {
        Some(path) => OfdmConfig::from_file(path)?,
        None => OfdmConfig::new(128, 32, 25)?,
    })
}

fn parse_channel(spec: &str) -> Result<ChannelSpec, Box<dyn std::error::Error>> {
    if spec == "tdl-b" {
        return Ok(ChannelSpec::Tdl(DelayProfile::tdl_b()));
    }
    if spec == "tdl-c" {
        return Ok(ChannelSpec::Tdl(DelayProfile::tdl_c()));
    }
    if let Some(path) = spec.strip_prefix("tdl:") {
        return Ok(ChannelSpec::Tdl(load_tdl_profile(Path::new(path))?));
    }
    if let Some(rest) = spec.strip_prefix("exp:") {
        let (taps, eta) = rest
            .split_once(':')
            .ok_or("expected exp:<taps>:<eta>")?;
        return Ok(ChannelSpec::ExpDecay { taps: taps.parse()?, eta: eta.parse()? });
    }
    Err(format!("unknown channel spec `{spec}` (use exp:<taps>:<eta>, tdl-b, tdl-c, tdl:<path>)").into())
}

fn parse_theta(spec: &str) -> Result<ThetaPolicy, Box<dyn std::error::Error>> {
    if spec == "random" {
        Ok(ThetaPolicy::Uniform)
    } else {
        Ok(ThetaPolicy::Fixed(spec.parse()?))
    }
}

fn run(command: Command) -> Result<(), Box<dyn std::error::Error>> {
    match command {
        Command::GenData { common, out, samples, los_ratio, label } => {
            let config = load_config(&common)?;
            let prior = match los_ratio {
                Some(ratio) => LosPrior::new(ratio, config.ng())?,
                None => LosPrior::default_for(config.ng())?,
            };
            let dataset =
                generate_dataset(&config, &prior, label.into(), samples, common.seed)?;
            dataset.save(&out)?;
            println!(
                "wrote {} samples (n={}, ng={}, los_ratio={}) to {}",
                dataset.len(),
                config.n(),
                config.ng(),
                prior.los_ratio(),
                out.display()
            );
            Ok(())
        }
        Command::Train { common, data, out, epochs, batch, lr, patience, trace } => {
            let config = load_config(&common)?;
            let dataset = Dataset::load(&data)?;
            dataset.check_config(&config)?;
            let hp = Hyperparams {
                learning_rate: lr,
                batch_size: batch,
                max_epochs: epochs,
                patience,
                ..Hyperparams::default()
            };
            let (model, loss_trace) = train_pipeline(&dataset, &hp, common.seed)?;
            model.save(&out)?;
            if let Some(trace_path) = trace {
                let mut text = String::from("epoch,train_loss,val_loss\n");
                for (i, (tr, va)) in loss_trace.train.iter().zip(&loss_trace.val).enumerate() {
                    text.push_str(&format!("{i},{tr},{va}\n"));
                }
                fs::write(&trace_path, text)?;
            }
            println!(
                "trained {} epochs (final train loss {:.4}, best val loss {:.4}); model at {}",
                loss_trace.train.len(),
                loss_trace.train.last().unwrap(),
                loss_trace.val.iter().cloned().fold(f64::INFINITY, f64::min),
                out.display()
            );
            Ok(())
        }
        Command::Eval {
            common,
            out,
            model,
            channel,
            snrs,
            trials,
            cfo,
            theta,
            methods,
            svg,
        } => {
            let config = load_config(&common)?;
            let scenario = Scenario {
                name: "eval".into(),
                channel: parse_channel(&channel)?,
                theta: parse_theta(&theta)?,
                cfo,
                snr_db: snrs,
                trials,
                seed: common.seed,
            };
            let loaded_model = match model {
                Some(path) => {
                    let m = Mlp::load(&path)?;
                    m.check_config(&config)?;
                    Some(m)
                }
                None => None,
            };
            let mut curves = Vec::new();
            for method in &methods {
                let curve = match method {
                    MethodArg::Classic => run_curve(Method::Classic, &scenario, &config)?,
                    MethodArg::Learned => {
                        let m = loaded_model
                            .as_ref()
                            .ok_or("`--model` is required for the learned method")?;
                        run_curve(Method::Learned(m), &scenario, &config)?
                    }
                };
                print_curve(&curve);
                curves.push(curve);
            }
            emit_results(&curves, &out)?;
            println!("results written to {}", out.display());
            if let Some(svg_path) = svg {
                emit_svg(&curves, &svg_path)?;
                println!("plot written to {}", svg_path.display());
            }
            Ok(())
        }
        Command::Sweep { common, out, preset, samples, trials, epochs } => {
            let config = load_config(&common)?;
            fs::create_dir_all(&out)?;
            let presets = preset_scenarios(&config, trials, common.seed);
            let selected: Vec<&Preset> = presets
                .iter()
                .filter(|p| match preset {
                    PresetArg::Effectiveness => p.scenario.name == "effectiveness",
                    PresetArg::Robustness => p.scenario.name.starts_with("robustness"),
                    PresetArg::Generalization => {
                        p.scenario.name.starts_with("generalization")
                            || p.scenario.name == "effectiveness"
                    }
                    PresetArg::All => true,
                })
                .collect();
            run_sweep(&out, &selected, samples, epochs, common.seed)
        }
        Command::Complexity { common, out, taps, ns_sweep } => {
            let config = load_config(&common)?;
            let mut text = String::from("method,n,ns,ng,taps,complex_multiplications\n");
            let mut add_row = |ns: usize| {
                for method in ComplexityMethod::ALL {
                    text.push_str(&format!(
                        "{method},{},{ns},{},{taps},{}\n",
                        config.n(),
                        config.ng(),
                        complexity_cm(method, config.n(), ns, config.ng(), taps)
                    ));
                }
            };
            match ns_sweep {
                Some(sweep) => {
                    let parts: Vec<usize> = sweep
                        .split(':')
                        .map(str::parse)
                        .collect::<Result<_, _>>()?;
                    let [start, end, step]: [usize; 3] = parts
                        .try_into()
                        .map_err(|_| "expected --ns-sweep start:end:step")?;
                    if step == 0 {
                        return Err("sweep step must be positive".into());
                    }
                    let mut ns = start;
                    while ns <= end {
                        add_row(ns);
                        ns += step;
                    }
                }
                None => add_row(config.ns()),
            }
            match out {
                Some(path) => {
                    fs::write(&path, text)?;
                    println!("complexity table written to {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

/// One preset end to end: dataset, model (triangular labels; plus the
/// rectangular baseline approximation on the effectiveness preset), curves,
/// CSV and SVG.
fn run_sweep(
    out: &Path,
    presets: &[&Preset],
    samples: usize,
    epochs: usize,
    seed: u64,
) -> Result<(), Box<dyn std::error::Error>> {
    let hp = Hyperparams { max_epochs: epochs, ..Hyperparams::default() };

    // Models are keyed by config dimensions; generalization presets reuse
    // the effectiveness model rather than retraining.
    let mut trained: Vec<(OfdmConfig, Mlp)> = Vec::new();
    for preset in presets {
        let config = preset.config;
        let name = &preset.scenario.name;
        let stem = name.replace(' ', "-");

        if !trained.iter().any(|(c, _)| *c == config) {
            let prior = LosPrior::default_for(config.ng())?;
            let data_seed = derive_seed(seed, &[config.n() as u64]);
            println!("[{name}] generating {samples} training samples (n={})", config.n());
            let dataset =
                generate_dataset(&config, &prior, LabelMode::Triangular, samples, data_seed)?;
            dataset.save(out.join(format!("data_n{}_tri.tsds", config.n())))?;
            println!("[{name}] training (up to {epochs} epochs)");
            let (model, _) = train_pipeline(&dataset, &hp, derive_seed(seed, &[2, config.n() as u64]))?;
            model.save(out.join(format!("model_n{}_tri.tslm", config.n())))?;
            trained.push((config, model));
        }
        let model = &trained.iter().find(|(c, _)| *c == config).unwrap().1;

        println!("[{name}] evaluating {} trials per SNR", preset.scenario.trials);
        let mut curves = vec![
            run_curve(Method::Classic, &preset.scenario, &config)?,
            run_curve(Method::Learned(model), &preset.scenario, &config)?,
        ];

        if name == "effectiveness" {
            // rectangular-label baseline approximation, same protocol
            let prior = LosPrior::default_for(config.ng())?;
            let data_seed = derive_seed(seed, &[config.n() as u64]);
            println!("[{name}] rectangular-label baseline (approximation)");
            let rect_data =
                generate_dataset(&config, &prior, LabelMode::Rectangular, samples, data_seed)?;
            rect_data.save(out.join(format!("data_n{}_rect.tsds", config.n())))?;
            let (rect_model, _) =
                train_pipeline(&rect_data, &hp, derive_seed(seed, &[2, config.n() as u64]))?;
            rect_model.save(out.join(format!("model_n{}_rect.tslm", config.n())))?;
            let mut rect_curve =
                run_curve(Method::Learned(&rect_model), &preset.scenario, &config)?;
            rect_curve.method = "learned-rect-approx".into();
            curves.push(rect_curve);
        }

        for curve in &curves {
            print_curve(curve);
        }
        emit_results(&curves, out.join(format!("{stem}.csv")))?;
        emit_svg(&curves, out.join(format!("{stem}.svg")))?;
        println!("[{name}] wrote {stem}.csv and {stem}.svg");
    }
    Ok(())
}

fn print_curve(curve: &ErrorCurve) {
    println!("{} / {}", curve.scenario, curve.method);
    for p in &curve.points {
        println!(
            "  snr {:>5} dB: error {:.4} (95% CI [{:.4}, {:.4}], {} / {} trials)",
            p.snr_db, p.error_prob, p.ci_lo, p.ci_hi, p.errors, p.trials
        );
    }
}
