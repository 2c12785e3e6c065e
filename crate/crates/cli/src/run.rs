use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treble::bench::{self, BenchConfig, BenchStats};
use treble::runtime::{serve as serve_service, ServeOptions};
use treble::testkit::gen::random_call;
use treble::testkit::{
    self, agent_serve, select_removable, AgentConfig, FuzzConfig, ModuleTrace, Profiler, Trace,
    DEFAULT_AGENT_PORT,
};
use treble::wire::{
    open_registry, values_from_text, values_from_tokens, values_to_text, Endpoint, LocalRegistry,
    Registry, RegistryServer, Transport, DEFAULT_INSTANCE,
};

use crate::check::csv_field;
use crate::exit::{io, read, usage, Failure};
use crate::services::{builtin, resolve, TargetArgs, BUILTIN};
use crate::{Format, Globals};

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Built-in service to host.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(BUILTIN))]
    pub service: String,
    #[arg(long, default_value = DEFAULT_INSTANCE)]
    pub instance: String,
    /// Listen address (unix path or host:port); a temp socket if unset.
    #[arg(long)]
    pub endpoint: Option<Endpoint>,
    /// Stop after this many seconds instead of running until killed.
    #[arg(long = "for")]
    pub duration: Option<u64>,
}

fn wait(duration: Option<u64>) {
    match duration {
        Some(secs) => std::thread::sleep(Duration::from_secs(secs)),
        None => loop {
            std::thread::park();
        },
    }
}

/// Opens the registry at `addr`; when it is a unix socket nobody serves,
/// hosts the registry here for as long as the returned server lives.
fn shared_registry(addr: &str) -> Result<(Arc<dyn Registry>, Option<RegistryServer>), Failure> {
    let registry = open_registry(addr).map_err(io)?;
    if registry.list().is_ok() {
        return Ok((registry, None));
    }
    let Ok(Endpoint::Unix(path)) = addr.parse::<Endpoint>() else {
        return Err(io(format!("registry {addr} is not reachable")));
    };
    let server = RegistryServer::bind(&path)
        .map_err(|e| io(format!("cannot host registry at {addr}: {e}")))?;
    eprintln!("registry listening on {}", path.display());
    Ok((open_registry(addr).map_err(io)?, Some(server)))
}

pub fn serve(args: ServeArgs, globals: &Globals) -> Result<(), Failure> {
    let service = builtin(&args.service)?;
    let (registry, _server) = shared_registry(&globals.registry)?;
    let options = ServeOptions {
        instance: args.instance,
        endpoint: args.endpoint,
    };
    let handle = serve_service(service, Transport::Binderized, registry, options).map_err(io)?;
    let record = handle.record();
    println!(
        "serving {}/{} at {}",
        record.fqname, record.instance, record.endpoint
    );
    let _ = std::io::stdout().flush();
    wait(args.duration);
    Ok(())
}

#[derive(Debug, Args)]
pub struct CallArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long)]
    pub method: String,
    /// Value file with one entry per argument, for structured arguments.
    #[arg(long, conflicts_with = "values")]
    pub args_file: Option<PathBuf>,
    /// Arguments as name=value.
    pub values: Vec<String>,
}

pub fn call(args: CallArgs, globals: &Globals) -> Result<(), Failure> {
    let target = resolve(&args.target, &globals.registry)?;
    let api = target
        .spec
        .api(&args.method)
        .ok_or_else(|| {
            usage(format!(
                "{} has no method `{}`",
                target.spec.fqname(),
                args.method
            ))
        })?
        .clone();
    let values = match &args.args_file {
        Some(path) => values_from_text(&read(path)?, &api.args)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None => values_from_tokens(&args.values, &api.args).map_err(usage)?,
    };
    let proxy = target.connect()?;
    let out = proxy.call(&api.name, values).map_err(|e| match e {
        treble::runtime::CallError::Remote { .. } => Failure::Check(Some(e.to_string())),
        other => io(other),
    })?;
    match globals.format_or(Format::Text) {
        Format::Spec => print!("{}", values_to_text(&out, &api.returns)),
        Format::Csv => {
            println!("name,value");
            for (var, v) in api.returns.iter().zip(&out) {
                println!("{},{}", var.name, csv_field(&v.to_string()));
            }
        }
        Format::Text => {
            for (var, v) in api.returns.iter().zip(&out) {
                println!("{} = {v}", var.name);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value_t = 10_000)]
    pub budget: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Milliseconds without a reply before a call counts as a hang.
    #[arg(long, default_value_t = testkit::fuzz::HANG_TIMEOUT.as_millis() as u64)]
    pub hang_ms: u64,
    #[arg(long)]
    pub stop_on_first: bool,
}

pub fn fuzz(args: FuzzArgs, globals: &Globals) -> Result<(), Failure> {
    if args.budget == 0 {
        return Err(usage("--budget must be at least 1"));
    }
    let target = resolve(&args.target, &globals.registry)?;
    let mut config = FuzzConfig::new(args.budget, args.seed);
    config.hang_timeout = Duration::from_millis(args.hang_ms.max(1));
    config.stop_on_first = args.stop_on_first;
    let findings = testkit::fuzz(target.spec.clone(), &target.record, &config).map_err(io)?;
    match globals.format_or(Format::Text) {
        Format::Csv => {
            println!("class,method,iteration,seed,detail");
            for f in &findings {
                println!(
                    "{},{},{},{},{}",
                    f.class,
                    f.reproducer.method,
                    f.iteration,
                    f.seed,
                    csv_field(&f.detail)
                );
            }
        }
        _ => {
            for f in &findings {
                println!("{f}");
            }
            let ran = match findings.last() {
                Some(f) if config.stop_on_first => f.iteration + 1,
                _ => args.budget,
            };
            println!(
                "{} finding(s) in {ran} iteration(s), seed {}",
                findings.len(),
                args.seed
            );
        }
    }
    if findings.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(None))
    }
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// Summarize an existing trace instead of recording one.
    #[arg(long, conflicts_with_all = ["iface", "local", "out"])]
    pub summarize: Option<PathBuf>,
    #[command(flatten)]
    pub target: Option<TargetArgs>,
    /// Random calls to make.
    #[arg(long, default_value_t = 100)]
    pub requests: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trace file to write; stdout if unset.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn print_sizes(sizes: &BTreeMap<String, u64>, format: Format) {
    if format == Format::Csv {
        println!("fqname,bytes");
    }
    for (fq, bytes) in sizes {
        match format {
            Format::Csv => println!("{fq},{bytes}"),
            _ => println!("{fq}\t{bytes}"),
        }
    }
}

fn load_trace(path: &std::path::Path) -> Result<Trace, Failure> {
    Trace::parse(&read(path)?).map_err(|e| io(format!("{}: {e}", path.display())))
}

pub fn profile(args: ProfileArgs, globals: &Globals) -> Result<(), Failure> {
    if let Some(path) = args.summarize {
        print_sizes(
            &load_trace(&path)?.bytes_per_interface(),
            globals.format_or(Format::Text),
        );
        return Ok(());
    }
    let target_args = args
        .target
        .ok_or_else(|| usage("profile needs --iface (or --summarize)"))?;
    let target = resolve(&target_args, &globals.registry)?;
    let mut profiler = Profiler::new(target.connect()?);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    for _ in 0..args.requests {
        let (api, values) = random_call(&target.spec.apis, &mut rng);
        let _ = profiler.call(&api.name, values);
    }
    let (_, trace) = profiler.finish();
    match &args.out {
        Some(path) => {
            std::fs::write(path, trace.to_text())
                .map_err(|e| io(format!("{}: {e}", path.display())))?;
            println!(
                "{} call(s) traced to {}",
                trace.records.len(),
                path.display()
            );
        }
        None => print!("{}", trace.to_text()),
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Roundtrip,
    Throughput,
    Fmq,
    All,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    #[arg(long, default_value_t = 1000)]
    pub iterations: u64,
    /// Message sizes in bytes (roundtrip and fmq), comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Concurrent pair counts (throughput), comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub pairs: Vec<usize>,
}

pub fn bench(args: BenchArgs, globals: &Globals) -> Result<(), Failure> {
    let config = BenchConfig::new(args.iterations);
    let or = |given: &[usize], default: &[usize]| {
        if given.is_empty() {
            default.to_vec()
        } else {
            given.to_vec()
        }
    };
    let run = |suite: Suite| -> Result<Vec<BenchStats>, bench::BenchError> {
        match suite {
            Suite::Roundtrip => {
                let registry: Arc<dyn Registry> = Arc::new(LocalRegistry::new());
                let _echo = serve_service(
                    treble::demo::echo_service(),
                    Transport::Binderized,
                    registry.clone(),
                    ServeOptions::default(),
                )
                .map_err(|e| bench::BenchError::ResourceExhausted {
                    pair: 0,
                    detail: e.to_string(),
                })?;
                bench::bench_roundtrip(
                    &*registry,
                    &or(&args.sizes, &bench::ROUNDTRIP_SIZES),
                    &config,
                )
            }
            Suite::Throughput => bench::bench_throughput(
                Arc::new(LocalRegistry::new()),
                &or(&args.pairs, &bench::THROUGHPUT_PAIRS),
                bench::THROUGHPUT_SIZE,
                &config,
            ),
            Suite::Fmq => bench::bench_fmq(&or(&args.sizes, &bench::FMQ_SIZES), &config),
            Suite::All => unreachable!("expanded below"),
        }
    };
    let suites = match args.suite {
        Suite::All => vec![Suite::Roundtrip, Suite::Throughput, Suite::Fmq],
        one => vec![one],
    };
    let mut stats = Vec::new();
    for suite in suites {
        stats.extend(run(suite).map_err(|e| match e {
            bench::BenchError::TooFewIterations(_) => usage(e),
            other => io(other),
        })?);
    }
    match globals.format_or(Format::Csv) {
        Format::Text => stats.iter().for_each(|s| println!("{s}")),
        _ => print!("{}", bench::to_csv(&stats)),
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct AgentArgs {
    #[arg(long, default_value_t = DEFAULT_AGENT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    /// Directory of extra .spec files the agent may load.
    #[arg(long)]
    pub spec_dir: Option<PathBuf>,
    /// Stop after this many seconds instead of running until killed.
    #[arg(long = "for")]
    pub duration: Option<u64>,
}

pub fn agent(args: AgentArgs, globals: &Globals) -> Result<(), Failure> {
    let registry = open_registry(&globals.registry).map_err(io)?;
    let mut config = AgentConfig::new(treble::demo::specs().values().cloned(), registry.clone());
    if let Some(dir) = &args.spec_dir {
        let extra = AgentConfig::from_spec_dir(dir, registry).map_err(io)?;
        config.specs.extend(extra.specs);
    }
    let handle = agent_serve(&format!("{}:{}", args.bind, args.port), config).map_err(io)?;
    println!("agent listening on {}", handle.address());
    let _ = std::io::stdout().flush();
    wait(args.duration);
    Ok(())
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Trace of the noise run (e.g. a stress or monkey test).
    #[arg(long)]
    pub noise: PathBuf,
    /// Candidate modules as name:seconds:trace-file.
    #[arg(required = true)]
    pub modules: Vec<String>,
}

pub fn select_tests(args: SelectArgs, globals: &Globals) -> Result<(), Failure> {
    let noise = load_trace(&args.noise)?.bytes_per_interface();
    let modules = args
        .modules
        .iter()
        .map(|m| {
            let mut parts = m.splitn(3, ':');
            let (Some(name), Some(secs), Some(path)) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(usage(format!("`{m}` is not name:seconds:trace-file")));
            };
            let secs: f64 = secs
                .parse()
                .ok()
                .filter(|s: &f64| s.is_finite() && *s >= 0.0)
                .ok_or_else(|| usage(format!("`{secs}` is not a duration in seconds")))?;
            let sizes = load_trace(std::path::Path::new(path))?.bytes_per_interface();
            Ok(sizes.into_iter().fold(
                ModuleTrace::new(name, Duration::from_secs_f64(secs)),
                |t, (fq, b)| t.with(fq, b),
            ))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let picked = select_removable(&modules, &noise);
    match globals.format_or(Format::Text) {
        Format::Csv => {
            println!("rank,module");
            for (i, name) in picked.iter().enumerate() {
                println!("{},{name}", i + 1);
            }
        }
        _ => picked.iter().for_each(|name| println!("{name}")),
    }
    Ok(())
}
