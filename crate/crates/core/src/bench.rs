//! IPC microbenchmarks: roundtrip latency by message size, latency under
//! concurrent client/server pairs, and fast-queue read latency.
//!
//! Absolute numbers depend on the host; what the harness is meant to show
//! is the shape of each curve.

use std::fmt;
use std::io::{self, Write};
use std::sync::{Arc, Barrier};
use std::thread;
use std::time::Instant;

use thiserror::Error;

use crate::demo::{self, ECHO};
use crate::runtime::{serve, CallError, FastQueue, Proxy, ServeError, ServeOptions};
use crate::wire::{Registry, Transport, TypedValue, DEFAULT_INSTANCE};

pub const MIN_ITERATIONS: u64 = 100;
pub const MIN_WARMUP: u64 = 100;
pub const CSV_HEADER: &str = "scenario,size,concurrency,best_ns,mean_ns,stddev_ns,p90_ns,iters";

pub const ROUNDTRIP_SIZES: [usize; 5] = [4, 2 * 1024, 4 * 1024, 16 * 1024, 64 * 1024];
pub const THROUGHPUT_PAIRS: [usize; 4] = [2, 3, 5, 10];
pub const THROUGHPUT_SIZE: usize = 512;
pub const FMQ_SIZES: [usize; 2] = [64, 512];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchStats {
    pub scenario: String,
    /// Message size in bytes.
    pub size: usize,
    /// Concurrent client/server pairs.
    pub concurrency: usize,
    pub best_ns: u64,
    pub mean_ns: f64,
    pub stddev_ns: f64,
    pub p90_ns: u64,
    pub iterations: u64,
}

impl BenchStats {
    /// Summarizes raw per-call latencies. `samples` must not be empty.
    pub fn from_samples(
        scenario: &str,
        size: usize,
        concurrency: usize,
        samples: &[u64],
    ) -> BenchStats {
        assert!(!samples.is_empty(), "no samples for {scenario}");
        let n = samples.len() as f64;
        let mean = samples.iter().map(|&s| s as f64).sum::<f64>() / n;
        let var = samples
            .iter()
            .map(|&s| (s as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        let mut sorted = samples.to_vec();
        sorted.sort_unstable();
        // Nearest rank.
        let rank = ((0.9 * n).ceil() as usize).clamp(1, sorted.len());
        BenchStats {
            scenario: scenario.to_string(),
            size,
            concurrency,
            best_ns: sorted[0],
            mean_ns: mean,
            stddev_ns: var.sqrt(),
            p90_ns: sorted[rank - 1],
            iterations: samples.len() as u64,
        }
    }

    /// The 90th percentile sits at or above the mean.
    pub fn heavy_tail(&self) -> bool {
        self.p90_ns as f64 >= self.mean_ns
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.0},{:.0},{},{}",
            self.scenario,
            self.size,
            self.concurrency,
            self.best_ns,
            self.mean_ns,
            self.stddev_ns,
            self.p90_ns,
            self.iterations
        )
    }
}

impl fmt::Display for BenchStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<10} {:>6} B x{:<3} best {:>9.1} us  mean {:>9.1} us  sd {:>8.1}  p90 {:>9.1} us  ({} iters)",
            self.scenario,
            self.size,
            self.concurrency,
            self.best_ns as f64 / 1e3,
            self.mean_ns / 1e3,
            self.stddev_ns / 1e3,
            self.p90_ns as f64 / 1e3,
            self.iterations
        )
    }
}

pub fn to_csv(stats: &[BenchStats]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for s in stats {
        out.push_str(&s.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("at least {MIN_ITERATIONS} iterations are needed, got {0}")]
    TooFewIterations(u64),
    #[error("echo service unavailable: {0}")]
    ServiceUnavailable(CallError),
    #[error("cannot start pair {pair}: {detail}")]
    ResourceExhausted { pair: usize, detail: String },
    #[error("echo returned something else for a {0}-byte payload")]
    BadEcho(usize),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub iterations: u64,
    pub warmup: u64,
    /// Timed calls per size before moving on to the next size. Sizes are
    /// visited round-robin, starting one later each round, so slow drift in
    /// the host and the after-effects of a neighbouring size spread evenly.
    pub chunk: u64,
    /// Untimed calls at the start of every chunk.
    pub settle: u64,
}

impl BenchConfig {
    pub fn new(iterations: u64) -> Self {
        Self {
            iterations,
            warmup: MIN_WARMUP,
            chunk: 50,
            settle: 5,
        }
    }

    fn validate(&self) -> Result<(), BenchError> {
        if self.iterations < MIN_ITERATIONS {
            return Err(BenchError::TooFewIterations(self.iterations));
        }
        Ok(())
    }
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self::new(1000)
    }
}

fn payload(size: usize) -> TypedValue {
    TypedValue::Str("x".repeat(size))
}

fn timed_echo(proxy: &Proxy, arg: &TypedValue, size: usize) -> Result<u64, BenchError> {
    let start = Instant::now();
    let out = proxy
        .call("echoBytes", vec![arg.clone()])
        .map_err(BenchError::ServiceUnavailable)?;
    let elapsed = start.elapsed().as_nanos() as u64;
    match out.first() {
        Some(TypedValue::Str(s)) if s.len() == size => Ok(elapsed),
        _ => Err(BenchError::BadEcho(size)),
    }
}

/// Roundtrip latency of `echoBytes` against the default echo instance in
/// `registry`, one entry per size.
pub fn bench_roundtrip(
    registry: &dyn Registry,
    sizes: &[usize],
    config: &BenchConfig,
) -> Result<Vec<BenchStats>, BenchError> {
    config.validate()?;
    let proxy = Proxy::connect(registry, demo::spec(ECHO), DEFAULT_INSTANCE)
        .map_err(BenchError::ServiceUnavailable)?;
    let args: Vec<TypedValue> = sizes.iter().map(|&s| payload(s)).collect();
    for (arg, &size) in args.iter().zip(sizes) {
        for _ in 0..config.warmup.max(MIN_WARMUP) {
            timed_echo(&proxy, arg, size)?;
        }
    }
    let mut samples: Vec<Vec<u64>> =
        vec![Vec::with_capacity(config.iterations as usize); sizes.len()];
    let chunk = config.chunk.max(1);
    let mut done = 0;
    let mut round = 0;
    while done < config.iterations {
        let n = chunk.min(config.iterations - done);
        for k in 0..sizes.len() {
            let i = (round + k) % sizes.len();
            for _ in 0..config.settle {
                timed_echo(&proxy, &args[i], sizes[i])?;
            }
            for _ in 0..n {
                samples[i].push(timed_echo(&proxy, &args[i], sizes[i])?);
            }
        }
        done += n;
        round += 1;
    }
    Ok(sizes
        .iter()
        .zip(&samples)
        .map(|(&size, s)| BenchStats::from_samples("roundtrip", size, 1, s))
        .collect())
}

/// Latency while `pairs` independent client/server pairs exchange
/// `size`-byte messages at once; one entry per pair count.
pub fn bench_throughput(
    registry: Arc<dyn Registry>,
    pairs: &[usize],
    size: usize,
    config: &BenchConfig,
) -> Result<Vec<BenchStats>, BenchError> {
    config.validate()?;
    pairs
        .iter()
        .map(|&n| run_pairs(&registry, n, size, config))
        .collect()
}

fn run_pairs(
    registry: &Arc<dyn Registry>,
    count: usize,
    size: usize,
    config: &BenchConfig,
) -> Result<BenchStats, BenchError> {
    let mut handles = Vec::with_capacity(count);
    let mut proxies = Vec::with_capacity(count);
    for pair in 0..count {
        let exhausted = |detail: String| BenchError::ResourceExhausted { pair, detail };
        let instance = format!("bench-{}-{count}-{pair}", std::process::id());
        let handle = serve(
            demo::echo_service(),
            Transport::Binderized,
            registry.clone(),
            ServeOptions::instance(&instance),
        )
        .map_err(|e: ServeError| exhausted(e.to_string()))?;
        let proxy = Proxy::connect(&**registry, demo::spec(ECHO), &instance)
            .map_err(|e| exhausted(e.to_string()))?;
        handles.push(handle);
        proxies.push(proxy);
    }
    let start = Arc::new(Barrier::new(count));
    let workers: Vec<_> = proxies
        .into_iter()
        .map(|proxy| {
            let (start, warmup, iterations) = (
                start.clone(),
                config.warmup.max(MIN_WARMUP),
                config.iterations,
            );
            thread::spawn(move || -> Result<Vec<u64>, BenchError> {
                let arg = payload(size);
                for _ in 0..warmup {
                    timed_echo(&proxy, &arg, size)?;
                }
                start.wait();
                (0..iterations)
                    .map(|_| timed_echo(&proxy, &arg, size))
                    .collect()
            })
        })
        .collect();
    let mut all = Vec::with_capacity(count * config.iterations as usize);
    let mut first_error = None;
    for w in workers {
        match w.join().expect("bench worker panicked") {
            Ok(s) => all.extend(s),
            Err(e) => first_error = first_error.or(Some(e)),
        }
    }
    drop(handles);
    match first_error {
        Some(e) => Err(e),
        None => Ok(BenchStats::from_samples("throughput", size, count, &all)),
    }
}

/// Read latency of pre-written messages in a fast queue, one entry per size.
pub fn bench_fmq(sizes: &[usize], config: &BenchConfig) -> Result<Vec<BenchStats>, BenchError> {
    config.validate()?;
    let largest = sizes.iter().copied().max().unwrap_or(0);
    let capacity = largest.max(8).next_power_of_two();
    let (mut writer, mut reader) = FastQueue::anonymous(capacity)
        .map_err(|e| BenchError::ResourceExhausted {
            pair: 0,
            detail: e.to_string(),
        })?
        .split();
    let mut buf = vec![0u8; largest];
    let mut out = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let message = vec![0x5a_u8; size];
        let mut samples = Vec::with_capacity(config.iterations as usize);
        for i in 0..config.warmup.max(MIN_WARMUP) + config.iterations {
            writer.write(&message);
            let start = Instant::now();
            let n = reader.read(&mut buf[..size]);
            let elapsed = start.elapsed().as_nanos() as u64;
            assert_eq!(n, size, "queue sized for the largest message");
            if i >= config.warmup.max(MIN_WARMUP) {
                samples.push(elapsed);
            }
        }
        out.push(BenchStats::from_samples("fmq", size, 1, &samples));
    }
    Ok(out)
}

/// Writes stats as CSV (with header) to `w`.
pub fn write_csv(stats: &[BenchStats], mut w: impl Write) -> io::Result<()> {
    w.write_all(to_csv(stats).as_bytes())
}
