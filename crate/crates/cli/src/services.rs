//! The built-in services the CLI can host, and how commands reach a
//! service: through the shared registry, or hosted in this process.

use std::sync::Arc;
use std::time::Duration;

use clap::Args;
use treble::demo::{self, VehicleOptions};
use treble::idl::FqName;
use treble::ir::InterfaceSpec;
use treble::runtime::{serve, Proxy, ServeOptions, Service, ServiceHandle};
use treble::wire::{
    open_registry, LocalRegistry, Registry, ServiceRecord, Transport, DEFAULT_INSTANCE,
};

use crate::exit::{io, read, usage, Failure};

pub const BUILTIN: [&str; 8] = [
    "light",
    "light-ledstrip",
    "light-inproc",
    "light-1.1",
    "echo",
    "echo-faulty",
    "vehicle",
    "mapper",
];

pub fn builtin(name: &str) -> Result<Arc<Service>, Failure> {
    Ok(match name {
        "light" => demo::reference_light(),
        "light-ledstrip" => demo::ledstrip_light(),
        "light-inproc" => demo::inproc_light(),
        "light-1.1" => demo::light_1_1(),
        "echo" => demo::echo_service(),
        "echo-faulty" => demo::faulty_echo(),
        "vehicle" => demo::vehicle_service(VehicleOptions {
            period: Duration::from_millis(100),
            max_events: None,
        }),
        "mapper" => demo::mapper_service(),
        other => {
            return Err(usage(format!(
                "no built-in service `{other}`; choose one of {}",
                BUILTIN.join(", ")
            )))
        }
    })
}

/// Where to find the service a command talks to.
#[derive(Debug, Args)]
pub struct TargetArgs {
    /// Fully qualified interface, e.g. demo.light@1.0::ILight.
    #[arg(long)]
    pub iface: String,
    #[arg(long, default_value = DEFAULT_INSTANCE)]
    pub instance: String,
    /// Interface spec file, for interfaces that are not built in.
    #[arg(long)]
    pub spec: Option<PathBufArg>,
    /// Host this built-in service in-process instead of using the registry.
    #[arg(long)]
    pub local: Option<String>,
    /// With --local: call the service directly rather than over a socket.
    #[arg(long, requires = "local")]
    pub passthrough: bool,
}

pub type PathBufArg = std::path::PathBuf;

/// A reachable service, plus whatever keeps a locally hosted one alive.
pub struct Target {
    pub spec: Arc<InterfaceSpec>,
    pub record: ServiceRecord,
    _hosted: Option<ServiceHandle>,
}

impl Target {
    pub fn connect(&self) -> Result<Proxy, Failure> {
        Proxy::connect_record(&self.record, self.spec.clone())
            .map_err(|e| io(format!("{}: {e}", self.record.fqname)))
    }
}

pub fn interface_spec(
    fqname: &FqName,
    spec_file: Option<&std::path::Path>,
) -> Result<Arc<InterfaceSpec>, Failure> {
    if let Some(path) = spec_file {
        let spec = treble::ir::parse_spec_text(&read(path)?)
            .map_err(|e| io(format!("{}: {e}", path.display())))?;
        if spec.fqname() != *fqname {
            return Err(usage(format!(
                "{} describes {}, not {fqname}",
                path.display(),
                spec.fqname()
            )));
        }
        return Ok(Arc::new(spec));
    }
    demo::specs()
        .get(&fqname.to_string())
        .cloned()
        .ok_or_else(|| usage(format!("no spec for {fqname}; pass --spec")))
}

pub fn resolve(args: &TargetArgs, registry_addr: &str) -> Result<Target, Failure> {
    let fqname: FqName = args
        .iface
        .parse()
        .map_err(|e| usage(format!("--iface: {e}")))?;
    let spec = interface_spec(&fqname, args.spec.as_deref())?;
    let (registry, hosted): (Arc<dyn Registry>, _) = match &args.local {
        Some(name) => {
            let registry: Arc<dyn Registry> = Arc::new(LocalRegistry::new());
            let mode = if args.passthrough {
                Transport::Passthrough
            } else {
                Transport::Binderized
            };
            let handle = serve(
                builtin(name)?,
                mode,
                registry.clone(),
                ServeOptions::instance(&args.instance),
            )
            .map_err(|e| io(format!("cannot host {name}: {e}")))?;
            (registry, Some(handle))
        }
        None => (open_registry(registry_addr).map_err(io)?, None),
    };
    let record = registry
        .lookup(&fqname, &args.instance)
        .map_err(|e| io(format!("{fqname}/{}: {e}", args.instance)))?;
    Ok(Target {
        spec,
        record,
        _hosted: hosted,
    })
}
