//! Echo services: a correct one, and one with a planted crash for the
//! fuzzer to find.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use crate::runtime::{Service, ServiceBuilder};

use super::{spec, ECHO};

/// The `Mode` value that brings down [`faulty_echo`].
pub const FAULTY_MODE: i32 = 7;

/// What the `notify` oneway method has seen.
#[derive(Debug, Default)]
pub struct NotifyLog {
    count: AtomicU64,
    last: Mutex<Option<String>>,
}

impl NotifyLog {
    pub fn count(&self) -> u64 {
        self.count.load(Ordering::SeqCst)
    }

    pub fn last(&self) -> Option<String> {
        self.last.lock().expect("notify log poisoned").clone()
    }
}

fn builder(
    notify_delay: Duration,
    log: Arc<NotifyLog>,
    crash_on_mode: Option<i32>,
) -> ServiceBuilder {
    ServiceBuilder::new(spec(ECHO))
        .method("echoBytes", |_, args| Ok(args))
        .method("echoInts", |_, args| Ok(args))
        .method("echoMode", move |_, args| {
            if let (Some(bad), crate::wire::TypedValue::Enum { ordinal, .. }) =
                (crash_on_mode, &args[0])
            {
                if *ordinal == bad {
                    panic!("echoMode cannot handle mode {bad}");
                }
            }
            Ok(args)
        })
        .method("echoSample", |_, args| Ok(args))
        .method("notify", move |_, args| {
            if !notify_delay.is_zero() {
                thread::sleep(notify_delay);
            }
            *log.last.lock().expect("notify log poisoned") = args[0].as_str().map(str::to_string);
            log.count.fetch_add(1, Ordering::SeqCst);
            Ok(vec![])
        })
}

pub fn echo_service() -> Arc<Service> {
    echo_with_log(Duration::ZERO).0
}

/// An echo whose `notify` handler sleeps for `notify_delay` first.
pub fn echo_with_log(notify_delay: Duration) -> (Arc<Service>, Arc<NotifyLog>) {
    let log = Arc::new(NotifyLog::default());
    let service = builder(notify_delay, log.clone(), None)
        .build()
        .expect("echo is complete");
    (service, log)
}

/// Like [`echo_service`], except `echoMode` panics on [`FAULTY_MODE`].
pub fn faulty_echo() -> Arc<Service> {
    builder(Duration::ZERO, Arc::default(), Some(FAULTY_MODE))
        .build()
        .expect("faulty echo is complete")
}
