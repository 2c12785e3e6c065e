use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treble::demo::{self, values::*, VehicleOptions};
use treble::runtime::{
    serve, BuildError, CallError, Callbacks, FastQueue, Proxy, ServeOptions, ServiceBuilder,
};
use treble::testkit::gen::random_call;
use treble::wire::{LocalRegistry, Registry, Tag, Transport, TypedValue};

fn registry() -> Arc<dyn Registry> {
    Arc::new(LocalRegistry::new())
}

#[test]
fn framework_suite_passes_on_every_vendor_implementation() {
    let variants = [
        ("reference", demo::reference_light(), Transport::Binderized),
        ("ledstrip", demo::ledstrip_light(), Transport::Binderized),
        ("inproc", demo::inproc_light(), Transport::Passthrough),
        ("minor upgrade", demo::light_1_1(), Transport::Binderized),
    ];
    for (label, service, mode) in variants {
        let reg = registry();
        let _handle = serve(service, mode, reg.clone(), ServeOptions::default()).unwrap();
        let proxy = Proxy::connect(&*reg, demo::spec(demo::LIGHT_1_0), "default").unwrap();
        assert_eq!(
            proxy.is_passthrough(),
            mode == Transport::Passthrough,
            "{label}"
        );
        let report = demo::framework_suite(&proxy);
        assert!(report.passed(), "{label}:\n{report}");
        assert_eq!(report.checks.len(), 6);
    }
}

#[test]
fn suite_catches_a_broken_implementation() {
    // Ignores the requested level entirely.
    let broken = ServiceBuilder::new(demo::spec(demo::LIGHT_1_0))
        .method("setLight", |_, _| Ok(vec![status(SUCCESS)]))
        .method("getSupportedTypes", |_, _| {
            Ok(vec![TypedValue::vec(
                Tag::Enum,
                vec![light_type(BACKLIGHT)],
            )])
        })
        .method("setBrightness", |_, _| Ok(vec![status(SUCCESS)]))
        .method("getBrightness", |_, _| Ok(vec![TypedValue::Int32(3)]))
        .build()
        .unwrap();
    let proxy = Proxy::local(broken, demo::spec(demo::LIGHT_1_0));
    let report = demo::framework_suite(&proxy);
    let failed: Vec<&str> = report.failures().map(|c| c.name).collect();
    assert_eq!(
        failed,
        [
            "set_light_on_unsupported_types",
            "brightness_round_trips",
            "out_of_range_brightness_is_refused"
        ]
    );
}

#[test]
fn binderized_and_passthrough_agree_on_random_calls() {
    let reg = registry();
    let _b = serve(
        demo::echo_service(),
        Transport::Binderized,
        reg.clone(),
        ServeOptions::instance("ipc"),
    )
    .unwrap();
    let _p = serve(
        demo::echo_service(),
        Transport::Passthrough,
        reg.clone(),
        ServeOptions::instance("local"),
    )
    .unwrap();
    let spec = demo::spec(demo::ECHO);
    let remote = Proxy::connect(&*reg, spec.clone(), "ipc").unwrap();
    let local = Proxy::connect(&*reg, spec.clone(), "local").unwrap();
    assert!(!remote.is_passthrough());
    assert!(local.is_passthrough());
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..250 {
        let (api, args) = random_call(&spec.apis, &mut rng);
        let a = remote.call(&api.name, args.clone()).unwrap();
        let b = local.call(&api.name, args.clone()).unwrap();
        assert_eq!(a, b, "{}", api.name);
        if !api.oneway {
            assert_eq!(a, args, "echo must return its input");
        }
    }
    assert!(remote.bytes_sent() > 0);
    assert!(remote.bytes_received() > 0);
    assert_eq!(local.bytes_sent(), 0);
    assert_eq!(local.bytes_received(), 0);
}

#[test]
fn oneway_returns_before_a_slow_handler_finishes() {
    let reg = registry();
    let (service, log) = demo::echo_with_log(Duration::from_millis(400));
    let _h = serve(
        service,
        Transport::Binderized,
        reg.clone(),
        ServeOptions::default(),
    )
    .unwrap();
    let proxy = Proxy::connect(&*reg, demo::spec(demo::ECHO), "default").unwrap();
    let start = Instant::now();
    assert_eq!(
        proxy.call("notify", vec![TypedValue::str("ping")]).unwrap(),
        vec![]
    );
    let returned = start.elapsed();
    assert!(
        returned < Duration::from_millis(200),
        "oneway took {returned:?}"
    );
    assert_eq!(log.count(), 0, "handler cannot have finished yet");
    // A blocking call on the same connection queues behind the handler.
    proxy.call("echoBytes", vec![TypedValue::str("x")]).unwrap();
    assert_eq!(log.count(), 1);
    assert_eq!(log.last().as_deref(), Some("ping"));
}

#[test]
fn type_mismatch_is_caught_before_any_bytes_move() {
    let reg = registry();
    let _h = serve(
        demo::echo_service(),
        Transport::Binderized,
        reg.clone(),
        ServeOptions::default(),
    )
    .unwrap();
    let proxy = Proxy::connect(&*reg, demo::spec(demo::ECHO), "default").unwrap();
    let err = proxy
        .call("echoInts", vec![TypedValue::vec(Tag::Int64, vec![])])
        .unwrap_err();
    assert!(matches!(err, CallError::TypeMismatch(_)), "{err}");
    let err = proxy.call("echoBytes", vec![]).unwrap_err();
    assert!(matches!(err, CallError::TypeMismatch(_)), "{err}");
    let err = proxy.call(
        "echoMode",
        vec![
            TypedValue::Enum {
                name: "demo.echo@1.0::Other".into(),
                ordinal: 1,
            },
            TypedValue::UInt32(0),
        ],
    );
    assert!(matches!(err, Err(CallError::TypeMismatch(_))));
    assert!(matches!(
        proxy.call("nope", vec![]),
        Err(CallError::UnknownMethod(_))
    ));
    assert_eq!(proxy.bytes_sent(), 0);
}

#[test]
fn incomplete_implementations_fail_to_build() {
    let err = ServiceBuilder::new(demo::spec(demo::LIGHT_1_1))
        .method("setLight", |_, _| Ok(vec![]))
        .method("getSupportedTypes", |_, _| Ok(vec![]))
        .method("setBrightness", |_, _| Ok(vec![]))
        .method("getBrightness", |_, _| Ok(vec![]))
        .build()
        .unwrap_err();
    assert_eq!(
        err,
        BuildError::Incomplete {
            iface: demo::LIGHT_1_1.into(),
            missing: vec!["setBrightnessRamp".into()],
        }
    );
    let err = ServiceBuilder::new(demo::spec(demo::ECHO))
        .method("echoFloats", |_, _| Ok(vec![]))
        .build()
        .unwrap_err();
    assert!(matches!(err, BuildError::UnknownMethod { .. }));
}

#[test]
fn returns_that_break_the_spec_become_errors() {
    let service = ServiceBuilder::new(demo::spec(demo::LIGHT_1_0))
        .method("setLight", |_, _| Ok(vec![TypedValue::Int32(0)]))
        .method("getSupportedTypes", |_, _| Ok(vec![]))
        .method("setBrightness", |_, _| Ok(vec![]))
        .method("getBrightness", |_, _| Ok(vec![]))
        .build()
        .unwrap();
    let reg = registry();
    let _h = serve(
        service,
        Transport::Binderized,
        reg.clone(),
        ServeOptions::default(),
    )
    .unwrap();
    let proxy = Proxy::connect(&*reg, demo::spec(demo::LIGHT_1_0), "default").unwrap();
    match proxy.call("getBrightness", vec![]) {
        Err(CallError::Remote { code, .. }) => assert_eq!(code, "BAD_RETURN"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn old_client_reaches_newer_minor_but_not_the_reverse() {
    let reg = registry();
    let _h = serve(
        demo::reference_light(),
        Transport::Binderized,
        reg.clone(),
        ServeOptions::default(),
    )
    .unwrap();
    assert!(Proxy::connect(&*reg, demo::spec(demo::LIGHT_1_0), "default").is_ok());
    match Proxy::connect(&*reg, demo::spec(demo::LIGHT_1_1), "default") {
        Err(CallError::Lookup(_)) => {}
        other => panic!("1.1 client must not find a 1.0 service: {other:?}"),
    }
}

#[test]
fn stopping_a_service_unregisters_it_and_drops_clients() {
    let reg = registry();
    let mut h = serve(
        demo::echo_service(),
        Transport::Binderized,
        reg.clone(),
        ServeOptions::default(),
    )
    .unwrap();
    let proxy = Proxy::connect(&*reg, demo::spec(demo::ECHO), "default").unwrap();
    proxy.call("echoBytes", vec![TypedValue::str("a")]).unwrap();
    h.stop();
    assert!(reg.list().unwrap().is_empty());
    assert!(matches!(
        proxy.call("echoBytes", vec![TypedValue::str("a")]),
        Err(CallError::Disconnected(_) | CallError::Transport(_))
    ));
}

#[test]
fn hello_counts_other_clients() {
    let reg = registry();
    let _h = serve(
        demo::echo_service(),
        Transport::Binderized,
        reg.clone(),
        ServeOptions::default(),
    )
    .unwrap();
    let spec = demo::spec(demo::ECHO);
    let first = Proxy::connect(&*reg, spec.clone(), "default").unwrap();
    assert_eq!(first.hello().unwrap(), 0);
    let second = Proxy::connect(&*reg, spec, "default").unwrap();
    assert_eq!(second.hello().unwrap(), 1);
    assert_eq!(first.hello().unwrap(), 1);
}

#[test]
fn a_panicking_service_drops_only_that_connection() {
    let reg = registry();
    let _h = serve(
        demo::faulty_echo(),
        Transport::Binderized,
        reg.clone(),
        ServeOptions::default(),
    )
    .unwrap();
    let spec = demo::spec(demo::ECHO);
    let mode = |ordinal| TypedValue::Enum {
        name: "demo.echo@1.0::Mode".into(),
        ordinal,
    };
    let victim = Proxy::connect(&*reg, spec.clone(), "default").unwrap();
    let bystander = Proxy::connect(&*reg, spec.clone(), "default").unwrap();
    assert!(victim
        .call("echoMode", vec![mode(6), TypedValue::UInt32(1)])
        .is_ok());
    assert!(matches!(
        victim.call("echoMode", vec![mode(FAULTY), TypedValue::UInt32(1)]),
        Err(CallError::Disconnected(_))
    ));
    assert!(victim
        .call("echoBytes", vec![TypedValue::str("a")])
        .is_err());
    assert!(bystander
        .call("echoBytes", vec![TypedValue::str("a")])
        .is_ok());
    let fresh = Proxy::connect(&*reg, spec, "default").unwrap();
    assert!(fresh
        .call("echoMode", vec![mode(8), TypedValue::UInt32(2)])
        .is_ok());
}

const FAULTY: i32 = demo::FAULTY_MODE;

fn subscribe(proxy: &Proxy, callback: TypedValue) -> Vec<TypedValue> {
    proxy
        .call(
            "subscribe",
            vec![
                callback,
                TypedValue::vec(
                    Tag::Struct,
                    vec![subscribe_options(PERF_VEHICLE_SPEED, 10.0)],
                ),
            ],
        )
        .unwrap()
}

fn sequences(rx: &mpsc::Receiver<Vec<TypedValue>>, n: usize) -> Vec<i32> {
    (0..n)
        .map(|_| {
            let values = rx
                .recv_timeout(Duration::from_secs(3))
                .expect("event within 3 s");
            let items = values[0].as_items().unwrap();
            event_sequence(&items[0]).unwrap()
        })
        .collect()
}

fn callback_test(mode: Transport) {
    let reg = registry();
    let options = VehicleOptions {
        period: Duration::from_millis(5),
        max_events: Some(20),
    };
    let _h = serve(
        demo::vehicle_service(options),
        mode,
        reg.clone(),
        ServeOptions::default(),
    )
    .unwrap();
    let proxy = Proxy::connect(&*reg, demo::spec(demo::VEHICLE), "default").unwrap();
    let cb_spec = demo::spec(demo::VEHICLE_CALLBACK);

    let (tx_a, rx_a) = mpsc::channel();
    let (tx_b, rx_b) = mpsc::channel();
    let tx_a = Mutex::new(tx_a);
    let tx_b = Mutex::new(tx_b);
    let idle_count = Arc::new(AtomicU64::new(0));
    let idle = idle_count.clone();
    let a = proxy
        .register_callback(
            Callbacks::new(cb_spec.clone()).on("onPropertyEvent", move |v| {
                let _ = tx_a.lock().unwrap().send(v);
            }),
        )
        .unwrap();
    let b = proxy
        .register_callback(
            Callbacks::new(cb_spec.clone()).on("onPropertyEvent", move |v| {
                let _ = tx_b.lock().unwrap().send(v);
            }),
        )
        .unwrap();
    let _never_passed = proxy
        .register_callback(Callbacks::new(cb_spec).on("onPropertyEvent", move |_| {
            idle.fetch_add(1, Ordering::SeqCst);
        }))
        .unwrap();
    assert_ne!(a, b);

    assert_eq!(subscribe(&proxy, a), vec![status_code(STATUS_OK)]);
    assert_eq!(sequences(&rx_a, 5), [0, 1, 2, 3, 4]);
    assert_eq!(subscribe(&proxy, b), vec![status_code(STATUS_OK)]);
    assert_eq!(sequences(&rx_b, 20), (0..20).collect::<Vec<_>>());
    assert_eq!(sequences(&rx_a, 15), (5..20).collect::<Vec<_>>());
    // Publishers stop after max_events.
    assert!(rx_a.recv_timeout(Duration::from_millis(100)).is_err());
    assert_eq!(idle_count.load(Ordering::SeqCst), 0);
    assert_eq!(proxy.unhandled_events(), 0);
}

#[test]
fn callbacks_arrive_in_order_binderized() {
    callback_test(Transport::Binderized);
}

#[test]
fn callbacks_arrive_in_order_passthrough() {
    callback_test(Transport::Passthrough);
}

#[test]
fn subscribing_without_a_callback_is_refused() {
    let proxy = Proxy::local(
        demo::vehicle_service(VehicleOptions::default()),
        demo::spec(demo::VEHICLE),
    );
    assert_eq!(
        subscribe(&proxy, TypedValue::Handle(0)),
        vec![status_code(STATUS_INVALID_ARG)]
    );
}

#[test]
fn vehicle_prop_configs() {
    let proxy = Proxy::local(
        demo::vehicle_service(VehicleOptions::default()),
        demo::spec(demo::VEHICLE),
    );
    let all = proxy.call("getAllPropConfigs", vec![]).unwrap();
    let props: Vec<i128> = all[0]
        .as_items()
        .unwrap()
        .iter()
        .map(|c| c.field("prop").unwrap().as_integer().unwrap())
        .collect();
    assert_eq!(
        props,
        [
            INFO_MAKE.into(),
            GEAR_SELECTION.into(),
            PERF_VEHICLE_SPEED.into()
        ]
    );
    let ids = |v: &[i32]| {
        TypedValue::vec(
            Tag::Int32,
            v.iter().map(|&i| TypedValue::Int32(i)).collect(),
        )
    };
    let some = proxy
        .call("getPropConfigs", vec![ids(&[GEAR_SELECTION])])
        .unwrap();
    assert_eq!(some[0], status_code(STATUS_OK));
    assert_eq!(some[1].as_items().unwrap().len(), 1);
    let bad = proxy
        .call("getPropConfigs", vec![ids(&[GEAR_SELECTION, 1])])
        .unwrap();
    assert_eq!(bad[0], status_code(STATUS_INVALID_ARG));
}

#[test]
fn mapper_tracks_buffers() {
    let proxy = Proxy::local(demo::mapper_service(), demo::spec(demo::MAPPER));
    let made = proxy
        .call(
            "createDescriptor",
            vec![descriptor_info(64, 32, 1, 1, 0x1_0000_0003)],
        )
        .unwrap();
    assert_eq!(made[0], error_code(NONE));
    let words: Vec<TypedValue> = [64u32, 32, 1, 1, 3, 1].map(TypedValue::UInt32).to_vec();
    assert_eq!(made[1].as_items().unwrap(), words.as_slice());
    let bad = proxy
        .call("createDescriptor", vec![descriptor_info(0, 32, 1, 1, 0)])
        .unwrap();
    assert_eq!(bad[0], error_code(BAD_DESCRIPTOR));
    let imported = proxy
        .call("importBuffer", vec![TypedValue::UInt64(99)])
        .unwrap();
    assert_eq!(imported[0], error_code(NONE));
    let buffer = imported[1].clone();
    assert_eq!(
        proxy.call("freeBuffer", vec![buffer.clone()]).unwrap(),
        [error_code(NONE)]
    );
    assert_eq!(
        proxy.call("freeBuffer", vec![buffer]).unwrap(),
        [error_code(BAD_BUFFER)]
    );
}

#[test]
fn fmq_across_threads_preserves_the_byte_stream() {
    let (mut w, mut r) = FastQueue::anonymous(64).unwrap().split();
    let data: Vec<u8> = (0..20_000u32).map(|i| (i * 7 % 251) as u8).collect();
    let expected = data.clone();
    let writer = thread::spawn(move || {
        for chunk in data.chunks(37) {
            assert!(w.write_all_blocking(chunk, Some(Duration::from_secs(10))));
        }
    });
    let mut got = vec![0u8; expected.len()];
    assert!(r.read_exact_blocking(&mut got, Some(Duration::from_secs(10))));
    writer.join().unwrap();
    assert_eq!(got, expected);
}

#[test]
fn fmq_shared_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q");
    let mut w = FastQueue::create(&path, 256).unwrap().into_writer();
    let mut r = FastQueue::open(&path).unwrap().into_reader();
    assert_eq!(w.write(b"hello queue"), 11);
    assert_eq!(r.read_vec(100), b"hello queue");
    let mut none = [0u8; 4];
    assert!(!r.read_exact_blocking(&mut none, Some(Duration::from_millis(10))));
}

#[derive(Debug, Clone)]
enum QueueOp {
    Write(Vec<u8>),
    Read(usize),
}

fn queue_op() -> impl Strategy<Value = QueueOp> {
    prop_oneof![
        prop::collection::vec(any::<u8>(), 0..40).prop_map(QueueOp::Write),
        (0usize..40).prop_map(QueueOp::Read),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Any interleaving of partial writes and reads behaves like a bounded
    /// FIFO of bytes.
    #[test]
    fn fmq_matches_a_bounded_fifo(cap_log in 3u32..7, ops in prop::collection::vec(queue_op(), 0..60)) {
        let cap = 1usize << cap_log;
        let (mut w, mut r) = FastQueue::anonymous(cap).unwrap().split();
        let mut model = std::collections::VecDeque::new();
        for op in ops {
            match op {
                QueueOp::Write(bytes) => {
                    let room = cap - model.len();
                    let n = w.write(&bytes);
                    prop_assert_eq!(n, bytes.len().min(room));
                    model.extend(&bytes[..n]);
                }
                QueueOp::Read(max) => {
                    let got = r.read_vec(max);
                    let want: Vec<u8> = model.drain(..max.min(model.len())).collect();
                    prop_assert_eq!(got, want);
                }
            }
            prop_assert_eq!(r.available(), model.len());
            prop_assert_eq!(w.free(), cap - model.len());
        }
    }
}
