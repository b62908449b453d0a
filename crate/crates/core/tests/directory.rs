mod common;

use std::collections::HashSet;
use std::thread;
use std::time::Duration;

use common::*;
use datapipe::directory::{
    parse_target, DirectoryClient, DirectoryConfig, DirectoryEntry, DirectoryError, DirectoryServer, ReservedTemplate,
    Target, DIRECTORY_ENV,
};
use datapipe::harness::{generate_dataset, partition, CsvEngine, Payload};
use datapipe::pipe::{open_input, open_output, PipeFormat};
use datapipe::wire::Compression;

fn entry(q: &str, i: u32, port: u16) -> DirectoryEntry {
    DirectoryEntry { query_id: q.into(), worker_index: i, hostname: "127.0.0.1".into(), port }
}

#[test]
fn lookups_form_a_perfect_matching() {
    for w in [1u32, 4, 8, 16] {
        let dir = directory();
        let client = DirectoryClient::new(dir.local_addr());
        let q = query_id("match");
        let lookups: Vec<_> = (0..w)
            .map(|i| {
                let (client, q) = (client.clone(), q.clone());
                thread::spawn(move || client.lookup(&q, i).unwrap())
            })
            .collect();
        let mut registered = HashSet::new();
        for i in (0..w).rev() {
            let e = entry(&q, i, 20000 + i as u16);
            client.register(e.clone()).unwrap();
            registered.insert(e);
        }
        let claimed: Vec<_> = lookups.into_iter().map(|h| h.join().unwrap()).collect();
        let claimed_set: HashSet<_> = claimed.iter().cloned().collect();
        assert_eq!(claimed.len(), claimed_set.len(), "an entry was claimed twice");
        assert_eq!(claimed_set, registered);
        for i in 0..w {
            assert!(matches!(client.lookup(&q, i), Err(DirectoryError::AlreadyClaimed { .. })));
        }
    }
}

#[test]
fn duplicate_registration_is_refused_remotely() {
    let dir = directory();
    let client = DirectoryClient::new(dir.local_addr());
    client.register(entry("Q1", 0, 1)).unwrap();
    assert!(matches!(client.register(entry("Q1", 0, 2)), Err(DirectoryError::Duplicate { .. })));
    assert_eq!(client.lookup("Q1", 0).unwrap().port, 1);
}

#[test]
fn lookup_times_out_without_registration() {
    let dir =
        DirectoryServer::bind("127.0.0.1:0", DirectoryConfig { lookup_timeout: Duration::from_millis(100) }).unwrap();
    let client = DirectoryClient::new(dir.local_addr());
    assert!(matches!(client.lookup("never", 0), Err(DirectoryError::Timeout { .. })));
}

#[test]
fn reconcile_over_the_wire() {
    let dir = directory();
    let client = DirectoryClient::new(dir.local_addr());
    let q = query_id("rec");
    assert_eq!(client.reconcile(&q, 2, 2).unwrap(), 0);
    assert!(matches!(client.reconcile(&q, 3, 2), Err(DirectoryError::Unsupported { exporters: 3, importers: 2 })));
}

#[test]
fn workers_run_pairwise_through_the_directory() {
    for w in [1u32, 4, 8] {
        let dir = directory();
        let cfg = config(&dir, PipeFormat::Column, Compression::None);
        let t = target("B", w, &query_id("pairs"));
        let data = generate_dataset(4000, 11, Payload::BenchSchema);
        let engine = CsvEngine::default();
        let parts: Vec<_> = (0..w).map(|i| partition(&data, i, w)).collect();
        let mut sources: Vec<_> = (0..w).map(|i| open_input(&t, i, &cfg).unwrap()).collect();
        let got: Vec<_> = thread::scope(|s| {
            for (i, part) in parts.iter().enumerate().rev() {
                let (t, cfg) = (&t, &cfg);
                s.spawn(move || {
                    let mut sink = open_output(t, i as u32, cfg).unwrap();
                    engine.export(part, &mut sink).unwrap();
                    sink.close().unwrap();
                });
            }
            let readers: Vec<_> =
                sources.iter_mut().map(|src| s.spawn(|| engine.import(src, data.schema()).unwrap())).collect();
            readers.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert_eq!(got, parts, "workers={w}");
    }
}

#[test]
fn concurrent_queries_stay_apart() {
    let dir = directory();
    let cfg = config(&dir, PipeFormat::Row, Compression::None);
    let engine = CsvEngine::default();
    let a = generate_dataset(2000, 1, Payload::Int);
    let b = generate_dataset(2000, 2, Payload::Int);
    let (ta, tb) = (target("B", 2, &query_id("qa")), target("B", 2, &query_id("qb")));
    let mut sources: Vec<_> =
        [&ta, &tb, &ta, &tb].iter().zip([0, 0, 1, 1]).map(|(t, w)| open_input(t, w, &cfg).unwrap()).collect();
    let expected = vec![partition(&a, 0, 2), partition(&b, 0, 2), partition(&a, 1, 2), partition(&b, 1, 2)];
    let got: Vec<_> = thread::scope(|s| {
        // exporters start in the opposite order to the registrations
        let jobs = [(&tb, 1, &expected[3]), (&ta, 1, &expected[2]), (&tb, 0, &expected[1]), (&ta, 0, &expected[0])];
        for (t, w, part) in jobs {
            let cfg = &cfg;
            s.spawn(move || {
                let mut sink = open_output(t, w, cfg).unwrap();
                engine.export(part, &mut sink).unwrap();
                sink.close().unwrap();
            });
        }
        let readers: Vec<_> =
            sources.iter_mut().map(|src| s.spawn(|| engine.import(src, a.schema()).unwrap())).collect();
        readers.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(got, expected);
}

#[test]
fn target_grammar() {
    let t = |s| parse_target(s, None).unwrap();
    match t("db://A?workers=3") {
        Target::Reserved(r) => assert_eq!((r.system_name.as_str(), r.workers), ("A", Some(3))),
        other => panic!("{other:?}"),
    }
    assert!(matches!(t("/data/out.csv"), Target::File(_)));
    assert!(parse_target("db://?workers=2", None).is_err());
    assert!(parse_target("db://A?workers=x", None).is_err());
    let tmpl = ReservedTemplate::new("/tmp/__reserved__[Name]").unwrap();
    assert!(matches!(parse_target("/tmp/__reserved__Spark", Some(&tmpl)).unwrap(), Target::Reserved(_)));
    assert!(matches!(parse_target("/tmp/other", Some(&tmpl)).unwrap(), Target::File(_)));
}

#[test]
fn address_from_environment() {
    let dir = directory();
    std::env::set_var(DIRECTORY_ENV, dir.local_addr().to_string());
    let client = DirectoryClient::from_env().unwrap();
    assert_eq!(client.addr(), dir.local_addr());
}
