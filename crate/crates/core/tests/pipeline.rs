use std::path::Path;

use serde_json::Value;
use stormaccess::access::OVERALL_GROUP;
use stormaccess::network::{travel_time_table, ClosureMask, Horizon};
use stormaccess::scenario_io::{
    compare_results, generate_fixture, load_bundle, load_results, twin_town, write_results, StormPreset, SyntheticFixtureSpec,
    MANIFEST,
};
use stormaccess::{access, Error};

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST)).unwrap()).unwrap()
}

#[test]
fn twin_town_matches_closed_form_at_default_sample_count() {
    for p in [0.1, 0.5, 0.9] {
        let twin = twin_town(p, 1000, 11).unwrap();
        let b = &twin.bundle;
        let dn: Vec<usize> = b.demands.iter().map(|d| b.graph.snap(&d.location).unwrap()).collect();
        let sn: Vec<usize> = b.supplies.iter().map(|s| b.graph.snap(&s.location).unwrap()).collect();
        let mut cut = ClosureMask::new();
        cut.close(twin.bridge_edge, true);
        let a_open = access::two_step_fca(&travel_time_table(&b.graph, &ClosureMask::new(), &dn, &sn, 50.0).unwrap(), &b.supplies, &b.demands).values;
        let a_cut = access::two_step_fca(&travel_time_table(&b.graph, &cut, &dn, &sn, 50.0).unwrap(), &b.supplies, &b.demands).values;

        let r = b.run().unwrap();
        assert_eq!(r.bridge_probabilities[0].1, p);
        let long = r.horizon(Horizon::Long).unwrap();
        assert_eq!(long.distinct_outcomes(), 2);
        for d in 0..b.demands.len() {
            let expect = p * a_cut[d] + (1.0 - p) * a_open[d];
            let rel = (long.mean[d] - expect).abs() / expect;
            assert!(rel < 0.05, "p={p} demand {d}: {} vs {expect}", long.mean[d]);
        }
        // The short horizon has no inundation here, so both horizons agree.
        assert_eq!(r.horizon(Horizon::Short).unwrap().mean, long.mean);
    }
}

#[test]
fn calm_storm_closes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticFixtureSpec {
        storms: vec![StormPreset {
            name: "calm".into(),
            surge_amplitude_m: 0.0,
            wave_amplitude_m: 0.0,
        }],
        ..SyntheticFixtureSpec::small()
    };
    let files = generate_fixture(&spec, dir.path()).unwrap();
    let r = load_bundle(files.scenario("calm").unwrap()).unwrap().run().unwrap();
    assert!(r.bridge_probabilities.iter().all(|(_, p)| *p == 0.0));
    for hr in &r.horizons {
        assert_eq!(hr.deterministic_closures, 0);
        assert_eq!(hr.distinct_outcomes(), 1);
        assert!(hr.cov.iter().all(|&c| c == 0.0));
    }
}

#[test]
fn stronger_storm_closes_a_superset() {
    let dir = tempfile::tempdir().unwrap();
    let files = generate_fixture(&SyntheticFixtureSpec::small(), dir.path()).unwrap();
    let weak = load_bundle(files.scenario("storm-1-like").unwrap()).unwrap().run().unwrap();
    let strong = load_bundle(files.scenario("storm-2-like").unwrap()).unwrap().run().unwrap();
    for ((_, pw), (_, ps)) in weak.bridge_probabilities.iter().zip(&strong.bridge_probabilities) {
        assert!(ps >= pw);
    }
    let w = weak.horizon(Horizon::Short).unwrap();
    let s = strong.horizon(Horizon::Short).unwrap();
    assert!(s.deterministic_closures >= w.deterministic_closures);
    assert!(s.no_access_fraction >= w.no_access_fraction);
}

#[test]
fn outputs_round_trip_and_manifest_tracks_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let files = generate_fixture(&SyntheticFixtureSpec::small(), &dir.path().join("in")).unwrap();
    let scenario = files.scenario("storm-1-like").unwrap();
    let bundle = load_bundle(scenario).unwrap();
    let result = bundle.run().unwrap();
    let out = dir.path().join("out");
    let written = write_results(&result, &bundle, &out).unwrap();
    assert_eq!(written.len(), 4);

    let set = load_results(&out).unwrap();
    assert_eq!(set.storm, "storm-1-like");
    let short = &set.horizons[&Horizon::Short];
    let hr = result.horizon(Horizon::Short).unwrap();
    for (row, mean) in short.demands.iter().zip(&hr.mean) {
        assert_eq!(row.mean_score, *mean);
    }
    assert_eq!(short.groups[0].0, OVERALL_GROUP);

    let m = manifest(&out);
    assert_eq!(m["fragility_checksum"], bundle.fragility.checksum());
    assert_eq!(m["scenario"]["seed"], bundle.scenario.config.seed);
    assert!(m["scenario"].get("workers").is_none());
    let surge_hash = m["inputs"]["surge"].as_str().unwrap().to_string();

    // Change one surge value: the input hash changes, nothing else input-side.
    let surge_path = &bundle.scenario.paths.surge;
    let text = std::fs::read_to_string(surge_path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cols: Vec<String> = lines[1].split(',').map(String::from).collect();
    let bumped: f64 = cols[2].parse::<f64>().unwrap() + 0.001;
    cols[2] = bumped.to_string();
    lines[1] = cols.join(",");
    std::fs::write(surge_path, lines.join("\n") + "\n").unwrap();
    let changed = load_bundle(scenario).unwrap();
    let out2 = dir.path().join("out2");
    write_results(&changed.run().unwrap(), &changed, &out2).unwrap();
    let m2 = manifest(&out2);
    assert_ne!(m2["inputs"]["surge"].as_str().unwrap(), surge_hash);
    assert_eq!(m2["inputs"]["network"], m["inputs"]["network"]);
    assert_eq!(m2["inputs"]["demands"], m["inputs"]["demands"]);
}

#[test]
fn report_compares_storms() {
    let dir = tempfile::tempdir().unwrap();
    let files = generate_fixture(&SyntheticFixtureSpec::small(), &dir.path().join("in")).unwrap();
    let mut sets = Vec::new();
    for storm in ["storm-1-like", "storm-2-like"] {
        let b = load_bundle(files.scenario(storm).unwrap()).unwrap();
        let out = dir.path().join(storm);
        write_results(&b.run().unwrap(), &b, &out).unwrap();
        sets.push(load_results(&out).unwrap());
    }
    let cmp = compare_results(&sets[0], &sets[1]).unwrap();
    assert_eq!(cmp.horizons.len(), 2);
    let short = cmp.horizon(Horizon::Short).unwrap();
    assert!(short.no_access_other >= short.no_access_baseline);
    assert!(short.overall_delta().unwrap() <= 0.0);
    assert_eq!(short.quartile_drops, short.scores.iter().filter(|s| s.quartile_dropped).count());
    assert!(cmp.cross_horizon.iter().all(|c| c.biased));

    // Same storm against itself: all deltas vanish.
    let same = compare_results(&sets[0], &sets[0]).unwrap();
    assert!(same.horizons.iter().all(|h| h.scores.iter().all(|s| s.delta == 0.0) && h.quartile_drops == 0));

    // Different demand sets cannot be compared.
    let mut other = sets[1].clone();
    other.horizons.get_mut(&Horizon::Short).unwrap().demands.pop();
    assert!(matches!(compare_results(&sets[0], &other), Err(Error::Mismatch(_))));
}

#[test]
fn fixture_generation_is_deterministic() {
    let read_all = |dir: &Path| {
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticFixtureSpec::small();
    generate_fixture(&spec, &dir.path().join("a")).unwrap();
    generate_fixture(&spec, &dir.path().join("b")).unwrap();
    let a = read_all(&dir.path().join("a"));
    assert_eq!(a, read_all(&dir.path().join("b")));
    assert_eq!(a.len(), 8);

    let reseeded = SyntheticFixtureSpec { seed: 7, ..spec };
    generate_fixture(&reseeded, &dir.path().join("c")).unwrap();
    assert_ne!(a, read_all(&dir.path().join("c")));
}
