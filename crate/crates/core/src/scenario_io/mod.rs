//! Dataset ingestion and validation, result files and synthetic fixtures.
//!
//! Input files:
//!
//! - `network.geojson`: `Point` features for nodes (`id`) and `LineString`
//!   features for edges (`id`, `from`, `to`, `length_m`, `speed_mps`,
//!   `kind` = `road` | `bridge`, `bridge_id` for bridges, `h_r` for roads).
//! - `bridges.csv`: `bridge_id,h_b,mass_ton_per_m,x,y`
//! - `surge.csv`: `x,y,h_st,h_s`
//! - `supplies.csv`: `supply_id,x,y,employees`
//! - `demands.csv`: `demand_id,x,y,population` plus one column per subgroup
//!
//! Coordinates are planar meters in the CRS declared by the scenario file.

mod config;
mod fixture;
mod results;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::access::{DemandSite, SupplySite};
use crate::error::{Error, Result, ValidationReport};
use crate::fragility::FragilityTable;
use crate::geom::Point;
use crate::hazard::{SurgeField, SurgeSample};
use crate::network::{build_graph, BridgeRecord, EdgeInput, EdgeKind, Node, RoadGraph};
use crate::simulate::{run_scenario, ScenarioInputs, ScenarioResult};

pub use config::{parse_horizons, BundlePaths, ScenarioFile};
pub use fixture::{
    generate_fixture, twin_town, FixtureFiles, StormPreset, SyntheticFixtureSpec, TwinTown,
};
pub use results::{
    compare_results, load_results, results_file_name, write_results, Comparison, CrossHorizonDelta, DemandRow, GroupDelta,
    HorizonComparison, HorizonRows, ResultSet, ScoreDelta, GROUP_SUMMARY, MANIFEST,
};

/// Everything needed to run one scenario, validated.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub scenario: ScenarioFile,
    pub graph: RoadGraph,
    pub surge: SurgeField,
    pub supplies: Vec<SupplySite>,
    pub demands: Vec<DemandSite>,
    pub fragility: FragilityTable,
    /// SHA-256 of every input file keyed by its role.
    pub input_hashes: BTreeMap<String, String>,
}

impl DatasetBundle {
    pub fn run(&self) -> Result<ScenarioResult> {
        run_scenario(
            &self.scenario.config,
            &ScenarioInputs {
                graph: &self.graph,
                surge: &self.surge,
                supplies: &self.supplies,
                demands: &self.demands,
                fragility: &self.fragility,
            },
        )
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Reads a file, recording a missing/unreadable file as an issue.
fn read_input(path: &Path, report: &mut ValidationReport, hashes: &mut BTreeMap<String, String>, role: &str) -> Option<Vec<u8>> {
    match fs::read(path) {
        Ok(bytes) => {
            hashes.insert(role.to_string(), sha256_hex(&bytes));
            Some(bytes)
        }
        Err(e) => {
            report.push(&path.display().to_string(), None, format!("cannot read file: {e}"));
            None
        }
    }
}

/// Loads and validates a scenario file and every dataset it names. All
/// problems across all files are reported together.
pub fn load_bundle(scenario_path: &Path) -> Result<DatasetBundle> {
    let scenario = ScenarioFile::load(scenario_path)?;
    load_bundle_with(scenario)
}

pub fn load_bundle_with(scenario: ScenarioFile) -> Result<DatasetBundle> {
    let mut report = ValidationReport::new();
    let mut hashes = BTreeMap::new();
    let p = scenario.paths.clone();

    let network = read_input(&p.network, &mut report, &mut hashes, "network")
        .and_then(|b| parse_network(&b, &file_label(&p.network), &scenario.crs, &mut report));
    let bridges = read_input(&p.bridges, &mut report, &mut hashes, "bridges")
        .map(|b| parse_bridges(&b, &file_label(&p.bridges), &mut report));
    let surge = read_input(&p.surge, &mut report, &mut hashes, "surge")
        .and_then(|b| parse_surge(&b, &file_label(&p.surge), &scenario, &mut report));
    let supplies = read_input(&p.supplies, &mut report, &mut hashes, "supplies")
        .map(|b| parse_supplies(&b, &file_label(&p.supplies), &mut report));
    let demands = read_input(&p.demands, &mut report, &mut hashes, "demands")
        .map(|b| parse_demands(&b, &file_label(&p.demands), &mut report));
    let fragility = match &p.fragility {
        None => Some(FragilityTable::default()),
        Some(path) => read_input(path, &mut report, &mut hashes, "fragility").and_then(|b| {
            FragilityTable::from_csv_reader(b.as_slice())
                .map_err(|e| report.push(&file_label(path), None, e.to_string()))
                .ok()
        }),
    };

    if let (Some(bridges), Some(table)) = (&bridges, &fragility) {
        let label = file_label(&p.bridges);
        for (line, b) in bridges {
            if table.coefficients_for(b.mass_ton_per_m).is_err() {
                let d = table.domain();
                report.push(
                    &label,
                    Some(*line),
                    format!(
                        "bridge {} has mass {} ton/m outside the fragility table ({}, {}]",
                        b.bridge_id, b.mass_ton_per_m, d.lo, d.hi
                    ),
                );
            }
        }
    }

    let graph = match (network, &bridges) {
        (Some((nodes, edges)), Some(bridges)) => {
            match build_graph(nodes, edges, bridges.iter().map(|(_, b)| b.clone()).collect()) {
                Ok(g) => Some(g),
                Err(Error::Validation(r)) => {
                    report.extend(r);
                    None
                }
                Err(e) => {
                    report.push("network", None, e.to_string());
                    None
                }
            }
        }
        _ => None,
    };

    report.into_result()?;
    Ok(DatasetBundle {
        scenario,
        graph: graph.expect("validated"),
        surge: surge.expect("validated"),
        supplies: supplies.expect("validated"),
        demands: demands.expect("validated"),
        fragility: fragility.expect("validated"),
        input_hashes: hashes,
    })
}

fn crs_name(v: &Value) -> Option<&str> {
    v.get("crs")?.get("properties")?.get("name")?.as_str()
}

fn parse_network(bytes: &[u8], label: &str, crs: &str, report: &mut ValidationReport) -> Option<(Vec<Node>, Vec<EdgeInput>)> {
    let root: Value = match serde_json::from_slice(bytes) {
        Ok(v) => v,
        Err(e) => {
            report.push(label, Some(e.line()), format!("invalid JSON: {e}"));
            return None;
        }
    };
    if let Some(name) = crs_name(&root) {
        if name != crs {
            report.push(label, None, format!("CRS mismatch: file declares `{name}`, scenario uses `{crs}`"));
        }
    }
    let Some(features) = root.get("features").and_then(Value::as_array) else {
        report.push(label, None, "expected a FeatureCollection with a `features` array");
        return None;
    };
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (i, f) in features.iter().enumerate() {
        let row = Some(i + 1);
        let geom = f.get("geometry");
        let gtype = geom.and_then(|g| g.get("type")).and_then(Value::as_str);
        let coords = geom.and_then(|g| g.get("coordinates"));
        let props = f.get("properties").cloned().unwrap_or(Value::Null);
        let uint = |key: &str| props.get(key).and_then(Value::as_u64);
        let float = |key: &str| props.get(key).and_then(Value::as_f64);
        match gtype {
            Some("Point") => {
                let (Some(id), Some(location)) = (uint("id"), coords.and_then(point_of)) else {
                    report.push(label, row, "node feature needs numeric `id` and [x, y] coordinates");
                    continue;
                };
                nodes.push(Node { id, location });
            }
            Some("LineString") => {
                let Some(id) = uint("id") else {
                    report.push(label, row, "edge feature needs a numeric `id`");
                    continue;
                };
                let mut missing = Vec::new();
                let mut need_u = |k: &str| uint(k).or_else(|| {
                    missing.push(k.to_string());
                    None
                });
                let (from, to) = (need_u("from"), need_u("to"));
                let mut need_f = |k: &str| float(k).or_else(|| {
                    missing.push(k.to_string());
                    None
                });
                let (length_m, speed_mps) = (need_f("length_m"), need_f("speed_mps"));
                let kind = match props.get("kind").and_then(Value::as_str) {
                    Some("road") => match float("h_r") {
                        Some(h_r) => Some(EdgeKind::Road { h_r }),
                        None => {
                            missing.push("h_r".into());
                            None
                        }
                    },
                    Some("bridge") => match props.get("bridge_id").and_then(Value::as_str) {
                        Some(b) => Some(EdgeKind::Bridge { bridge_id: b.to_string() }),
                        None => {
                            missing.push("bridge_id".into());
                            None
                        }
                    },
                    other => {
                        report.push(label, row, format!("edge {id} has unknown kind {other:?}"));
                        continue;
                    }
                };
                let geometry: Option<Vec<Point>> = coords
                    .and_then(Value::as_array)
                    .map(|pts| pts.iter().map(point_of).collect::<Option<Vec<_>>>())
                    .unwrap_or(Some(Vec::new()));
                if geometry.is_none() {
                    missing.push("valid coordinates".into());
                }
                if !missing.is_empty() {
                    report.push(label, row, format!("edge {id} is missing {}", missing.join(", ")));
                    continue;
                }
                edges.push(EdgeInput {
                    id,
                    from: from.unwrap(),
                    to: to.unwrap(),
                    length_m: length_m.unwrap(),
                    speed_mps: speed_mps.unwrap(),
                    kind: kind.unwrap(),
                    geometry: geometry.unwrap(),
                });
            }
            other => report.push(label, row, format!("unsupported geometry type {other:?}")),
        }
    }
    Some((nodes, edges))
}

fn point_of(v: &Value) -> Option<Point> {
    let a = v.as_array()?;
    match a.as_slice() {
        [x, y, ..] => Some(Point::new(x.as_f64()?, y.as_f64()?)),
        _ => None,
    }
}

/// Minimal CSV table: header names plus `(file line, record)` rows.
struct Table {
    headers: Vec<String>,
    rows: Vec<(usize, csv::StringRecord)>,
}

impl Table {
    fn read(bytes: &[u8], label: &str, required: &[&str], report: &mut ValidationReport) -> Option<Table> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let headers: Vec<String> = match rdr.headers() {
            Ok(h) => h.iter().map(str::to_string).collect(),
            Err(e) => {
                report.push(label, Some(1), format!("unreadable header: {e}"));
                return None;
            }
        };
        let missing: Vec<&str> = required.iter().copied().filter(|r| !headers.iter().any(|h| h == r)).collect();
        if !missing.is_empty() {
            report.push(label, Some(1), format!("missing column(s): {}", missing.join(", ")));
            return None;
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            match rec {
                Ok(r) => {
                    let line = r.position().map_or(0, |p| p.line() as usize);
                    rows.push((line, r));
                }
                Err(e) => {
                    let line = e.position().map(|p| p.line() as usize);
                    report.push(label, line, format!("malformed record: {e}"));
                }
            }
        }
        Some(Table { headers, rows })
    }

    fn col(&self, name: &str) -> usize {
        self.headers.iter().position(|h| h == name).expect("checked in read")
    }
}

fn text_field(rec: &csv::StringRecord, idx: usize, name: &str, label: &str, line: usize, report: &mut ValidationReport) -> Option<String> {
    match rec.get(idx) {
        Some(s) if !s.is_empty() => Some(s.to_string()),
        _ => {
            report.push(label, Some(line), format!("empty `{name}`"));
            None
        }
    }
}

fn num_field(rec: &csv::StringRecord, idx: usize, name: &str, label: &str, line: usize, report: &mut ValidationReport) -> Option<f64> {
    let raw = rec.get(idx).unwrap_or("");
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Some(v),
        _ => {
            report.push(label, Some(line), format!("`{name}` is not a finite number: `{raw}`"));
            None
        }
    }
}

fn parse_bridges(bytes: &[u8], label: &str, report: &mut ValidationReport) -> Vec<(usize, BridgeRecord)> {
    let Some(t) = Table::read(bytes, label, &["bridge_id", "h_b", "mass_ton_per_m", "x", "y"], report) else {
        return Vec::new();
    };
    let (ci, ch, cm, cx, cy) = (t.col("bridge_id"), t.col("h_b"), t.col("mass_ton_per_m"), t.col("x"), t.col("y"));
    let mut out = Vec::new();
    for (line, r) in &t.rows {
        let line = *line;
        let id = text_field(r, ci, "bridge_id", label, line, report);
        let h_b = num_field(r, ch, "h_b", label, line, report);
        let mass = num_field(r, cm, "mass_ton_per_m", label, line, report);
        let x = num_field(r, cx, "x", label, line, report);
        let y = num_field(r, cy, "y", label, line, report);
        if let (Some(bridge_id), Some(h_b), Some(mass_ton_per_m), Some(x), Some(y)) = (id, h_b, mass, x, y) {
            out.push((
                line,
                BridgeRecord {
                    bridge_id,
                    h_b,
                    mass_ton_per_m,
                    location: Point::new(x, y),
                },
            ));
        }
    }
    out
}

fn parse_surge(bytes: &[u8], label: &str, scenario: &ScenarioFile, report: &mut ValidationReport) -> Option<SurgeField> {
    let t = Table::read(bytes, label, &["x", "y", "h_st", "h_s"], report)?;
    let (cx, cy, cst, cs) = (t.col("x"), t.col("y"), t.col("h_st"), t.col("h_s"));
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    let before = report.len();
    for (line, r) in &t.rows {
        let line = *line;
        let x = num_field(r, cx, "x", label, line, report);
        let y = num_field(r, cy, "y", label, line, report);
        let h_st = num_field(r, cst, "h_st", label, line, report);
        let h_s = num_field(r, cs, "h_s", label, line, report);
        if let (Some(x), Some(y), Some(h_st), Some(h_s)) = (x, y, h_st, h_s) {
            if h_s < 0.0 {
                report.push(label, Some(line), format!("negative wave height {h_s}"));
            }
            if !seen.insert((x.to_bits(), y.to_bits())) {
                report.push(label, Some(line), format!("duplicate sample location ({x}, {y})"));
            }
            samples.push(SurgeSample {
                location: Point::new(x, y),
                h_st,
                h_s,
            });
        }
    }
    if samples.is_empty() && report.len() == before {
        report.push(label, None, "surge field has no samples");
    }
    if report.len() != before {
        return None;
    }
    let field = SurgeField::new(samples, scenario.datum.clone()).and_then(|f| match scenario.coverage_radius_m {
        Some(r) => f.with_coverage_radius(r),
        None => Ok(f),
    });
    field.map_err(|e| report.push(label, None, e.to_string())).ok()
}

fn parse_supplies(bytes: &[u8], label: &str, report: &mut ValidationReport) -> Vec<SupplySite> {
    let Some(t) = Table::read(bytes, label, &["supply_id", "x", "y", "employees"], report) else {
        return Vec::new();
    };
    let (ci, cx, cy, ce) = (t.col("supply_id"), t.col("x"), t.col("y"), t.col("employees"));
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (line, r) in &t.rows {
        let line = *line;
        let id = text_field(r, ci, "supply_id", label, line, report);
        let x = num_field(r, cx, "x", label, line, report);
        let y = num_field(r, cy, "y", label, line, report);
        let e = num_field(r, ce, "employees", label, line, report);
        let (Some(supply_id), Some(x), Some(y), Some(capacity)) = (id, x, y, e) else {
            continue;
        };
        if capacity < 0.0 {
            report.push(label, Some(line), format!("supply {supply_id} has negative capacity {capacity}"));
        }
        if !ids.insert(supply_id.clone()) {
            report.push(label, Some(line), format!("duplicate supply id {supply_id}"));
        }
        out.push(SupplySite {
            supply_id,
            location: Point::new(x, y),
            capacity,
        });
    }
    out
}

fn parse_demands(bytes: &[u8], label: &str, report: &mut ValidationReport) -> Vec<DemandSite> {
    const FIXED: [&str; 4] = ["demand_id", "x", "y", "population"];
    let Some(t) = Table::read(bytes, label, &FIXED, report) else {
        return Vec::new();
    };
    let (ci, cx, cy, cp) = (t.col("demand_id"), t.col("x"), t.col("y"), t.col("population"));
    let groups: Vec<(usize, String)> = t
        .headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !FIXED.contains(&h.as_str()))
        .map(|(i, h)| (i, h.clone()))
        .collect();
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (line, r) in &t.rows {
        let line = *line;
        let id = text_field(r, ci, "demand_id", label, line, report);
        let x = num_field(r, cx, "x", label, line, report);
        let y = num_field(r, cy, "y", label, line, report);
        let pop = num_field(r, cp, "population", label, line, report);
        let mut subgroups = BTreeMap::new();
        for (gi, name) in &groups {
            if let Some(v) = num_field(r, *gi, name, label, line, report) {
                subgroups.insert(name.clone(), v);
            }
        }
        let (Some(demand_id), Some(x), Some(y), Some(population)) = (id, x, y, pop) else {
            continue;
        };
        if population < 0.0 {
            report.push(label, Some(line), format!("demand {demand_id} has negative population {population}"));
        }
        for (name, &v) in &subgroups {
            if v < 0.0 {
                report.push(label, Some(line), format!("demand {demand_id} has negative `{name}` population {v}"));
            } else if v > population {
                report.push(
                    label,
                    Some(line),
                    format!("demand {demand_id} has `{name}` = {v} above its population {population}"),
                );
            }
        }
        if !ids.insert(demand_id.clone()) {
            report.push(label, Some(line), format!("duplicate demand id {demand_id}"));
        }
        out.push(DemandSite {
            demand_id,
            location: Point::new(x, y),
            population,
            groups: subgroups,
        });
    }
    out
}

/// Writes every input file of a bundle under the paths named by its
/// scenario file, plus the scenario file itself at `scenario_path`.
pub fn write_bundle(bundle: &DatasetBundle, scenario_path: &Path) -> Result<Vec<PathBuf>> {
    let base = scenario_path.parent().unwrap_or_else(|| Path::new("."));
    let p = &bundle.scenario.paths;
    let mut written = Vec::new();
    let mut put = |path: &Path, contents: String| -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, contents).map_err(|e| Error::io(path, e))?;
        written.push(path.to_path_buf());
        Ok(())
    };
    put(&p.network, network_geojson(&bundle.graph, &bundle.scenario.crs))?;
    put(&p.bridges, bridges_csv(bundle.graph.bridges()))?;
    put(&p.surge, surge_csv(&bundle.surge))?;
    put(&p.supplies, supplies_csv(&bundle.supplies))?;
    put(&p.demands, demands_csv(&bundle.demands))?;
    if let Some(f) = &p.fragility {
        put(f, bundle.fragility.to_csv_string())?;
    }
    put(scenario_path, bundle.scenario.render(base))?;
    Ok(written)
}

pub(crate) fn network_geojson(graph: &RoadGraph, crs: &str) -> String {
    let mut features = Vec::with_capacity(graph.nodes().len() + graph.edges().len());
    for n in graph.nodes() {
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [n.location.x, n.location.y]},
            "properties": {"id": n.id},
        }));
    }
    for (i, e) in graph.edges().iter().enumerate() {
        let mut props = Map::new();
        props.insert("id".into(), json!(e.id));
        props.insert("from".into(), json!(graph.nodes()[e.from].id));
        props.insert("to".into(), json!(graph.nodes()[e.to].id));
        props.insert("length_m".into(), json!(e.length_m));
        props.insert("speed_mps".into(), json!(e.speed_mps));
        match &e.kind {
            EdgeKind::Road { h_r } => {
                props.insert("kind".into(), json!("road"));
                props.insert("h_r".into(), json!(h_r));
            }
            EdgeKind::Bridge { bridge_id } => {
                props.insert("kind".into(), json!("bridge"));
                props.insert("bridge_id".into(), json!(bridge_id));
            }
        }
        let coords: Vec<[f64; 2]> = graph.edge_vertices(i).iter().map(|p| [p.x, p.y]).collect();
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": coords},
            "properties": Value::Object(props),
        }));
    }
    let doc = json!({
        "type": "FeatureCollection",
        "crs": {"type": "name", "properties": {"name": crs}},
        "features": features,
    });
    let mut s = serde_json::to_string(&doc).expect("serializable");
    s.push('\n');
    s
}

fn bridges_csv(bridges: &[BridgeRecord]) -> String {
    let mut out = String::from("bridge_id,h_b,mass_ton_per_m,x,y\n");
    for b in bridges {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            b.bridge_id, b.h_b, b.mass_ton_per_m, b.location.x, b.location.y
        ));
    }
    out
}

fn surge_csv(field: &SurgeField) -> String {
    let mut out = String::from("x,y,h_st,h_s\n");
    for s in field.samples() {
        out.push_str(&format!("{},{},{},{}\n", s.location.x, s.location.y, s.h_st, s.h_s));
    }
    out
}

fn supplies_csv(supplies: &[SupplySite]) -> String {
    let mut out = String::from("supply_id,x,y,employees\n");
    for s in supplies {
        out.push_str(&format!("{},{},{},{}\n", s.supply_id, s.location.x, s.location.y, s.capacity));
    }
    out
}

fn demands_csv(demands: &[DemandSite]) -> String {
    let mut groups: Vec<&str> = demands.iter().flat_map(|d| d.groups.keys().map(String::as_str)).collect();
    groups.sort_unstable();
    groups.dedup();
    let mut out = String::from("demand_id,x,y,population");
    for g in &groups {
        out.push(',');
        out.push_str(g);
    }
    out.push('\n');
    for d in demands {
        out.push_str(&format!("{},{},{},{}", d.demand_id, d.location.x, d.location.y, d.population));
        for g in &groups {
            out.push_str(&format!(",{}", d.groups.get(*g).copied().unwrap_or(0.0)));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) {
        fs::write(dir.join(name), text).unwrap();
    }

    fn tiny_dataset(dir: &Path) -> PathBuf {
        write(
            dir,
            "network.geojson",
            r#"{"type":"FeatureCollection","crs":{"type":"name","properties":{"name":"EPSG:32615"}},"features":[
{"type":"Feature","geometry":{"type":"Point","coordinates":[0,0]},"properties":{"id":1}},
{"type":"Feature","geometry":{"type":"Point","coordinates":[600,0]},"properties":{"id":2}},
{"type":"Feature","geometry":{"type":"Point","coordinates":[1200,0]},"properties":{"id":3}},
{"type":"Feature","geometry":{"type":"LineString","coordinates":[[0,0],[600,0]]},"properties":{"id":10,"from":1,"to":2,"length_m":600,"speed_mps":10,"kind":"road","h_r":1.5}},
{"type":"Feature","geometry":{"type":"LineString","coordinates":[[600,0],[1200,0]]},"properties":{"id":11,"from":2,"to":3,"length_m":600,"speed_mps":10,"kind":"bridge","bridge_id":"B1"}}
]}"#,
        );
        write(dir, "bridges.csv", "bridge_id,h_b,mass_ton_per_m,x,y\nB1,6.0,12.5,900,0\n");
        write(dir, "surge.csv", "x,y,h_st,h_s\n0,0,2.0,0.5\n1200,0,3.0,1.0\n");
        write(dir, "supplies.csv", "supply_id,x,y,employees\nS1,1200,0,40\n");
        write(
            dir,
            "demands.csv",
            "demand_id,x,y,population,age65plus\nD1,0,0,1000,100\nD2,600,0,500,80\n",
        );
        write(
            dir,
            "scenario.cfg",
            "storm = tiny\ncrs = EPSG:32615\ndatum = NAVD88\nnetwork = network.geojson\nbridges = bridges.csv\nsurge = surge.csv\nsupplies = supplies.csv\ndemands = demands.csv\nsamples = 10\n",
        );
        dir.join("scenario.cfg")
    }

    #[test]
    fn loads_a_valid_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let b = load_bundle(&tiny_dataset(dir.path())).unwrap();
        assert_eq!(b.graph.nodes().len(), 3);
        assert_eq!(b.graph.edges().len(), 2);
        assert_eq!(b.graph.bridges().len(), 1);
        assert_eq!(b.surge.samples().len(), 2);
        assert_eq!(b.demands[1].groups["age65plus"], 80.0);
        assert_eq!(b.input_hashes.len(), 5);
        assert_eq!(b.surge.datum_label(), "NAVD88");
    }

    fn issues_of(path: &Path) -> ValidationReport {
        match load_bundle(path) {
            Err(Error::Validation(r)) => r,
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn reports_every_violation_across_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_dataset(dir.path());
        write(dir.path(), "bridges.csv", "bridge_id,h_b,mass_ton_per_m,x,y\nB1,6.0,12.5,900,0\nB9,6.0,40,0,0\n");
        write(
            dir.path(),
            "demands.csv",
            "demand_id,x,y,population,age65plus\nD1,0,0,-5,0\nD2,600,0,500,900\nD3,abc,0,1,0\n",
        );
        write(dir.path(), "supplies.csv", "supply_id,x,y,employees\nS1,1200,0,-1\n");
        let text = issues_of(&cfg).to_string();
        assert!(text.contains("demand D1 has negative population"), "{text}");
        assert!(text.contains("`age65plus` = 900 above"), "{text}");
        assert!(text.contains("demands.csv row 4: `x` is not a finite number"), "{text}");
        assert!(text.contains("supply S1 has negative capacity"), "{text}");
        assert!(text.contains("bridge B9 has mass 40"), "{text}");
        assert!(text.contains("bridge B9 is not attached"), "{text}");
    }

    #[test]
    fn crs_mismatch_and_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_dataset(dir.path());
        let net = fs::read_to_string(dir.path().join("network.geojson")).unwrap();
        write(dir.path(), "network.geojson", &net.replace("EPSG:32615", "EPSG:4326"));
        fs::remove_file(dir.path().join("surge.csv")).unwrap();
        let text = issues_of(&cfg).to_string();
        assert!(text.contains("CRS mismatch"), "{text}");
        assert!(text.contains("surge.csv: cannot read file"), "{text}");
    }

    #[test]
    fn malformed_geojson_feature_is_located() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_dataset(dir.path());
        let net = fs::read_to_string(dir.path().join("network.geojson")).unwrap();
        write(dir.path(), "network.geojson", &net.replace(r#""speed_mps":10,"kind":"road""#, r#""kind":"road""#));
        let r = issues_of(&cfg);
        let issue = r.issues.iter().find(|i| i.message.contains("missing speed_mps")).unwrap();
        assert_eq!(issue.row, Some(4));
    }

    #[test]
    fn write_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let original = load_bundle(&tiny_dataset(dir.path())).unwrap();
        let out = tempfile::tempdir().unwrap();
        let mut copy = original.clone();
        let re = |p: &Path| out.path().join(p.file_name().unwrap());
        copy.scenario.paths = BundlePaths {
            network: re(&original.scenario.paths.network),
            bridges: re(&original.scenario.paths.bridges),
            surge: re(&original.scenario.paths.surge),
            supplies: re(&original.scenario.paths.supplies),
            demands: re(&original.scenario.paths.demands),
            fragility: None,
        };
        write_bundle(&copy, &out.path().join("scenario.cfg")).unwrap();
        let back = load_bundle(&out.path().join("scenario.cfg")).unwrap();
        assert_eq!(back.scenario, copy.scenario);
        assert_eq!(back.graph, original.graph);
        assert_eq!(back.surge, original.surge);
        assert_eq!(back.supplies, original.supplies);
        assert_eq!(back.demands, original.demands);
        assert_eq!(back.fragility, original.fragility);
    }
}
