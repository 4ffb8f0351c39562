//! Result files: per-horizon demand GeoJSON, group summary CSV and a run
//! manifest. Writing the same result twice yields identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::{sha256_hex, DatasetBundle};
use crate::access::{Quartile, OVERALL_GROUP};
use crate::error::{Error, Result};
use crate::network::Horizon;
use crate::simulate::ScenarioResult;

pub const GROUP_SUMMARY: &str = "group_summary.csv";
pub const MANIFEST: &str = "manifest.json";

pub fn results_file_name(h: Horizon) -> String {
    format!("results_{}.geojson", h.as_str())
}

fn put(dir: &Path, name: &str, contents: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes `results_<horizon>.geojson` per horizon, `group_summary.csv` and
/// `manifest.json` into `out_dir`. Returns the written paths.
pub fn write_results(result: &ScenarioResult, bundle: &DatasetBundle, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    if result.demand_ids.len() != bundle.demands.len() {
        return Err(Error::invalid("result does not match the bundle's demands"));
    }
    let mut written = Vec::new();
    let mut output_hashes = BTreeMap::new();

    for hr in &result.horizons {
        let features: Vec<Value> = bundle
            .demands
            .iter()
            .enumerate()
            .map(|(i, d)| {
                json!({
                    "type": "Feature",
                    "geometry": {"type": "Point", "coordinates": [d.location.x, d.location.y]},
                    "properties": {
                        "demand_id": d.demand_id,
                        "storm": result.storm,
                        "horizon": hr.horizon.as_str(),
                        "mean_score": hr.mean[i],
                        "cov": hr.cov[i],
                        "min_score": hr.min[i],
                        "max_score": hr.max[i],
                        "quartile": hr.quartile[i].as_str(),
                        "population": d.population,
                    },
                })
            })
            .collect();
        let doc = json!({
            "type": "FeatureCollection",
            "crs": {"type": "name", "properties": {"name": bundle.scenario.crs}},
            "features": features,
        });
        let mut text = serde_json::to_string(&doc).expect("serializable");
        text.push('\n');
        let name = results_file_name(hr.horizon);
        output_hashes.insert(name.clone(), sha256_hex(text.as_bytes()));
        put(out_dir, &name, text.as_bytes(), &mut written)?;
    }

    let mut csv = String::from("storm,horizon,group,population,weighted_average\n");
    for hr in &result.horizons {
        for g in &hr.groups {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                result.storm,
                hr.horizon.as_str(),
                g.group,
                g.population,
                g.average
            ));
        }
    }
    output_hashes.insert(GROUP_SUMMARY.to_string(), sha256_hex(csv.as_bytes()));
    put(out_dir, GROUP_SUMMARY, csv.as_bytes(), &mut written)?;

    let c = &bundle.scenario.config;
    let summary: Vec<Value> = result
        .horizons
        .iter()
        .map(|hr| {
            json!({
                "horizon": hr.horizon.as_str(),
                "mean_score": hr.mean_score(),
                "average_cov": hr.average_cov,
                "no_access_fraction": hr.no_access_fraction,
                "converged_at": hr.convergence.samples(),
                "deterministic_closures": hr.deterministic_closures,
                "distinct_outcomes": hr.distinct_outcomes(),
            })
        })
        .collect();
    let bridges: Vec<Value> = result
        .bridge_probabilities
        .iter()
        .map(|(id, p)| json!({"bridge_id": id, "failure_probability": p}))
        .collect();
    let manifest = json!({
        "tool": {"name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION")},
        "fragility_checksum": bundle.fragility.checksum(),
        "scenario": {
            "storm": c.storm,
            "crs": bundle.scenario.crs,
            "datum": bundle.scenario.datum,
            "seed": c.seed,
            "samples": c.samples,
            "d0_min": c.catchment_min,
            "bridge_close_zc": c.thresholds.bridge_close_zc,
            "road_close_din": c.thresholds.road_close_din,
            "horizons": c.horizons.iter().map(Horizon::as_str).collect::<Vec<_>>(),
            "coverage_radius_m": bundle.scenario.coverage_radius_m,
            "convergence_window": c.convergence_window,
            "convergence_tolerance": c.convergence_tolerance,
        },
        "inputs": bundle.input_hashes,
        "outputs": output_hashes,
        "summary": summary,
        "bridges": bridges,
    });
    let mut text = serde_json::to_string_pretty(&manifest).expect("serializable");
    text.push('\n');
    put(out_dir, MANIFEST, text.as_bytes(), &mut written)?;
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemandRow {
    pub demand_id: String,
    pub mean_score: f64,
    pub cov: f64,
    pub quartile: Quartile,
    pub population: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct HorizonRows {
    pub demands: Vec<DemandRow>,
    /// `(group, weighted average)` in file order.
    pub groups: Vec<(String, f64)>,
}

impl HorizonRows {
    pub fn no_access_fraction(&self) -> f64 {
        crate::access::no_access_fraction(&self.demands.iter().map(|d| d.mean_score).collect::<Vec<_>>())
    }
}

/// A result directory read back from disk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultSet {
    pub storm: String,
    pub horizons: BTreeMap<Horizon, HorizonRows>,
}

fn bad(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::invalid(format!("{}: {msg}", path.display()))
}

pub fn load_results(dir: &Path) -> Result<ResultSet> {
    let mpath = dir.join(MANIFEST);
    let manifest: Value = serde_json::from_slice(&fs::read(&mpath).map_err(|e| Error::io(&mpath, e))?)
        .map_err(|e| bad(&mpath, e))?;
    let storm = manifest["scenario"]["storm"]
        .as_str()
        .ok_or_else(|| bad(&mpath, "missing scenario.storm"))?
        .to_string();
    let horizons: Vec<Horizon> = manifest["scenario"]["horizons"]
        .as_array()
        .ok_or_else(|| bad(&mpath, "missing scenario.horizons"))?
        .iter()
        .map(|v| v.as_str().unwrap_or("").parse())
        .collect::<Result<_>>()?;

    let mut out = BTreeMap::new();
    for h in horizons {
        let path = dir.join(results_file_name(h));
        let doc: Value = serde_json::from_slice(&fs::read(&path).map_err(|e| Error::io(&path, e))?)
            .map_err(|e| bad(&path, e))?;
        let features = doc["features"].as_array().ok_or_else(|| bad(&path, "missing features"))?;
        let demands = features
            .iter()
            .map(|f| {
                let p = &f["properties"];
                Some(DemandRow {
                    demand_id: p["demand_id"].as_str()?.to_string(),
                    mean_score: p["mean_score"].as_f64()?,
                    cov: p["cov"].as_f64()?,
                    quartile: p["quartile"].as_str()?.parse().ok()?,
                    population: p["population"].as_f64()?,
                })
            })
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| bad(&path, "malformed demand feature"))?;
        out.insert(
            h,
            HorizonRows {
                demands,
                groups: Vec::new(),
            },
        );
    }

    let gpath = dir.join(GROUP_SUMMARY);
    let mut rdr = csv::Reader::from_path(&gpath).map_err(|e| bad(&gpath, e))?;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(&gpath, e))?;
        let h: Horizon = rec.get(1).unwrap_or("").parse()?;
        let group = rec.get(2).unwrap_or("").to_string();
        let avg: f64 = rec
            .get(4)
            .unwrap_or("")
            .parse()
            .map_err(|_| bad(&gpath, "non-numeric weighted_average"))?;
        out.entry(h).or_default().groups.push((group, avg));
    }
    Ok(ResultSet { storm, horizons: out })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreDelta {
    pub demand_id: String,
    pub baseline: f64,
    pub other: f64,
    pub delta: f64,
    pub quartile_dropped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupDelta {
    pub group: String,
    pub baseline: f64,
    pub other: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonComparison {
    pub horizon: Horizon,
    pub scores: Vec<ScoreDelta>,
    pub quartile_drops: usize,
    pub groups: Vec<GroupDelta>,
    pub no_access_baseline: f64,
    pub no_access_other: f64,
}

/// Long minus short group averages within one result set. Zero-access
/// demands differ between horizons, so these deltas are biased and are
/// reported with `biased = true`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossHorizonDelta {
    pub storm: String,
    pub group: String,
    pub short: f64,
    pub long: f64,
    pub delta: f64,
    pub biased: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub baseline_storm: String,
    pub other_storm: String,
    pub horizons: Vec<HorizonComparison>,
    pub cross_horizon: Vec<CrossHorizonDelta>,
}

/// Per-horizon score, quartile and group deltas of `other` against
/// `baseline`. Both sets must cover the same demand ids.
pub fn compare_results(baseline: &ResultSet, other: &ResultSet) -> Result<Comparison> {
    let mut horizons = Vec::new();
    for (h, a) in &baseline.horizons {
        let Some(b) = other.horizons.get(h) else {
            continue;
        };
        let index: BTreeMap<&str, &DemandRow> = b.demands.iter().map(|d| (d.demand_id.as_str(), d)).collect();
        if index.len() != a.demands.len() || a.demands.iter().any(|d| !index.contains_key(d.demand_id.as_str())) {
            return Err(Error::Mismatch(format!("demand ids differ on the {h} horizon")));
        }
        let scores: Vec<ScoreDelta> = a
            .demands
            .iter()
            .map(|da| {
                let db = index[da.demand_id.as_str()];
                ScoreDelta {
                    demand_id: da.demand_id.clone(),
                    baseline: da.mean_score,
                    other: db.mean_score,
                    delta: db.mean_score - da.mean_score,
                    quartile_dropped: db.quartile < da.quartile,
                }
            })
            .collect();
        let bgroups: BTreeMap<&str, f64> = b.groups.iter().map(|(g, v)| (g.as_str(), *v)).collect();
        let groups = a
            .groups
            .iter()
            .filter_map(|(g, va)| {
                bgroups.get(g.as_str()).map(|vb| GroupDelta {
                    group: g.clone(),
                    baseline: *va,
                    other: *vb,
                    delta: vb - va,
                })
            })
            .collect();
        horizons.push(HorizonComparison {
            horizon: *h,
            quartile_drops: scores.iter().filter(|s| s.quartile_dropped).count(),
            scores,
            groups,
            no_access_baseline: a.no_access_fraction(),
            no_access_other: b.no_access_fraction(),
        });
    }
    if horizons.is_empty() {
        return Err(Error::Mismatch("result sets share no horizon".into()));
    }
    let mut cross_horizon = Vec::new();
    for set in [baseline, other] {
        if let (Some(s), Some(l)) = (set.horizons.get(&Horizon::Short), set.horizons.get(&Horizon::Long)) {
            let long: BTreeMap<&str, f64> = l.groups.iter().map(|(g, v)| (g.as_str(), *v)).collect();
            for (g, vs) in &s.groups {
                if let Some(vl) = long.get(g.as_str()) {
                    cross_horizon.push(CrossHorizonDelta {
                        storm: set.storm.clone(),
                        group: g.clone(),
                        short: *vs,
                        long: *vl,
                        delta: vl - vs,
                        biased: true,
                    });
                }
            }
        }
    }
    Ok(Comparison {
        baseline_storm: baseline.storm.clone(),
        other_storm: other.storm.clone(),
        horizons,
        cross_horizon,
    })
}

impl Comparison {
    pub fn horizon(&self, h: Horizon) -> Option<&HorizonComparison> {
        self.horizons.iter().find(|c| c.horizon == h)
    }
}

impl HorizonComparison {
    pub fn overall_delta(&self) -> Option<f64> {
        self.groups.iter().find(|g| g.group == OVERALL_GROUP).map(|g| g.delta)
    }
}
