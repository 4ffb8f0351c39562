//! Flat `key = value` scenario configuration files.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result, ValidationReport};
use crate::hazard::ExposureThresholds;
use crate::network::Horizon;
use crate::simulate::ScenarioConfig;

/// Paths of the dataset files named by a scenario file, resolved against
/// the scenario file's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct BundlePaths {
    pub network: PathBuf,
    pub bridges: PathBuf,
    pub surge: PathBuf,
    pub supplies: PathBuf,
    pub demands: PathBuf,
    pub fragility: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub config: ScenarioConfig,
    /// Planar CRS label every coordinate is expressed in.
    pub crs: String,
    /// Vertical datum shared by surge and elevations.
    pub datum: String,
    /// Surge coverage radius in meters; `None` means unlimited.
    pub coverage_radius_m: Option<f64>,
    pub paths: BundlePaths,
}

const KNOWN_KEYS: &[&str] = &[
    "storm",
    "crs",
    "datum",
    "network",
    "bridges",
    "surge",
    "supplies",
    "demands",
    "fragility",
    "bridge_close_zc",
    "road_close_din",
    "d0_min",
    "samples",
    "seed",
    "horizons",
    "workers",
    "coverage_radius_m",
    "convergence_window",
    "convergence_tolerance",
];

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base, &path.display().to_string())
    }

    /// Parses scenario text; relative data paths resolve against `base`.
    pub fn parse(text: &str, base: &Path, label: &str) -> Result<Self> {
        let mut report = ValidationReport::new();
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                report.push(label, Some(i + 1), format!("expected `key = value`, got `{line}`"));
                continue;
            };
            let key = k.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                report.push(label, Some(i + 1), format!("unknown key `{key}`"));
                continue;
            }
            if entries.iter().any(|(_, k, _)| *k == key) {
                report.push(label, Some(i + 1), format!("duplicate key `{key}`"));
                continue;
            }
            entries.push((i + 1, key, v.trim().to_string()));
        }

        let get = |key: &str| entries.iter().find(|(_, k, _)| k == key).map(|(l, _, v)| (*l, v.as_str()));
        let require = |key: &str, report: &mut ValidationReport| -> Option<(usize, String)> {
            match get(key) {
                Some((l, v)) if !v.is_empty() => Some((l, v.to_string())),
                _ => {
                    report.push(label, None, format!("missing required key `{key}`"));
                    None
                }
            }
        };

        let storm = require("storm", &mut report).map(|(_, v)| v);
        let crs = require("crs", &mut report).map(|(_, v)| v);
        let datum = get("datum").map(|(_, v)| v.to_string()).unwrap_or_default();
        let path_of = |key: &str, report: &mut ValidationReport| require(key, report).map(|(_, v)| base.join(v));
        let network = path_of("network", &mut report);
        let bridges = path_of("bridges", &mut report);
        let surge = path_of("surge", &mut report);
        let supplies = path_of("supplies", &mut report);
        let demands = path_of("demands", &mut report);
        let fragility = get("fragility").map(|(_, v)| base.join(v));

        fn num<T: std::str::FromStr>(
            report: &mut ValidationReport,
            label: &str,
            entry: Option<(usize, &str)>,
            key: &str,
            default: T,
        ) -> T {
            match entry {
                None => default,
                Some((line, v)) => v.parse().unwrap_or_else(|_| {
                    report.push(label, Some(line), format!("`{key}` has invalid value `{v}`"));
                    default
                }),
            }
        }

        let defaults = ScenarioConfig::default();
        let thresholds = ExposureThresholds {
            bridge_close_zc: num(&mut report, label, get("bridge_close_zc"), "bridge_close_zc", -0.6),
            road_close_din: num(&mut report, label, get("road_close_din"), "road_close_din", 0.6),
        };
        let catchment_min = num(&mut report, label, get("d0_min"), "d0_min", defaults.catchment_min);
        let samples = num(&mut report, label, get("samples"), "samples", defaults.samples);
        let seed = num(&mut report, label, get("seed"), "seed", defaults.seed);
        let convergence_window = num(
            &mut report,
            label,
            get("convergence_window"),
            "convergence_window",
            defaults.convergence_window,
        );
        let convergence_tolerance = num(
            &mut report,
            label,
            get("convergence_tolerance"),
            "convergence_tolerance",
            defaults.convergence_tolerance,
        );
        let workers = get("workers").map(|e| num(&mut report, label, Some(e), "workers", 1usize));
        let coverage_radius_m = get("coverage_radius_m").map(|e| num(&mut report, label, Some(e), "coverage_radius_m", f64::INFINITY));
        let horizons = match get("horizons") {
            None => defaults.horizons.clone(),
            Some((line, v)) => parse_horizons(v).unwrap_or_else(|e| {
                report.push(label, Some(line), e.to_string());
                Vec::new()
            }),
        };

        let config = ScenarioConfig {
            storm: storm.clone().unwrap_or_default(),
            thresholds,
            catchment_min,
            samples,
            seed,
            horizons,
            workers,
            convergence_window,
            convergence_tolerance,
        };
        if report.is_empty() {
            if let Err(e) = config.validate() {
                report.push(label, None, e.to_string());
            }
        }
        report.into_result()?;

        Ok(Self {
            config,
            crs: crs.unwrap_or_default(),
            datum,
            coverage_radius_m,
            paths: BundlePaths {
                network: network.unwrap_or_default(),
                bridges: bridges.unwrap_or_default(),
                surge: surge.unwrap_or_default(),
                supplies: supplies.unwrap_or_default(),
                demands: demands.unwrap_or_default(),
                fragility,
            },
        })
    }

    /// Renders the file with data paths relative to `base` where possible.
    pub fn render(&self, base: &Path) -> String {
        let rel = |p: &Path| {
            p.strip_prefix(base)
                .unwrap_or(p)
                .to_string_lossy()
                .replace('\\', "/")
        };
        let c = &self.config;
        let mut out = String::new();
        out.push_str(&format!("storm = {}\n", c.storm));
        out.push_str(&format!("crs = {}\n", self.crs));
        out.push_str(&format!("datum = {}\n", self.datum));
        out.push_str(&format!("network = {}\n", rel(&self.paths.network)));
        out.push_str(&format!("bridges = {}\n", rel(&self.paths.bridges)));
        out.push_str(&format!("surge = {}\n", rel(&self.paths.surge)));
        out.push_str(&format!("supplies = {}\n", rel(&self.paths.supplies)));
        out.push_str(&format!("demands = {}\n", rel(&self.paths.demands)));
        if let Some(f) = &self.paths.fragility {
            out.push_str(&format!("fragility = {}\n", rel(f)));
        }
        out.push_str(&format!("bridge_close_zc = {}\n", c.thresholds.bridge_close_zc));
        out.push_str(&format!("road_close_din = {}\n", c.thresholds.road_close_din));
        out.push_str(&format!("d0_min = {}\n", c.catchment_min));
        out.push_str(&format!("samples = {}\n", c.samples));
        out.push_str(&format!("seed = {}\n", c.seed));
        let hs: Vec<&str> = c.horizons.iter().map(Horizon::as_str).collect();
        out.push_str(&format!("horizons = {}\n", hs.join(",")));
        if let Some(r) = self.coverage_radius_m {
            out.push_str(&format!("coverage_radius_m = {r}\n"));
        }
        if let Some(w) = c.workers {
            out.push_str(&format!("workers = {w}\n"));
        }
        out.push_str(&format!("convergence_window = {}\n", c.convergence_window));
        out.push_str(&format!("convergence_tolerance = {}\n", c.convergence_tolerance));
        out
    }
}

pub fn parse_horizons(text: &str) -> Result<Vec<Horizon>> {
    let mut out: Vec<Horizon> = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let h: Horizon = part.parse()?;
        if !out.contains(&h) {
            out.push(h);
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("no horizons listed"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# comment
storm = storm-1-like
crs = EPSG:32615
network = network.geojson
bridges = bridges.csv
surge = surge.csv
supplies = supplies.csv
demands = demands.csv
";

    #[test]
    fn defaults_fill_optional_keys() {
        let f = ScenarioFile::parse(MINIMAL, Path::new("/data"), "scenario.cfg").unwrap();
        assert_eq!(f.config.samples, 1000);
        assert_eq!(f.config.catchment_min, 50.0);
        assert_eq!(f.config.thresholds, ExposureThresholds::default());
        assert_eq!(f.config.horizons, vec![Horizon::Short, Horizon::Long]);
        assert_eq!(f.paths.network, Path::new("/data/network.geojson"));
        assert_eq!(f.paths.fragility, None);
        assert_eq!(f.coverage_radius_m, None);
    }

    #[test]
    fn render_round_trips() {
        let text = format!("{MINIMAL}samples = 25\nseed = 9\nhorizons = long\nworkers = 2\ncoverage_radius_m = 1500\nfragility = table.csv\n");
        let f = ScenarioFile::parse(&text, Path::new("/data"), "s").unwrap();
        let again = ScenarioFile::parse(&f.render(Path::new("/data")), Path::new("/data"), "s").unwrap();
        assert_eq!(f, again);
        assert_eq!(again.config.horizons, vec![Horizon::Long]);
        assert_eq!(again.config.workers, Some(2));
    }

    #[test]
    fn reports_every_problem_with_line_numbers() {
        let text = "storm = x\nbogus line\nsamples = many\nfoo = 1\nstorm = y\n";
        let Err(Error::Validation(report)) = ScenarioFile::parse(text, Path::new("."), "s.cfg") else {
            panic!("expected validation failure");
        };
        let rows: Vec<Option<usize>> = report.issues.iter().map(|i| i.row).collect();
        assert!(rows.contains(&Some(2)));
        assert!(rows.contains(&Some(3)));
        assert!(rows.contains(&Some(4)));
        assert!(rows.contains(&Some(5)));
        assert!(report.to_string().contains("missing required key `crs`"));
    }

    #[test]
    fn invalid_values_rejected() {
        let text = format!("{MINIMAL}samples = 0\n");
        assert!(ScenarioFile::parse(&text, Path::new("."), "s").is_err());
        let text = format!("{MINIMAL}horizons = soon\n");
        assert!(ScenarioFile::parse(&text, Path::new("."), "s").is_err());
    }
}
