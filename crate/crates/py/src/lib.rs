//! Python bindings: hazard and fragility functions, 2SFCA building blocks,
//! fixture generation and end-to-end scenario runs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use stormaccess::access::{self, DemandSite, SupplySite};
use stormaccess::fragility::FragilityTable;
use stormaccess::hazard::{self, ExposureThresholds};
use stormaccess::network::{Horizon, TravelTimeTable};
use stormaccess::scenario_io::{self, DatasetBundle, SyntheticFixtureSpec};
use stormaccess::simulate::ScenarioResult;
use stormaccess::{Error, Point};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyOSError::new_err(err.to_string()),
        Error::UndefinedGroup(_) | Error::Mismatch(_) => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn horizon(name: &str) -> PyResult<Horizon> {
    name.parse().map_err(to_py)
}

/// Deck uplift failure probability for a span of `mass` ton/m.
#[pyfunction]
fn uplift_probability(mass: f64, h_max: f64, z_c: f64) -> PyResult<f64> {
    let row = FragilityTable::default().coefficients_for(mass).map_err(to_py)?;
    stormaccess::fragility::uplift_probability(&row, h_max, z_c).map_err(to_py)
}

#[pyfunction]
fn fragility_checksum() -> String {
    FragilityTable::default().checksum()
}

#[pyfunction]
fn relative_surge_elevation(deck_elevation: f64, surge_elevation: f64) -> PyResult<f64> {
    hazard::relative_surge_elevation(deck_elevation, surge_elevation).map_err(to_py)
}

#[pyfunction]
fn inundation_depth(road_elevation: f64, surge_elevation: f64) -> PyResult<f64> {
    hazard::inundation_depth(road_elevation, surge_elevation).map_err(to_py)
}

#[pyfunction]
fn max_wave_height(significant_wave_height: f64) -> PyResult<f64> {
    hazard::max_wave_height(significant_wave_height).map_err(to_py)
}

#[pyfunction]
fn bridge_inundation_closed(z_c: f64) -> bool {
    hazard::bridge_inundation_closed(z_c, &ExposureThresholds::default())
}

#[pyfunction]
fn road_inundation_closed(d_in: f64) -> bool {
    hazard::road_inundation_closed(d_in, &ExposureThresholds::default())
}

/// Scaled 2SFCA scores from a dense demand x supply matrix of travel
/// times (`None` = unreachable).
#[pyfunction]
#[pyo3(signature = (times, capacities, populations, cutoff=50.0))]
fn two_step_fca(times: Vec<Vec<Option<f64>>>, capacities: Vec<f64>, populations: Vec<f64>, cutoff: f64) -> PyResult<Vec<f64>> {
    if times.len() != populations.len() || times.iter().any(|r| r.len() != capacities.len()) {
        return Err(PyValueError::new_err("times must be len(populations) rows of len(capacities)"));
    }
    let origin = Point::new(0.0, 0.0);
    let supplies: Vec<SupplySite> = capacities
        .iter()
        .enumerate()
        .map(|(j, &capacity)| SupplySite {
            supply_id: j.to_string(),
            location: origin,
            capacity,
        })
        .collect();
    let demands: Vec<DemandSite> = populations
        .iter()
        .enumerate()
        .map(|(i, &population)| DemandSite {
            demand_id: i.to_string(),
            location: origin,
            population,
            groups: BTreeMap::new(),
        })
        .collect();
    let rows = times
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter_map(|(j, t)| t.filter(|&t| t <= cutoff).map(|t| (j as u32, t)))
                .collect()
        })
        .collect();
    let table = TravelTimeTable::from_rows(cutoff, capacities.len(), rows);
    Ok(access::two_step_fca(&table, &supplies, &demands).values)
}

#[pyfunction]
fn quartile_classify(values: Vec<f64>) -> Vec<&'static str> {
    access::quartile_classify(&values).iter().map(|q| q.as_str()).collect()
}

#[pyfunction]
fn weighted_average(values: Vec<f64>, weights: Vec<f64>) -> PyResult<f64> {
    access::weighted_average(&values, &weights).map_err(to_py)
}

/// Writes the synthetic county; returns `{storm: scenario path}`.
#[pyfunction]
#[pyo3(signature = (out_dir, small=false, seed=None, samples=None))]
fn generate_fixture(out_dir: PathBuf, small: bool, seed: Option<u64>, samples: Option<usize>) -> PyResult<BTreeMap<String, PathBuf>> {
    let mut spec = if small { SyntheticFixtureSpec::small() } else { SyntheticFixtureSpec::default() };
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(n) = samples {
        spec.samples = n;
    }
    let files = scenario_io::generate_fixture(&spec, &out_dir).map_err(to_py)?;
    Ok(files.scenarios.into_iter().collect())
}

/// A validated scenario and its datasets.
#[pyclass(module = "stormaccess_py")]
struct Scenario {
    bundle: DatasetBundle,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            bundle: scenario_io::load_bundle(&path).map_err(to_py)?,
        })
    }

    #[getter]
    fn storm(&self) -> String {
        self.bundle.scenario.config.storm.clone()
    }

    #[getter]
    fn bridge_count(&self) -> usize {
        self.bundle.graph.bridges().len()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.bundle.graph.edges().len()
    }

    #[getter]
    fn demand_ids(&self) -> Vec<String> {
        self.bundle.demands.iter().map(|d| d.demand_id.clone()).collect()
    }

    #[getter]
    fn supply_count(&self) -> usize {
        self.bundle.supplies.len()
    }

    #[pyo3(signature = (samples=None, seed=None, workers=None))]
    fn run(&self, py: Python<'_>, samples: Option<usize>, seed: Option<u64>, workers: Option<usize>) -> PyResult<RunResult> {
        let mut bundle = self.bundle.clone();
        let c = &mut bundle.scenario.config;
        c.samples = samples.unwrap_or(c.samples);
        c.seed = seed.unwrap_or(c.seed);
        if workers.is_some() {
            c.workers = workers;
        }
        let result = py.detach(|| bundle.run()).map_err(to_py)?;
        Ok(RunResult { result, bundle })
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(storm={:?}, bridges={}, demands={}, supplies={})",
            self.bundle.scenario.config.storm,
            self.bundle.graph.bridges().len(),
            self.bundle.demands.len(),
            self.bundle.supplies.len()
        )
    }
}

#[pyclass(module = "stormaccess_py")]
struct RunResult {
    result: ScenarioResult,
    bundle: DatasetBundle,
}

impl RunResult {
    fn horizon(&self, name: &str) -> PyResult<&stormaccess::simulate::HorizonResult> {
        let h = horizon(name)?;
        self.result
            .horizon(h)
            .ok_or_else(|| PyValueError::new_err(format!("horizon {h} was not run")))
    }
}

#[pymethods]
impl RunResult {
    /// Per-horizon `{mean_score, average_cov, no_access_fraction, converged_at}`.
    fn summary(&self) -> BTreeMap<String, BTreeMap<&'static str, Option<f64>>> {
        self.result
            .horizons
            .iter()
            .map(|hr| {
                let row = BTreeMap::from([
                    ("mean_score", Some(hr.mean_score())),
                    ("average_cov", Some(hr.average_cov)),
                    ("no_access_fraction", Some(hr.no_access_fraction)),
                    ("converged_at", hr.convergence.samples().map(|n| n as f64)),
                ]);
                (hr.horizon.as_str().to_string(), row)
            })
            .collect()
    }

    fn mean(&self, horizon: &str) -> PyResult<Vec<f64>> {
        Ok(self.horizon(horizon)?.mean.clone())
    }

    fn cov(&self, horizon: &str) -> PyResult<Vec<f64>> {
        Ok(self.horizon(horizon)?.cov.clone())
    }

    fn quartiles(&self, horizon: &str) -> PyResult<Vec<&'static str>> {
        Ok(self.horizon(horizon)?.quartile.iter().map(|q| q.as_str()).collect())
    }

    fn groups(&self, horizon: &str) -> PyResult<BTreeMap<String, f64>> {
        Ok(self.horizon(horizon)?.groups.iter().map(|g| (g.group.clone(), g.average)).collect())
    }

    fn bridge_probabilities(&self) -> BTreeMap<String, f64> {
        self.result.bridge_probabilities.iter().cloned().collect()
    }

    /// Writes result GeoJSON, group summary and manifest; returns the paths.
    fn write(&self, out_dir: PathBuf) -> PyResult<Vec<PathBuf>> {
        scenario_io::write_results(&self.result, &self.bundle, &out_dir).map_err(to_py)
    }
}

#[pymodule]
fn stormaccess_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(uplift_probability, m)?)?;
    m.add_function(wrap_pyfunction!(fragility_checksum, m)?)?;
    m.add_function(wrap_pyfunction!(relative_surge_elevation, m)?)?;
    m.add_function(wrap_pyfunction!(inundation_depth, m)?)?;
    m.add_function(wrap_pyfunction!(max_wave_height, m)?)?;
    m.add_function(wrap_pyfunction!(bridge_inundation_closed, m)?)?;
    m.add_function(wrap_pyfunction!(road_inundation_closed, m)?)?;
    m.add_function(wrap_pyfunction!(two_step_fca, m)?)?;
    m.add_function(wrap_pyfunction!(quartile_classify, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_average, m)?)?;
    m.add_function(wrap_pyfunction!(generate_fixture, m)?)?;
    m.add_class::<Scenario>()?;
    m.add_class::<RunResult>()?;
    Ok(())
}
