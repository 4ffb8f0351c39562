//! Deterministic synthetic datasets.
//!
//! The county fixture is a square grid of roads on a surface rising away
//! from a coast at the south-east corner. Two water channels cross the
//! grid and can only be crossed on bridges; the remaining bridges sit on
//! creek crossings inside the grid. Health facilities form an eastern and
//! a south-western cluster plus a scattered remainder, and block-group
//! centroids lie on a jittered lattice. Each storm is a linear surge ramp
//! from the coast; storms differ only in amplitude, so a stronger storm's
//! inundated set contains the weaker one's.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use super::{load_bundle, write_bundle, BundlePaths, DatasetBundle, ScenarioFile};
use crate::access::{DemandSite, SupplySite};
use crate::error::{Error, Result};
use crate::fragility::{FragilityRow, FragilityTable, MassBand, DEFAULT_ROWS};
use crate::geom::Point;
use crate::hazard::{SurgeField, SurgeSample};
use crate::network::{build_graph, BridgeRecord, EdgeInput, EdgeKind, Node};
use crate::simulate::ScenarioConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct StormPreset {
    pub name: String,
    /// Surge elevation at the coast (m).
    pub surge_amplitude_m: f64,
    /// Significant wave height at the coast (m).
    pub wave_amplitude_m: f64,
}

impl StormPreset {
    pub fn storm_1_like() -> Self {
        Self {
            name: "storm-1-like".into(),
            surge_amplitude_m: 6.0,
            wave_amplitude_m: 1.5,
        }
    }

    pub fn storm_2_like() -> Self {
        Self {
            name: "storm-2-like".into(),
            surge_amplitude_m: 7.8,
            wave_amplitude_m: 2.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFixtureSpec {
    pub seed: u64,
    pub cols: usize,
    pub rows: usize,
    pub spacing_m: f64,
    pub bridge_count: usize,
    /// Channels are crossable every `channel_stride` grid lines.
    pub channel_stride: usize,
    /// Block groups lie on a `demand_grid x demand_grid` lattice.
    pub demand_grid: usize,
    pub supply_count: usize,
    /// Fraction of the coast-to-inland extent reached by the surge ramp.
    pub surge_reach: f64,
    pub storms: Vec<StormPreset>,
    pub samples: usize,
    pub crs: String,
    pub datum: String,
}

impl Default for SyntheticFixtureSpec {
    fn default() -> Self {
        Self {
            seed: 20_190_101,
            cols: 45,
            rows: 45,
            spacing_m: 1_200.0,
            bridge_count: 88,
            channel_stride: 3,
            demand_grid: 11,
            supply_count: 1_021,
            surge_reach: 0.6,
            storms: vec![StormPreset::storm_1_like(), StormPreset::storm_2_like()],
            samples: 1_000,
            crs: "EPSG:32615".into(),
            datum: "NAVD88".into(),
        }
    }
}

impl SyntheticFixtureSpec {
    /// A small county for fast tests.
    pub fn small() -> Self {
        Self {
            cols: 16,
            rows: 16,
            spacing_m: 3_000.0,
            bridge_count: 14,
            channel_stride: 3,
            demand_grid: 5,
            supply_count: 60,
            samples: 200,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.cols < 4 || self.rows < 4 {
            return Err(Error::InvalidSpec(format!("grid {}x{} is too small (minimum 4x4)", self.cols, self.rows)));
        }
        if !(self.spacing_m > 0.0) || !self.spacing_m.is_finite() {
            return Err(Error::InvalidSpec("spacing must be positive".into()));
        }
        if self.channel_stride == 0 {
            return Err(Error::InvalidSpec("channel stride must be at least 1".into()));
        }
        if self.demand_grid == 0 || self.supply_count == 0 {
            return Err(Error::InvalidSpec("need at least one demand and one supply".into()));
        }
        if !(self.surge_reach > 0.0) {
            return Err(Error::InvalidSpec("surge reach must be positive".into()));
        }
        if self.storms.is_empty() {
            return Err(Error::InvalidSpec("no storms".into()));
        }
        for s in &self.storms {
            if s.surge_amplitude_m < 0.0 || s.wave_amplitude_m < 0.0 || s.name.trim().is_empty() {
                return Err(Error::InvalidSpec(format!("invalid storm {s:?}")));
            }
        }
        if self.samples == 0 {
            return Err(Error::InvalidSpec("samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// Files written by [`generate_fixture`].
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureFiles {
    pub dir: PathBuf,
    /// `(storm name, scenario file)` per storm.
    pub scenarios: Vec<(String, PathBuf)>,
}

impl FixtureFiles {
    pub fn scenario(&self, storm: &str) -> Option<&Path> {
        self.scenarios.iter().find(|(s, _)| s == storm).map(|(_, p)| p.as_path())
    }
}

struct Grid<'a> {
    spec: &'a SyntheticFixtureSpec,
    x0: f64,
    y0: f64,
}

impl Grid<'_> {
    fn id(&self, r: usize, c: usize) -> u64 {
        (r * self.spec.cols + c + 1) as u64
    }

    fn point(&self, r: usize, c: usize) -> Point {
        Point::new(self.x0 + c as f64 * self.spec.spacing_m, self.y0 + r as f64 * self.spec.spacing_m)
    }

    /// 0 at the south-east coast corner, 1 at the north-west corner.
    fn inland(&self, p: &Point) -> f64 {
        let w = (self.spec.cols - 1) as f64 * self.spec.spacing_m;
        let h = (self.spec.rows - 1) as f64 * self.spec.spacing_m;
        (((self.x0 + w - p.x) + (p.y - self.y0)) / (w + h)).clamp(0.0, 1.0)
    }

    fn extent(&self) -> (f64, f64) {
        (
            (self.spec.cols - 1) as f64 * self.spec.spacing_m,
            (self.spec.rows - 1) as f64 * self.spec.spacing_m,
        )
    }
}

type Segment = ((usize, usize), (usize, usize));

fn ramp(inland: f64, reach: f64) -> f64 {
    (1.0 - inland / reach).max(0.0)
}

/// Writes the fixture county with one scenario file per storm into `dir`
/// and validates every scenario by loading it back.
pub fn generate_fixture(spec: &SyntheticFixtureSpec, dir: &Path) -> Result<FixtureFiles> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let grid = Grid {
        spec,
        x0: 500_000.0,
        y0: 3_250_000.0,
    };
    let (rows, cols) = (spec.rows, spec.cols);

    let elevation: Vec<Vec<f64>> = (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| (0.5 + 6.0 * grid.inland(&grid.point(r, c)) + rng.random_range(-0.3..0.3)).max(0.2))
                .collect()
        })
        .collect();
    let nodes: Vec<Node> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .map(|(r, c)| Node {
            id: grid.id(r, c),
            location: grid.point(r, c),
        })
        .collect();

    // Channel gaps: between columns `cv` and `cv + 1`, rows `rh` and `rh + 1`.
    let cv = cols / 3;
    let rh = rows / 3;
    let mut segments: Vec<Segment> = Vec::new();
    let mut crossings = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                let seg = ((r, c), (r, c + 1));
                if c == cv {
                    if r % spec.channel_stride == 0 {
                        crossings.push(seg);
                    }
                } else {
                    segments.push(seg);
                }
            }
            if r + 1 < rows {
                let seg = ((r, c), (r + 1, c));
                if r == rh {
                    if c % spec.channel_stride == 0 {
                        crossings.push(seg);
                    }
                } else {
                    segments.push(seg);
                }
            }
        }
    }
    if spec.bridge_count < crossings.len() {
        return Err(Error::InvalidSpec(format!(
            "{} channel crossings need at least that many bridges, got {}",
            crossings.len(),
            spec.bridge_count
        )));
    }
    let creek_count = spec.bridge_count - crossings.len();
    if creek_count > segments.len() {
        return Err(Error::InvalidSpec("more bridges than road segments".into()));
    }
    // Three in four creek bridges sit in the low-lying strip nearest the coast.
    let coastal: Vec<usize> = (0..segments.len())
        .filter(|&i| grid.inland(&grid.point(segments[i].0 .0, segments[i].0 .1)) < spec.surge_reach / 3.0)
        .collect();
    let mut creek: BTreeSet<usize> = BTreeSet::new();
    while creek.len() < creek_count {
        let i = if !coastal.is_empty() && rng.random_bool(0.75) {
            coastal[rng.random_range(0..coastal.len())]
        } else {
            rng.random_range(0..segments.len())
        };
        creek.insert(i);
    }

    let arterial = |(r0, c0): (usize, usize), (r1, c1): (usize, usize)| (r0 == r1 && r0 % 6 == 0) || (c0 == c1 && c0 % 6 == 0);
    let mut edges = Vec::new();
    let mut bridges = Vec::new();
    let mut all: Vec<(Segment, bool)> = crossings.iter().map(|&s| (s, true)).collect();
    all.extend(segments.iter().enumerate().map(|(i, &s)| (s, creek.contains(&i))));
    all.sort_by_key(|&(((r0, c0), (r1, c1)), _)| (r0, c0, r1, c1));
    for (i, &((a, b), is_bridge)) in all.iter().enumerate() {
        let (pa, pb) = (grid.point(a.0, a.1), grid.point(b.0, b.1));
        let (za, zb) = (elevation[a.0][a.1], elevation[b.0][b.1]);
        let kind = if is_bridge {
            let bridge_id = format!("B{:03}", bridges.len() + 1);
            let band = DEFAULT_ROWS[rng.random_range(0..DEFAULT_ROWS.len())].band;
            let mass = band.lo + rng.random_range(0.5..4.5) * (band.hi - band.lo) / 5.0;
            bridges.push(BridgeRecord {
                bridge_id: bridge_id.clone(),
                // At least 4.6 m of clearance keeps every band at zero
                // failure probability when the surge is zero.
                h_b: za.max(zb) + rng.random_range(4.6..7.0),
                mass_ton_per_m: mass,
                location: Point::new((pa.x + pb.x) / 2.0, (pa.y + pb.y) / 2.0),
            });
            EdgeKind::Bridge { bridge_id }
        } else {
            EdgeKind::Road { h_r: za.min(zb) }
        };
        edges.push(EdgeInput {
            id: (i + 1) as u64,
            from: grid.id(a.0, a.1),
            to: grid.id(b.0, b.1),
            length_m: spec.spacing_m,
            speed_mps: if arterial(a, b) { 20.0 } else { 11.0 },
            kind,
            geometry: vec![pa, pb],
        });
    }
    let graph = build_graph(nodes, edges, bridges)?;

    let (w, h) = grid.extent();
    let inside = |p: Point| Point::new(p.x.clamp(grid.x0, grid.x0 + w), p.y.clamp(grid.y0, grid.y0 + h));

    let east = grid.point(rows * 28 / 45, cols * 38 / 45);
    let southwest = grid.point(rows * 6 / 45, cols * 6 / 45);
    let spread = Normal::new(0.0, 3.0 * spec.spacing_m).expect("valid normal");
    let staff = LogNormal::<f64>::new(2.5, 1.0).expect("valid lognormal");
    let supplies: Vec<SupplySite> = (0..spec.supply_count)
        .map(|i| {
            let roll: f64 = rng.random();
            let location = if roll < 0.45 || roll < 0.85 {
                let centre = if roll < 0.45 { east } else { southwest };
                inside(Point::new(centre.x + spread.sample(&mut rng), centre.y + spread.sample(&mut rng)))
            } else {
                Point::new(grid.x0 + rng.random_range(0.0..w), grid.y0 + rng.random_range(0.0..h))
            };
            SupplySite {
                supply_id: format!("S{:04}", i + 1),
                location,
                capacity: staff.sample(&mut rng).ceil().min(2_000.0),
            }
        })
        .collect();

    let g = spec.demand_grid;
    let centre = Point::new(grid.x0 + w / 2.0, grid.y0 + h / 2.0);
    let half_diag = (w * w + h * h).sqrt() / 2.0;
    let demands: Vec<DemandSite> = (0..g * g)
        .map(|i| {
            let (gr, gc) = (i / g, i % g);
            let (cw, ch) = (w / g as f64, h / g as f64);
            let location = Point::new(
                grid.x0 + (gc as f64 + 0.5 + rng.random_range(-0.3..0.3)) * cw,
                grid.y0 + (gr as f64 + 0.5 + rng.random_range(-0.3..0.3)) * ch,
            );
            let population = rng.random_range(600.0..3_000.0f64).round();
            let seniors = (population * rng.random_range(0.08..0.25)).round();
            let central = 1.0 - (location.distance(&centre) / half_diag).min(1.0);
            let poor_share = (0.1 + 0.3 * central + rng.random_range(-0.05..0.05)).clamp(0.02, 0.6);
            let below = (population * poor_share).round();
            let groups = BTreeMap::from([
                ("age65plus".to_string(), seniors),
                ("below_poverty".to_string(), below),
                ("above_poverty".to_string(), population - below),
            ]);
            DemandSite {
                demand_id: format!("BG{:03}", i + 1),
                location,
                population,
                groups,
            }
        })
        .collect();

    // Per-location perturbation shared by all storms keeps storms nested.
    let jitter: Vec<f64> = graph.nodes().iter().map(|_| rng.random_range(-1.0..1.0)).collect();

    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut scenarios = Vec::new();
    for storm in &spec.storms {
        let samples = graph
            .nodes()
            .iter()
            .zip(&jitter)
            .map(|(n, j)| {
                let k = ramp(grid.inland(&n.location), spec.surge_reach) * (1.0 + 0.05 * j);
                SurgeSample {
                    location: n.location,
                    h_st: storm.surge_amplitude_m * k,
                    h_s: storm.wave_amplitude_m * k,
                }
            })
            .collect();
        let surge = SurgeField::new(samples, spec.datum.clone())?;
        let scenario = ScenarioFile {
            config: ScenarioConfig {
                storm: storm.name.clone(),
                samples: spec.samples,
                seed: spec.seed,
                ..ScenarioConfig::default()
            },
            crs: spec.crs.clone(),
            datum: spec.datum.clone(),
            coverage_radius_m: None,
            paths: BundlePaths {
                network: dir.join("network.geojson"),
                bridges: dir.join("bridges.csv"),
                surge: dir.join(format!("surge_{}.csv", storm.name)),
                supplies: dir.join("supplies.csv"),
                demands: dir.join("demands.csv"),
                fragility: None,
            },
        };
        let bundle = DatasetBundle {
            scenario,
            graph: graph.clone(),
            surge,
            supplies: supplies.clone(),
            demands: demands.clone(),
            fragility: FragilityTable::default(),
            input_hashes: BTreeMap::new(),
        };
        let path = dir.join(format!("scenario_{}.cfg", storm.name));
        write_bundle(&bundle, &path)?;
        load_bundle(&path)?;
        scenarios.push((storm.name.clone(), path));
    }
    Ok(FixtureFiles {
        dir: dir.to_path_buf(),
        scenarios,
    })
}

/// Two towns joined by a single bridge: the western town holds only
/// demand, the eastern town holds every supply and some demand. The bridge
/// fails with exactly `failure_probability`; nothing is ever inundated.
#[derive(Debug, Clone)]
pub struct TwinTown {
    pub bundle: DatasetBundle,
    /// Demand indices in the western (cut-off) town.
    pub west_demands: Vec<usize>,
    pub bridge_edge: usize,
}

pub fn twin_town(failure_probability: f64, samples: usize, seed: u64) -> Result<TwinTown> {
    if !(0.0..=1.0).contains(&failure_probability) {
        return Err(Error::InvalidSpec(format!("failure probability {failure_probability} outside [0, 1]")));
    }
    let spacing = 500.0;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let node_id = |town: usize, r: usize, c: usize| (town * 100 + r * 3 + c + 1) as u64;
    for town in 0..2 {
        let x0 = town as f64 * 3_000.0;
        for r in 0..3 {
            for c in 0..3 {
                nodes.push(Node {
                    id: node_id(town, r, c),
                    location: Point::new(x0 + c as f64 * spacing, r as f64 * spacing),
                });
                if c + 1 < 3 {
                    edges.push((node_id(town, r, c), node_id(town, r, c + 1), spacing, None));
                }
                if r + 1 < 3 {
                    edges.push((node_id(town, r, c), node_id(town, r + 1, c), spacing, None));
                }
            }
        }
    }
    // west town east edge (x = 1000) to east town west edge (x = 3000)
    edges.push((node_id(0, 1, 2), node_id(1, 1, 0), 2_000.0, Some("BRIDGE")));
    let deck = 5.0;
    let edge_inputs: Vec<EdgeInput> = edges
        .iter()
        .enumerate()
        .map(|(i, &(from, to, length_m, bridge))| EdgeInput {
            id: (i + 1) as u64,
            from,
            to,
            length_m,
            speed_mps: 10.0,
            kind: match bridge {
                Some(b) => EdgeKind::Bridge { bridge_id: b.into() },
                None => EdgeKind::Road { h_r: 10.0 },
            },
            geometry: vec![],
        })
        .collect();
    let bridge_location = Point::new(2_000.0, spacing);
    let graph = build_graph(
        nodes,
        edge_inputs,
        vec![BridgeRecord {
            bridge_id: "BRIDGE".into(),
            h_b: deck,
            mass_ton_per_m: 10.0,
            location: bridge_location,
        }],
    )?;
    let bridge_edge = graph.bridge_edges(0)[0];

    // Surge at deck level with no waves: z_c = 0 and h_max = 0, so the
    // failure probability is exactly the intercept.
    let surge = SurgeField::new(
        vec![SurgeSample {
            location: bridge_location,
            h_st: deck,
            h_s: 0.0,
        }],
        "local",
    )?;
    let fragility = FragilityTable::new(vec![FragilityRow {
        band: MassBand { lo: 0.0, hi: 35.0 },
        a: failure_probability,
        b: 0.01,
        c: -0.01,
    }])?;

    let demand = |id: &str, x: f64, y: f64, population: f64, seniors: f64| DemandSite {
        demand_id: id.into(),
        location: Point::new(x, y),
        population,
        groups: BTreeMap::from([("age65plus".to_string(), seniors)]),
    };
    let demands = vec![
        demand("W1", 0.0, 0.0, 1_000.0, 100.0),
        demand("W2", 500.0, 1_000.0, 1_500.0, 300.0),
        demand("W3", 1_000.0, 500.0, 500.0, 50.0),
        demand("E1", 3_500.0, 500.0, 2_000.0, 200.0),
        demand("E2", 4_000.0, 1_000.0, 1_000.0, 400.0),
    ];
    let supply = |id: &str, x: f64, y: f64, capacity: f64| SupplySite {
        supply_id: id.into(),
        location: Point::new(x, y),
        capacity,
    };
    let supplies = vec![
        supply("H1", 3_000.0, 0.0, 40.0),
        supply("H2", 4_000.0, 500.0, 25.0),
        supply("H3", 3_500.0, 1_000.0, 10.0),
    ];

    let base = Path::new("twin-town");
    let scenario = ScenarioFile {
        config: ScenarioConfig {
            storm: "twin-town".into(),
            samples,
            seed,
            ..ScenarioConfig::default()
        },
        crs: "local".into(),
        datum: "local".into(),
        coverage_radius_m: None,
        paths: BundlePaths {
            network: base.join("network.geojson"),
            bridges: base.join("bridges.csv"),
            surge: base.join("surge.csv"),
            supplies: base.join("supplies.csv"),
            demands: base.join("demands.csv"),
            fragility: Some(base.join("fragility.csv")),
        },
    };
    Ok(TwinTown {
        bundle: DatasetBundle {
            scenario,
            graph,
            surge,
            supplies,
            demands,
            fragility,
            input_hashes: BTreeMap::new(),
        },
        west_demands: vec![0, 1, 2],
        bridge_edge,
    })
}
