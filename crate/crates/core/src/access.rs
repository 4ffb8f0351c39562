//! Two-step floating catchment area (2SFCA) accessibility.
//!
//! Step one gives every supply a ratio of its capacity to the population of
//! demands inside its catchment. Step two sums, for every demand, the ratios
//! of the supplies inside its catchment.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::network::TravelTimeTable;

/// Multiplier applied to raw scores so they read as staff per 1,000 residents.
pub const SCORE_SCALE: f64 = 1_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplySite {
    pub supply_id: String,
    pub location: Point,
    /// Capacity proxy (health care employees).
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSite {
    pub demand_id: String,
    pub location: Point,
    pub population: f64,
    /// Subgroup populations keyed by group name.
    pub groups: BTreeMap<String, f64>,
}

/// Accessibility per demand, aligned with the demand slice it was built for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccessScores {
    pub values: Vec<f64>,
    pub catchment: f64,
    pub scaled: bool,
}

/// Supply-to-demand ratio per supply; `None` marks an inert supply with no
/// demand population inside its catchment.
pub fn supply_ratios(table: &TravelTimeTable, supplies: &[SupplySite], demands: &[DemandSite]) -> Vec<Option<f64>> {
    debug_assert_eq!(table.supply_count(), supplies.len());
    debug_assert_eq!(table.demand_count(), demands.len());
    let mut reachable_pop = vec![0.0f64; supplies.len()];
    for (d, demand) in demands.iter().enumerate() {
        for &(s, _) in table.row(d) {
            reachable_pop[s as usize] += demand.population;
        }
    }
    supplies
        .iter()
        .zip(reachable_pop)
        .map(|(s, pop)| (pop > 0.0).then(|| s.capacity / pop))
        .collect()
}

/// Unscaled accessibility: the sum of ratios of reachable non-inert supplies.
pub fn accessibility_scores(ratios: &[Option<f64>], table: &TravelTimeTable) -> AccessScores {
    let values = (0..table.demand_count())
        .map(|d| {
            table
                .row(d)
                .iter()
                .filter_map(|&(s, _)| ratios[s as usize])
                .fold(0.0, |acc, r| acc + r)
        })
        .collect();
    AccessScores {
        values,
        catchment: table.cutoff(),
        scaled: false,
    }
}

/// Both 2SFCA steps followed by scaling.
pub fn two_step_fca(table: &TravelTimeTable, supplies: &[SupplySite], demands: &[DemandSite]) -> AccessScores {
    let ratios = supply_ratios(table, supplies, demands);
    scale_scores(accessibility_scores(&ratios, table))
}

pub fn scale_scores(scores: AccessScores) -> AccessScores {
    AccessScores {
        values: scores.values.into_iter().map(|v| v * SCORE_SCALE).collect(),
        catchment: scores.catchment,
        scaled: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Quartile {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl Quartile {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quartile::Q1 => "Q1",
            Quartile::Q2 => "Q2",
            Quartile::Q3 => "Q3",
            Quartile::Q4 => "Q4",
        }
    }
}

impl std::str::FromStr for Quartile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Q1" => Ok(Quartile::Q1),
            "Q2" => Ok(Quartile::Q2),
            "Q3" => Ok(Quartile::Q3),
            "Q4" => Ok(Quartile::Q4),
            other => Err(Error::invalid(format!("unknown quartile `{other}`"))),
        }
    }
}

/// Nearest-rank percentile of an ascending slice, `p` in (0, 100].
fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Classifies scores against their 25th/50th/75th nearest-rank percentiles.
/// A score equal to a cut point takes the lower class; zero scores are
/// always Q1.
pub fn quartile_classify(values: &[f64]) -> Vec<Quartile> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cuts = [25.0, 50.0, 75.0].map(|p| nearest_rank(&sorted, p));
    values
        .iter()
        .map(|&v| {
            if v == 0.0 || v <= cuts[0] {
                Quartile::Q1
            } else if v <= cuts[1] {
                Quartile::Q2
            } else if v <= cuts[2] {
                Quartile::Q3
            } else {
                Quartile::Q4
            }
        })
        .collect()
}

/// Population-weighted mean score of one group.
pub fn weighted_average(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} scores but {} weights",
            values.len(),
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::UndefinedGroup(String::new()));
    }
    let weighted: f64 = values.iter().zip(weights).map(|(a, p)| a * p).sum();
    Ok(weighted / total)
}

pub fn no_access_fraction(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|&&v| v == 0.0).count() as f64 / values.len() as f64
}

/// Name used for the whole-population baseline group.
pub const OVERALL_GROUP: &str = "overall_population";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupAverage {
    pub group: String,
    pub population: f64,
    pub average: f64,
}

/// Weighted averages for the overall population and every subgroup present
/// on any demand (missing subgroup entries count as zero).
pub fn group_averages(values: &[f64], demands: &[DemandSite]) -> Result<Vec<GroupAverage>> {
    let mut names: Vec<&str> = demands
        .iter()
        .flat_map(|d| d.groups.keys().map(String::as_str))
        .collect();
    names.sort_unstable();
    names.dedup();

    let mut out = Vec::with_capacity(names.len() + 1);
    let overall: Vec<f64> = demands.iter().map(|d| d.population).collect();
    out.push(group_row(OVERALL_GROUP, values, &overall)?);
    for name in names {
        let weights: Vec<f64> = demands
            .iter()
            .map(|d| d.groups.get(name).copied().unwrap_or(0.0))
            .collect();
        out.push(group_row(name, values, &weights)?);
    }
    Ok(out)
}

fn group_row(name: &str, values: &[f64], weights: &[f64]) -> Result<GroupAverage> {
    let average = weighted_average(values, weights).map_err(|e| match e {
        Error::UndefinedGroup(_) => Error::UndefinedGroup(name.to_string()),
        other => other,
    })?;
    Ok(GroupAverage {
        group: name.to_string(),
        population: weights.iter().sum(),
        average,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn supply(id: &str, capacity: f64) -> SupplySite {
        SupplySite {
            supply_id: id.into(),
            location: Point::new(0.0, 0.0),
            capacity,
        }
    }

    fn demand(id: &str, population: f64) -> DemandSite {
        DemandSite {
            demand_id: id.into(),
            location: Point::new(0.0, 0.0),
            population,
            groups: BTreeMap::new(),
        }
    }

    /// j1 S=10, j2 S=20; i1 D=100 reaches {j1}, i2 D=200 reaches {j1, j2},
    /// i3 D=300 reaches {j2}.
    fn worked_instance() -> (TravelTimeTable, Vec<SupplySite>, Vec<DemandSite>) {
        let table = TravelTimeTable::from_rows(
            50.0,
            2,
            vec![vec![(0, 10.0)], vec![(0, 20.0), (1, 30.0)], vec![(1, 5.0)]],
        );
        (
            table,
            vec![supply("j1", 10.0), supply("j2", 20.0)],
            vec![demand("i1", 100.0), demand("i2", 200.0), demand("i3", 300.0)],
        )
    }

    #[test]
    fn worked_instance_scores() {
        let (table, supplies, demands) = worked_instance();
        let ratios = supply_ratios(&table, &supplies, &demands);
        assert_eq!(ratios, vec![Some(10.0 / 300.0), Some(20.0 / 500.0)]);
        let a = accessibility_scores(&ratios, &table).values;
        assert!((a[0] - 10.0 / 300.0).abs() < 1e-15);
        assert!((a[1] - (10.0 / 300.0 + 20.0 / 500.0)).abs() < 1e-15);
        assert!((a[1] - 0.073333333333).abs() < 1e-9);
        assert!((a[2] - 0.04).abs() < 1e-15);
        let served: f64 = a.iter().zip(&demands).map(|(a, d)| a * d.population).sum();
        assert!((served - 30.0).abs() < 1e-12);
    }

    #[test]
    fn zero_and_inert_supplies() {
        let table = TravelTimeTable::from_rows(50.0, 2, vec![vec![(0, 1.0)]]);
        let supplies = vec![supply("zero", 0.0), supply("far", 50.0)];
        let demands = vec![demand("d", 100.0)];
        let ratios = supply_ratios(&table, &supplies, &demands);
        assert_eq!(ratios, vec![Some(0.0), None]);
        assert_eq!(accessibility_scores(&ratios, &table).values, vec![0.0]);
    }

    #[test]
    fn zero_population_demand_still_scored() {
        let table = TravelTimeTable::from_rows(50.0, 1, vec![vec![(0, 1.0)], vec![(0, 2.0)]]);
        let supplies = vec![supply("s", 10.0)];
        let demands = vec![demand("empty", 0.0), demand("full", 100.0)];
        let a = accessibility_scores(&supply_ratios(&table, &supplies, &demands), &table).values;
        assert_eq!(a, vec![0.1, 0.1]);
    }

    #[test]
    fn scaling() {
        let s = scale_scores(AccessScores {
            values: vec![0.03333, 0.0, 0.5],
            catchment: 50.0,
            scaled: false,
        });
        assert!((s.values[0] - 33.33).abs() < 1e-9);
        assert_eq!(s.values[1], 0.0);
        assert!(s.scaled);
    }

    #[test]
    fn quartile_examples() {
        use Quartile::*;
        assert_eq!(quartile_classify(&[1.0, 2.0, 3.0, 4.0]), vec![Q1, Q2, Q3, Q4]);
        assert_eq!(quartile_classify(&[4.0, 3.0, 2.0, 1.0]), vec![Q4, Q3, Q2, Q1]);
        assert_eq!(quartile_classify(&[7.0; 5]), vec![Q1; 5]);
        assert_eq!(quartile_classify(&[0.0, 0.0, 5.0, 10.0]), vec![Q1, Q1, Q3, Q4]);
        assert_eq!(quartile_classify(&[3.0]), vec![Q1]);
        assert!(quartile_classify(&[]).is_empty());
    }

    #[test]
    fn quartiles_survive_scaling() {
        let raw = vec![0.0, 0.013, 0.2, 0.021, 0.0007, 0.5, 0.2, 0.09];
        let scaled = scale_scores(AccessScores {
            values: raw.clone(),
            catchment: 50.0,
            scaled: false,
        });
        assert_eq!(quartile_classify(&raw), quartile_classify(&scaled.values));
    }

    #[test]
    fn weighted_average_examples() {
        assert_eq!(weighted_average(&[10.0, 20.0], &[1.0, 3.0]).unwrap(), 17.5);
        assert_eq!(weighted_average(&[10.0, 20.0, 60.0], &[2.0, 2.0, 2.0]).unwrap(), 30.0);
        assert_eq!(weighted_average(&[10.0, 20.0, 60.0], &[0.0, 5.0, 0.0]).unwrap(), 20.0);
        assert!(matches!(weighted_average(&[1.0], &[0.0]), Err(Error::UndefinedGroup(_))));
        assert!(weighted_average(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn no_access_examples() {
        assert_eq!(no_access_fraction(&[1.0, 2.0]), 0.0);
        assert_eq!(no_access_fraction(&[0.0, 0.0]), 1.0);
        let mut v = vec![1.0; 10];
        v[3] = 0.0;
        v[8] = 0.0;
        assert_eq!(no_access_fraction(&v), 0.2);
    }

    #[test]
    fn group_rows_start_with_overall_population() {
        let mut a = demand("a", 100.0);
        a.groups.insert("age65plus".into(), 10.0);
        let mut b = demand("b", 300.0);
        b.groups.insert("age65plus".into(), 30.0);
        b.groups.insert("below_poverty".into(), 0.0);
        let rows = group_averages(&[1.0, 5.0], &[a.clone(), b.clone()]);
        assert!(matches!(rows, Err(Error::UndefinedGroup(ref g)) if g == "below_poverty"));
        b.groups.insert("below_poverty".into(), 50.0);
        let rows = group_averages(&[1.0, 5.0], &[a, b]).unwrap();
        assert_eq!(rows[0].group, OVERALL_GROUP);
        assert_eq!(rows[0].average, (100.0 + 1500.0) / 400.0);
        assert_eq!(rows[1].group, "age65plus");
        assert_eq!(rows[2].average, 5.0);
    }
}
