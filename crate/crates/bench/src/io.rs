//! JSON instance and tour files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use trp_core::model::{AprioriInstance, MasterTour, Metric};

/// On-disk instance. Exactly one of `points` and `distances` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub name: String,
    pub n: usize,
    #[serde(default)]
    pub root: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<Vec<f64>>>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TourFile {
    pub order: Vec<usize>,
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field `{field}`: {message}")]
    Field { field: &'static str, message: String },
    #[error(transparent)]
    Model(#[from] trp_core::Error),
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
}

pub type IoResult<T> = std::result::Result<T, IoError>;

fn field(field: &'static str, message: impl Into<String>) -> IoError {
    IoError::Field { field, message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedInstance {
    pub name: String,
    pub instance: AprioriInstance<f64>,
}

/// Euclidean distance rounded to 1e-12.
pub fn euclidean(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = (a[0] - b[0]).hypot(a[1] - b[1]);
    (d * 1e12).round() / 1e12
}

pub fn distance_matrix(points: &[[f64; 2]]) -> Vec<Vec<f64>> {
    points.iter().map(|&a| points.iter().map(|&b| euclidean(a, b)).collect()).collect()
}

impl InstanceFile {
    pub fn into_instance(self) -> IoResult<NamedInstance> {
        let n = self.n;
        if n == 0 {
            return Err(field("n", "must be positive"));
        }
        if self.root >= n {
            return Err(field("root", format!("{} is out of range for n = {n}", self.root)));
        }
        let rows = match (self.points, self.distances) {
            (Some(_), Some(_)) => return Err(field("points", "give either `points` or `distances`, not both")),
            (None, None) => return Err(field("distances", "one of `points` or `distances` is required")),
            (Some(points), None) => {
                if points.len() != n {
                    return Err(field("points", format!("expected {n} entries, got {}", points.len())));
                }
                if let Some(i) = points.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
                    return Err(field("points", format!("entry {i} is not finite")));
                }
                distance_matrix(&points)
            }
            (None, Some(rows)) => {
                if rows.len() != n {
                    return Err(field("distances", format!("expected {n} rows, got {}", rows.len())));
                }
                if let Some(i) = rows.iter().position(|r| r.len() != n) {
                    return Err(field("distances", format!("row {i} has {} entries, expected {n}", rows[i].len())));
                }
                rows
            }
        };
        if self.probabilities.len() != n {
            return Err(field(
                "probabilities",
                format!("expected {n} entries, got {}", self.probabilities.len()),
            ));
        }
        if let Some(i) = self.probabilities.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(field(
                "probabilities",
                format!("entry {i} = {} is outside [0, 1]", self.probabilities[i]),
            ));
        }
        let metric = Metric::new(rows, self.root).map_err(|e| field("distances", e.to_string()))?;
        let instance = AprioriInstance::new(metric, self.probabilities)?;
        Ok(NamedInstance { name: self.name, instance })
    }

    /// Distance-matrix form of an instance.
    pub fn from_instance(name: &str, instance: &AprioriInstance<f64>) -> Self {
        InstanceFile {
            name: name.to_string(),
            n: instance.n(),
            root: instance.root(),
            points: None,
            distances: Some(instance.metric().rows()),
            probabilities: instance.prob().to_vec(),
        }
    }
}

pub fn parse_instance(text: &str) -> IoResult<NamedInstance> {
    serde_json::from_str::<InstanceFile>(text)?.into_instance()
}

pub fn write_instance(name: &str, instance: &AprioriInstance<f64>) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_instance(name, instance)).expect("instance serializes")
}

pub fn parse_tour(text: &str, instance: &AprioriInstance<f64>) -> IoResult<MasterTour> {
    let file: TourFile = serde_json::from_str(text)?;
    if file.order.len() != instance.n() {
        return Err(field("order", format!("expected {} vertices, got {}", instance.n(), file.order.len())));
    }
    MasterTour::new(file.order, instance.root()).map_err(|e| field("order", e.to_string()))
}

pub fn write_tour(order: &[usize]) -> String {
    serde_json::to_string(&TourFile { order: order.to_vec() }).expect("tour serializes")
}

pub fn read_file(path: &Path) -> IoResult<String> {
    std::fs::read_to_string(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

pub fn load_instance(path: &Path) -> IoResult<NamedInstance> {
    parse_instance(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_points_file() {
        let text = r#"{"name": "tiny", "n": 2, "points": [[0, 0], [3, 4]], "probabilities": [1, 0.5]}"#;
        let named = parse_instance(text).unwrap();
        assert_eq!(named.name, "tiny");
        assert_eq!(named.instance.dist(0, 1), 5.0);
        assert_eq!(named.instance.root(), 0);
    }

    #[test]
    fn missing_probabilities_names_field() {
        let err = parse_instance(r#"{"name": "x", "n": 1, "points": [[0, 0]]}"#).unwrap_err();
        assert!(err.to_string().contains("probabilities"), "{err}");
    }

    #[test]
    fn both_geometries_rejected() {
        let text = r#"{"name": "x", "n": 1, "points": [[0, 0]], "distances": [[0]], "probabilities": [1]}"#;
        assert!(matches!(parse_instance(text).unwrap_err(), IoError::Field { field: "points", .. }));
    }

    #[test]
    fn unknown_field_rejected() {
        let text = r#"{"name": "x", "n": 1, "points": [[0, 0]], "probabilities": [1], "extra": 3}"#;
        assert!(parse_instance(text).unwrap_err().to_string().contains("extra"));
    }

    #[test]
    fn metric_violation_surfaces() {
        let text = r#"{"name": "x", "n": 3, "distances": [[0,1,5],[1,0,1],[5,1,0]], "probabilities": [1,1,1]}"#;
        let err = parse_instance(text).unwrap_err().to_string();
        assert!(err.contains("distances") && err.contains("d(0,2) >"), "{err}");
    }

    #[test]
    fn probability_range_checked() {
        let text = r#"{"name": "x", "n": 2, "points": [[0,0],[1,0]], "probabilities": [1, 1.5]}"#;
        assert!(matches!(parse_instance(text).unwrap_err(), IoError::Field { field: "probabilities", .. }));
    }

    #[test]
    fn root_probability_normalized() {
        let text = r#"{"name": "x", "n": 2, "root": 1, "points": [[0,0],[1,0]], "probabilities": [0.5, 0.2]}"#;
        let inst = parse_instance(text).unwrap().instance;
        assert_eq!(inst.prob(), &[0.5, 1.0]);
    }

    #[test]
    fn rounding_to_picometres() {
        assert_eq!(euclidean([0.0, 0.0], [1.0, 2.0]), 2.2360679775);
    }

    #[test]
    fn tour_checks() {
        let inst = parse_instance(r#"{"name":"x","n":3,"points":[[0,0],[1,0],[2,0]],"probabilities":[1,1,1]}"#)
            .unwrap()
            .instance;
        assert_eq!(parse_tour(r#"{"order":[0,2,1]}"#, &inst).unwrap().order(), &[0, 2, 1]);
        assert!(parse_tour(r#"{"order":[1,0,2]}"#, &inst).is_err());
        assert!(parse_tour(r#"{"order":[0,1]}"#, &inst).is_err());
        assert_eq!(write_tour(&[0, 2, 1]), r#"{"order":[0,2,1]}"#);
    }
}
