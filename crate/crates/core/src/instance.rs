//! Uncapacitated facility location instances.
//!
//! An instance is a finite metric over locations `0..n`, one facility cost
//! shared by all locations, and a vector of client counts. The cost of an
//! open set `S` is `|S|·f + Σ_v N_v·d(v, S)`: any location may host a
//! facility and every client connects to its nearest open one.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a location in an instance.
pub type PointId = usize;

/// Client counts per location, indexed by [`PointId`].
pub type ClientVector = Vec<u64>;

/// Absolute tolerance used when checking the triangle inequality.
pub const TRIANGLE_TOLERANCE: f64 = 1e-9;

/// A finite metric given by its full distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    n: usize,
    dist: Vec<Vec<f64>>,
}

impl Metric {
    /// Wraps a square matrix. Checks shape and entry finiteness only; use
    /// [`validate_metric`] for the metric axioms.
    pub fn from_matrix(dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = dist.len();
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "distances",
                reason: "matrix is empty".into(),
            });
        }
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension {
                    what: "distance matrix row",
                    expected: n,
                    got: row.len(),
                });
            }
            if let Some(x) = row.iter().find(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "distances",
                    reason: format!("non-finite entry {x} in row {i}"),
                });
            }
        }
        Ok(Metric { n, dist })
    }

    /// Euclidean metric over coordinate rows of equal dimension.
    pub fn from_coords(coords: &[Vec<f64>]) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "coords",
                reason: "coordinate list is empty".into(),
            });
        }
        let dim = coords[0].len();
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "coords",
                reason: "coordinates have dimension 0".into(),
            });
        }
        for (i, row) in coords.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Dimension {
                    what: "coordinate row",
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "coords",
                    reason: format!("non-finite coordinate in row {i}"),
                });
            }
        }
        let mut dist = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = coords[i]
                    .iter()
                    .zip(&coords[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                dist[i][j] = d;
                dist[j][i] = d;
            }
        }
        Ok(Metric { n, dist })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: PointId, j: PointId) -> f64 {
        self.dist[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.dist
    }

    /// Smallest strictly positive distance, if any.
    pub fn min_nonzero(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let d = self.dist[i][j];
                if d > 0.0 && best.map_or(true, |b| d < b) {
                    best = Some(d);
                }
            }
        }
        best
    }

    /// Largest distance; 0 for a single point.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.dist[i][j] > best {
                    best = self.dist[i][j];
                }
            }
        }
        best
    }

    /// Returns a copy with every distance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Metric {
        let dist = self
            .dist
            .iter()
            .map(|row| row.iter().map(|d| d * factor).collect())
            .collect();
        Metric { n: self.n, dist }
    }
}

/// One failed metric axiom, reported with the offending indices.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricViolation {
    Negative { i: PointId, j: PointId },
    NonzeroDiagonal { i: PointId },
    Asymmetric { i: PointId, j: PointId },
    Triangle { i: PointId, j: PointId, k: PointId },
}

impl fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricViolation::Negative { i, j } => write!(f, "d({i},{j}) is negative"),
            MetricViolation::NonzeroDiagonal { i } => write!(f, "d({i},{i}) is nonzero"),
            MetricViolation::Asymmetric { i, j } => write!(f, "d({i},{j}) != d({j},{i})"),
            MetricViolation::Triangle { i, j, k } => {
                write!(f, "d({i},{k}) > d({i},{j}) + d({j},{k})")
            }
        }
    }
}

/// Checks non-negativity, zero diagonal, symmetry and the triangle
/// inequality (tolerance [`TRIANGLE_TOLERANCE`]). Returns every violation
/// found; an empty vector means the matrix is a valid metric.
pub fn validate_metric(m: &Metric) -> Vec<MetricViolation> {
    let mut out = Vec::new();
    let n = m.n;
    for i in 0..n {
        if m.dist[i][i] != 0.0 {
            out.push(MetricViolation::NonzeroDiagonal { i });
        }
        for j in 0..n {
            if m.dist[i][j] < 0.0 {
                out.push(MetricViolation::Negative { i, j });
            }
            if j > i && m.dist[i][j] != m.dist[j][i] {
                out.push(MetricViolation::Asymmetric { i, j });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if m.dist[i][k] > m.dist[i][j] + m.dist[j][k] + TRIANGLE_TOLERANCE {
                    out.push(MetricViolation::Triangle { i, j, k });
                }
            }
        }
    }
    out
}

/// A facility location instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UflInstance {
    pub metric: Metric,
    pub facility_cost: f64,
    pub clients: ClientVector,
}

impl UflInstance {
    pub fn new(metric: Metric, facility_cost: f64, clients: ClientVector) -> Result<Self> {
        if !(facility_cost > 0.0) || !facility_cost.is_finite() {
            return Err(Error::InvalidParameter {
                name: "facility_cost",
                reason: format!("must be positive and finite, got {facility_cost}"),
            });
        }
        if clients.len() != metric.n() {
            return Err(Error::Dimension {
                what: "client vector",
                expected: metric.n(),
                got: clients.len(),
            });
        }
        Ok(UflInstance {
            metric,
            facility_cost,
            clients,
        })
    }

    pub fn n(&self) -> usize {
        self.metric.n()
    }

    pub fn total_clients(&self) -> u64 {
        self.clients.iter().sum()
    }
}

/// Facility and connection cost of a solution, with their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub facility: f64,
    pub connection: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(facility: f64, connection: f64) -> Self {
        CostBreakdown {
            facility,
            connection,
            total: facility + connection,
        }
    }

    pub fn zero() -> Self {
        CostBreakdown::new(0.0, 0.0)
    }
}

/// Nearest member of `set` to `v` under `d`, ties broken by smallest id.
///
/// `set` must be iterated in ascending id order (as a `BTreeSet` is) so the
/// strict comparison below realizes the tie-break.
pub fn nearest_in_set(
    d: impl Fn(PointId, PointId) -> f64,
    v: PointId,
    set: &BTreeSet<PointId>,
) -> Result<(PointId, f64)> {
    let mut best: Option<(PointId, f64)> = None;
    for &s in set {
        let dist = d(v, s);
        match best {
            None => best = Some((s, dist)),
            Some((_, bd)) if dist < bd => best = Some((s, dist)),
            _ => {}
        }
    }
    best.ok_or(Error::EmptyCandidateSet)
}

/// Cost of opening exactly `open` under the distance function `d`.
///
/// Every location with at least one client connects to its nearest open
/// facility. An empty open set is allowed only when the instance has no
/// clients at all (cost 0); otherwise it is an error.
pub fn eval_cost(
    inst: &UflInstance,
    open: &BTreeSet<PointId>,
    d: impl Fn(PointId, PointId) -> f64,
) -> Result<CostBreakdown> {
    if open.is_empty() {
        return if inst.total_clients() == 0 {
            Ok(CostBreakdown::zero())
        } else {
            Err(Error::NoFacilityReachable)
        };
    }
    let facility = open.len() as f64 * inst.facility_cost;
    let mut connection = 0.0;
    for (v, &count) in inst.clients.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let (_, dist) = nearest_in_set(&d, v, open)?;
        connection += count as f64 * dist;
    }
    Ok(CostBreakdown::new(facility, connection))
}

// ---------------------------------------------------------------------------
// JSON interchange
// ---------------------------------------------------------------------------

/// On-disk form of an instance. Exactly one of `distances` or
/// `coords` + `metric: "euclidean"` supplies the metric.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distances: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metric: Option<String>,
    facility_cost: f64,
    clients: Vec<i64>,
}

fn parse_err(path: &str, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.into(),
        reason: reason.into(),
    }
}

/// Parses an instance document, rejecting unknown fields and reporting the
/// offending field on validation failures.
pub fn parse_instance(bytes: &[u8]) -> Result<UflInstance> {
    let doc: InstanceDoc =
        serde_json::from_slice(bytes).map_err(|e| parse_err("$", e.to_string()))?;
    let metric = match (&doc.distances, &doc.coords) {
        (Some(_), Some(_)) => {
            return Err(parse_err(
                "distances",
                "ambiguous metric source: both distances and coords given",
            ))
        }
        (None, None) => {
            return Err(parse_err(
                "distances",
                "missing metric source: provide distances or coords",
            ))
        }
        (Some(d), None) => {
            if doc.metric.is_some() {
                return Err(parse_err("metric", "metric field is only valid with coords"));
            }
            if d.len() != doc.n {
                return Err(parse_err(
                    "distances",
                    format!("expected {} rows, got {}", doc.n, d.len()),
                ));
            }
            Metric::from_matrix(d.clone())?
        }
        (None, Some(c)) => {
            match doc.metric.as_deref() {
                Some("euclidean") => {}
                Some(other) => {
                    return Err(parse_err(
                        "metric",
                        format!("unsupported metric {other:?}, expected \"euclidean\""),
                    ))
                }
                None => {
                    return Err(parse_err("metric", "coords requires metric: \"euclidean\""))
                }
            }
            if c.len() != doc.n {
                return Err(parse_err(
                    "coords",
                    format!("expected {} rows, got {}", doc.n, c.len()),
                ));
            }
            Metric::from_coords(c)?
        }
    };
    if doc.clients.len() != doc.n {
        return Err(parse_err(
            "clients",
            format!("expected {} entries, got {}", doc.n, doc.clients.len()),
        ));
    }
    let mut clients = Vec::with_capacity(doc.n);
    for (i, &c) in doc.clients.iter().enumerate() {
        if c < 0 {
            return Err(parse_err(
                &format!("clients[{i}]"),
                format!("negative client count {c}"),
            ));
        }
        clients.push(c as u64);
    }
    UflInstance::new(metric, doc.facility_cost, clients)
}

/// Serializes an instance in its canonical distance-matrix form.
pub fn serialize_instance(inst: &UflInstance) -> Vec<u8> {
    let doc = InstanceDoc {
        n: inst.n(),
        distances: Some(inst.metric.rows().to_vec()),
        coords: None,
        metric: None,
        facility_cost: inst.facility_cost,
        clients: inst.clients.iter().map(|&c| c as i64).collect(),
    };
    serde_json::to_vec(&doc).expect("instance serialization cannot fail")
}
