//! Travel-time and distance providers.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{Location, Seconds};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TravelError {
    #[error("location has no matrix node")]
    MissingNode,
    #[error("matrix node {node} out of range (n = {size})")]
    NodeOutOfRange { node: usize, size: usize },
    #[error("travel matrix: {0}")]
    Matrix(String),
    #[error("i/o error reading travel matrix: {0}")]
    Io(String),
}

/// Converts a travel duration in minutes to whole seconds, rounding up.
///
/// Rounding up keeps the integer times subadditive whenever the underlying
/// minutes are, so a detour is never faster than the direct leg.
pub fn minutes_to_travel_seconds(value: f64) -> Seconds {
    let secs = (value * 60.0 * 1e6).round() / 1e6;
    secs.ceil().max(0.0) as Seconds
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelMatrix<S> {
    size: usize,
    times: Vec<Seconds>,
    distances: Vec<S>,
}

impl<S: Scalar> TravelMatrix<S> {
    /// `times` are in minutes, `distances` in distance units; both row-major n x n.
    pub fn new(times_min: Vec<Vec<f64>>, distances: Vec<Vec<S>>) -> Result<Self, TravelError> {
        let size = times_min.len();
        if distances.len() != size {
            return Err(TravelError::Matrix(format!(
                "time matrix has {size} rows but distance matrix has {}",
                distances.len()
            )));
        }
        let mut times = Vec::with_capacity(size * size);
        let mut dist = Vec::with_capacity(size * size);
        for (i, (trow, drow)) in times_min.iter().zip(&distances).enumerate() {
            if trow.len() != size || drow.len() != size {
                return Err(TravelError::Matrix(format!("row {i} does not have {size} entries")));
            }
            for (j, (&t, &d)) in trow.iter().zip(drow).enumerate() {
                if !(t.is_finite() && t >= 0.0) || !(d.is_finite_value() && d >= S::zero()) {
                    return Err(TravelError::Matrix(format!("entry [{i}][{j}] must be finite and non-negative")));
                }
                if i == j && (t != 0.0 || d != S::zero()) {
                    return Err(TravelError::Matrix(format!("diagonal entry [{i}][{i}] must be zero")));
                }
                times.push(minutes_to_travel_seconds(t));
                dist.push(d);
            }
        }
        Ok(Self { size, times, distances: dist })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn index(&self, loc: &Location<S>) -> Result<usize, TravelError> {
        match loc.node {
            None => Err(TravelError::MissingNode),
            Some(node) if node >= self.size => Err(TravelError::NodeOutOfRange { node, size: self.size }),
            Some(node) => Ok(node),
        }
    }
}

fn read_block<'a>(size: usize, what: &str, lines: &mut impl Iterator<Item = &'a str>) -> Result<Vec<Vec<f64>>, TravelError> {
    let mut rows = Vec::with_capacity(size);
    for line in lines.by_ref() {
        if line.is_empty() {
            if rows.is_empty() {
                continue;
            }
            break;
        }
        let row: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
        let row = row.map_err(|_| TravelError::Matrix(format!("non-numeric entry in {what} row {}", rows.len())))?;
        rows.push(row);
        if rows.len() == size {
            break;
        }
    }
    if rows.len() != size {
        return Err(TravelError::Matrix(format!("expected {size} {what} rows, found {}", rows.len())));
    }
    Ok(rows)
}

/// Parses the plain-text matrix format: `n`, then n rows of times (minutes),
/// a blank line, then n rows of distances.
pub fn parse_matrix<S: Scalar>(text: &str) -> Result<TravelMatrix<S>, TravelError> {
    let mut lines = text.lines().map(str::trim);
    let size: usize = lines
        .next()
        .ok_or_else(|| TravelError::Matrix("empty matrix file".into()))?
        .parse()
        .map_err(|_| TravelError::Matrix("first line must be the matrix size".into()))?;

    let times = read_block(size, "time", &mut lines)?;
    let distances = read_block(size, "distance", &mut lines)?;
    let distances = distances
        .into_iter()
        .map(|row| row.into_iter().map(S::from_f64_lossy).collect())
        .collect();
    TravelMatrix::new(times, distances)
}

pub fn load_matrix<S: Scalar>(path: impl AsRef<Path>) -> Result<TravelMatrix<S>, TravelError> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| TravelError::Io(e.to_string()))?;
    parse_matrix(&text)
}

/// Static travel provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Travel<S> {
    /// Straight-line distance covered at `speed` distance units per minute.
    Euclidean { speed: S },
    Matrix(TravelMatrix<S>),
}

impl<S: Scalar> Travel<S> {
    pub fn euclidean(speed: S) -> Self {
        Travel::Euclidean { speed }
    }

    pub fn matrix(times_min: Vec<Vec<f64>>, distances: Vec<Vec<S>>) -> Result<Self, TravelError> {
        TravelMatrix::new(times_min, distances).map(Travel::Matrix)
    }

    pub fn travel_time(&self, a: &Location<S>, b: &Location<S>) -> Result<Seconds, TravelError> {
        match self {
            Travel::Euclidean { speed } => {
                let d = S::hypot(a.x - b.x, a.y - b.y);
                Ok(minutes_to_travel_seconds(d.as_f64() / speed.as_f64()))
            }
            Travel::Matrix(m) => {
                let (i, j) = (m.index(a)?, m.index(b)?);
                Ok(m.times[i * m.size + j])
            }
        }
    }

    pub fn distance(&self, a: &Location<S>, b: &Location<S>) -> Result<S, TravelError> {
        match self {
            Travel::Euclidean { .. } => Ok(S::hypot(a.x - b.x, a.y - b.y)),
            Travel::Matrix(m) => {
                let (i, j) = (m.index(a)?, m.index(b)?);
                Ok(m.distances[i * m.size + j])
            }
        }
    }

    /// Both quantities of one leg.
    pub fn leg(&self, a: &Location<S>, b: &Location<S>) -> Result<(Seconds, S), TravelError> {
        Ok((self.travel_time(a, b)?, self.distance(a, b)?))
    }

    pub fn resolves(&self, loc: &Location<S>) -> bool {
        match self {
            Travel::Euclidean { .. } => loc.is_finite(),
            Travel::Matrix(m) => m.index(loc).is_ok(),
        }
    }
}
