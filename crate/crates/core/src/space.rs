//! Finite design spaces: the candidate points `x_1, ..., x_n` in `R^m`.
//!
//! A [`DesignSpace`] is immutable once built. Construction checks that every
//! coordinate is finite and that the stacked `n x m` matrix has full column
//! rank, so every strictly positive weight vector yields a nonsingular
//! information matrix.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative pivot tolerance for the rank check.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// The four builtin benchmark families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceFamily {
    /// Linearized two-compartment model, `m = 4`.
    X1,
    /// Quartic polynomial regression, `m = 5`.
    X2,
    /// Linearized four-compartment model, `m = 8`.
    X3,
    /// Two-factor response surface on a `k x k` grid, `m = 5`.
    X4,
}

impl SpaceFamily {
    pub const ALL: [SpaceFamily; 4] = [Self::X1, Self::X2, Self::X3, Self::X4];

    pub fn name(self) -> &'static str {
        match self {
            Self::X1 => "x1",
            Self::X2 => "x2",
            Self::X3 => "x3",
            Self::X4 => "x4",
        }
    }

    /// Parameter dimension of the family.
    pub fn dim(self) -> usize {
        match self {
            Self::X1 => 4,
            Self::X2 | Self::X4 => 5,
            Self::X3 => 8,
        }
    }

    /// Builds the family at `size` (grid size `n`, or side length `k` for `x4`).
    pub fn build(self, size: usize) -> Result<DesignSpace> {
        match self {
            Self::X1 => build_x1(size),
            Self::X2 => build_x2(size),
            Self::X3 => build_x3(size),
            Self::X4 => build_x4(size),
        }
    }

    /// Number of candidate points produced by [`SpaceFamily::build`].
    pub fn point_count(self, size: usize) -> usize {
        match self {
            Self::X4 => size * size,
            _ => size,
        }
    }
}

impl fmt::Display for SpaceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpaceFamily {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "x1" => Ok(Self::X1),
            "x2" => Ok(Self::X2),
            "x3" => Ok(Self::X3),
            "x4" => Ok(Self::X4),
            other => Err(format!("unknown space family {other:?} (expected x1, x2, x3 or x4)")),
        }
    }
}

/// Where a design space came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpaceSource {
    Builtin { family: SpaceFamily, size: usize },
    File { path: PathBuf },
    Custom,
}

impl fmt::Display for SpaceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSource::Builtin { family, size } => write!(f, "{family}({size})"),
            SpaceSource::File { path } => write!(f, "{}", path.display()),
            SpaceSource::Custom => f.write_str("custom"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DesignSpace {
    /// Row-major `n x m` coordinates.
    coords: Vec<f64>,
    n: usize,
    m: usize,
    labels: Option<Vec<String>>,
    source: SpaceSource,
    duplicates: usize,
}

impl DesignSpace {
    /// Builds a space from explicit points, validating shape, finiteness and rank.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let m = points.first().map(Vec::len).ok_or(Error::EmptySpace)?;
        let n = points.len();
        let mut coords = Vec::with_capacity(n * m);
        for (index, p) in points.iter().enumerate() {
            if p.len() != m {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: m,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_row_major(n, m, coords, SpaceSource::Custom)
    }

    /// Builds a space from a row-major coordinate buffer of length `n * m`.
    pub fn from_row_major(
        n: usize,
        m: usize,
        coords: Vec<f64>,
        source: SpaceSource,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::EmptySpace);
        }
        if coords.len() != n * m {
            return Err(Error::DimensionMismatch {
                index: coords.len() / m,
                expected: m,
                found: coords.len() % m,
            });
        }
        if let Some(pos) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: pos / m,
                coord: pos % m,
            });
        }
        if n < m {
            return Err(Error::TooFewPoints { n, m });
        }
        let rank = numerical_rank(n, m, &coords);
        if rank < m {
            return Err(Error::RankDeficient { rank, m });
        }
        let duplicates = count_duplicates(n, m, &coords);
        if duplicates > 0 {
            log::warn!("design space {source} contains {duplicates} duplicated point(s)");
        }
        Ok(Self {
            coords,
            n,
            m,
            labels: None,
            source,
            duplicates,
        })
    }

    /// Attaches per-point labels; the count must equal `n`.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                index: labels.len(),
                expected: self.n,
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.m..(i + 1) * self.m]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.m)
    }

    /// Row-major coordinate buffer.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[i].as_str())
    }

    pub fn source(&self) -> &SpaceSource {
        &self.source
    }

    /// Number of points that exactly repeat an earlier point.
    pub fn duplicate_count(&self) -> usize {
        self.duplicates
    }

    /// `L1` distance between candidates `a` and `b`.
    pub fn l1_distance(&self, a: usize, b: usize) -> f64 {
        l1(self.point(a), self.point(b))
    }

    /// Distance from `i` to its nearest distinct-index neighbour (`0` if a duplicate exists).
    pub fn nearest_neighbor_distance(&self, i: usize) -> f64 {
        (0..self.n)
            .filter(|&j| j != i)
            .map(|j| self.l1_distance(i, j))
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest nonzero pairwise `L1` distance in the space.
    pub fn min_nonzero_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for a in 0..self.n {
            for b in a + 1..self.n {
                let d = self.l1_distance(a, b);
                if d > 0.0 && d < best {
                    best = d;
                }
            }
        }
        best
    }

    /// Writes one point per row, comma separated, with an optional `x1,...,xm` header.
    ///
    /// Values are written in shortest round-trip form, so [`load_csv`] recovers
    /// bitwise-identical coordinates.
    pub fn write_csv<W: Write>(&self, out: W, header: bool) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().from_writer(out);
        if header {
            wtr.write_record((1..=self.m).map(|c| format!("x{c}")))?;
        }
        for p in self.points() {
            wtr.write_record(p.iter().map(|v| v.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>, header: bool) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file), header)
    }
}

pub(crate) fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Rank of the row-major `n x m` matrix from a column-pivoted QR.
fn numerical_rank(n: usize, m: usize, coords: &[f64]) -> usize {
    let x = DMatrix::from_row_slice(n, m, coords);
    let r = x.col_piv_qr().r();
    let pivots: Vec<f64> = (0..m).map(|i| r[(i, i)].abs()).collect();
    let largest = pivots.iter().copied().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    pivots
        .iter()
        .filter(|&&p| p > RANK_TOLERANCE * largest)
        .count()
}

fn count_duplicates(n: usize, m: usize, coords: &[f64]) -> usize {
    let row = |i: usize| &coords[i * m..(i + 1) * m];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        row(a)
            .iter()
            .zip(row(b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    order.windows(2).filter(|w| row(w[0]) == row(w[1])).count()
}

fn grid_s(n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |i| 3.0 * i as f64 / n as f64)
}

fn build_grid(
    family: SpaceFamily,
    n: usize,
    features: impl Fn(f64) -> Vec<f64>,
) -> Result<DesignSpace> {
    let m = family.dim();
    if n < m {
        return Err(Error::TooFewPoints { n, m });
    }
    let mut coords = Vec::with_capacity(n * m);
    let mut labels = Vec::with_capacity(n);
    for s in grid_s(n) {
        coords.extend(features(s));
        labels.push(format!("s={s}"));
    }
    DesignSpace::from_row_major(n, m, coords, SpaceSource::Builtin { family, size: n })?
        .with_labels(labels)
}

/// `x_i = (e^{-s}, s e^{-s}, e^{-2s}, s e^{-2s})` at `s_i = 3i/n`, `i = 1..n`.
pub fn build_x1(n: usize) -> Result<DesignSpace> {
    build_grid(SpaceFamily::X1, n, |s| {
        let (e1, e2) = ((-s).exp(), (-2.0 * s).exp());
        vec![e1, s * e1, e2, s * e2]
    })
}

/// `x_i = (1, s, s^2, s^3, s^4)` at `s_i = 3i/n`.
pub fn build_x2(n: usize) -> Result<DesignSpace> {
    build_grid(SpaceFamily::X2, n, |s| (0..5).map(|p| s.powi(p)).collect())
}

/// `x_i = (e^{-ks}, s e^{-ks})` for `k = 1..4`, at `s_i = 3i/n`.
pub fn build_x3(n: usize) -> Result<DesignSpace> {
    build_grid(SpaceFamily::X3, n, |s| {
        (1..=4)
            .flat_map(|k| {
                let e = (-(k as f64) * s).exp();
                [e, s * e]
            })
            .collect()
    })
}

/// `k^2` points `x_{(i-1)k+j} = (1, r_i, r_i^2, s_j, r_i s_j)` with `s_j = j/k`, `r_i = 2i/k - 1`.
pub fn build_x4(k: usize) -> Result<DesignSpace> {
    let family = SpaceFamily::X4;
    if k < 3 {
        return Err(Error::TooFewPoints {
            n: k * k,
            m: family.dim(),
        });
    }
    let kf = k as f64;
    let mut coords = Vec::with_capacity(k * k * 5);
    let mut labels = Vec::with_capacity(k * k);
    for i in 1..=k {
        let r = 2.0 * i as f64 / kf - 1.0;
        for j in 1..=k {
            let s = j as f64 / kf;
            coords.extend_from_slice(&[1.0, r, r * r, s, r * s]);
            labels.push(format!("r={r},s={s}"));
        }
    }
    DesignSpace::from_row_major(k * k, 5, coords, SpaceSource::Builtin { family, size: k })?
        .with_labels(labels)
}

/// Reads a comma-separated numeric file, one design point per row.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<DesignSpace> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut coords = Vec::new();
    let mut m = None;
    let mut n = 0;
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map_or(n + 1, |p| p.line() as usize);
        // Blank lines are skipped by the reader; a lone empty field is not data.
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let expected = *m.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow {
                path: path.to_owned(),
                row,
                expected,
                found: record.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => coords.push(v),
                _ => {
                    return Err(Error::BadCell {
                        path: path.to_owned(),
                        row,
                        col: col + 1,
                        value: cell.to_owned(),
                    })
                }
            }
        }
        n += 1;
    }
    let m = m.ok_or_else(|| Error::EmptyFile {
        path: path.to_owned(),
    })?;
    DesignSpace::from_row_major(
        n,
        m,
        coords,
        SpaceSource::File {
            path: path.to_owned(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn x1_last_point() {
        let space = build_x1(100).unwrap();
        let p = space.point(99);
        let expected = [0.049787068367863944, 0.14936120510359183, 0.0024787521766663585, 0.0074362565299990755];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
        // smallest s is 3/n, never 0
        assert!((space.point(0)[1] - 0.03 * (-0.03f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn builders_reject_small_sizes() {
        assert!(matches!(build_x1(3), Err(Error::TooFewPoints { n: 3, m: 4 })));
        assert!(matches!(build_x2(4), Err(Error::TooFewPoints { .. })));
        assert!(matches!(build_x3(7), Err(Error::TooFewPoints { .. })));
        assert!(matches!(build_x4(2), Err(Error::TooFewPoints { .. })));
        assert!(build_x1(4).is_ok());
        assert!(build_x2(5).is_ok());
        assert!(build_x3(8).is_ok());
        assert!(build_x4(3).is_ok());
    }

    #[test]
    fn x2_last_point_is_exact() {
        let space = build_x2(100).unwrap();
        assert_eq!(space.point(99), &[1.0, 3.0, 9.0, 27.0, 81.0]);
    }

    #[test]
    fn x4_shape_and_order() {
        let space = build_x4(20).unwrap();
        assert_eq!(space.len(), 400);
        assert_eq!(space.dim(), 5);
        // i = 1, j = 2 -> index 1
        let r = 2.0 / 20.0 - 1.0;
        let s = 2.0 / 20.0;
        assert_eq!(space.point(1), &[1.0, r, r * r, s, r * s]);
        assert_eq!(space.point(399), &[1.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn builders_are_deterministic() {
        for family in SpaceFamily::ALL {
            let a = family.build(30).unwrap();
            let b = family.build(30).unwrap();
            assert_eq!(
                a.coords().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.coords().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn rank_deficiency_detected() {
        let err = DesignSpace::new(vec![vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { rank: 1, m: 2 }));
        let err = DesignSpace::new(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { rank: 0, .. }));
    }

    #[test]
    fn duplicates_are_counted() {
        let space =
            DesignSpace::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(space.duplicate_count(), 1);
        assert_eq!(build_x1(50).unwrap().duplicate_count(), 0);
    }

    #[test]
    fn l1_examples() {
        let space = DesignSpace::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(space.l1_distance(0, 0), 0.0);
        assert_eq!(space.l1_distance(0, 1), 2.0);

        let x1 = build_x1(100).unwrap();
        let f = |s: f64| [(-s).exp(), s * (-s).exp(), (-2.0 * s).exp(), s * (-2.0 * s).exp()];
        let (a, b) = (f(0.03), f(0.06));
        let direct: f64 = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).sum();
        assert!((x1.l1_distance(0, 1) - direct).abs() < 1e-15);
        assert_eq!(x1.l1_distance(0, 1), x1.l1_distance(1, 0));
    }

    #[test]
    fn csv_identity_rows() {
        let f = write_tmp("1,0\n0,1\n");
        let space = load_csv(f.path(), false).unwrap();
        assert_eq!(space.len(), 2);
        assert_eq!(space.dim(), 2);
    }

    #[test]
    fn csv_header_and_scientific() {
        let f = write_tmp("a,b\n1e0, 0\n0,1.0E+00\n");
        let space = load_csv(f.path(), true).unwrap();
        assert_eq!(space.point(0), &[1.0, 0.0]);
        assert_eq!(space.point(1), &[0.0, 1.0]);
    }

    #[test]
    fn csv_rank_error() {
        let f = write_tmp("1,0\n2,0\n");
        assert!(matches!(
            load_csv(f.path(), false),
            Err(Error::RankDeficient { rank: 1, m: 2 })
        ));
    }

    #[test]
    fn csv_nan_names_cell() {
        let f = write_tmp("1,0\n0,NaN\n");
        match load_csv(f.path(), false) {
            Err(Error::BadCell { row, col, .. }) => assert_eq!((row, col), (2, 2)),
            other => panic!("unexpected {other:?}"),
        }
        let f = write_tmp("1,0\nabc,1\n");
        assert!(matches!(
            load_csv(f.path(), false),
            Err(Error::BadCell { row: 2, col: 1, .. })
        ));
    }

    #[test]
    fn csv_ragged_row() {
        let f = write_tmp("1,0\n0,1,2\n");
        assert!(matches!(
            load_csv(f.path(), false),
            Err(Error::RaggedRow { row: 2, expected: 2, found: 3, .. })
        ));
    }

    #[test]
    fn csv_empty() {
        let f = write_tmp("");
        assert!(matches!(load_csv(f.path(), false), Err(Error::EmptyFile { .. })));
    }

    #[test]
    fn family_parsing() {
        assert_eq!("X3".parse::<SpaceFamily>().unwrap(), SpaceFamily::X3);
        assert!("x5".parse::<SpaceFamily>().is_err());
    }
}
