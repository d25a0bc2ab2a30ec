//! Training sets, synthetic targets and file I/O.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numeric::norm;
use crate::rng;

/// CIFAR-10 binary record: one label byte followed by 3072 pixel bytes.
pub const CIFAR_RECORD_LEN: usize = 3073;
pub const CIFAR_DIM: usize = 3072;

/// `n` points in `R^d` plus the support radius `R = max_i ‖x_0^i‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Matrix,
    radius: f64,
}

impl Dataset {
    pub fn new(points: Matrix) -> Result<Self> {
        if points.rows() == 0 || points.cols() == 0 {
            return Err(Error::config("dataset must have n >= 1 and d >= 1"));
        }
        if points.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::config("dataset contains non-finite values"));
        }
        let radius = points.iter_rows().map(norm).fold(0.0, f64::max);
        Ok(Self { points, radius })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = Matrix::from_rows(rows)
            .ok_or_else(|| Error::config("dataset rows are empty or ragged"))?;
        Self::new(m)
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    /// Writes header-less CSV with 17 significant digits per value.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for row in self.points.iter_rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// One isotropic Gaussian component `π · N(μ, σ² I)`. `σ = 0` is a point mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub sigma: f64,
}

/// Synthetic target distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    IsotropicGaussian { mean: Vec<f64>, sigma: f64 },
    GaussianMixture { components: Vec<Component> },
    /// Noisy ring of the given radius in the first two coordinates; other
    /// coordinates are `N(0, σ²)`.
    Ring { dim: usize, radius: f64, sigma: f64 },
    /// Uniform distribution over a finite set of points.
    PointCloud { points: Matrix },
}

impl TargetSpec {
    pub fn unit_gaussian(dim: usize) -> Self {
        TargetSpec::IsotropicGaussian {
            mean: vec![0.0; dim],
            sigma: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TargetSpec::IsotropicGaussian { mean, .. } => mean.len(),
            TargetSpec::GaussianMixture { components } => {
                components.first().map_or(0, |c| c.mean.len())
            }
            TargetSpec::Ring { dim, .. } => *dim,
            TargetSpec::PointCloud { points } => points.cols(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::config("target dimension must be >= 1"));
        }
        match self {
            TargetSpec::IsotropicGaussian { mean, sigma } => {
                check_sigma(*sigma)?;
                check_finite(mean)?;
            }
            TargetSpec::GaussianMixture { components } => {
                let total: f64 = components.iter().map(|c| c.weight).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::config(format!(
                        "mixture weights sum to {total}, expected 1"
                    )));
                }
                for c in components {
                    if c.mean.len() != d {
                        return Err(Error::config("mixture components differ in dimension"));
                    }
                    if !(c.weight >= 0.0) {
                        return Err(Error::config("mixture weights must be nonnegative"));
                    }
                    check_sigma(c.sigma)?;
                    check_finite(&c.mean)?;
                }
            }
            TargetSpec::Ring { dim, radius, sigma } => {
                if *dim < 2 {
                    return Err(Error::config("ring target needs dim >= 2"));
                }
                check_sigma(*sigma)?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::config("ring radius must be positive"));
                }
            }
            TargetSpec::PointCloud { points } => {
                if points.rows() == 0 {
                    return Err(Error::config("point cloud is empty"));
                }
                check_finite(points.as_slice())?;
            }
        }
        Ok(())
    }

    /// Mixture view `Σ π_k N(μ_k, σ_k² I)` of the analytic targets; `None` for
    /// the ring. A point cloud is a uniform mixture of point masses.
    pub fn mixture_components(&self) -> Option<Vec<Component>> {
        match self {
            TargetSpec::IsotropicGaussian { mean, sigma } => Some(vec![Component {
                weight: 1.0,
                mean: mean.clone(),
                sigma: *sigma,
            }]),
            TargetSpec::GaussianMixture { components } => Some(components.clone()),
            TargetSpec::PointCloud { points } => {
                let w = 1.0 / points.rows() as f64;
                Some(
                    points
                        .iter_rows()
                        .map(|p| Component {
                            weight: w,
                            mean: p.to_vec(),
                            sigma: 0.0,
                        })
                        .collect(),
                )
            }
            TargetSpec::Ring { .. } => None,
        }
    }

    /// Draws a single point.
    pub fn draw(&self, rng: &mut rng::Stream) -> Vec<f64> {
        match self {
            TargetSpec::IsotropicGaussian { mean, sigma } => mean
                .iter()
                .map(|m| m + sigma * rng::gaussian(rng))
                .collect(),
            TargetSpec::GaussianMixture { components } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = components.len() - 1;
                for (k, c) in components.iter().enumerate() {
                    acc += c.weight;
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                let c = &components[pick];
                c.mean
                    .iter()
                    .map(|m| m + c.sigma * rng::gaussian(rng))
                    .collect()
            }
            TargetSpec::Ring { dim, radius, sigma } => {
                let theta = rng.random::<f64>() * std::f64::consts::TAU;
                let r = radius + sigma * rng::gaussian(rng);
                let mut p = vec![r * theta.cos(), r * theta.sin()];
                p.extend((2..*dim).map(|_| sigma * rng::gaussian(rng)));
                p
            }
            TargetSpec::PointCloud { points } => {
                let i = rng.random_range(0..points.rows());
                points.row(i).to_vec()
            }
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("scale must be positive, got {sigma}")))
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::config("target parameters must be finite"))
    }
}

/// `n` i.i.d. draws from `spec`, determined by `seed`.
///
/// A point cloud asked for exactly as many points as it holds returns them
/// verbatim; otherwise its points are drawn uniformly with replacement.
pub fn sample_dataset(spec: &TargetSpec, n: usize, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::config("dataset size must be >= 1"));
    }
    if let TargetSpec::PointCloud { points } = spec {
        if points.rows() == n {
            return Dataset::new(points.clone());
        }
    }
    let mut r = rng::stream(seed, &[rng::tag::DATA]);
    let d = spec.dim();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        data.extend(spec.draw(&mut r));
    }
    Dataset::new(Matrix::new(n, d, data))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Csv,
    Cifar10Binary,
}

impl FileFormat {
    /// `.bin` files are CIFAR-10 batches, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => FileFormat::Cifar10Binary,
            _ => FileFormat::Csv,
        }
    }
}

pub fn load_dataset(path: &Path, format: FileFormat) -> Result<Dataset> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let points = match format {
        FileFormat::Csv => parse_csv(path, &bytes)?,
        FileFormat::Cifar10Binary => parse_cifar(path, &bytes)?,
    };
    Dataset::new(points).map_err(|e| format_error(path, 0, e.to_string()))
}

fn format_error(path: &Path, offset: u64, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        offset,
        message: message.into(),
    }
}

fn parse_csv(path: &Path, bytes: &[u8]) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(bytes);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let offset = e.position().map_or(0, |p| p.byte());
            format_error(path, offset, e.to_string())
        })?;
        let offset = record.position().map_or(0, |p| p.byte());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| format_error(path, offset, format!("not a number: {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(format_error(
                    path,
                    offset,
                    format!("row has {} values, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    Matrix::from_rows(&rows).ok_or_else(|| format_error(path, 0, "file holds no points"))
}

fn parse_cifar(path: &Path, bytes: &[u8]) -> Result<Matrix> {
    if bytes.is_empty() {
        return Err(format_error(path, 0, "file holds no records"));
    }
    let full = bytes.len() / CIFAR_RECORD_LEN;
    if !bytes.len().is_multiple_of(CIFAR_RECORD_LEN) {
        let offset = (full * CIFAR_RECORD_LEN) as u64;
        return Err(format_error(
            path,
            offset,
            format!(
                "truncated record: {} bytes, expected {CIFAR_RECORD_LEN}",
                bytes.len() % CIFAR_RECORD_LEN
            ),
        ));
    }
    let mut data = Vec::with_capacity(full * CIFAR_DIM);
    for record in bytes.chunks_exact(CIFAR_RECORD_LEN) {
        data.extend(record[1..].iter().map(|&v| 2.0 * f64::from(v) / 255.0 - 1.0));
    }
    Ok(Matrix::new(full, CIFAR_DIM, data))
}

// Text form used by config files:
//   gaussian:dim=2;sigma=1;mean=0,0
//   mixture:weights=0.5|0.5;means=5,0|-5,0;sigmas=0.1|0.1
//   ring:dim=2;radius=2;sigma=0.1
//   points:values=0,0|1,1     or     points:file=cloud.csv

impl FromStr for TargetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let mut params = std::collections::BTreeMap::new();
        for part in rest.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::config(format!("target parameter `{part}` lacks `=`")))?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        let take = |key: &str| params.get(key).map(String::as_str);
        let scalar = |key: &str, default: Option<f64>| -> Result<f64> {
            match take(key) {
                Some(v) => v
                    .parse()
                    .map_err(|_| Error::config(format!("target `{key}` is not a number: {v}"))),
                None => default.ok_or_else(|| Error::config(format!("target needs `{key}`"))),
            }
        };
        let spec = match kind {
            "gaussian" => {
                let mean = match take("mean") {
                    Some(m) => parse_vec(m)?,
                    None => vec![0.0; scalar("dim", None)? as usize],
                };
                TargetSpec::IsotropicGaussian {
                    mean,
                    sigma: scalar("sigma", Some(1.0))?,
                }
            }
            "mixture" => {
                let means = parse_list(take("means").ok_or_else(|| {
                    Error::config("mixture target needs `means`")
                })?)?;
                let k = means.len();
                let weights = match take("weights") {
                    Some(w) => parse_vec_sep(w, '|')?,
                    None => vec![1.0 / k as f64; k],
                };
                let sigmas = match take("sigmas") {
                    Some(w) => parse_vec_sep(w, '|')?,
                    None => vec![1.0; k],
                };
                if weights.len() != k || sigmas.len() != k {
                    return Err(Error::config("mixture lists differ in length"));
                }
                TargetSpec::GaussianMixture {
                    components: means
                        .into_iter()
                        .zip(weights.into_iter().zip(sigmas))
                        .map(|(mean, (weight, sigma))| Component {
                            weight,
                            mean,
                            sigma,
                        })
                        .collect(),
                }
            }
            "ring" => TargetSpec::Ring {
                dim: scalar("dim", Some(2.0))? as usize,
                radius: scalar("radius", Some(1.0))?,
                sigma: scalar("sigma", Some(0.1))?,
            },
            "points" => {
                let points = if let Some(v) = take("values") {
                    Matrix::from_rows(&parse_list(v)?)
                        .ok_or_else(|| Error::config("point cloud rows are ragged"))?
                } else if let Some(f) = take("file") {
                    load_dataset(Path::new(f), FileFormat::from_path(Path::new(f)))?
                        .points()
                        .clone()
                } else {
                    return Err(Error::config("points target needs `values` or `file`"));
                };
                TargetSpec::PointCloud { points }
            }
            other => return Err(Error::config(format!("unknown target kind `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_vec(s: &str) -> Result<Vec<f64>> {
    parse_vec_sep(s, ',')
}

fn parse_vec_sep(s: &str, sep: char) -> Result<Vec<f64>> {
    s.split(sep)
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("not a number: {v:?}")))
        })
        .collect()
}

fn parse_list(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split('|').map(parse_vec).collect()
}

fn join_vec(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSpec::IsotropicGaussian { mean, sigma } => {
                write!(f, "gaussian:mean={};sigma={sigma}", join_vec(mean))
            }
            TargetSpec::GaussianMixture { components } => {
                let weights: Vec<String> = components.iter().map(|c| c.weight.to_string()).collect();
                let means: Vec<String> = components.iter().map(|c| join_vec(&c.mean)).collect();
                let sigmas: Vec<String> = components.iter().map(|c| c.sigma.to_string()).collect();
                write!(
                    f,
                    "mixture:weights={};means={};sigmas={}",
                    weights.join("|"),
                    means.join("|"),
                    sigmas.join("|")
                )
            }
            TargetSpec::Ring { dim, radius, sigma } => {
                write!(f, "ring:dim={dim};radius={radius};sigma={sigma}")
            }
            TargetSpec::PointCloud { points } => {
                let rows: Vec<String> = points.iter_rows().map(join_vec).collect();
                write!(f, "points:values={}", rows.join("|"))
            }
        }
    }
}
