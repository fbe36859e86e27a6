//! Parameter and sample parsing for the command line.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use expoly::domain::{bi_index, bi_len, in_proper_bivariate_space, Membership, Support, ThetaBi, ThetaUni};
use expoly::inference::Mode;
use serde::Deserialize;

/// A parameter from `--theta` or `--theta-file`.
#[derive(Debug, Clone)]
pub enum Theta {
    Uni(ThetaUni),
    Bi(ThetaBi),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CoeffsJson {
    List(Vec<f64>),
    Keyed(BTreeMap<String, f64>),
}

#[derive(Deserialize)]
struct ThetaJson {
    d: Option<usize>,
    coeffs: CoeffsJson,
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().with_context(|| format!("'{t}' is not a number"))
        })
        .collect()
}

/// `"ij"` or `"i,j"` → `(i, j)`.
fn parse_key(key: &str, d: usize) -> Result<(usize, usize)> {
    let (i, j) = if let Some((a, b)) = key.split_once(',') {
        (a.trim().parse::<usize>()?, b.trim().parse::<usize>()?)
    } else if key.len() == 2 && key.chars().all(|c| c.is_ascii_digit()) {
        let b = key.as_bytes();
        ((b[0] - b'0') as usize, (b[1] - b'0') as usize)
    } else {
        bail!("coefficient key '{key}' is not of the form \"ij\" or \"i,j\"");
    };
    if i + j == 0 || i + j > d {
        bail!("coefficient theta_{i}{j} is outside degree {d}");
    }
    Ok((i, j))
}

fn bi_from_keyed(d: usize, keyed: &BTreeMap<String, f64>) -> Result<ThetaBi> {
    let mut t = ThetaBi::zeros(d);
    for (key, &v) in keyed {
        let (i, j) = parse_key(key, d)?;
        t.set(i, j, v);
    }
    Ok(ThetaBi::new(d, t.coeffs().to_vec())?)
}

/// Reads θ from the flags. Univariate vectors define their own order; a
/// bivariate list is in the order `θ10, θ01, θ20, θ11, θ02, …` and needs `--d`.
pub fn read_theta(mode: Mode, theta: Option<&str>, file: Option<&Path>, d: Option<usize>) -> Result<Theta> {
    let (list, keyed, file_d) = match (theta, file) {
        (Some(s), None) => (Some(parse_list(s)?), None, None),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let json: ThetaJson =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            match json.coeffs {
                CoeffsJson::List(v) => (Some(v), None, json.d),
                CoeffsJson::Keyed(m) => (None, Some(m), json.d),
            }
        }
        (Some(_), Some(_)) => bail!("give either --theta or --theta-file, not both"),
        (None, None) => bail!("a parameter is required: --theta or --theta-file"),
    };
    if let (Some(a), Some(b)) = (d, file_d) {
        if a != b {
            bail!("--d {a} disagrees with d = {b} in the parameter file");
        }
    }
    let d = d.or(file_d);
    match mode {
        Mode::HalfLine | Mode::RealLine => {
            let coeffs = list.ok_or_else(|| anyhow!("univariate coefficients must be a list"))?;
            if let Some(d) = d {
                if d != coeffs.len() {
                    bail!("d = {d} but {} coefficients were given", coeffs.len());
                }
            }
            let support = if mode == Mode::HalfLine { Support::HalfLine } else { Support::RealLine };
            Ok(Theta::Uni(ThetaUni::new(coeffs, support)?))
        }
        Mode::Bivariate => {
            let d = d.ok_or_else(|| anyhow!("bivariate parameters need --d (or \"d\" in the file)"))?;
            let t = match (list, keyed) {
                (Some(v), _) => {
                    if v.len() != bi_len(d) {
                        bail!("degree {d} needs {} coefficients, got {}", bi_len(d), v.len());
                    }
                    ThetaBi::new(d, v)?
                }
                (None, Some(m)) => bi_from_keyed(d, &m)?,
                (None, None) => unreachable!(),
            };
            Ok(Theta::Bi(t))
        }
    }
}

/// Explains why a univariate parameter has no normalizing constant, naming
/// the offending coefficient; `None` when it is admissible.
pub fn uni_domain_violation(theta: &ThetaUni) -> Option<String> {
    if theta.classify() != Membership::Outside {
        return None;
    }
    let c = theta.coeffs();
    Some(match c.iter().rposition(|&v| v != 0.0) {
        None => "all coefficients are zero: the density is not integrable".into(),
        Some(k) if c[k] > 0.0 => format!(
            "theta_{} = {} is the leading non-zero coefficient and must be negative",
            k + 1,
            c[k]
        ),
        Some(k) => format!(
            "theta_{} = {} leads an odd-order polynomial, which is not integrable on the real line",
            k + 1,
            c[k]
        ),
    })
}

pub fn bi_domain_violation(theta: &ThetaBi) -> Option<String> {
    if in_proper_bivariate_space(theta) {
        return None;
    }
    let d = theta.degree();
    for (i, j) in [(d, 0), (0, d)] {
        let v = theta.get(i, j);
        if !(v < 0.0) {
            return Some(format!("theta_{i}{j} = {v} must be negative"));
        }
    }
    Some(format!(
        "the degree-{d} form (theta_{d}0, …, theta_0{d}) = {:?} is not negative on the positive quadrant",
        theta.top()
    ))
}

/// Headerless CSV with one column (`columns = 1`) or two.
pub fn read_sample(path: &Path, columns: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("malformed CSV at line {}", line + 1))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() != columns {
            bail!("line {}: expected {columns} column(s), found {}", line + 1, record.len());
        }
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().with_context(|| format!("line {}: '{f}' is not a number", line + 1)))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn bi_coeff_names(d: usize) -> Vec<String> {
    let mut names = vec![String::new(); bi_len(d)];
    for (i, j) in expoly::domain::bi_pairs(d) {
        names[bi_index(i, j)] = format!("theta_{i}{j}");
    }
    names
}
