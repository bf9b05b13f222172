//! JSON input schema for bodies, densities, measures, concavity profiles and
//! kernels. Unknown fields are rejected everywhere.

use crate::error::{invalid, Result};
use crate::genvol::KernelG;
use crate::measure::{Concavity, ConcavityF, Density, Integration, WeightedMeasure};
use crate::polytope::{Halfspace, Polytope};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceSpec {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum BodySpec {
    Vrep { vertices: Vec<Vec<f64>> },
    Hrep { halfspaces: Vec<HalfspaceSpec> },
    Named { name: String, dim: usize },
}

impl BodySpec {
    pub fn build(&self) -> Result<Polytope> {
        match self {
            BodySpec::Vrep { vertices } => Polytope::from_vertices(vertices),
            BodySpec::Hrep { halfspaces } => {
                let Some(first) = halfspaces.first() else {
                    return invalid("hrep needs at least one halfspace");
                };
                let hs = halfspaces.iter().map(|h| Halfspace::new(&h.a, h.b)).collect::<Result<Vec<_>>>()?;
                Polytope::from_halfspaces(first.a.len(), hs)
            }
            BodySpec::Named { name, dim } => Polytope::named(name, *dim),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConcavitySpec {
    S { s: f64 },
    Log,
    None,
}

impl From<&ConcavitySpec> for Concavity {
    fn from(c: &ConcavitySpec) -> Concavity {
        match c {
            ConcavitySpec::S { s } => Concavity::S { s: *s },
            ConcavitySpec::Log => Concavity::Log,
            ConcavitySpec::None => Concavity::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensitySpec {
    Constant {
        c: f64,
        #[serde(default)]
        concavity: Option<ConcavitySpec>,
    },
    Gaussian {
        sigma: f64,
        #[serde(default)]
        concavity: Option<ConcavitySpec>,
    },
    LinearPower {
        a: Vec<f64>,
        b: f64,
        k: f64,
        #[serde(default)]
        concavity: Option<ConcavitySpec>,
    },
    Product {
        factors: Vec<DensitySpec>,
        #[serde(default)]
        concavity: Option<ConcavitySpec>,
    },
}

impl DensitySpec {
    /// Densities carry no dimension of their own for `constant` and
    /// `gaussian`; `dim` supplies it.
    pub fn build(&self, dim: usize) -> Result<Density> {
        let (d, tag) = match self {
            DensitySpec::Constant { c, concavity } => {
                if !(*c > 0.0) || !c.is_finite() {
                    return invalid("constant density must be positive");
                }
                (Density::constant(dim, *c), concavity)
            }
            DensitySpec::Gaussian { sigma, concavity } => (Density::gaussian(dim, *sigma)?, concavity),
            DensitySpec::LinearPower { a, b, k, concavity } => {
                if a.len() != dim {
                    return invalid(format!("linear-power vector has length {}, expected {dim}", a.len()));
                }
                (Density::linear_power(a.clone(), *b, *k)?, concavity)
            }
            DensitySpec::Product { factors, concavity } => {
                let dims = factor_dims(factors, dim)?;
                let built = factors.iter().zip(dims).map(|(f, d)| f.build(d)).collect::<Result<Vec<_>>>()?;
                (Density::product(built)?, concavity)
            }
        };
        if d.dim() != dim {
            return invalid(format!("density dimension {} does not match body dimension {dim}", d.dim()));
        }
        Ok(match tag {
            Some(c) => d.with_concavity(c.into()),
            None => d,
        })
    }
}

/// Dimensions of product factors: linear-power factors fix their own, the
/// rest split the remainder evenly.
fn factor_dims(factors: &[DensitySpec], dim: usize) -> Result<Vec<usize>> {
    if factors.is_empty() {
        return invalid("product density needs at least one factor");
    }
    let fixed: Vec<Option<usize>> = factors
        .iter()
        .map(|f| match f {
            DensitySpec::LinearPower { a, .. } => Some(a.len()),
            _ => None,
        })
        .collect();
    let used: usize = fixed.iter().flatten().sum();
    let free = fixed.iter().filter(|f| f.is_none()).count();
    if used > dim || (free == 0 && used != dim) || (free > 0 && !(dim - used).is_multiple_of(free)) || (free > 0 && dim == used) {
        return invalid("product factor dimensions do not add up to the body dimension");
    }
    let each = (dim - used).checked_div(free).unwrap_or(0);
    Ok(fixed.into_iter().map(|f| f.unwrap_or(each)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IntegrationSpec {
    /// Closed form for constant densities, cubature otherwise.
    Auto,
    Grid { levels: usize },
    MonteCarlo { samples: usize },
}

/// Measure with density; Monte Carlo integration takes the job seed.
pub fn build_measure(
    density: Option<&DensitySpec>,
    integration: Option<&IntegrationSpec>,
    dim: usize,
    seed: u64,
) -> Result<WeightedMeasure> {
    let d = match density {
        Some(d) => d.build(dim)?,
        None => Density::constant(dim, 1.0),
    };
    match integration.unwrap_or(&IntegrationSpec::Auto) {
        IntegrationSpec::Auto => Ok(WeightedMeasure::with_density(d)),
        IntegrationSpec::Grid { levels } => WeightedMeasure::new(d, Integration::Grid { levels: *levels }),
        IntegrationSpec::MonteCarlo { samples } => {
            WeightedMeasure::new(d, Integration::MonteCarlo { samples: *samples, seed })
        }
    }
}

/// Concavity profile `F` (or `Q`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileSpec {
    Power { s: f64 },
    Log,
}

impl ProfileSpec {
    pub fn build(&self) -> Result<ConcavityF> {
        match self {
            ProfileSpec::Power { s } => ConcavityF::power(*s),
            ProfileSpec::Log => Ok(ConcavityF::log()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    Power {
        exponent: f64,
        #[serde(default)]
        scale: Option<f64>,
    },
    PowerDensity {
        exponent: f64,
        density: DensitySpec,
        #[serde(default)]
        scale: Option<f64>,
    },
}

impl KernelSpec {
    pub fn build(&self, dim: usize) -> Result<KernelG> {
        let (k, scale) = match self {
            KernelSpec::Power { exponent, scale } => (KernelG::power(dim, *exponent)?, scale),
            KernelSpec::PowerDensity { exponent, density, scale } => {
                (KernelG::power_density(*exponent, density.build(dim)?)?, scale)
            }
        };
        match scale {
            Some(c) => k.scaled(*c),
            None => Ok(k),
        }
    }
}
