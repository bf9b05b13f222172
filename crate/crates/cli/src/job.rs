//! Job document: one JSON object per run, validated before anything executes.

use mbody::schema::{BodySpec, DensitySpec, IntegrationSpec, KernelSpec, ProfileSpec};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Covariogram,
    Diffbody,
    Projbody,
    Rmb,
    VerifyChain,
    VerifyZhang,
    VerifyRs,
    VerifyVariational,
    VerifyLinear,
    VerifyChord,
    Dualvol,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Covariogram => "covariogram",
            Command::Diffbody => "diffbody",
            Command::Projbody => "projbody",
            Command::Rmb => "rmb",
            Command::VerifyChain => "verify-chain",
            Command::VerifyZhang => "verify-zhang",
            Command::VerifyRs => "verify-rs",
            Command::VerifyVariational => "verify-variational",
            Command::VerifyLinear => "verify-linear",
            Command::VerifyChord => "verify-chord",
            Command::Dualvol => "dualvol",
        }
    }

    /// Parameter names the command reads; any other key is an input error.
    pub fn allowed_params(self) -> Vec<&'static str> {
        const COMMON: [&str; 3] = ["seed", "tolerance", "transform"];
        let own: &[&str] = match self {
            Command::Covariogram => &["x", "direction", "grid", "mc_samples"],
            Command::Diffbody => &["m", "directions", "direction_count", "sphere_count"],
            Command::Projbody => &["m", "x", "directions", "direction_count", "sphere_count"],
            Command::Rmb => &["m", "p", "method", "p_seq", "directions", "direction_count"],
            Command::VerifyChain => &["m", "concavity", "p_list", "directions", "direction_count"],
            Command::VerifyZhang => &["m", "s", "profile", "nu", "sphere_count"],
            Command::VerifyRs => &["m", "sphere_count"],
            Command::VerifyVariational => &["m", "directions", "direction_count", "steps"],
            Command::VerifyLinear => &["m", "map", "directions", "direction_count"],
            Command::VerifyChord => &["side", "ray", "h", "kernel", "sphere_count"],
            Command::Dualvol => &["kernel", "star", "sphere_count"],
        };
        own.iter().copied().chain(COMMON).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub command: Command,
    pub body: BodySpec,
    #[serde(default)]
    pub measure: Option<DensitySpec>,
    #[serde(default)]
    pub integration: Option<IntegrationSpec>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: Option<OutputFormat>,
    #[serde(default)]
    pub outfile: Option<String>,
}

/// Inclusion-chain family: `s`-concave, `F`-concave or `Q`-concave.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChainFamilySpec {
    S { s: f64 },
    F { profile: ProfileSpec },
    Q { profile: ProfileSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodSpec {
    Direct,
    Mellin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SideSpec {
    Lower,
    Upper,
}

/// Star body in R^d for dual volumes and chord supports.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StarSpec {
    Ball {
        radius: f64,
        dim: usize,
    },
    /// `K` itself, about its interior point.
    Body,
    DifferenceBody {
        m: usize,
    },
    PolarProjection {
        m: usize,
        #[serde(default)]
        scale: Option<f64>,
    },
    RadialMean {
        m: usize,
        p: f64,
        #[serde(default)]
        method: Option<MethodSpec>,
    },
}

/// Ray function `f` of a chord-integral check.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RaySpec {
    /// `f0 (1 - r/ρ_L)`.
    Affine { star: StarSpec, f0: f64 },
    /// `f0 (1 - (r/ρ_L)²)`, strictly concave.
    Quadratic { star: StarSpec, f0: f64 },
    /// `g_{μ,m}(K, ·)^s` on `D^m K`.
    CovariogramPower { m: usize, s: f64 },
}

/// Increasing `h(t) = t^k`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum HSpec {
    Power { k: f64 },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    /// Linear map applied to the body before the command runs.
    pub transform: Option<Vec<Vec<f64>>>,
    pub m: Option<usize>,
    /// Shift tuple `x̄` (m vectors of length n).
    pub x: Option<Vec<Vec<f64>>>,
    pub direction: Option<Vec<Vec<f64>>>,
    pub directions: Option<Vec<Vec<Vec<f64>>>>,
    pub direction_count: Option<usize>,
    pub grid: Option<usize>,
    pub mc_samples: Option<usize>,
    pub sphere_count: Option<usize>,
    pub p: Option<f64>,
    pub p_list: Option<Vec<f64>>,
    pub p_seq: Option<Vec<f64>>,
    pub method: Option<MethodSpec>,
    pub s: Option<f64>,
    pub profile: Option<ProfileSpec>,
    pub concavity: Option<ChainFamilySpec>,
    pub nu: Option<Vec<DensitySpec>>,
    pub map: Option<Vec<Vec<f64>>>,
    pub steps: Option<Vec<f64>>,
    pub side: Option<SideSpec>,
    pub ray: Option<RaySpec>,
    pub h: Option<HSpec>,
    pub kernel: Option<KernelSpec>,
    pub star: Option<StarSpec>,
}

/// Parses and schema-checks a job document.
pub fn parse(text: &str) -> Result<JobSpec, String> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| format!("malformed JSON: {e}"))?;
    // `{"name": ..., "dim": ...}` is shorthand for a named body
    if let Some(body) = value.get_mut("body").and_then(|b| b.as_object_mut()) {
        if !body.contains_key("type") && body.contains_key("name") {
            body.insert("type".into(), "named".into());
        }
    }
    let job: JobSpec = serde_json::from_value(value.clone()).map_err(|e| format!("invalid job spec: {e}"))?;
    if let Some(params) = value.get("params").and_then(|p| p.as_object()) {
        let allowed = job.command.allowed_params();
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(format!("parameter `{bad}` is not used by command {}", job.command.name()));
        }
    }
    Ok(job)
}
