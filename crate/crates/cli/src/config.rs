//! Experiment configuration. Every number is a decimal string; unknown
//! keys are rejected.

use std::fmt;
use std::path::Path;

use gammarad::weiss::ModeLaw;
use gammarad::{GaussianDrawConfig, SpaceSpec};
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

/// A real number written as a decimal string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dec(pub f64);

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Dec)
            .ok_or_else(|| de::Error::custom(format!("`{s}` is not a finite decimal")))
    }
}

impl Serialize for Dec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

/// An integer written as a decimal string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Int(pub i64);

impl Int {
    pub fn usize(self) -> usize {
        usize::try_from(self.0).unwrap_or(0)
    }
}

impl<'de> Deserialize<'de> for Int {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.trim().parse::<i64>().map(Int).map_err(|_| de::Error::custom(format!("`{s}` is not an integer")))
    }
}

impl Serialize for Int {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

/// `k ↦ a_k` in the notation of [`ModeLaw`], e.g. `"k^2"`, `"2^k"`, `"1"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Law(pub ModeLaw<f64>);

impl<'de> Deserialize<'de> for Law {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map(Law).map_err(de::Error::custom)
    }
}

impl Serialize for Law {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<Draws>,
    /// Output directory; not part of the config hash.
    #[serde(skip_serializing)]
    pub output: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    experiment: String,
    #[serde(default)]
    params: serde_json::Value,
    #[serde(default)]
    draws: Option<Draws>,
    #[serde(default)]
    output: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Draws {
    pub seed: Int,
    pub samples: Int,
    pub batches: Int,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "experiment", content = "params", rename_all = "kebab-case")]
pub enum Experiment {
    GammaNorm(GammaNormParams),
    FamilyBound(FamilyParams),
    Gram(GramParams),
    PhiBound(PhiParams),
    Halfplane(HalfplaneParams),
    Sector(SectorParams),
    RlDecay(RlDecayParams),
    WeissEquivalence(WeissParams),
    OffDiagonal(OffDiagonalParams),
    OuSim(OuParams),
    CounterexampleGallery(GalleryParams),
}

impl Experiment {
    pub fn id(&self) -> &'static str {
        match self {
            Experiment::GammaNorm(_) => "gamma-norm",
            Experiment::FamilyBound(_) => "family-bound",
            Experiment::Gram(_) => "gram",
            Experiment::PhiBound(_) => "phi-bound",
            Experiment::Halfplane(_) => "halfplane",
            Experiment::Sector(_) => "sector",
            Experiment::RlDecay(_) => "rl-decay",
            Experiment::WeissEquivalence(_) => "weiss-equivalence",
            Experiment::OffDiagonal(_) => "off-diagonal",
            Experiment::OuSim(_) => "ou-sim",
            Experiment::CounterexampleGallery(_) => "counterexample-gallery",
        }
    }
}

/// `"l2"`, `"c0"` or `"lp:<p>"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Space(pub SpaceSpec<f64>);

impl<'de> Deserialize<'de> for Space {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let spec = match s.as_str() {
            "l2" => Ok(SpaceSpec::l2()),
            "c0" => Ok(SpaceSpec::c0()),
            other => match other.strip_prefix("lp:").and_then(|p| p.parse::<f64>().ok()) {
                Some(p) => SpaceSpec::lp(p).map_err(de::Error::custom),
                None => Err(de::Error::custom(format!("unknown space `{s}`; use l2, c0 or lp:<p>"))),
            },
        }?;
        Ok(Space(spec))
    }
}

impl Serialize for Space {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let name = match self.0.kind() {
            gammarad::spaces::SpaceKind::C0 => "c0".to_string(),
            gammarad::spaces::SpaceKind::Lp(2.0) => "l2".to_string(),
            gammarad::spaces::SpaceKind::Lp(p) => format!("lp:{p}"),
        };
        s.serialize_str(&name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// `T h_k = d_k e_k`.
    Diagonal { values: Vec<Dec> },
    /// `T h_k = Σ (i, v)` for each listed column.
    Columns { columns: Vec<Vec<(Int, Dec)>> },
    /// `T h_k = ln(k+1)^{−1/2} e_k`, `k ≤ n`.
    LindePietsch { n: Int },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaNormParams {
    pub space: Space,
    pub operator: OperatorSpec,
    /// Force the Monte Carlo path on `ℓ²`.
    #[serde(default)]
    pub monte_carlo: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilyParams {
    Projection { n: Int },
    /// `h ⊗ e_j`, `h_k = ratio^{k−1}`.
    RankOne { n: Int, ratio: Dec },
    ShiftOrbit { n_max: Int },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sequence", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GramParams {
    Modulated { b: Dec, rho: Dec, n_min: Int, n_max: Int },
    PowerScaled { alpha: Dec, r: Dec, theta: Dec, #[serde(default)] ratio: Option<Dec>, n_min: Int, n_max: Int },
    /// `e^{−λ t}` with `λ = re + i·im`.
    PureExp { re: Vec<Dec>, im: Vec<Dec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiParams {
    pub theta: Dec,
    pub ratio: Dec,
    pub terms: Int,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    pub lambda: Law,
    pub beta: Law,
    pub n: Int,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfplaneParams {
    pub system: SystemParams,
    pub b: Vec<Dec>,
    #[serde(default)]
    pub rho: Option<Dec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "grid", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridParams {
    Dyadic { n_min: Int, n_max: Int },
    PerDecade { lo: Dec, hi: Dec, points: Int },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorParams {
    pub system: SystemParams,
    pub theta: Dec,
    pub grid: GridParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RlDecayParams {
    pub system: SystemParams,
    pub b: Dec,
    pub s: Vec<Dec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeissParams {
    pub system: SystemParams,
    /// Probe grid ratio `2^{1/refine}`.
    #[serde(default)]
    pub refine: Option<Int>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffDiagonalParams {
    pub system: SystemParams,
    /// `β_{k+j,k} = band[j] β_k`, `Δ_k = {k, …, k+J−1}`; default `[1]`.
    #[serde(default)]
    pub band: Option<Vec<Dec>>,
    pub delta: Dec,
    pub targets: Vec<Dec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuParams {
    pub system: SystemParams,
    pub dt: Dec,
    pub horizon: Dec,
    pub paths: Int,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GalleryParams {
    #[serde(default)]
    pub perturb: bool,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let env: Envelope = serde_path_to_error::deserialize(de)
            .map_err(|e| ConfigError(format!("at `{}`: {}", e.path(), e.inner())))?;
        let params = match env.params {
            serde_json::Value::Null => serde_json::Value::Object(Default::default()),
            v => v,
        };
        fn decode<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> Result<T, ConfigError> {
            serde_path_to_error::deserialize(v).map_err(|e| {
                let path = e.path().to_string();
                let at = if path == "." { "params".to_string() } else { format!("params.{path}") };
                ConfigError(format!("at `{at}`: {}", e.inner()))
            })
        }
        let experiment = match env.experiment.as_str() {
            "gamma-norm" => Experiment::GammaNorm(decode(params)?),
            "family-bound" => Experiment::FamilyBound(decode(params)?),
            "gram" => Experiment::Gram(decode(params)?),
            "phi-bound" => Experiment::PhiBound(decode(params)?),
            "halfplane" => Experiment::Halfplane(decode(params)?),
            "sector" => Experiment::Sector(decode(params)?),
            "rl-decay" => Experiment::RlDecay(decode(params)?),
            "weiss-equivalence" => Experiment::WeissEquivalence(decode(params)?),
            "off-diagonal" => Experiment::OffDiagonal(decode(params)?),
            "ou-sim" => Experiment::OuSim(decode(params)?),
            "counterexample-gallery" => Experiment::CounterexampleGallery(decode(params)?),
            other => return Err(ConfigError(format!("at `experiment`: unknown experiment `{other}`"))),
        };
        Ok(Self { experiment, draws: env.draws, output: env.output })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn draws(&self) -> Result<GaussianDrawConfig, ConfigError> {
        let d = self.draws.unwrap_or(Draws { seed: Int(0), samples: Int(20_000), batches: Int(20) });
        let seed = u64::try_from(d.seed.0).map_err(|_| ConfigError("at `draws.seed`: must be nonnegative".into()))?;
        GaussianDrawConfig::new(seed, d.samples.usize(), d.batches.usize()).map_err(|e| ConfigError(format!("at `draws`: {e}")))
    }

    /// SHA-256 of the canonical re-serialisation, so formatting, key order
    /// and equivalent decimal spellings do not change it.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
