use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::bridge::{BridgeConfig, IidGaussianScore, Schedule, DEFAULT_BETA_MAX, DEFAULT_NFE, DEFAULT_STEPS, DEFAULT_TAU_FRACTION};
use crate::model::TransportSpec;
use crate::seed;
use crate::volume::{sphere_mask, Coord, Dims, Lobe, LobeLabelMap, Malignancy, NoduleSpec, RegionMask, VolumeGrid};

/// Environment variable that replaces the configured seed.
pub const SEED_ENV: &str = "NALL_SEED";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub scan: Option<PathBuf>,
    /// JSON list of nodules; each becomes a spherical region.
    pub nodules: Option<PathBuf>,
    /// Additional labelled region masks.
    pub masks: Vec<MaskEntry>,
    pub lung_mask: Option<PathBuf>,
    pub lobes: Option<PathBuf>,
    pub probe: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskEntry {
    pub label: String,
    pub path: PathBuf,
}

/// Healthy-tissue prior used as the bridge score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub mean_hu: f64,
    pub sd_hu: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            mean_hu: -800.0,
            sd_hu: 20.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BridgeSection {
    pub steps: usize,
    pub nfe: usize,
    pub beta_max: f64,
    /// Insertion depth as a fraction of `steps`.
    pub tau: f64,
    pub prior: PriorConfig,
}

impl Default for BridgeSection {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            nfe: DEFAULT_NFE,
            beta_max: DEFAULT_BETA_MAX,
            tau: DEFAULT_TAU_FRACTION,
            prior: PriorConfig::default(),
        }
    }
}

impl BridgeSection {
    pub fn bridge_config(&self) -> Result<BridgeConfig, CliError> {
        Ok(BridgeConfig {
            schedule: Schedule::new(self.steps, self.beta_max)?,
            nfe: self.nfe,
        })
    }

    pub fn score(&self) -> Result<IidGaussianScore, CliError> {
        Ok(IidGaussianScore::new(self.prior.mean_hu, self.prior.sd_hu * self.prior.sd_hu)?)
    }

    pub fn tau_index(&self) -> Result<usize, CliError> {
        Ok(self.bridge_config()?.schedule.index_of(self.tau)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShnapSection {
    pub runs: usize,
    pub order: usize,
    /// Also compare run-to-run spread with the naive baselines.
    pub stability: bool,
}

impl Default for ShnapSection {
    fn default() -> Self {
        Self {
            runs: 5,
            order: 2,
            stability: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnapSection {
    pub stride: usize,
}

impl Default for SnapSection {
    fn default() -> Self {
        Self { stride: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub paths: PathsConfig,
    pub bridge: BridgeSection,
    pub shnap: ShnapSection,
    pub snap: SnapSection,
    pub model: Option<TransportSpec>,
    pub model_timeout_s: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            paths: PathsConfig::default(),
            bridge: BridgeSection::default(),
            shnap: ShnapSection::default(),
            snap: SnapSection::default(),
            model: None,
            model_timeout_s: 60,
            seed: 0,
            out: None,
        }
    }
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl AuditConfig {
    /// Read a config file, resolving relative paths against its directory,
    /// then apply the seed environment override.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: AuditConfig =
            serde_json::from_str(&text).map_err(|e| CliError::new("config", "parse", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        cfg.resolve_paths(&base);
        cfg.apply_env()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let p = &mut self.paths;
        for slot in [&mut p.scan, &mut p.nodules, &mut p.lung_mask, &mut p.lobes, &mut p.probe] {
            resolve(base, slot);
        }
        for m in &mut p.masks {
            let mut slot = Some(m.path.clone());
            resolve(base, &mut slot);
            m.path = slot.expect("set above");
        }
        resolve(base, &mut self.out);
    }

    pub fn apply_env(&mut self) -> Result<(), CliError> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| CliError::new("config", "seed", format!("{SEED_ENV}={v} is not an unsigned integer")))?;
        }
        Ok(())
    }

    pub fn model_timeout(&self) -> std::time::Duration {
        std::time::Duration::from_secs(self.model_timeout_s)
    }
}

/// Ellipsoidal lung field filled with a constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LungField {
    pub center: [f64; 3],
    pub radii_mm: [f64; 3],
    #[serde(default = "lung_hu")]
    pub hu: f32,
}

fn lung_hu() -> f32 {
    -800.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blob {
    pub id: String,
    pub center: Coord,
    pub radius_mm: f64,
    pub hu: f32,
    #[serde(default = "unknown")]
    pub malignancy: Malignancy,
}

fn unknown() -> Malignancy {
    Malignancy::Unknown
}

fn unit_spacing() -> [f64; 3] {
    [1.0; 3]
}

fn body_hu() -> f32 {
    40.0
}

/// Synthetic scan: a soft-tissue body, up to two lung fields (the first
/// split into three lobes along the last axis, the second into two), and
/// spherical blobs, with optional Gaussian texture noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub dims: Dims,
    #[serde(default = "unit_spacing")]
    pub spacing_mm: [f64; 3],
    #[serde(default = "body_hu")]
    pub background_hu: f32,
    #[serde(default)]
    pub lungs: Vec<LungField>,
    #[serde(default)]
    pub blobs: Vec<Blob>,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub seed: u64,
}

pub struct Phantom {
    pub scan: VolumeGrid,
    pub lung: RegionMask,
    pub lobes: LobeLabelMap,
    pub nodules: Vec<NoduleSpec>,
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::new("phantom", "invalid-spec", m));
        if self.lungs.len() > 2 {
            return bad(format!("at most two lung fields, got {}", self.lungs.len()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise_sd {} must be non-negative", self.noise_sd));
        }
        for b in &self.blobs {
            if b.center.iter().zip(self.dims).any(|(&c, d)| c >= d) {
                return bad(format!("blob {} center {:?} outside {:?}", b.id, b.center, self.dims));
            }
            if b.radius_mm.is_nan() || b.radius_mm <= 0.0 {
                return bad(format!("blob {} radius must be positive", b.id));
            }
        }
        for l in &self.lungs {
            if l.radii_mm.iter().any(|&r| r.is_nan() || r <= 0.0) {
                return bad("lung radii must be positive".into());
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Phantom, CliError> {
        self.validate()?;
        let mut scan = VolumeGrid::filled(self.dims, self.spacing_mm, self.background_hu)?;
        let sp = self.spacing_mm;
        let mut labels = vec![Lobe::None; scan.len()];
        for (li, field) in self.lungs.iter().enumerate() {
            let lung = RegionMask::from_fn(self.dims, |c| {
                (0..3)
                    .map(|a| ((c[a] as f64 - field.center[a]) * sp[a] / field.radii_mm[a]).powi(2))
                    .sum::<f64>()
                    <= 1.0
            })?;
            let r_k = field.radii_mm[2] / sp[2];
            for idx in lung.indices() {
                if labels[idx] != Lobe::None {
                    continue;
                }
                let c = crate::volume::coord_of(self.dims, idx);
                let rel = ((c[2] as f64 - (field.center[2] - r_k)) / (2.0 * r_k)).clamp(0.0, 1.0);
                labels[idx] = match (li, rel) {
                    (0, r) if r < 1.0 / 3.0 => Lobe::RightLower,
                    (0, r) if r < 2.0 / 3.0 => Lobe::RightMiddle,
                    (0, _) => Lobe::RightUpper,
                    (_, r) if r < 0.5 => Lobe::LeftLower,
                    _ => Lobe::LeftUpper,
                };
                scan.voxels_mut()[idx] = field.hu;
            }
        }
        let lobes = LobeLabelMap::new(self.dims, labels)?;
        let mut nodules = Vec::new();
        for b in &self.blobs {
            let n = NoduleSpec {
                id: b.id.clone(),
                center: b.center,
                radius_mm: b.radius_mm,
                malignancy: b.malignancy,
            };
            for idx in sphere_mask(self.dims, sp, &n)?.indices() {
                scan.voxels_mut()[idx] = b.hu;
            }
            nodules.push(n);
        }
        if self.noise_sd > 0.0 {
            let mut rng = seed::rng(seed::derive(self.seed, &[0]));
            let normal = Normal::new(0.0, self.noise_sd).expect("validated sd");
            for v in scan.voxels_mut() {
                *v += normal.sample(&mut rng) as f32;
            }
        }
        Ok(Phantom {
            lung: lobes.lung_mask(),
            scan,
            lobes,
            nodules,
        })
    }
}
