use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{AuditConfig, PhantomSpec};
use super::stats_csv::run_stats;
use super::{CliError, Command, Overrides};
use crate::bridge::{insert_region, kl_blending_diagnostic, remove_region, uniform_grid, GaussianParams, Schedule};
use crate::model::{serve_stdio, ModelHandle, ToyHttpServer, ToyLmpiModelSpec};
use crate::shnap::{
    naive_baseline_explanations, shnap_runs, stability_report, AuditCase, BridgeRemover, Region, ShnapExplanation,
};
use crate::snap::{aggregate_by_lobe, radial_profile, snap_map, write_csv, write_slices, InsertionProbe, SnapProber};
use crate::volume::io::{read_lobes, read_mask, read_volume, write_lobes, write_mask, write_volume};
use crate::volume::{distance_to_boundary, metaball_draw, sphere_mask, Malignancy, NoduleSpec};

/// On-disk probe: volume and mask manifests plus the source id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeFile {
    pub content: PathBuf,
    pub mask: PathBuf,
    pub label: Malignancy,
    pub source_id: String,
}

fn load_probe(path: &Path) -> Result<InsertionProbe, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let pf: ProbeFile = serde_json::from_str(&text).map_err(|e| CliError::new("cli", "probe", e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let content = read_volume(&base.join(&pf.content))?;
    let mask = read_mask(&base.join(&pf.mask))?;
    Ok(InsertionProbe::new(content, mask, pf.label, pf.source_id)?)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::new("cli", "parse", format!("{}: {e}", path.display())))
}

/// Collects artifacts for one output directory and writes the manifest.
struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self { dir, files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let p = self.path(name);
        let text = serde_json::to_string_pretty(value).expect("artifact serializes") + "\n";
        fs::write(&p, text).map_err(|e| CliError::io(&p, e))
    }

    fn finish(mut self, command: &str, argv: &[String], seed: Option<u64>, config: Value) -> Result<(), CliError> {
        let manifest = json!({
            "tool": "nall",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "argv": argv,
            "seed": seed,
            "config": config,
            "outputs": self.files,
        });
        self.files = Vec::new();
        self.json("manifest.json", &manifest)
    }
}

fn required<'a, T>(v: &'a Option<T>, what: &str) -> Result<&'a T, CliError> {
    v.as_ref()
        .ok_or_else(|| CliError::new("config", "missing", format!("{what} is required")))
}

fn config_or_default(path: Option<&Path>) -> Result<AuditConfig, CliError> {
    match path {
        Some(p) => AuditConfig::load(p),
        None => {
            let mut c = AuditConfig::default();
            c.apply_env()?;
            Ok(c)
        }
    }
}

fn apply(cfg: &mut AuditConfig, o: Overrides) {
    let b = &mut cfg.bridge;
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.out {
        cfg.out = Some(v);
    }
    if let Some(v) = o.nfe {
        b.nfe = v;
    }
    if let Some(v) = o.steps {
        b.steps = v;
    }
    if let Some(v) = o.beta_max {
        b.beta_max = v;
    }
    if let Some(v) = o.tau {
        b.tau = v;
    }
    if let Some(v) = o.prior_mean {
        b.prior.mean_hu = v;
    }
    if let Some(v) = o.prior_sd {
        b.prior.sd_hu = v;
    }
}

fn config_value(cfg: &AuditConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn model_handle(cfg: &AuditConfig) -> Result<ModelHandle, CliError> {
    Ok(ModelHandle::from_spec(required(&cfg.model, "model")?, cfg.model_timeout())?)
}

pub(super) fn execute(command: Command, argv: &[String]) -> Result<(), CliError> {
    match command {
        Command::Phantom { spec, out } => phantom(&spec, out, argv),
        Command::MaskGen { dims, seed, out } => {
            let draw = metaball_draw(dims, seed)?;
            let mut a = Artifacts::new(out)?;
            write_mask(&a.path("mask.json"), &draw.mask, [1.0; 3])?;
            a.files.push("mask.raw".into());
            a.json(
                "metaball.json",
                &json!({ "quantile": draw.quantile, "core_points": draw.core_points, "voxels": draw.mask.count() }),
            )?;
            a.finish("mask-gen", argv, Some(seed), json!({ "dims": dims }))
        }
        Command::Remove { scan, mask, config, overrides } => {
            let mut cfg = config_or_default(config.as_deref())?;
            apply(&mut cfg, overrides);
            let x = read_volume(&scan)?;
            let m = read_mask(&mask)?;
            let out = remove_region(&x, &m, &cfg.bridge.score()?, &cfg.bridge.bridge_config()?, cfg.seed)?;
            let mut a = Artifacts::new(required(&cfg.out, "--out")?.clone())?;
            write_volume(&a.path("removed.json"), &out)?;
            a.files.push("removed.raw".into());
            a.finish("remove", argv, Some(cfg.seed), config_value(&cfg))
        }
        Command::Insert { scan, probe, center, config, overrides } => {
            let mut cfg = config_or_default(config.as_deref())?;
            apply(&mut cfg, overrides);
            let x = read_volume(&scan)?;
            let p = load_probe(&probe)?;
            let tau_index = cfg.bridge.tau_index()?;
            let out = insert_region(
                &x,
                &p.content,
                &p.mask,
                center,
                tau_index,
                &cfg.bridge.score()?,
                &cfg.bridge.bridge_config()?,
                cfg.seed,
            )?;
            let mut a = Artifacts::new(required(&cfg.out, "--out")?.clone())?;
            write_volume(&a.path("inserted.json"), &out)?;
            a.files.push("inserted.raw".into());
            let mut v = config_value(&cfg);
            v["center"] = json!(center);
            v["tau_index"] = json!(tau_index);
            a.finish("insert", argv, Some(cfg.seed), v)
        }
        Command::Shnap { config, runs, stability, overrides } => {
            let mut cfg = AuditConfig::load(&config)?;
            apply(&mut cfg, overrides);
            if let Some(r) = runs {
                cfg.shnap.runs = r;
            }
            cfg.shnap.stability |= stability;
            shnap(&cfg, argv)
        }
        Command::SnapMap { config, stride, overrides } => {
            let mut cfg = AuditConfig::load(&config)?;
            apply(&mut cfg, overrides);
            if let Some(s) = stride {
                cfg.snap.stride = s;
            }
            snap(&cfg, argv)
        }
        Command::BridgeDiag { p1, p2, grid, out, steps, beta_max } => {
            let d = crate::bridge::DEFAULT_STEPS;
            let schedule = Schedule::new(steps.unwrap_or(d), beta_max.unwrap_or(crate::bridge::DEFAULT_BETA_MAX))?;
            let g1 = GaussianParams::scalar(p1.0, p1.1)?;
            let g2 = GaussianParams::scalar(p2.0, p2.1)?;
            let curve = kl_blending_diagnostic(&g1, &g2, &schedule, &uniform_grid(grid))?;
            let mut a = Artifacts::new(out)?;
            let mut csv = String::from("t,kl,rfi,residual\n");
            for i in 0..curve.t.len() {
                csv.push_str(&format!("{},{},{},{}\n", curve.t[i], curve.kl[i], curve.rfi[i], curve.residual[i]));
            }
            let p = a.path("blending.csv");
            fs::write(&p, csv).map_err(|e| CliError::io(&p, e))?;
            let monotone = curve.kl.windows(2).all(|w| w[1] <= w[0]);
            a.json(
                "blending_summary.json",
                &json!({ "kl_start": curve.kl.first(), "max_abs_residual": curve.max_abs_residual(), "kl_non_increasing": monotone }),
            )?;
            let cfgv = json!({ "p1": [p1.0, p1.1], "p2": [p2.0, p2.1], "grid": grid,
                "steps": schedule.steps(), "beta_max": schedule.beta_max() });
            a.finish("bridge-diag", argv, None, cfgv)
        }
        Command::Stats { test, input, out, p0, target } => {
            let v = run_stats(test, &input, p0, target)?;
            let text = serde_json::to_string_pretty(&v).expect("serializes");
            println!("{text}");
            if let Some(dir) = out {
                let mut a = Artifacts::new(dir)?;
                a.json("stats.json", &v)?;
                let cfgv = json!({ "input": input, "p0": p0, "target": target });
                a.finish("stats", argv, None, cfgv)?;
            }
            Ok(())
        }
        Command::ToyServe { spec, http, stdio } => {
            let spec: ToyLmpiModelSpec = read_json(&spec)?;
            if stdio {
                let stdin = std::io::stdin();
                serve_stdio(&spec, stdin.lock(), std::io::stdout())?;
                return Ok(());
            }
            let addr = http.expect("clap requires --http without --stdio");
            let server = ToyHttpServer::bind(spec, &addr)?;
            println!("listening on {}", server.local_addr()?);
            std::io::stdout().flush().ok();
            server.serve()?;
            Ok(())
        }
    }
}

fn phantom(spec_path: &Path, out: PathBuf, argv: &[String]) -> Result<(), CliError> {
    let spec: PhantomSpec = read_json(spec_path)?;
    let ph = spec.build()?;
    let sp = spec.spacing_mm;
    let mut a = Artifacts::new(out)?;
    write_volume(&a.path("scan.json"), &ph.scan)?;
    a.files.push("scan.raw".into());
    write_mask(&a.path("lung_mask.json"), &ph.lung, sp)?;
    a.files.push("lung_mask.raw".into());
    write_lobes(&a.path("lobes.json"), &ph.lobes, sp)?;
    a.files.push("lobes.raw".into());
    a.json("nodules.json", &ph.nodules)?;
    for n in &ph.nodules {
        let m = sphere_mask(ph.scan.dims(), sp, n)?;
        write_mask(&a.path(&format!("mask_{}.json", n.id)), &m, sp)?;
        a.files.push(format!("mask_{}.raw", n.id));
        match InsertionProbe::from_nodule(&ph.scan, n, 2) {
            Ok(p) => {
                let (c, mk) = (format!("probe_{}_content.json", n.id), format!("probe_{}_mask.json", n.id));
                write_volume(&a.path(&c), &p.content)?;
                write_mask(&a.path(&mk), &p.mask, sp)?;
                a.files.push(c.replace(".json", ".raw"));
                a.files.push(mk.replace(".json", ".raw"));
                let pf = ProbeFile {
                    content: c.into(),
                    mask: mk.into(),
                    label: n.malignancy,
                    source_id: n.id.clone(),
                };
                a.json(&format!("probe_{}.json", n.id), &pf)?;
            }
            Err(e) => log::warn!("no probe for nodule {}: {e}", n.id),
        }
    }
    let cfg = serde_json::to_value(&spec).expect("spec serializes");
    a.finish("phantom", argv, Some(spec.seed), cfg)
}

fn audit_case(cfg: &AuditConfig) -> Result<AuditCase, CliError> {
    let scan = read_volume(required(&cfg.paths.scan, "paths.scan")?)?;
    let mut regions = Vec::new();
    if let Some(p) = &cfg.paths.nodules {
        let nodules: Vec<NoduleSpec> = read_json(p)?;
        for n in &nodules {
            regions.push(Region {
                label: n.id.clone(),
                mask: sphere_mask(scan.dims(), scan.spacing_mm(), n)?,
            });
        }
    }
    for m in &cfg.paths.masks {
        regions.push(Region {
            label: m.label.clone(),
            mask: read_mask(&m.path)?,
        });
    }
    Ok(AuditCase::new(scan, regions)?)
}

fn shnap(cfg: &AuditConfig, argv: &[String]) -> Result<(), CliError> {
    if cfg.shnap.order != crate::shnap::SHNAP_ORDER {
        return Err(CliError::new(
            "config",
            "order",
            format!("explanations are order {}, got {}", crate::shnap::SHNAP_ORDER, cfg.shnap.order),
        ));
    }
    let case = audit_case(cfg)?;
    let model = model_handle(cfg)?;
    let remover = BridgeRemover::new(Arc::new(cfg.bridge.score()?), cfg.bridge.bridge_config()?);
    let runs = shnap_runs(&case, &model, &remover, cfg.seed, cfg.shnap.runs)?;
    let explanation = ShnapExplanation::from_runs(case.labels(), &runs)?;
    let mut a = Artifacts::new(required(&cfg.out, "out")?.clone())?;
    a.json("shnap_report.json", &explanation.report())?;
    if cfg.shnap.stability {
        if runs.len() < 2 {
            return Err(CliError::new("shnap", "stability", "the stability report needs at least 2 runs"));
        }
        let singles = runs
            .iter()
            .map(|r| ShnapExplanation::from_runs(case.labels(), std::slice::from_ref(r)))
            .collect::<Result<Vec<_>, _>>()?;
        let naive = naive_baseline_explanations(&case, &model)?;
        let naive_expl: Vec<ShnapExplanation> = naive.iter().map(|(_, e)| e.clone()).collect();
        let (seeded, baselines) = (stability_report(&singles)?, stability_report(&naive_expl)?);
        a.json(
            "stability.json",
            &json!({
                "runs": seeded,
                "naive": baselines,
                "naive_baselines": naive.iter().map(|(b, _)| b).collect::<Vec<_>>(),
                "median_logit_std_runs": seeded.median_logit_std(),
                "median_logit_std_naive": baselines.median_logit_std(),
            }),
        )?;
    }
    let mut v = config_value(cfg);
    v["model_queries"] = json!(model.queries());
    a.finish("shnap", argv, Some(cfg.seed), v)
}

fn snap(cfg: &AuditConfig, argv: &[String]) -> Result<(), CliError> {
    let scan = read_volume(required(&cfg.paths.scan, "paths.scan")?)?;
    let lobes = cfg.paths.lobes.as_deref().map(read_lobes).transpose()?;
    let lung = match (&cfg.paths.lung_mask, &lobes) {
        (Some(p), _) => read_mask(p)?,
        (None, Some(l)) => l.lung_mask(),
        (None, None) => return Err(CliError::new("config", "missing", "paths.lung_mask or paths.lobes is required")),
    };
    let probe = load_probe(required(&cfg.paths.probe, "paths.probe")?)?;
    let model = model_handle(cfg)?;
    let score = cfg.bridge.score()?;
    let bridge = cfg.bridge.bridge_config()?;
    let tau_index = cfg.bridge.tau_index()?;
    let prober = SnapProber::new(&scan, &lung, &model, &score, &bridge, tau_index)?;
    let map = snap_map(&prober, &probe, cfg.snap.stride, cfg.seed)?;
    let distance = distance_to_boundary(&lung, scan.spacing_mm()).ok();
    let mut a = Artifacts::new(required(&cfg.out, "out")?.clone())?;
    write_csv(&map, lobes.as_ref(), distance.as_ref(), &a.path("snap.csv"))?;
    let sidecar = write_slices(&map, &a.dir.join("slices"))?;
    a.files.extend(sidecar.files.iter().map(|f| format!("slices/{}", f.file)));
    a.files.push("slices/slices.json".into());
    if let Some(l) = &lobes {
        let agg = aggregate_by_lobe(&map, l)?.with_ids(
            cfg.paths.scan.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            probe.source_id.clone(),
        );
        a.json("lobes_summary.json", &agg)?;
    }
    if let Some(d) = &distance {
        a.json("radial.json", &radial_profile(&map, d)?)?;
    }
    a.json(
        "snap_summary.json",
        &json!({
            "base_logit": map.base_logit,
            "centers": map.len(),
            "skipped": map.skipped,
            "stride": map.stride,
            "tau_index": tau_index,
            "probe": probe.source_id,
        }),
    )?;
    let mut v = config_value(cfg);
    v["model_queries"] = json!(model.queries());
    a.finish("snap-map", argv, Some(cfg.seed), v)
}
