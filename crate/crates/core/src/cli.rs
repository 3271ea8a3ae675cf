//! Batch front-end: the run configuration, one command per pipeline stage,
//! and the files each command writes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::decay::{decay_reports_from_slices, DecayConfig, DecayReport};
use crate::error::{Error, Result};
use crate::jost::JostConfig;
use crate::kernels::{
    b_kernel, est11_check, est1_check, kernel_jost, resonance_functionals, round_trip, BoundCheck, KernelConfig,
    EST11_EXCLUSION,
};
use crate::potential::{PotentialSpec, Side, CATALOG};
use crate::propagator::{kernel_slices, PropagatorData};
use crate::scattering::{classify_resonance, ResonanceReport, ScatteringData};
use crate::wiener::{regularity_report, vdc_check, WienerConfig, WienerEstimate};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Catalog,
    Scatter,
    Resonance,
    Kernels,
    Wiener,
    Decay,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Catalog => "catalog",
            Command::Scatter => "scatter",
            Command::Resonance => "resonance",
            Command::Kernels => "kernels",
            Command::Wiener => "wiener",
            Command::Decay => "decay",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub potential: PotentialSpec,
    /// Parent of the per-run directories; `--out` replaces it.
    pub output_dir: String,
    pub jost: JostConfig,
    pub scatter: ScatterStage,
    pub kernels: KernelStage,
    pub wiener: WienerStage,
    pub decay: DecayStage,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            potential: PotentialSpec::named("poeschl_teller"),
            output_dir: "runs".into(),
            jost: JostConfig::default(),
            scatter: ScatterStage::default(),
            kernels: KernelStage::default(),
            wiener: WienerStage::default(),
            decay: DecayStage::default(),
            tolerances: Tolerances::default(),
        }
    }
}

/// `k` grid `0, δk, …, K` for the scattering table.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterStage {
    pub k_max: f64,
    pub dk: f64,
}

impl Default for ScatterStage {
    fn default() -> Self {
        Self { k_max: 20.0, dk: 0.05 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelStage {
    /// Slices to tabulate; must contain `x = 0`.
    pub x: Vec<f64>,
    /// Largest `k` at which the identities are checked.
    pub k_check: f64,
    pub transform: KernelConfig,
}

impl Default for KernelStage {
    fn default() -> Self {
        Self { x: vec![-1.0, -0.5, 0.0, 0.5, 1.0], k_check: 5.0, transform: KernelConfig::default() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WienerStage {
    pub max_order: usize,
    pub vdc_times: Vec<f64>,
    pub estimate: WienerConfig,
}

impl Default for WienerStage {
    fn default() -> Self {
        Self { max_order: 2, vdc_times: vec![1.0, 10.0, 100.0], estimate: WienerConfig::default() }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayStage {
    /// Also write one `(x, y, Re G, Im G, err)` table per time.
    pub write_slices: bool,
    pub experiment: DecayConfig,
}

impl Default for DecayStage {
    fn default() -> Self {
        Self { write_slices: true, experiment: DecayConfig::default() }
    }
}

/// Thresholds behind the exit code.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub unitarity: f64,
    /// Gap between `T(0)`, `R±(0)` and the extrapolated `k → 0⁺` limits.
    pub zero_limits: f64,
    pub identity: f64,
    /// Slack in the pointwise kernel bounds.
    pub kernel_bound: f64,
    pub kernel_imag: f64,
    pub round_trip: f64,
    pub vdc_ratio: f64,
    pub decay_exponent: f64,
    pub decay_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unitarity: 1e-6,
            zero_limits: 1e-4,
            identity: 1e-4,
            kernel_bound: 1e-6,
            kernel_imag: 1e-4,
            round_trip: 1e-6,
            vdc_ratio: 1.0,
            decay_exponent: 1.5,
            decay_band: 0.15,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides (dotted paths, JSON values; anything
    /// that does not parse as JSON is taken as a string).
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let mut root = serde_json::to_value(self)?;
        for o in overrides {
            let (key, raw) = o.split_once('=').ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut root, key, value)?;
        }
        let cfg: RunConfig = serde_json::from_value(root)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!("schema_version {} (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        let t = &self.tolerances;
        let named = [
            ("unitarity", t.unitarity),
            ("zero_limits", t.zero_limits),
            ("identity", t.identity),
            ("kernel_bound", t.kernel_bound),
            ("kernel_imag", t.kernel_imag),
            ("round_trip", t.round_trip),
            ("vdc_ratio", t.vdc_ratio),
            ("decay_band", t.decay_band),
            ("jost.rtol", self.jost.rtol),
            ("jost.atol", self.jost.atol),
            ("jost.eta_tol", self.jost.eta_tol),
            ("propagator.tolerance", self.decay.experiment.propagator.tolerance),
        ];
        if let Some((n, _)) = named.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::Config(format!("tolerance `{n}` must be positive")));
        }
        if !(self.scatter.k_max > 0.0 && self.scatter.dk > 0.0) {
            return Err(Error::Config("scatter grid needs k_max > 0 and dk > 0".into()));
        }
        if !self.kernels.x.contains(&0.0) {
            return Err(Error::Config("kernels.x must contain 0".into()));
        }
        if self.wiener.vdc_times.iter().any(|&t| t < 1.0) {
            return Err(Error::Config("vdc times must be ≥ 1".into()));
        }
        self.decay.experiment.grid()?;
        self.decay.experiment.times()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(&serde_json::to_vec(self)?))
    }
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = root;
    for (i, part) in parts.iter().enumerate() {
        let map = node.as_object_mut().ok_or_else(|| Error::Config(format!("`{key}`: not an object at `{part}`")))?;
        let last = i + 1 == parts.len();
        // parameter maps are open; everything else must already exist
        let open = i > 0 && parts[i - 1] == "params";
        if !map.contains_key(*part) && !open {
            return Err(Error::Config(format!("unknown config key `{key}`")));
        }
        if last {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.get_mut(*part).expect("checked above");
    }
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One acceptance-relevant quantity against its tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value <= tolerance }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: Option<PathBuf>,
    pub files: Vec<String>,
    pub checks: Vec<Check>,
    /// Text for stdout.
    pub listing: String,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Files of one run, written to `<parent>/<command>-<hash prefix>/` once all
/// of them are ready.
struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.push((name.into(), bytes));
        Ok(())
    }

    fn csv<R: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = R>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        self.files.push((name.into(), bytes));
        Ok(())
    }

    fn write(mut self, parent: &Path, command: Command, cfg: &RunConfig, checks: &[Check]) -> Result<(PathBuf, Vec<String>)> {
        let hash = cfg.hash()?;
        let dir = parent.join(format!("{}-{}", command.name(), &hash[..12]));
        fs::create_dir_all(&dir)?;
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            command: command.name(),
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config_hash: hash,
            config: cfg.clone(),
            checks: checks.to_vec(),
            files: self.files.iter().map(|(n, b)| FileEntry { name: n.clone(), sha256: sha256_hex(b) }).collect(),
        };
        self.json("manifest.json", &manifest)?;
        let mut names = Vec::new();
        for (name, bytes) in &self.files {
            let tmp = dir.join(format!(".{name}.tmp"));
            fs::write(&tmp, bytes)?;
            fs::rename(&tmp, dir.join(name))?;
            names.push(name.clone());
        }
        Ok((dir, names))
    }
}

#[derive(Serialize)]
struct Manifest {
    schema_version: u32,
    command: &'static str,
    package: &'static str,
    version: &'static str,
    config_hash: String,
    config: RunConfig,
    checks: Vec<Check>,
    files: Vec<FileEntry>,
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
}

/// Runs `command`; files go under `out` (or the configured output directory).
pub fn run(command: Command, cfg: &RunConfig, out: Option<&Path>) -> Result<RunOutcome> {
    if command == Command::Catalog {
        return Ok(RunOutcome { dir: None, files: Vec::new(), checks: Vec::new(), listing: cmd_catalog() });
    }
    cfg.validate()?;
    let mut art = Artifacts::new();
    let checks = match command {
        Command::Scatter => cmd_scatter(cfg, &mut art)?,
        Command::Resonance => cmd_resonance(cfg, &mut art)?,
        Command::Kernels => cmd_kernels(cfg, &mut art)?,
        Command::Wiener => cmd_wiener(cfg, &mut art)?,
        Command::Decay => cmd_decay(cfg, &mut art)?,
        Command::Catalog => unreachable!(),
    };
    let parent = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    let (dir, files) = art.write(&parent, command, cfg, &checks)?;
    let mut listing = String::new();
    for c in &checks {
        let _ = writeln!(listing, "{} {} = {:e} (tolerance {:e})", if c.passed { "ok  " } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    let _ = writeln!(listing, "wrote {}", dir.display());
    Ok(RunOutcome { dir: Some(dir), files, checks, listing })
}

pub fn cmd_catalog() -> String {
    let mut s = String::new();
    for e in CATALOG {
        let params = if e.params.is_empty() { "-" } else { e.params };
        let _ = writeln!(s, "{:<16} params: {:<40} {}", e.name, params, e.properties);
    }
    s
}

#[derive(Serialize)]
struct ScatterRow {
    k: f64,
    re_t: f64,
    im_t: f64,
    re_r_plus: f64,
    im_r_plus: f64,
    re_r_minus: f64,
    im_r_minus: f64,
    unitarity_plus: f64,
    unitarity_minus: f64,
}

#[derive(Serialize)]
struct ScatterSummary<'a> {
    potential: &'a str,
    resonance: &'a ResonanceReport,
    unitarity_plus: f64,
    unitarity_minus: f64,
    off_diagonal: f64,
    bound_state_energies: Vec<f64>,
}

fn cmd_scatter(cfg: &RunConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let v = cfg.potential.build()?;
    let n = (cfg.scatter.k_max / cfg.scatter.dk).round() as usize;
    let k: Vec<f64> = (0..=n).map(|j| j as f64 * cfg.scatter.dk).collect();
    let (sd, rz) = ScatteringData::compute(&v, &k, &cfg.jost)?;
    let u = |r: Complex64, i: usize| sd.t[i].norm_sqr() + r.norm_sqr() - 1.0;
    art.csv(
        "scattering.csv",
        k.iter().enumerate().map(|(i, &k)| ScatterRow {
            k,
            re_t: sd.t[i].re,
            im_t: sd.t[i].im,
            re_r_plus: sd.r_plus[i].re,
            im_r_plus: sd.r_plus[i].im,
            re_r_minus: sd.r_minus[i].re,
            im_r_minus: sd.r_minus[i].im,
            unitarity_plus: u(sd.r_plus[i], i),
            unitarity_minus: u(sd.r_minus[i], i),
        }),
    )?;
    let (up, um) = sd.unitarity_residual();
    art.json(
        "scatter_report.json",
        &ScatterSummary {
            potential: v.label(),
            resonance: &rz,
            unitarity_plus: up,
            unitarity_minus: um,
            off_diagonal: sd.off_diagonal_residual(),
            bound_state_energies: sd.bound_states.iter().map(|b| b.energy).collect(),
        },
    )?;
    let tol = &cfg.tolerances;
    Ok(vec![
        Check::below("unitarity", up.max(um), tol.unitarity),
        Check::below("off_diagonal_unitarity", sd.off_diagonal_residual(), tol.unitarity),
        Check::below("zero_energy_limits", rz.limit_consistency, tol.zero_limits),
    ])
}

fn cmd_resonance(cfg: &RunConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let rz = classify_resonance(&cfg.potential.build()?, &cfg.jost)?;
    art.json("resonance.json", &rz)?;
    Ok(vec![Check::below("zero_energy_limits", rz.limit_consistency, cfg.tolerances.zero_limits)])
}

#[derive(Serialize)]
struct KernelRow {
    x: f64,
    y: f64,
    #[serde(rename = "B")]
    b: f64,
    #[serde(rename = "K")]
    k: f64,
    #[serde(rename = "D")]
    d: f64,
}

#[derive(Serialize)]
struct KernelSideSummary {
    side: Side,
    c_hat: f64,
    identity_residual: f64,
    unsigned_identity_residual: f64,
    imag_residual: f64,
    round_trip: f64,
    est1: BoundCheck,
    est11: BoundCheck,
}

fn cmd_kernels(cfg: &RunConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let v = cfg.potential.build()?;
    let (kc, xs, tol) = (&cfg.kernels.transform, &cfg.kernels.x, &cfg.tolerances);
    let mut summary = Vec::new();
    let mut checks = Vec::new();
    for side in [Side::Plus, Side::Minus] {
        let jf = kernel_jost(&v, side, xs, kc, &cfg.jost)?;
        let kt = b_kernel(&v, &jf, xs, kc)?;
        let rf = resonance_functionals(&v, &kt, &jf, cfg.kernels.k_check)?;
        let s = KernelSideSummary {
            side,
            c_hat: rf.c_hat,
            identity_residual: rf.identity_residual,
            unsigned_identity_residual: rf.unsigned_residual,
            imag_residual: kt.imag_residual,
            round_trip: round_trip(&kt, &jf, cfg.kernels.k_check)?,
            est1: est1_check(&v, &kt, tol.kernel_bound)?,
            est11: est11_check(&v, &kt, tol.kernel_bound, EST11_EXCLUSION)?,
        };
        let tag = if side == Side::Plus { "plus" } else { "minus" };
        let mut rows = Vec::new();
        for sl in &kt.slices {
            for (j, y) in kt.y_grid(sl).into_iter().enumerate() {
                rows.push(KernelRow { x: sl.x, y, b: sl.b.value(j), k: sl.k.value(j), d: sl.d.value(j) });
            }
        }
        art.csv(&format!("kernels_{tag}.csv"), rows)?;
        checks.push(Check::below(&format!("identity_{tag}"), s.identity_residual, tol.identity));
        checks.push(Check::below(&format!("imag_part_{tag}"), s.imag_residual, tol.kernel_imag));
        checks.push(Check::below(&format!("round_trip_{tag}"), s.round_trip, tol.round_trip));
        checks.push(Check::below(&format!("est1_excess_{tag}"), s.est1.max_excess, 0.0));
        checks.push(Check::below(&format!("est11_excess_{tag}"), s.est11.max_excess, 0.0));
        summary.push(s);
    }
    art.json("kernel_summary.json", &summary)?;
    Ok(checks)
}

#[derive(Serialize)]
struct WienerRow {
    quantity: &'static str,
    order: usize,
    constant_re: f64,
    constant_im: f64,
    hat_l1: f64,
    a1_norm: f64,
    tail_fraction: f64,
    converged: bool,
}

impl WienerRow {
    fn new(quantity: &'static str, order: usize, e: &WienerEstimate) -> Self {
        Self {
            quantity,
            order,
            constant_re: e.constant_part.re,
            constant_im: e.constant_part.im,
            hat_l1: e.hat_l1,
            a1_norm: e.a1_norm(),
            tail_fraction: e.tail_fraction,
            converged: e.converged,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VdcRow {
    pub case: &'static str,
    pub t: f64,
    pub integral_abs: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// Amplitudes with `𝒜₁`-norm one against the phase `-k²` on `[-10, 10]`.
pub fn vdc_battery(times: &[f64]) -> Result<Vec<VdcRow>> {
    type Amplitude = fn(f64) -> Complex64;
    let cases: [(&'static str, Amplitude); 3] = [
        ("constant", |_| Complex64::new(1.0, 0.0)),
        ("lorentzian", |k| Complex64::new(1.0 / (1.0 + k * k), 0.0)),
        ("gaussian", |k| Complex64::new((-k * k).exp(), 0.0)),
    ];
    let mut rows = Vec::new();
    for &t in times {
        for (case, f) in cases {
            let r = vdc_check(|k| -k * k, f, -10.0, 10.0, t, 1.0)?;
            rows.push(VdcRow { case, t, integral_abs: r.integral.norm(), bound: r.bound, ratio: r.ratio });
        }
    }
    Ok(rows)
}

fn cmd_wiener(cfg: &RunConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let v = cfg.potential.build()?;
    let rep = regularity_report(&v, cfg.wiener.max_order, &cfg.wiener.estimate, &cfg.jost)?;
    let mut rows = Vec::new();
    for (name, list) in [("T-1", &rep.t_minus_one), ("R+", &rep.r_plus), ("R-", &rep.r_minus)] {
        rows.extend(list.iter().enumerate().map(|(l, e)| WienerRow::new(name, l, e)));
    }
    rows.push(WienerRow::new("(T-T(0))/k", 0, &rep.t_quotient));
    rows.push(WienerRow::new("(R+-R+(0))/k", 0, &rep.r_plus_quotient));
    rows.push(WienerRow::new("(R--R-(0))/k", 0, &rep.r_minus_quotient));
    let unconverged = rows.iter().filter(|r| !r.converged).count();
    art.csv("wiener.csv", rows)?;
    art.json("wiener.json", &rep)?;
    let vdc = vdc_battery(&cfg.wiener.vdc_times)?;
    let worst = vdc.iter().map(|r| r.ratio).fold(0.0, f64::max);
    art.csv("vdc.csv", vdc)?;
    Ok(vec![
        Check::below("unconverged_estimates", unconverged as f64, 0.0),
        Check::below("vdc_ratio", worst, cfg.tolerances.vdc_ratio),
    ])
}

#[derive(Serialize)]
struct DecayRow {
    t: f64,
    weighted_norm: f64,
    x_max: f64,
    y_max: f64,
    error_at_max: f64,
    weighted_norm_without_p0: Option<f64>,
}

#[derive(Serialize)]
struct SliceRow {
    x: f64,
    y: f64,
    re_g: f64,
    im_g: f64,
    err: f64,
}

#[derive(Serialize)]
struct DecaySummary<'a> {
    with_p0_subtracted: &'a DecayReport,
    without_p0_subtracted: Option<&'a DecayReport>,
}

fn cmd_decay(cfg: &RunConfig, art: &mut Artifacts) -> Result<Vec<Check>> {
    let v = cfg.potential.build()?;
    let dc = &cfg.decay.experiment;
    let grid = dc.grid()?;
    let data = PropagatorData::new(&v, &grid, &dc.propagator, &cfg.jost)?;
    let slices = kernel_slices(&data, &grid, &dc.times()?, true)?;
    let (with, without) = decay_reports_from_slices(&data, dc, &slices)?;
    art.json("decay.json", &DecaySummary { with_p0_subtracted: &with, without_p0_subtracted: without.as_ref() })?;
    art.csv(
        "decay.csv",
        (0..with.times.len()).map(|i| DecayRow {
            t: with.times[i],
            weighted_norm: with.weighted_norms[i],
            x_max: with.maximisers[i].0,
            y_max: with.maximisers[i].1,
            error_at_max: with.errors_at_maximiser[i],
            weighted_norm_without_p0: without.as_ref().map(|w| w.weighted_norms[i]),
        }),
    )?;
    if cfg.decay.write_slices {
        for (i, s) in slices.iter().enumerate() {
            let rows = s.x_grid.iter().enumerate().flat_map(|(ix, &x)| {
                s.y_grid.iter().enumerate().map(move |(iy, &y)| {
                    let j = s.at(ix, iy);
                    SliceRow { x, y, re_g: s.g[j].re, im_g: s.g[j].im, err: s.quadrature_error[j] }
                })
            });
            art.csv(&format!("slice_{i:02}.csv"), rows)?;
        }
    }
    let tol = &cfg.tolerances;
    let worst_err = with.errors_at_maximiser.iter().zip(&with.weighted_norms).map(|(e, n)| e / n).fold(0.0, f64::max);
    Ok(vec![
        Check::below("decay_exponent_offset", (with.fitted_exponent - tol.decay_exponent).abs(), tol.decay_band),
        Check::below("relative_error_at_maximiser", worst_err, dc.error_fraction),
    ])
}
