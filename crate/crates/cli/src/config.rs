//! Sectioned `key = value` experiment configuration.
//!
//! ```text
//! # comment
//! [grid]
//! x_min = -60
//! x_max = 30
//! n_points = 4096
//! ```
//!
//! Parsing is two-phase: the text is split into sections (syntax errors carry
//! a line number), then each run kind pulls the sections it needs and checks
//! ranges before anything is computed.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

const SCHEMA: &[(&str, &[&str])] = &[
    ("grid", &["x_min", "x_max", "n_points"]),
    ("packet", &["kind", "x0", "sigma", "k0", "region"]),
    ("potential", &["kind", "mass", "omega", "center", "file"]),
    ("detector", &["boundary", "side"]),
    ("protocol", &["delta_t", "k_max", "projector_kind"]),
    ("propagator", &["method", "dt"]),
    (
        "run",
        &[
            "kind",
            "t_max",
            "sample_dt",
            "delta_t_list",
            "seed",
            "n_samples",
            "dim_min",
            "dim_max",
        ],
    ),
    ("output", &["directory", "formats"]),
];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default)]
struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

fn parse_raw(text: &str) -> Result<RawConfig> {
    let mut raw = RawConfig::default();
    let mut current: Option<String> = None;
    for (idx, full) in text.lines().enumerate() {
        let line = idx + 1;
        let content = full.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| CliError::parse(line, "unterminated section header"))?
                .trim();
            let Some((_, _)) = SCHEMA.iter().find(|(s, _)| *s == name) else {
                return Err(CliError::parse(line, format!("unknown section [{name}]")));
            };
            if raw.sections.contains_key(name) {
                return Err(CliError::parse(line, format!("duplicate section [{name}]")));
            }
            raw.sections.insert(name.to_string(), BTreeMap::new());
            current = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(CliError::parse(
                line,
                format!("expected `key = value`, found `{content}`"),
            ));
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(section) = current.as_deref() else {
            return Err(CliError::parse(line, format!("key `{key}` outside any section")));
        };
        let allowed = SCHEMA
            .iter()
            .find(|(s, _)| *s == section)
            .map(|(_, k)| *k)
            .unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(CliError::parse(line, format!("unknown key `{key}` in [{section}]")));
        }
        if value.is_empty() {
            return Err(CliError::parse(line, format!("empty value for {section}.{key}")));
        }
        let entries = raw.sections.get_mut(section).expect("section inserted above");
        if entries.contains_key(key) {
            return Err(CliError::parse(line, format!("duplicate key {section}.{key}")));
        }
        entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
            },
        );
    }
    Ok(raw)
}

/// Typed view of one raw section.
struct Fields<'a> {
    name: &'static str,
    entries: Option<&'a BTreeMap<String, Entry>>,
}

impl Fields<'_> {
    fn field(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.and_then(|e| e.get(key))
    }

    fn text(&self, key: &str) -> Option<&str> {
        self.entry(key).map(|e| e.value.as_str())
    }

    fn required<T>(&self, key: &str, value: Option<T>) -> Result<T> {
        value.ok_or_else(|| CliError::validation(self.field(key), "is required"))
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.entry(key).map(|e| parse_f64(e, &self.field(key))).transpose()
    }

    fn req_f64(&self, key: &str) -> Result<f64> {
        let v = self.f64(key)?;
        self.required(key, v)
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.entry(key)
            .map(|e| {
                e.value.parse::<usize>().map_err(|_| {
                    CliError::parse(
                        e.line,
                        format!("expected a non-negative integer for {}", self.field(key)),
                    )
                })
            })
            .transpose()
    }

    fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.entry(key)
            .map(|e| {
                e.value.parse::<u64>().map_err(|_| {
                    CliError::parse(
                        e.line,
                        format!("expected a non-negative integer for {}", self.field(key)),
                    )
                })
            })
            .transpose()
    }

    fn list_f64(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.entry(key) else {
            return Ok(None);
        };
        e.value
            .split(',')
            .map(|part| {
                parse_f64(
                    &Entry {
                        value: part.trim().to_string(),
                        line: e.line,
                    },
                    &self.field(key),
                )
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)]) -> Result<Option<T>> {
        let Some(e) = self.entry(key) else {
            return Ok(None);
        };
        options
            .iter()
            .find(|(name, _)| *name == e.value)
            .map(|(_, v)| Some(*v))
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                CliError::validation(self.field(key), format!("must be one of {}", names.join(", ")))
            })
    }
}

fn parse_f64(e: &Entry, field: &str) -> Result<f64> {
    match e.value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::parse(
            e.line,
            format!("expected a finite number for {field}, found `{}`", e.value),
        )),
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::validation(field, "must be > 0"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Protocol,
    Arrival,
    ZenoScan,
    Gambler,
    FiniteDim,
    GammaCheck,
}

impl RunKind {
    pub const ALL: [(&'static str, RunKind); 6] = [
        ("protocol", RunKind::Protocol),
        ("arrival", RunKind::Arrival),
        ("zeno_scan", RunKind::ZenoScan),
        ("gambler", RunKind::Gambler),
        ("finite_dim", RunKind::FiniteDim),
        ("gamma_check", RunKind::GammaCheck),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, k)| *k == self).map(|(n, _)| *n).unwrap()
    }

    fn required_sections(self) -> &'static [&'static str] {
        match self {
            RunKind::Protocol | RunKind::Gambler => &["grid", "packet", "protocol"],
            RunKind::Arrival | RunKind::GammaCheck => &["grid", "packet", "detector"],
            RunKind::ZenoScan => &["grid", "packet"],
            RunKind::FiniteDim => &[],
        }
    }
}

impl fmt::Display for RunKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    Gaussian,
    Truncated,
}

/// Gaussian `(x0, sigma, k0)`; `truncated` clips it to `region`, or to the
/// detector's no-click region when `region` is absent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketConfig {
    pub kind: PacketKind,
    pub x0: f64,
    pub sigma: f64,
    pub k0: f64,
    pub region: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    Free,
    /// `m omega^2 (x - center)^2 / 2`
    Harmonic {
        omega: f64,
        center: f64,
    },
    /// Two-column `x, V` file, linearly interpolated onto the grid.
    Tabulated {
        file: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorSide {
    LeftOf,
    RightOf,
}

/// The no-click region: `x < boundary` (`left_of`) or `x > boundary`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub boundary: f64,
    pub side: DetectorSide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectorKind {
    Spatial,
    RankOne,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolSection {
    pub delta_t: f64,
    pub k_max: usize,
    pub projector_kind: ProjectorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSection {
    pub method: String,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub kind: RunKind,
    pub t_max: f64,
    pub sample_dt: f64,
    pub delta_t_list: Vec<f64>,
    pub seed: u64,
    pub n_samples: usize,
    pub dim_min: usize,
    pub dim_max: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub csv: bool,
    pub json: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid: Option<GridConfig>,
    pub packet: Option<PacketConfig>,
    pub potential: PotentialConfig,
    pub detector: Option<DetectorConfig>,
    pub protocol: Option<ProtocolSection>,
    pub propagator: PropagatorSection,
    pub run: RunSection,
    pub output: OutputSection,
    /// Directory relative paths in the config resolve against.
    pub base_dir: PathBuf,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_at(text, Path::new("."))
}

/// Parses and validates; relative paths resolve against `base_dir`.
pub fn parse_config_at(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
    let raw = parse_raw(text)?;
    let section = |name: &'static str| Fields {
        name,
        entries: raw.sections.get(name),
    };

    let run_fields = section("run");
    if run_fields.entries.is_none() {
        return Err(CliError::validation("run", "section is required"));
    }
    let kind = run_fields.required("kind", run_fields.choice("kind", &RunKind::ALL)?)?;
    for name in kind.required_sections() {
        if !raw.sections.contains_key(*name) {
            return Err(CliError::validation(
                *name,
                format!("section required for run kind {kind}"),
            ));
        }
    }
    let needs_detector = match kind {
        RunKind::Arrival | RunKind::GammaCheck => true,
        RunKind::FiniteDim => false,
        _ => {
            let p = section("protocol").choice("projector_kind", PROJECTORS)?;
            p.unwrap_or(ProjectorKind::Spatial) == ProjectorKind::Spatial
        }
    };
    if needs_detector && !raw.sections.contains_key("detector") {
        return Err(CliError::validation(
            "detector",
            format!("section required for run kind {kind}"),
        ));
    }

    let grid = raw
        .sections
        .contains_key("grid")
        .then(|| grid(&section("grid")))
        .transpose()?;
    let packet = raw
        .sections
        .contains_key("packet")
        .then(|| packet(&section("packet")))
        .transpose()?;
    let potential = potential(&section("potential"), base_dir)?;
    let detector = raw
        .sections
        .contains_key("detector")
        .then(|| detector(&section("detector")))
        .transpose()?;
    let run = run(&run_fields, kind)?;
    let protocol = raw
        .sections
        .contains_key("protocol")
        .then(|| protocol(&section("protocol"), &run))
        .transpose()?;
    let propagator = propagator(&section("propagator"), kind)?;
    let output = output(&section("output"))?;

    let config = ExperimentConfig {
        grid,
        packet,
        potential,
        detector,
        protocol,
        propagator,
        run,
        output,
        base_dir: base_dir.to_path_buf(),
    };
    cross_check(&config)?;
    Ok(config)
}

const PROJECTORS: &[(&str, ProjectorKind)] = &[
    ("spatial", ProjectorKind::Spatial),
    ("rank_one", ProjectorKind::RankOne),
    ("identity", ProjectorKind::Identity),
];

fn grid(f: &Fields) -> Result<GridConfig> {
    let g = GridConfig {
        x_min: f.req_f64("x_min")?,
        x_max: f.req_f64("x_max")?,
        n_points: f.required("n_points", f.usize("n_points")?)?,
    };
    if g.x_max <= g.x_min {
        return Err(CliError::validation("grid.x_max", "must be > grid.x_min"));
    }
    if g.n_points < 16 {
        return Err(CliError::validation("grid.n_points", "must be >= 16"));
    }
    Ok(g)
}

fn packet(f: &Fields) -> Result<PacketConfig> {
    let kind = f
        .choice(
            "kind",
            &[("gaussian", PacketKind::Gaussian), ("truncated", PacketKind::Truncated)],
        )?
        .unwrap_or(PacketKind::Gaussian);
    let region = match f.list_f64("region")? {
        None => None,
        Some(v) if v.len() == 2 && v[0] < v[1] => Some((v[0], v[1])),
        Some(_) => return Err(CliError::validation("packet.region", "must be `a, b` with a < b")),
    };
    if region.is_some() && kind != PacketKind::Truncated {
        return Err(CliError::validation(
            "packet.region",
            "only applies to kind = truncated",
        ));
    }
    Ok(PacketConfig {
        kind,
        x0: f.req_f64("x0")?,
        sigma: positive("packet.sigma", f.req_f64("sigma")?)?,
        k0: f.f64("k0")?.unwrap_or(0.0),
        region,
    })
}

fn potential(f: &Fields, base_dir: &Path) -> Result<PotentialConfig> {
    let mass = positive("potential.mass", f.f64("mass")?.unwrap_or(1.0))?;
    let kind = match f.text("kind").unwrap_or("free") {
        "free" => PotentialKind::Free,
        "harmonic" => PotentialKind::Harmonic {
            omega: positive("potential.omega", f.req_f64("omega")?)?,
            center: f.f64("center")?.unwrap_or(0.0),
        },
        "tabulated" => PotentialKind::Tabulated {
            file: base_dir.join(f.required("file", f.text("file"))?),
        },
        _ => {
            return Err(CliError::validation(
                "potential.kind",
                "must be one of free, harmonic, tabulated",
            ))
        }
    };
    Ok(PotentialConfig { kind, mass })
}

fn detector(f: &Fields) -> Result<DetectorConfig> {
    Ok(DetectorConfig {
        boundary: f.req_f64("boundary")?,
        side: f
            .choice(
                "side",
                &[("left_of", DetectorSide::LeftOf), ("right_of", DetectorSide::RightOf)],
            )?
            .unwrap_or(DetectorSide::LeftOf),
    })
}

fn protocol(f: &Fields, run: &RunSection) -> Result<ProtocolSection> {
    let delta_t = positive("protocol.delta_t", f.req_f64("delta_t")?)?;
    let k_max = match f.usize("k_max")? {
        Some(k) => k,
        None if run.t_max > 0.0 => (run.t_max / delta_t).round() as usize,
        None => {
            return Err(CliError::validation(
                "protocol.k_max",
                "is required when run.t_max is absent",
            ))
        }
    };
    if k_max == 0 {
        return Err(CliError::validation("protocol.k_max", "must be >= 1"));
    }
    Ok(ProtocolSection {
        delta_t,
        k_max,
        projector_kind: f
            .choice("projector_kind", PROJECTORS)?
            .unwrap_or(ProjectorKind::Spatial),
    })
}

fn propagator(f: &Fields, kind: RunKind) -> Result<PropagatorSection> {
    let default = if kind == RunKind::Arrival {
        "crank_nicolson"
    } else {
        "spectral"
    };
    let method = f.text("method").unwrap_or(default).to_string();
    if !["spectral", "crank_nicolson"].contains(&method.as_str()) {
        return Err(CliError::validation(
            "propagator.method",
            "must be one of spectral, crank_nicolson",
        ));
    }
    Ok(PropagatorSection {
        method,
        dt: positive("propagator.dt", f.f64("dt")?.unwrap_or(0.01))?,
    })
}

fn run(f: &Fields, kind: RunKind) -> Result<RunSection> {
    let t_max = f.f64("t_max")?;
    let needs_t = matches!(kind, RunKind::Arrival | RunKind::ZenoScan | RunKind::Gambler);
    let t_max = match t_max {
        Some(t) => positive("run.t_max", t)?,
        None if needs_t => return Err(CliError::validation("run.t_max", "is required")),
        None => 0.0,
    };
    let delta_t_list = f.list_f64("delta_t_list")?.unwrap_or_default();
    if kind == RunKind::ZenoScan && delta_t_list.is_empty() {
        return Err(CliError::validation("run.delta_t_list", "is required"));
    }
    if delta_t_list.iter().any(|&d| d <= 0.0) {
        return Err(CliError::validation("run.delta_t_list", "entries must be > 0"));
    }
    let default_samples = if kind == RunKind::FiniteDim { 1000 } else { 0 };
    let r = RunSection {
        kind,
        t_max,
        sample_dt: positive("run.sample_dt", f.f64("sample_dt")?.unwrap_or(0.01))?,
        delta_t_list,
        seed: f.u64("seed")?.unwrap_or(0),
        n_samples: f.usize("n_samples")?.unwrap_or(default_samples),
        dim_min: f.usize("dim_min")?.unwrap_or(2),
        dim_max: f.usize("dim_max")?.unwrap_or(8),
    };
    if r.dim_min < 2 {
        return Err(CliError::validation("run.dim_min", "must be >= 2"));
    }
    if r.dim_max < r.dim_min {
        return Err(CliError::validation("run.dim_max", "must be >= run.dim_min"));
    }
    if kind == RunKind::FiniteDim && r.n_samples == 0 {
        return Err(CliError::validation("run.n_samples", "must be >= 1"));
    }
    Ok(r)
}

fn output(f: &Fields) -> Result<OutputSection> {
    let directory = PathBuf::from(f.text("directory").unwrap_or("out"));
    let (mut csv, mut json) = (true, false);
    if let Some(list) = f.text("formats") {
        (csv, json) = (false, false);
        for fmt in list.split(',').map(str::trim) {
            match fmt {
                "csv" => csv = true,
                "json" => json = true,
                _ => return Err(CliError::validation("output.formats", "entries must be csv or json")),
            }
        }
    }
    Ok(OutputSection { directory, csv, json })
}

fn cross_check(c: &ExperimentConfig) -> Result<()> {
    if let Some(g) = &c.grid {
        if c.propagator.method == "spectral" && !g.n_points.is_power_of_two() {
            return Err(CliError::validation(
                "grid.n_points",
                "must be a power of two for the spectral propagator",
            ));
        }
        let inside = |x: f64| x > g.x_min && x < g.x_max;
        if let Some(d) = &c.detector {
            if !inside(d.boundary) {
                return Err(CliError::validation("detector.boundary", "must lie inside the grid"));
            }
        }
        if let Some(p) = &c.packet {
            if !inside(p.x0) {
                return Err(CliError::validation("packet.x0", "must lie inside the grid"));
            }
            if p.kind == PacketKind::Truncated && p.region.is_none() && c.detector.is_none() {
                return Err(CliError::validation(
                    "packet.region",
                    "is required without a [detector] section",
                ));
            }
        }
    }
    Ok(())
}

impl ExperimentConfig {
    /// Every setting in effect, defaults included, as `section -> key -> value`.
    pub fn echo(&self) -> BTreeMap<String, BTreeMap<String, String>> {
        let mut out: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut put = |s: &str, k: &str, v: String| {
            out.entry(s.to_string()).or_default().insert(k.to_string(), v);
        };
        if let Some(g) = &self.grid {
            put("grid", "x_min", g.x_min.to_string());
            put("grid", "x_max", g.x_max.to_string());
            put("grid", "n_points", g.n_points.to_string());
        }
        if let Some(p) = &self.packet {
            let kind = match p.kind {
                PacketKind::Gaussian => "gaussian",
                PacketKind::Truncated => "truncated",
            };
            put("packet", "kind", kind.into());
            put("packet", "x0", p.x0.to_string());
            put("packet", "sigma", p.sigma.to_string());
            put("packet", "k0", p.k0.to_string());
            if let Some((a, b)) = p.region {
                put("packet", "region", format!("{a}, {b}"));
            }
        }
        put("potential", "mass", self.potential.mass.to_string());
        match &self.potential.kind {
            PotentialKind::Free => put("potential", "kind", "free".into()),
            PotentialKind::Harmonic { omega, center } => {
                put("potential", "kind", "harmonic".into());
                put("potential", "omega", omega.to_string());
                put("potential", "center", center.to_string());
            }
            PotentialKind::Tabulated { file } => {
                put("potential", "kind", "tabulated".into());
                put("potential", "file", file.display().to_string());
            }
        }
        if let Some(d) = &self.detector {
            put("detector", "boundary", d.boundary.to_string());
            let side = match d.side {
                DetectorSide::LeftOf => "left_of",
                DetectorSide::RightOf => "right_of",
            };
            put("detector", "side", side.into());
        }
        if let Some(p) = &self.protocol {
            put("protocol", "delta_t", p.delta_t.to_string());
            put("protocol", "k_max", p.k_max.to_string());
            let name = PROJECTORS.iter().find(|(_, k)| *k == p.projector_kind).unwrap().0;
            put("protocol", "projector_kind", name.into());
        }
        put("propagator", "method", self.propagator.method.clone());
        put("propagator", "dt", self.propagator.dt.to_string());
        let r = &self.run;
        put("run", "kind", r.kind.name().into());
        put("run", "t_max", r.t_max.to_string());
        put("run", "sample_dt", r.sample_dt.to_string());
        if !r.delta_t_list.is_empty() {
            let list: Vec<String> = r.delta_t_list.iter().map(f64::to_string).collect();
            put("run", "delta_t_list", list.join(", "));
        }
        put("run", "seed", r.seed.to_string());
        put("run", "n_samples", r.n_samples.to_string());
        put("run", "dim_min", r.dim_min.to_string());
        put("run", "dim_max", r.dim_max.to_string());
        put("output", "directory", self.output.directory.display().to_string());
        let formats: Vec<&str> = [(self.output.csv, "csv"), (self.output.json, "json")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| *n)
            .collect();
        put("output", "formats", formats.join(", "));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ARRIVAL: &str = "
        [grid]
        x_min = -60
        x_max = 30
        n_points = 4096   # power of two
        [packet]
        x0 = -20
        sigma = 2
        k0 = 2
        [detector]
        boundary = 0
        [run]
        kind = arrival
        t_max = 20
    ";

    #[test]
    fn minimal_arrival_config_gets_defaults() {
        let c = parse_config(ARRIVAL).unwrap();
        assert_eq!(c.run.kind, RunKind::Arrival);
        assert_eq!(c.propagator.method, "crank_nicolson");
        assert_eq!(c.propagator.dt, 0.01);
        assert_eq!(c.run.sample_dt, 0.01);
        assert_eq!(c.detector.unwrap().side, DetectorSide::LeftOf);
        assert_eq!(
            c.potential,
            PotentialConfig {
                kind: PotentialKind::Free,
                mass: 1.0
            }
        );
        assert!(c.output.csv && !c.output.json);
    }

    #[test]
    fn negative_delta_t_is_a_validation_error() {
        let text = "[grid]\nx_min=-10\nx_max=10\nn_points=64\n[packet]\nx0=-3\nsigma=1\n[detector]\nboundary=0\n\
                    [protocol]\ndelta_t = -0.1\nk_max = 5\n[run]\nkind = protocol\n";
        match parse_config(text) {
            Err(CliError::Validation { field, constraint }) => {
                assert_eq!(field, "protocol.delta_t");
                assert_eq!(constraint, "must be > 0");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_grid_for_arrival() {
        let text = ARRIVAL
            .replace("[grid]", "")
            .replace("x_min = -60", "")
            .replace("x_max = 30", "");
        let text = text.replace("n_points = 4096   # power of two", "");
        match parse_config(&text) {
            Err(CliError::Validation { field, .. }) => assert_eq!(field, "grid"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let cases = [
            ("[grid\n", 1),
            ("[grid]\nx_min -1\n", 2),
            ("x_min = 1\n", 1),
            ("[grid]\n\n# c\nbogus = 1\n", 4),
            ("[nowhere]\n", 1),
            ("[grid]\nx_min = 1\nx_min = 2\n", 3),
            ("[grid]\nx_min = abc\nx_max=1\nn_points=16\n[run]\nkind=finite_dim\n", 2),
        ];
        for (text, line) in cases {
            match parse_config(text) {
                Err(CliError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn spectral_needs_power_of_two() {
        let text = ARRIVAL
            .replace("4096", "1000")
            .replace("[run]", "[propagator]\nmethod = spectral\n[run]");
        assert!(matches!(parse_config(&text), Err(CliError::Validation { field, .. }) if field == "grid.n_points"));
        let cn = ARRIVAL.replace("4096", "1000");
        assert!(parse_config(&cn).is_ok());
    }

    #[test]
    fn finite_dim_needs_only_run() {
        let c = parse_config("[run]\nkind = finite_dim\nseed = 7\n").unwrap();
        assert_eq!(
            (c.run.n_samples, c.run.dim_min, c.run.dim_max, c.run.seed),
            (1000, 2, 8, 7)
        );
    }

    #[test]
    fn echo_round_trips() {
        let c = parse_config(ARRIVAL).unwrap();
        let text: String = c
            .echo()
            .iter()
            .map(|(s, kv)| {
                let body: String = kv.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
                format!("[{s}]\n{body}")
            })
            .collect();
        assert_eq!(parse_config(&text).unwrap(), c);
    }
}
