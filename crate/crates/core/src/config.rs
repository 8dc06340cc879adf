//! Run specifications in a sectioned `key = value` format:
//!
//! ```text
//! [domain]
//! dim = 2
//! lengths = 1, 1
//! counts = 64, 64
//!
//! [model]
//! preset = typical
//! variant = full
//! d1 = 0.1
//! d2 = 0.1
//! d3 = 0.1
//!
//! [run]
//! t_end = 500
//! initial = random
//! seed = 7
//!
//! [output]
//! dir = out
//!
//! [sweep]
//! model.J = 2.5 | 3.0 | 3.281
//! ```
//!
//! `#` starts a comment. Unknown sections and keys are errors. `[model]` and
//! `[run]` are required.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{HrError, Result};
use crate::grid::{make_grid, Domain};
use crate::integrate::{Scheme, SolverConfig};
use crate::model::{HrParameters, Variant};

const SECTIONS: [&str; 5] = ["domain", "model", "run", "output", "sweep"];

fn known_keys(section: &str) -> &'static [&'static str] {
    match section {
        "domain" => &["dim", "lengths", "counts"],
        "model" => &[
            "preset", "variant", "d1", "d2", "d3", "a", "b", "alpha", "beta", "q", "r", "c", "J", "J_file",
        ],
        "run" => &[
            "t_end",
            "dt",
            "scheme",
            "linear_tol",
            "monitor_every",
            "snapshot_every",
            "probe",
            "probe_every",
            "slack",
            "initial",
            "initial_value",
            "initial_range",
            "initial_files",
            "seed",
        ],
        "output" => &["dir"],
        _ => &[],
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub counts: Vec<usize>,
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain> {
        make_grid(self.dim, &self.lengths, &self.counts)
    }
}

/// Reaction coefficients and diffusion as written in the config; a
/// field-valued current is referenced by file.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub variant: Variant,
    pub diffusion: [f64; 3],
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
    pub r: f64,
    pub c: f64,
    pub j: f64,
    /// `HRFIELD` snapshot holding `J(x)`; overrides `j` when set.
    pub j_file: Option<PathBuf>,
}

impl ModelSpec {
    /// Parameters with a constant current; field currents are loaded by the
    /// caller, which knows where relative paths point.
    pub fn parameters(&self) -> HrParameters {
        let mut p = HrParameters::typical(self.diffusion);
        p.a = self.a;
        p.b = self.b;
        p.alpha = self.alpha;
        p.beta = self.beta;
        p.q = self.q;
        p.r = self.r;
        p.c = self.c;
        p.current = crate::model::Current::Constant(self.j);
        p
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    Constant([f64; 3]),
    /// Independent uniform values per cell and component.
    Random { lo: f64, hi: f64, seed: u64 },
    /// One `HRFIELD` snapshot per component, in `u, v, w` order.
    Files([PathBuf; 3]),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub domain: DomainSpec,
    pub model: ModelSpec,
    pub solver: SolverConfig,
    pub initial: InitialCondition,
    /// Relative slack on the envelope bound used by `verify`.
    pub slack: f64,
    pub output_dir: PathBuf,
    /// `section.key` with its alternative values, in file order.
    pub sweep: Vec<(String, Vec<String>)>,
}

/// Parsed but uninterpreted config: section -> key -> (value, line).
#[derive(Clone, Debug, Default)]
struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
    sweep_order: Vec<String>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        let mut current: Option<String> = None;
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| HrError::config(lineno, "unterminated section header"))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(HrError::config(lineno, format!("unknown section [{name}]")));
                }
                if raw.sections.contains_key(name) {
                    return Err(HrError::config(lineno, format!("section [{name}] appears twice")));
                }
                raw.sections.insert(name.to_string(), BTreeMap::new());
                current = Some(name.to_string());
                continue;
            }
            let section = current
                .as_deref()
                .ok_or_else(|| HrError::config(lineno, "key outside of any section"))?;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HrError::config(lineno, format!("expected key = value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            raw.insert(section, key, value, lineno)?;
        }
        Ok(raw)
    }

    fn insert(&mut self, section: &str, key: &str, value: &str, line: usize) -> Result<()> {
        if section == "sweep" {
            check_sweep_key(key, line)?;
            self.sweep_order.push(key.to_string());
        } else if !known_keys(section).contains(&key) {
            return Err(HrError::config(line, format!("unknown key `{key}` in [{section}]")));
        }
        let entries = self.sections.entry(section.to_string()).or_default();
        if entries.insert(key.to_string(), (value.to_string(), line)).is_some() {
            return Err(HrError::config(line, format!("duplicate key `{key}` in [{section}]")));
        }
        Ok(())
    }

    /// Replaces or adds `section.key = value`.
    fn set(&mut self, path: &str, value: &str) -> Result<()> {
        let (section, key) = path
            .split_once('.')
            .ok_or_else(|| HrError::config(0, format!("override `{path}` must be section.key")))?;
        if !SECTIONS.contains(&section) || section == "sweep" {
            return Err(HrError::config(0, format!("cannot override section `{section}`")));
        }
        if !known_keys(section).contains(&key) {
            return Err(HrError::config(0, format!("unknown key `{key}` in [{section}]")));
        }
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), (value.to_string(), 0));
        Ok(())
    }

    fn section(&self, name: &str) -> Option<&BTreeMap<String, (String, usize)>> {
        self.sections.get(name)
    }

    fn get(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.section(section)?.get(key).map(|(v, l)| (v.as_str(), *l))
    }
}

fn check_sweep_key(key: &str, line: usize) -> Result<()> {
    match key.split_once('.') {
        Some((s, k)) if s != "sweep" && SECTIONS.contains(&s) && known_keys(s).contains(&k) => Ok(()),
        _ => Err(HrError::config(line, format!("sweep key `{key}` is not a known section.key"))),
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| HrError::config(line, format!("`{key}`: cannot parse `{value}`")))
}

fn parse_list<T: std::str::FromStr>(value: &str, key: &str, line: usize) -> Result<Vec<T>> {
    value.split(',').map(|s| parse_num(s.trim(), key, line)).collect()
}

fn parse_triple(value: &str, key: &str, line: usize) -> Result<[f64; 3]> {
    let v: Vec<f64> = parse_list(value, key, line)?;
    v.try_into()
        .map_err(|_| HrError::config(line, format!("`{key}` needs three values")))
}

struct Reader<'a> {
    raw: &'a RawConfig,
    section: &'static str,
}

impl Reader<'_> {
    fn str(&self, key: &str) -> Option<(&str, usize)> {
        self.raw.get(self.section, key)
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.str(key).map(|(v, l)| parse_num(v, key, l)).transpose()
    }

    fn num_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.num(key)?.unwrap_or(default))
    }

    fn required<T: std::str::FromStr>(&self, key: &str, fallback: Option<T>) -> Result<T> {
        match (self.num(key)?, fallback) {
            (Some(v), _) | (None, Some(v)) => Ok(v),
            (None, None) => Err(HrError::config(0, format!("[{}] is missing `{key}`", self.section))),
        }
    }

    fn line(&self, key: &str) -> usize {
        self.str(key).map_or(0, |(_, l)| l)
    }
}

fn build_domain(raw: &RawConfig) -> Result<DomainSpec> {
    let rd = Reader { raw, section: "domain" };
    let dim: usize = rd.num_or("dim", 1)?;
    let lengths = match rd.str("lengths") {
        Some((v, l)) => parse_list(v, "lengths", l)?,
        None => vec![1.0; dim],
    };
    let counts = match rd.str("counts") {
        Some((v, l)) => parse_list(v, "counts", l)?,
        None => vec![2; dim],
    };
    let spec = DomainSpec { dim, lengths, counts };
    spec.build()
        .map_err(|e| HrError::config(rd.line("counts").max(rd.line("dim")), e.to_string()))?;
    Ok(spec)
}

fn build_model(raw: &RawConfig) -> Result<ModelSpec> {
    if raw.section("model").is_none() {
        return Err(HrError::config(0, "missing required section [model]"));
    }
    let rd = Reader { raw, section: "model" };
    let typical = match rd.str("preset") {
        None | Some(("none", _)) => None,
        Some(("typical", _)) => Some(HrParameters::typical([0.0; 3])),
        Some((other, l)) => return Err(HrError::config(l, format!("unknown preset `{other}`"))),
    };
    let t = typical.as_ref();
    let diffusion = [rd.num_or("d1", 0.0)?, rd.num_or("d2", 0.0)?, rd.num_or("d3", 0.0)?];
    let derived = Variant::from_diffusion(diffusion);
    let variant = match (rd.str("variant"), derived) {
        (Some((label, l)), derived) => {
            let v = Variant::from_label(label)
                .ok_or_else(|| HrError::config(l, format!("unknown variant `{label}`")))?;
            if derived != Some(v) {
                return Err(HrError::config(
                    l,
                    format!("variant {v} is inconsistent with d = ({}, {}, {})", diffusion[0], diffusion[1], diffusion[2]),
                ));
            }
            v
        }
        (None, Some(v)) => v,
        (None, None) => {
            return Err(HrError::config(
                rd.line("d1").max(rd.line("d2")).max(rd.line("d3")),
                "diffusion pattern matches no variant (need d1 > 0 whenever d2 or d3 > 0, and d2 > 0 whenever d3 > 0)",
            ))
        }
    };
    let j_const = t.map(|p| p.current.sup());
    let spec = ModelSpec {
        variant,
        diffusion,
        a: rd.required("a", t.map(|p| p.a))?,
        b: rd.required("b", t.map(|p| p.b))?,
        alpha: rd.required("alpha", t.map(|p| p.alpha))?,
        beta: rd.required("beta", t.map(|p| p.beta))?,
        q: rd.required("q", t.map(|p| p.q))?,
        r: rd.required("r", t.map(|p| p.r))?,
        c: rd.required("c", t.map(|p| p.c))?,
        j: rd.required("J", j_const)?,
        j_file: rd.str("J_file").map(|(v, _)| PathBuf::from(v)),
    };
    spec.parameters()
        .validate_structure(None)
        .map_err(|e| HrError::config(0, e.to_string()))?;
    Ok(spec)
}

fn build_run(raw: &RawConfig) -> Result<(SolverConfig, InitialCondition, f64)> {
    if raw.section("run").is_none() {
        return Err(HrError::config(0, "missing required section [run]"));
    }
    let rd = Reader { raw, section: "run" };
    let defaults = SolverConfig::default();
    let scheme = match rd.str("scheme") {
        None => defaults.scheme,
        Some((s, l)) => Scheme::from_label(s).ok_or_else(|| HrError::config(l, format!("unknown scheme `{s}`")))?,
    };
    let solver = SolverConfig {
        dt: rd.num_or("dt", defaults.dt)?,
        t_end: rd.required("t_end", None)?,
        scheme,
        linear_tol: rd.num_or("linear_tol", defaults.linear_tol)?,
        monitor_every: rd.num_or("monitor_every", defaults.monitor_every)?,
        snapshot_every: rd.num("snapshot_every")?,
        probe: rd.num("probe")?,
        probe_every: rd.num_or("probe_every", defaults.probe_every)?,
    };
    solver.validate().map_err(|e| HrError::config(0, e.to_string()))?;

    let kind = rd.str("initial").map_or("random", |(v, _)| v);
    let allowed: &[&str] = match kind {
        "constant" => &["initial_value"],
        "random" => &["initial_range", "seed"],
        "file" => &["initial_files"],
        other => return Err(HrError::config(rd.line("initial"), format!("unknown initial condition `{other}`"))),
    };
    for key in ["initial_value", "initial_range", "seed", "initial_files"] {
        if rd.str(key).is_some() && !allowed.contains(&key) {
            return Err(HrError::config(rd.line(key), format!("`{key}` does not apply to initial = {kind}")));
        }
    }
    let initial = match kind {
        "constant" => {
            let (v, l) = rd
                .str("initial_value")
                .ok_or_else(|| HrError::config(rd.line("initial"), "initial = constant needs initial_value"))?;
            InitialCondition::Constant(parse_triple(v, "initial_value", l)?)
        }
        "random" => {
            let (lo, hi) = match rd.str("initial_range") {
                Some((v, l)) => {
                    let r: Vec<f64> = parse_list(v, "initial_range", l)?;
                    match r[..] {
                        [lo, hi] if lo.is_finite() && hi.is_finite() && lo <= hi => (lo, hi),
                        _ => return Err(HrError::config(l, "initial_range needs lo, hi with lo <= hi")),
                    }
                }
                None => (-1.0, 1.0),
            };
            InitialCondition::Random {
                lo,
                hi,
                seed: rd.num_or("seed", 0)?,
            }
        }
        _ => {
            let (v, l) = rd
                .str("initial_files")
                .ok_or_else(|| HrError::config(rd.line("initial"), "initial = file needs initial_files"))?;
            let files: Vec<PathBuf> = v.split(',').map(|s| PathBuf::from(s.trim())).collect();
            InitialCondition::Files(
                files
                    .try_into()
                    .map_err(|_| HrError::config(l, "initial_files needs three paths (u, v, w)"))?,
            )
        }
    };
    let slack: f64 = rd.num_or("slack", 0.05)?;
    if !(slack.is_finite() && slack >= 0.0) {
        return Err(HrError::config(rd.line("slack"), "slack must be >= 0"));
    }
    Ok((solver, initial, slack))
}

fn build(raw: &RawConfig) -> Result<RunSpec> {
    let domain = build_domain(raw)?;
    let model = build_model(raw)?;
    let (solver, initial, slack) = build_run(raw)?;
    if let Some(cell) = solver.probe {
        let n: usize = domain.counts.iter().product();
        if cell >= n {
            return Err(HrError::config(0, format!("probe cell {cell} outside the {n}-cell domain")));
        }
    }
    let output_dir = raw
        .get("output", "dir")
        .map_or_else(|| PathBuf::from("out"), |(v, _)| PathBuf::from(v));
    let sweep = raw
        .sweep_order
        .iter()
        .map(|key| {
            let (v, _) = raw.get("sweep", key).expect("sweep key recorded");
            (key.clone(), v.split('|').map(|s| s.trim().to_string()).collect())
        })
        .collect();
    Ok(RunSpec {
        domain,
        model,
        solver,
        initial,
        slack,
        output_dir,
        sweep,
    })
}

pub fn parse_config(text: &str) -> Result<RunSpec> {
    parse_config_with_overrides(text, &[])
}

/// Applies `(section.key, value)` overrides before interpretation, so they
/// take part in every consistency check.
pub fn parse_config_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<RunSpec> {
    let mut raw = RawConfig::parse(text)?;
    for (key, value) in overrides {
        raw.set(key, value)?;
    }
    build(&raw)
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl RunSpec {
    /// Writes every value explicitly; reparsing yields an equal spec.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let d = &self.domain;
        let _ = writeln!(s, "[domain]\ndim = {}\nlengths = {}\ncounts = {}\n", d.dim, join(&d.lengths), join(&d.counts));
        let m = &self.model;
        let _ = writeln!(s, "[model]\nvariant = {}", m.variant);
        for (k, v) in [
            ("d1", m.diffusion[0]),
            ("d2", m.diffusion[1]),
            ("d3", m.diffusion[2]),
            ("a", m.a),
            ("b", m.b),
            ("alpha", m.alpha),
            ("beta", m.beta),
            ("q", m.q),
            ("r", m.r),
            ("c", m.c),
            ("J", m.j),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        if let Some(f) = &m.j_file {
            let _ = writeln!(s, "J_file = {}", f.display());
        }
        let r = &self.solver;
        let _ = writeln!(
            s,
            "\n[run]\nt_end = {}\ndt = {}\nscheme = {}\nlinear_tol = {}\nmonitor_every = {}\nprobe_every = {}\nslack = {}",
            r.t_end,
            r.dt,
            r.scheme.label(),
            r.linear_tol,
            r.monitor_every,
            r.probe_every,
            self.slack
        );
        if let Some(k) = r.snapshot_every {
            let _ = writeln!(s, "snapshot_every = {k}");
        }
        if let Some(k) = r.probe {
            let _ = writeln!(s, "probe = {k}");
        }
        match &self.initial {
            InitialCondition::Constant(v) => {
                let _ = writeln!(s, "initial = constant\ninitial_value = {}", join(v));
            }
            InitialCondition::Random { lo, hi, seed } => {
                let _ = writeln!(s, "initial = random\ninitial_range = {lo}, {hi}\nseed = {seed}");
            }
            InitialCondition::Files(files) => {
                let names: Vec<String> = files.iter().map(|f| f.display().to_string()).collect();
                let _ = writeln!(s, "initial = file\ninitial_files = {}", names.join(", "));
            }
        }
        let _ = writeln!(s, "\n[output]\ndir = {}", self.output_dir.display());
        if !self.sweep.is_empty() {
            let _ = writeln!(s, "\n[sweep]");
            for (k, vals) in &self.sweep {
                let _ = writeln!(s, "{k} = {}", vals.join(" | "));
            }
        }
        s
    }

    /// Every combination of the sweep values, first key varying slowest,
    /// as override lists.
    pub fn sweep_cells(&self) -> Vec<Vec<(String, String)>> {
        let mut cells = vec![Vec::new()];
        for (key, values) in &self.sweep {
            let mut next = Vec::with_capacity(cells.len() * values.len());
            for cell in &cells {
                for v in values {
                    let mut c: Vec<(String, String)> = cell.clone();
                    c.push((key.clone(), v.clone()));
                    next.push(c);
                }
            }
            cells = next;
        }
        cells
    }

    /// This spec with `overrides` applied and the sweep removed.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<RunSpec> {
        let mut base = self.clone();
        base.sweep.clear();
        parse_config_with_overrides(&base.to_config_string(), overrides)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = "[model]\npreset = typical\n[run]\nt_end = 10\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let spec = parse_config(MINIMAL).unwrap();
        assert_eq!(spec.solver.dt, 1e-3);
        assert_eq!(spec.solver.scheme, Scheme::ImexEuler);
        assert_eq!(spec.solver.monitor_every, 100);
        assert_eq!(spec.solver.t_end, 10.0);
        assert_eq!(spec.model.parameters(), HrParameters::typical([0.0; 3]));
        assert_eq!(spec.model.variant, Variant::Ode);
        assert_eq!(spec.initial, InitialCondition::Random { lo: -1.0, hi: 1.0, seed: 0 });
        assert_eq!(spec.domain, DomainSpec { dim: 1, lengths: vec![1.0], counts: vec![2] });
        assert_eq!(spec.slack, 0.05);
    }

    #[test]
    fn variant_must_match_diffusion() {
        let text = "[model]\npreset = typical\nvariant = phr\nd1 = 0.1\nd2 = 1.0\n[run]\nt_end = 1\n";
        let err = parse_config(text).unwrap_err();
        assert!(matches!(err, HrError::Config { line: 3, .. }), "{err}");
        let ok = "[model]\npreset = typical\nvariant = phr\nd1 = 0.1\n[run]\nt_end = 1\n";
        assert_eq!(parse_config(ok).unwrap().model.variant, Variant::Phr);
        let nameless = "[model]\npreset = typical\nd2 = 0.1\n[run]\nt_end = 1\n";
        assert!(parse_config(nameless).is_err());
    }

    #[test]
    fn rejects_malformed_input() {
        for (text, line) in [
            ("[model]\npreset = typical\nfoo = 1\n[run]\nt_end = 1\n", 3),
            ("[model]\npreset = typical\n[run]\nt_end = 1\n[extra]\n", 5),
            ("t_end = 1\n", 1),
            ("[model]\npreset = typical\n[run]\nt_end = 1\nt_end = 2\n", 5),
            ("[model]\npreset = typical\n[run]\nt_end = x\n", 4),
            ("[model]\npreset = typical\n[run]\nt_end = 1\nseed = 3\ninitial = constant\n", 5),
        ] {
            match parse_config(text) {
                Err(HrError::Config { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(parse_config("[run]\nt_end = 1\n").is_err());
        assert!(parse_config("[model]\npreset = typical\n").is_err());
        assert!(parse_config("[model]\na = 1\n[run]\nt_end = 1\n").is_err());
    }

    #[test]
    fn overrides_and_sweep() {
        let text = format!("{MINIMAL}[sweep]\nmodel.J = 2.5 | 3.0\nrun.seed = 1 | 2 | 3\n");
        let spec = parse_config(&text).unwrap();
        let cells = spec.sweep_cells();
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[1], vec![("model.J".into(), "2.5".into()), ("run.seed".into(), "2".into())]);
        let cell = spec.with_overrides(&cells[5]).unwrap();
        assert_eq!(cell.model.j, 3.0);
        assert_eq!(cell.initial, InitialCondition::Random { lo: -1.0, hi: 1.0, seed: 3 });
        assert!(cell.sweep.is_empty());
        assert!(parse_config(&format!("{MINIMAL}[sweep]\nmodel.nope = 1\n")).is_err());
        let bad = vec![("model.d2".to_string(), "1".to_string())];
        assert!(parse_config_with_overrides("[model]\npreset = typical\nvariant = ode\n[run]\nt_end = 1\n", &bad).is_err());
    }

    #[test]
    fn explicit_parameters_without_preset() {
        let text = "[domain]\ndim = 2\nlengths = 1, 0.5\ncounts = 8, 4\n[model]\nvariant = qhr\nd1 = 0.2\nd2 = 0.1\n\
                    a = 3\nb = 1\nalpha = 1\nbeta = 5\nq = 0.0084\nr = 0.0021\nc = -1.6\nJ = 3\n\
                    [run]\nt_end = 2\nscheme = rk4\nprobe = 5\ninitial = constant\ninitial_value = 1, 0, 0\n";
        let spec = parse_config(text).unwrap();
        assert_eq!(spec.domain.build().unwrap().num_cells(), 32);
        assert_eq!(spec.model.variant, Variant::Qhr);
        assert_eq!(spec.solver.probe, Some(5));
        assert_eq!(spec.initial, InitialCondition::Constant([1.0, 0.0, 0.0]));
        assert_eq!(parse_config(&spec.to_config_string()).unwrap(), spec);
    }

    fn arb_spec() -> impl Strategy<Value = RunSpec> {
        (
            (1usize..=3, 2usize..6, 0.1f64..4.0),
            (0usize..4, 0.0f64..1.0, -5.0f64..5.0, 0.1f64..10.0),
            (1e-5f64..0.1, 0.0f64..100.0, 1usize..500, proptest::option::of(1usize..50)),
            (0usize..3, -3.0f64..3.0, any::<u64>()),
        )
            .prop_map(|((dim, n, len), (vk, d, j, a), (dt, t_end, every, snap), (ik, x, seed))| {
                let diffusion = match vk {
                    0 => [d + 0.01, d + 0.02, d + 0.03],
                    1 => [d + 0.01, 0.0, 0.0],
                    2 => [d + 0.01, d, 0.0].map(|x| if x == 0.0 { 0.5 } else { x }),
                    _ => [0.0; 3],
                };
                let p = HrParameters::typical(diffusion);
                RunSpec {
                    domain: DomainSpec { dim, lengths: vec![len; dim], counts: vec![n; dim] },
                    model: ModelSpec {
                        variant: Variant::from_diffusion(diffusion).unwrap(),
                        diffusion,
                        a,
                        b: p.b,
                        alpha: p.alpha,
                        beta: p.beta,
                        q: p.q,
                        r: p.r,
                        c: p.c,
                        j,
                        j_file: None,
                    },
                    solver: SolverConfig {
                        dt,
                        t_end,
                        scheme: if every % 2 == 0 { Scheme::Rk4 } else { Scheme::ImexEuler },
                        monitor_every: every,
                        snapshot_every: snap,
                        ..SolverConfig::default()
                    },
                    initial: match ik {
                        0 => InitialCondition::Constant([x, -x, x / 3.0]),
                        1 => InitialCondition::Random { lo: -x.abs(), hi: x.abs(), seed },
                        _ => InitialCondition::Files(["u.hrf".into(), "v.hrf".into(), "w.hrf".into()]),
                    },
                    slack: 0.05,
                    output_dir: PathBuf::from("runs/a"),
                    sweep: vec![("model.J".into(), vec!["1".into(), "2.5".into()])],
                }
            })
    }

    proptest! {
        #[test]
        fn serialize_round_trip(spec in arb_spec()) {
            let text = spec.to_config_string();
            let back = parse_config(&text).unwrap();
            prop_assert_eq!(&back, &spec);
            prop_assert_eq!(back.to_config_string(), text);
        }
    }
}
