//! Experiment configuration, read from TOML.
//!
//! Every section and key is optional except `[family]`. Unknown keys are
//! rejected. After defaults are filled in, the whole structure is written
//! back as `resolved_config.toml` next to the outputs.

use crate::callbacks;
use anyhow::{anyhow, bail, Context, Result};
use fiemkit::orbits::{OrbitTolerances, SearchConfig, SweepConfig};
use fiemkit::scalar::{parse_exact, Coord};
use fiemkit::symmetry::{GammaConfig, IntersectionConfig};
use fiemkit::{Family, Forcing, Permutation, PerturbedMap};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    #[default]
    Float,
}

/// A number given either as a TOML float or integer, or as a string holding
/// a decimal or a fraction `p/q`. Strings are read exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Number {
    pub fn exact(&self) -> Result<BigRational> {
        match self {
            Number::Int(n) => Ok(BigRational::from_integer((*n).into())),
            // the decimal the float prints as
            Number::Float(v) => parse_exact(&format!("{}", v)).map_err(Into::into),
            Number::Text(s) => parse_exact(s).map_err(Into::into),
        }
    }

    fn canonical(&self) -> Result<Number> {
        Ok(Number::Text(self.exact()?.to_text()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKindSpec {
    #[default]
    Linear,
    Constant,
    Standard,
    Callback,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilySpec {
    pub kind: FamilyKindSpec,
    /// Final order, 1-based. Defaults to the reversing permutation.
    pub perm: Option<Vec<usize>>,
    pub lambda0: Vec<Number>,
    pub lambda1: Vec<Number>,
    /// Lengths of a constant family.
    pub lengths: Vec<Number>,
    pub callback: Option<String>,
    pub domain: Option<[f64; 2]>,
    pub periodic_y: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForcingSpec {
    /// `(l, a)` pairs of `f(x) = sum a sin(2 pi l x)`.
    pub terms: Vec<(u32, f64)>,
}

impl Default for ForcingSpec {
    fn default() -> Self {
        Self {
            terms: vec![(1, 1.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterateSpec {
    pub steps: usize,
    pub seeds: Vec<[f64; 2]>,
    /// `[nx, ny]` seeds at the centres of a regular grid over the phase space.
    pub grid: Option<[usize; 2]>,
    /// Number of uniformly random seeds.
    pub random: usize,
    pub rng_seed: u64,
}

impl Default for IterateSpec {
    fn default() -> Self {
        Self {
            steps: 1000,
            seeds: Vec::new(),
            grid: None,
            random: 0,
            rng_seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinesSpec {
    /// `symmetry-lines` writes `Γ_i` for `-i_max <= i <= i_max`.
    pub i_max: u32,
    pub base_samples: usize,
    pub y_res: f64,
    /// Line pairs whose crossings are written to `intersections.json`.
    pub pairs: Vec<[i64; 2]>,
}

impl Default for LinesSpec {
    fn default() -> Self {
        let g = GammaConfig::default();
        Self {
            i_max: 7,
            base_samples: g.base_samples,
            y_res: g.y_res,
            pairs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FindSpec {
    pub q_max: usize,
    /// Predict and confirm non-symmetric orbits for each harmonic of the
    /// forcing.
    pub predict: bool,
}

impl Default for FindSpec {
    fn default() -> Self {
        Self {
            q_max: 6,
            predict: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub seed: [f64; 2],
    pub q: usize,
    pub eps_start: f64,
    pub eps_stop: f64,
    pub eps_step: f64,
    /// Explicit grid; overrides start, stop and step when not empty.
    pub eps_grid: Vec<f64>,
    pub delta_seed: f64,
    pub ladder: u32,
    pub agree_window: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let s = SweepConfig::default();
        Self {
            seed: [0.5, 0.5],
            q: 1,
            eps_start: 1e-3,
            eps_stop: 0.1,
            eps_step: 1e-3,
            eps_grid: Vec::new(),
            delta_seed: s.delta_seed,
            ladder: s.ladder,
            agree_window: s.agree_window,
        }
    }
}

impl SweepSpec {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !self.eps_grid.is_empty() {
            return Ok(self.eps_grid.clone());
        }
        if self.eps_step.is_nan() || self.eps_step <= 0.0 || self.eps_stop < self.eps_start {
            bail!("[sweep]: need eps_step > 0 and eps_stop >= eps_start");
        }
        let n = ((self.eps_stop - self.eps_start) / self.eps_step + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|k| self.eps_start + k as f64 * self.eps_step)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSpec {
    /// Height at which the exchange map is taken from the family.
    pub y: Number,
    /// Explicit lengths, used with the family's permutation instead of `y`.
    pub lengths: Vec<Number>,
    pub q_max: usize,
    pub m_max: usize,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self {
            y: Number::Text("1/2".into()),
            lengths: Vec::new(),
            q_max: 20,
            m_max: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub points: usize,
    pub rng_seed: u64,
    /// Heights at which the exchange-map suite runs.
    pub heights: usize,
    pub q_max: usize,
    pub lines: i64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            points: 1000,
            rng_seed: 1,
            heights: 5,
            q_max: 8,
            lines: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub orbit_tol: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub singular_tol: f64,
    pub residue_tol: f64,
    pub balance_tol: f64,
    pub param_tol: f64,
    pub dedup_tol: f64,
    pub angle_tol: f64,
    pub tol_line: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let o = OrbitTolerances::default();
        let i = IntersectionConfig::default();
        Self {
            orbit_tol: o.orbit_tol,
            newton_tol: o.newton_tol,
            newton_max_iter: o.newton_max_iter,
            singular_tol: o.singular_tol,
            residue_tol: o.residue_tol,
            balance_tol: o.balance_tol,
            param_tol: i.param_tol,
            dedup_tol: i.dedup_tol,
            angle_tol: i.angle_tol,
            tol_line: i.tol_line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub eps: f64,
    pub out: Option<PathBuf>,
    pub family: FamilySpec,
    pub forcing: ForcingSpec,
    pub tolerances: Tolerances,
    pub lines: LinesSpec,
    pub iterate: IterateSpec,
    pub find_periodic: FindSpec,
    pub sweep: SweepSpec,
    pub oracle: OracleSpec,
    pub verify: VerifySpec,
}

fn exact_all(v: &[Number], field: &str) -> Result<Vec<BigRational>> {
    v.iter()
        .enumerate()
        .map(|(i, n)| n.exact().with_context(|| format!("{}[{}]", field, i)))
        .collect()
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| anyhow!("{}", e))?;
        cfg.canonicalize()?;
        Ok(cfg)
    }

    /// Exact numbers become `p/q` strings and implied values are spelled out.
    fn canonicalize(&mut self) -> Result<()> {
        let f = &mut self.family;
        for (v, name) in [
            (&mut f.lambda0, "family.lambda0"),
            (&mut f.lambda1, "family.lambda1"),
            (&mut f.lengths, "family.lengths"),
            (&mut self.oracle.lengths, "oracle.lengths"),
        ] {
            for (i, n) in v.iter_mut().enumerate() {
                *n = n.canonical().with_context(|| format!("{}[{}]", name, i))?;
            }
        }
        self.oracle.y = self.oracle.y.canonical().context("oracle.y")?;
        let d = match f.kind {
            FamilyKindSpec::Linear => f.lambda0.len(),
            FamilyKindSpec::Constant => f.lengths.len(),
            FamilyKindSpec::Standard => 2,
            FamilyKindSpec::Callback => f
                .callback
                .as_deref()
                .and_then(callbacks::lookup)
                .map(|c| c.size)
                .unwrap_or(0),
        };
        if f.perm.is_none() && d > 0 {
            f.perm = Some((1..=d).rev().collect());
        }
        if f.domain.is_none() {
            f.domain = Some([0.0, 1.0]);
        }
        if f.periodic_y.is_none() {
            f.periodic_y = Some(f.kind == FamilyKindSpec::Standard);
        }
        Ok(())
    }

    pub fn perm(&self) -> Result<Permutation> {
        let order = self
            .family
            .perm
            .clone()
            .ok_or_else(|| anyhow!("family.perm: cannot infer the number of intervals"))?;
        Permutation::new(order).context("family.perm")
    }

    pub fn family(&self) -> Result<Family> {
        let f = &self.family;
        let [lo, hi] = f.domain.unwrap_or([0.0, 1.0]);
        let perm = self.perm()?;
        let fam = match f.kind {
            FamilyKindSpec::Linear => {
                if f.lambda0.is_empty() || f.lambda1.is_empty() {
                    bail!("family: a linear family needs lambda0 and lambda1");
                }
                Family::linear(
                    perm,
                    exact_all(&f.lambda0, "family.lambda0")?,
                    exact_all(&f.lambda1, "family.lambda1")?,
                    (lo, hi),
                )
                .context("family")?
            }
            FamilyKindSpec::Constant => {
                if f.lengths.is_empty() {
                    bail!("family: a constant family needs lengths");
                }
                let l = exact_all(&f.lengths, "family.lengths")?;
                Family::linear(perm, l.clone(), l, (lo, hi)).context("family")?
            }
            FamilyKindSpec::Standard => {
                if perm != Permutation::reversing(2) {
                    bail!("family.perm: the standard family has two reversed intervals");
                }
                Family::standard_map()
            }
            FamilyKindSpec::Callback => {
                let name = f
                    .callback
                    .as_deref()
                    .ok_or_else(|| anyhow!("family.callback: missing callback id"))?;
                let entry = callbacks::lookup(name).ok_or_else(|| {
                    anyhow!(
                        "family.callback: unknown id '{}' (known: {})",
                        name,
                        callbacks::names().join(", ")
                    )
                })?;
                Family::callback(perm, (entry.build)(), (lo, hi)).context("family")?
            }
        };
        let periodic = f.periodic_y.unwrap_or(false);
        if periodic != fam.periodic_y() {
            return fam.with_periodic_y(periodic).context("family.periodic_y");
        }
        Ok(fam)
    }

    pub fn forcing(&self) -> Result<Forcing> {
        Forcing::new(self.forcing.terms.clone()).context("forcing.terms")
    }

    pub fn map(&self) -> Result<PerturbedMap> {
        PerturbedMap::new(self.family()?, self.forcing()?, self.eps).context("eps")
    }

    pub fn orbit_tolerances(&self) -> OrbitTolerances {
        let t = &self.tolerances;
        OrbitTolerances {
            orbit_tol: t.orbit_tol,
            newton_tol: t.newton_tol,
            newton_max_iter: t.newton_max_iter,
            singular_tol: t.singular_tol,
            residue_tol: t.residue_tol,
            balance_tol: t.balance_tol,
        }
    }

    pub fn gamma(&self) -> GammaConfig {
        GammaConfig {
            i_max: GammaConfig::default().i_max.max(self.lines.i_max),
            base_samples: self.lines.base_samples,
            y_res: self.lines.y_res,
            tol_line: self.tolerances.tol_line,
        }
    }

    pub fn intersections(&self) -> IntersectionConfig {
        let t = &self.tolerances;
        IntersectionConfig {
            param_tol: t.param_tol,
            dedup_tol: t.dedup_tol,
            orbit_tol: t.orbit_tol,
            angle_tol: t.angle_tol,
            tol_line: t.tol_line,
        }
    }

    pub fn search(&self) -> SearchConfig {
        SearchConfig {
            gamma: self.gamma(),
            intersections: self.intersections(),
            orbit: self.orbit_tolerances(),
        }
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            delta_seed: self.sweep.delta_seed,
            ladder: self.sweep.ladder,
            agree_window: self.sweep.agree_window,
            orbit: self.orbit_tolerances(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("cannot serialize the resolved config")
    }
}
