//! Splitting schemes as coefficient sequences.
//!
//! A scheme interleaves flows of two exactly solvable subsystems. In the
//! rotation/kick family those are the linear oscillator (`R`) and the
//! perturbation kick (`K`); the drift/kick family (`D`, `K`) is kept for
//! comparison with the classical Verlet integrators.
//!
//! Coefficients are listed in the order the flows are applied. For an
//! R-first scheme with `m` stages the step is
//!
//! ```text
//! R(r[m] h) K(k[m-1] h) ... R(r[1] h) K(k[0] h) R(r[0] h)
//! ```
//!
//! read right to left, i.e. `r[0]` acts first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance applied to the coefficient sums when validating a scheme.
pub const CONSISTENCY_TOL: f64 = 1e-12;

/// Tolerance for coefficient-wise scheme comparison.
pub const SCHEME_EQ_TOL: f64 = 1e-14;

/// Which flow acts first, and which family the scheme belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FirstFlow {
    #[serde(rename = "R")]
    RotationFirst,
    #[serde(rename = "K")]
    KickFirst,
    #[serde(rename = "D")]
    DriftFirst,
    #[serde(rename = "K_DK")]
    KickFirstDk,
}

/// The pair of subsystems a scheme alternates between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    RotationKick,
    DriftKick,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::RotationKick => "rotation/kick",
            Family::DriftKick => "drift/kick",
        }
    }
}

impl FirstFlow {
    pub fn family(self) -> Family {
        match self {
            FirstFlow::RotationFirst | FirstFlow::KickFirst => Family::RotationKick,
            FirstFlow::DriftFirst | FirstFlow::KickFirstDk => Family::DriftKick,
        }
    }

    /// True when the outermost flows are the position-type ones (R or D).
    pub fn outer_is_position(self) -> bool {
        matches!(self, FirstFlow::RotationFirst | FirstFlow::DriftFirst)
    }

    fn position_flow(self) -> Flow {
        match self.family() {
            Family::RotationKick => Flow::Rotation,
            Family::DriftKick => Flow::Drift,
        }
    }
}

/// A single exactly solvable flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flow {
    Rotation,
    Kick,
    Drift,
}

/// Unvalidated coefficient record, as found in a JSON scheme file.
///
/// For drift/kick schemes the `r` list carries the drift coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawScheme {
    #[serde(default)]
    pub label: String,
    pub first: FirstFlow,
    pub r: Vec<f64>,
    pub k: Vec<f64>,
}

/// A consistent splitting scheme. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RawScheme", try_from = "RawScheme")]
pub struct SplittingScheme {
    first_flow: FirstFlow,
    rotation: Vec<f64>,
    kick: Vec<f64>,
    stages: usize,
    label: String,
}

impl From<SplittingScheme> for RawScheme {
    fn from(s: SplittingScheme) -> Self {
        RawScheme {
            label: s.label,
            first: s.first_flow,
            r: s.rotation,
            k: s.kick,
        }
    }
}

impl TryFrom<RawScheme> for SplittingScheme {
    type Error = Error;

    fn try_from(raw: RawScheme) -> Result<Self> {
        validate_scheme(&raw)
    }
}

fn check_shape(first: FirstFlow, rotation: &[f64], kick: &[f64]) -> Result<usize> {
    if rotation.is_empty() || kick.is_empty() {
        return Err(Error::ShapeMismatch(
            "coefficient sequences must be non-empty".into(),
        ));
    }
    let (outer, inner, outer_name) = if first.outer_is_position() {
        (rotation.len(), kick.len(), "position")
    } else {
        (kick.len(), rotation.len(), "kick")
    };
    if outer != inner + 1 {
        return Err(Error::ShapeMismatch(format!(
            "{:?} needs {} {outer_name} coefficients for {} inner ones, got {}",
            first,
            inner + 1,
            inner,
            outer
        )));
    }
    Ok(inner)
}

/// Validates a raw coefficient record.
pub fn validate_scheme(raw: &RawScheme) -> Result<SplittingScheme> {
    if raw.r.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("r"));
    }
    if raw.k.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("k"));
    }
    let stages = check_shape(raw.first, &raw.r, &raw.k)?;
    let r_sum: f64 = raw.r.iter().sum();
    if (r_sum - 1.0).abs() > CONSISTENCY_TOL {
        let which = match raw.first.family() {
            Family::RotationKick => "rotation",
            Family::DriftKick => "drift",
        };
        return Err(Error::ConsistencyViolation { which, sum: r_sum });
    }
    let k_sum: f64 = raw.k.iter().sum();
    if (k_sum - 1.0).abs() > CONSISTENCY_TOL {
        return Err(Error::ConsistencyViolation {
            which: "kick",
            sum: k_sum,
        });
    }
    Ok(SplittingScheme {
        first_flow: raw.first,
        rotation: raw.r.clone(),
        kick: raw.k.clone(),
        stages,
        label: raw.label.clone(),
    })
}

impl SplittingScheme {
    /// Builds and validates a scheme.
    pub fn new(
        first: FirstFlow,
        rotation: Vec<f64>,
        kick: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        validate_scheme(&RawScheme {
            label: label.into(),
            first,
            r: rotation,
            k: kick,
        })
    }

    /// Builds a scheme checking only the shape, not the coefficient sums.
    ///
    /// Meant for negative controls: the consistency-based checks are expected
    /// to reject what this lets through.
    pub fn new_unchecked(
        first: FirstFlow,
        rotation: Vec<f64>,
        kick: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let stages = check_shape(first, &rotation, &kick)?;
        Ok(SplittingScheme {
            first_flow: first,
            rotation,
            kick,
            stages,
            label: label.into(),
        })
    }

    /// Parses and validates a JSON scheme document.
    pub fn from_json(text: &str) -> std::result::Result<Self, SchemeFileError> {
        let raw: RawScheme = serde_json::from_str(text)?;
        Ok(validate_scheme(&raw)?)
    }

    pub fn first_flow(&self) -> FirstFlow {
        self.first_flow
    }

    pub fn family(&self) -> Family {
        self.first_flow.family()
    }

    /// Position-type coefficients (rotations, or drifts for the D/K family).
    pub fn rotation_coeffs(&self) -> &[f64] {
        &self.rotation
    }

    pub fn kick_coeffs(&self) -> &[f64] {
        &self.kick
    }

    /// Number of stages `m`, i.e. force evaluations per step.
    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// The flows of one step in application order, with their coefficients.
    pub fn flows(&self) -> Vec<(Flow, f64)> {
        let pos = self.first_flow.position_flow();
        let (outer, outer_flow, inner, inner_flow) = if self.first_flow.outer_is_position() {
            (&self.rotation, pos, &self.kick, Flow::Kick)
        } else {
            (&self.kick, Flow::Kick, &self.rotation, pos)
        };
        let mut out = Vec::with_capacity(outer.len() + inner.len());
        for (i, &c) in outer.iter().enumerate() {
            out.push((outer_flow, c));
            if let Some(&d) = inner.get(i) {
                out.push((inner_flow, d));
            }
        }
        out
    }

    /// Rebuilds a scheme from an application-ordered flow list, merging
    /// adjacent flows of the same kind.
    fn from_flows(first: FirstFlow, flows: &[(Flow, f64)], label: String) -> Result<Self> {
        let mut merged: Vec<(Flow, f64)> = Vec::with_capacity(flows.len());
        for &(f, c) in flows {
            match merged.last_mut() {
                Some((g, acc)) if *g == f => *acc += c,
                _ => merged.push((f, c)),
            }
        }
        let (rotation, kick): (Vec<_>, Vec<_>) = merged.iter().partition(|(f, _)| *f != Flow::Kick);
        Self::new(
            first,
            rotation.into_iter().map(|(_, c)| c).collect(),
            kick.into_iter().map(|(_, c)| c).collect(),
            label,
        )
    }

    /// The `m`-fold composition of this scheme with substep `h/m`, adjacent
    /// flows of the same kind merged.
    pub fn compose_substeps(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::OutOfRange("substep count must be at least 1".into()));
        }
        if m == 1 {
            return Ok(self.clone());
        }
        let scale = m as f64;
        let one: Vec<(Flow, f64)> = self
            .flows()
            .into_iter()
            .map(|(f, c)| (f, c / scale))
            .collect();
        let mut all = Vec::with_capacity(one.len() * m);
        for _ in 0..m {
            all.extend_from_slice(&one);
        }
        Self::from_flows(self.first_flow, &all, format!("({})^{m}", self.label))
    }

    /// The scheme with its first flow moved to the end of the step. Its step
    /// matrix is conjugate to this one, so the semitrace is unchanged.
    pub fn cyclic_shift(&self) -> Result<Self> {
        let pos = self.first_flow.position_flow();
        let mut flows = self.flows();
        flows.rotate_left(1);
        let starts_kick = flows[0].0 == Flow::Kick;
        let ends_kick = flows[flows.len() - 1].0 == Flow::Kick;
        // pad with an empty position flow so both ends are of one kind
        match (starts_kick, ends_kick) {
            (true, false) => flows.insert(0, (pos, 0.0)),
            (false, true) => flows.push((pos, 0.0)),
            _ => {}
        }
        let first = match (self.family(), flows[0].0 == Flow::Kick) {
            (Family::RotationKick, false) => FirstFlow::RotationFirst,
            (Family::RotationKick, true) => FirstFlow::KickFirst,
            (Family::DriftKick, false) => FirstFlow::DriftFirst,
            (Family::DriftKick, true) => FirstFlow::KickFirstDk,
        };
        Self::from_flows(first, &flows, format!("shift({})", self.label))
    }

    /// True when both coefficient sequences read the same reversed.
    pub fn is_palindromic(&self) -> bool {
        fn mirrored(v: &[f64]) -> bool {
            v.iter()
                .zip(v.iter().rev())
                .all(|(a, b)| (a - b).abs() <= SCHEME_EQ_TOL)
        }
        mirrored(&self.rotation) && mirrored(&self.kick)
    }

    /// Coefficient-wise equality within `tol`; the label is ignored.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
        }
        self.first_flow == other.first_flow
            && close(&self.rotation, &other.rotation, tol)
            && close(&self.kick, &other.kick, tol)
    }
}

/// Failure to load a scheme from JSON.
#[derive(Debug, thiserror::Error)]
pub enum SchemeFileError {
    #[error("malformed scheme JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] Error),
}

/// Names accepted by [`catalog_scheme`].
pub const CATALOG_NAMES: [&str; 8] = [
    "rkr",
    "krk",
    "rkrm",
    "krkm",
    "lt_rk",
    "lt_kr",
    "verlet_pos",
    "verlet_vel",
];

/// Looks up a named scheme. `m` is required for `rkrm` and `krkm` and ignored
/// otherwise.
pub fn catalog_scheme(name: &str, m: Option<usize>) -> Result<SplittingScheme> {
    use FirstFlow::*;
    let composed = |base: SplittingScheme, tag: &str| -> Result<SplittingScheme> {
        let m = m.ok_or_else(|| Error::OutOfRange(format!("`{name}` requires a stage count m")))?;
        Ok(base.compose_substeps(m)?.with_label(format!("{tag}{m}")))
    };
    match name {
        "rkr" => SplittingScheme::new(RotationFirst, vec![0.5, 0.5], vec![1.0], "RKR"),
        "krk" => SplittingScheme::new(KickFirst, vec![1.0], vec![0.5, 0.5], "KRK"),
        "rkrm" => composed(catalog_scheme("rkr", None)?, "RKR"),
        "krkm" => composed(catalog_scheme("krk", None)?, "KRK"),
        // R after K: the kick acts first.
        "lt_rk" => SplittingScheme::new(RotationFirst, vec![0.0, 1.0], vec![1.0], "LT-RK"),
        "lt_kr" => SplittingScheme::new(RotationFirst, vec![1.0, 0.0], vec![1.0], "LT-KR"),
        "verlet_pos" => SplittingScheme::new(DriftFirst, vec![0.5, 0.5], vec![1.0], "Verlet-pos"),
        "verlet_vel" => SplittingScheme::new(KickFirstDk, vec![1.0], vec![0.5, 0.5], "Verlet-vel"),
        other => Err(Error::UnknownScheme(other.to_string())),
    }
}

/// Free parameters of the palindromic K-first three-stage family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeStageParams {
    pub r: f64,
    pub k: f64,
}

impl ThreeStageParams {
    /// Kicks `[k, 1/2-k, 1/2-k, k]`, rotations `[r, 1-2r, r]`.
    pub fn scheme(&self) -> SplittingScheme {
        let ThreeStageParams { r, k } = *self;
        SplittingScheme {
            first_flow: FirstFlow::KickFirst,
            rotation: vec![r, 1.0 - 2.0 * r, r],
            kick: vec![k, 0.5 - k, 0.5 - k, k],
            stages: 3,
            label: format!("three-stage(r={r}, k={k})"),
        }
    }
}

/// The kick weight `k` that makes the three-stage scheme with rotation weight
/// `r` satisfy the second-order stability condition at `(eps, h) = (0, pi)`:
/// `4 k sin^2(pi r) = -cos(2 pi r)`.
pub fn three_stage_necessary_k(r: f64) -> Result<f64> {
    let s = (std::f64::consts::PI * r).sin();
    if s.abs() < 1e-12 || !r.is_finite() {
        return Err(Error::SingularParameter(r));
    }
    Ok(-(2.0 * std::f64::consts::PI * r).cos() / (4.0 * s * s))
}
