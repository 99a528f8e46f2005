//! Physical description of a vibrating string, membrane or plate.
//!
//! A [`ModelSpec`] holds every coefficient of the governing equation
//!
//! ```text
//! rho w_tt + (d1 + d3 Lap) w_t + (D LapLap - T0 Lap) w = f_ext - f_nl
//! ```
//!
//! together with the geometry needed by the modal basis and the nonlinear
//! terms. Everything downstream consumes a [`ValidatedSpec`], which can only be
//! obtained through [`validate`].

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Density. Units depend on [`DensityConvention`].
    pub rho: f64,
    /// Young's modulus (Pa).
    #[serde(default)]
    pub youngs: f64,
    /// Poisson's ratio.
    #[serde(default)]
    pub poisson: f64,
    /// Frequency-independent damping coefficient.
    #[serde(default)]
    pub d1: f64,
    /// Frequency-dependent damping coefficient.
    #[serde(default)]
    pub d3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    /// Fixed-fixed string of length `length` (m) and cross-section `area` (m²).
    String { length: f64, area: f64 },
    /// Fixed rectangular membrane.
    RectMembrane { lx: f64, ly: f64, thickness: f64 },
    /// Simply supported rectangular plate.
    RectPlate { lx: f64, ly: f64, thickness: f64 },
}

impl Geometry {
    pub fn is_one_dimensional(&self) -> bool {
        matches!(self, Geometry::String { .. })
    }

    /// Thickness of 2D geometries, `None` for strings.
    pub fn thickness(&self) -> Option<f64> {
        match *self {
            Geometry::String { .. } => None,
            Geometry::RectMembrane { thickness, .. } | Geometry::RectPlate { thickness, .. } => {
                Some(thickness)
            }
        }
    }

    /// Side lengths; strings report `(length, 0)`.
    pub fn extent(&self) -> (f64, f64) {
        match *self {
            Geometry::String { length, .. } => (length, 0.0),
            Geometry::RectMembrane { lx, ly, .. } | Geometry::RectPlate { lx, ly, .. } => (lx, ly),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Geometry::String { .. } => "string",
            Geometry::RectMembrane { .. } => "rect_membrane",
            Geometry::RectPlate { .. } => "rect_plate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nonlinearity {
    #[default]
    Linear,
    /// Kirchhoff–Carrier (strings) or Berger (membranes).
    TensionModulated,
    VonKarman,
}

/// How `MaterialParams::rho` maps onto the inertia coefficient of the
/// governing equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityConvention {
    /// kg/m, strings only. Used as is.
    Linear,
    /// kg/m², 2D only. Used as is.
    Areal,
    /// kg/m³, 2D only. Multiplied by the thickness.
    Volumetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub material: MaterialParams,
    pub geometry: Geometry,
    /// Initial tension T0 (N for strings, N/m for membranes and plates).
    #[serde(default)]
    pub tension: f64,
    /// Bending stiffness D. When absent it is derived from E, h and nu for
    /// 2D geometries and taken as zero for strings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stiffness: Option<f64>,
    #[serde(default)]
    pub nonlinearity: Nonlinearity,
    /// Defaults to `linear` for strings and `volumetric` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_convention: Option<DensityConvention>,
}

impl ModelSpec {
    pub fn density_convention(&self) -> DensityConvention {
        self.density_convention.unwrap_or(if self.geometry.is_one_dimensional() {
            DensityConvention::Linear
        } else {
            DensityConvention::Volumetric
        })
    }

    /// Bending stiffness, direct input first, then the plate formula
    /// `E h³ / (12 (1 - nu²))`.
    pub fn resolved_stiffness(&self) -> f64 {
        if let Some(d) = self.stiffness {
            return d;
        }
        match self.geometry.thickness() {
            Some(h) => {
                let nu = self.material.poisson;
                self.material.youngs * h.powi(3) / (12.0 * (1.0 - nu * nu))
            }
            None => 0.0,
        }
    }

    /// The inertia coefficient multiplying `w_tt`.
    pub fn effective_density(&self) -> f64 {
        match (self.density_convention(), self.geometry.thickness()) {
            (DensityConvention::Volumetric, Some(h)) => self.material.rho * h,
            _ => self.material.rho,
        }
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    pub field: &'static str,
    pub message: String,
}

impl ValidationIssue {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self { field, message: message.into() }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// A [`ModelSpec`] whose invariants have been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedSpec(ModelSpec);

impl ValidatedSpec {
    pub fn spec(&self) -> &ModelSpec {
        &self.0
    }

    pub fn into_inner(self) -> ModelSpec {
        self.0
    }
}

impl Deref for ValidatedSpec {
    type Target = ModelSpec;

    fn deref(&self) -> &ModelSpec {
        &self.0
    }
}

/// Checks every invariant and reports all violations together.
pub fn validate(spec: &ModelSpec) -> Result<ValidatedSpec, Vec<ValidationIssue>> {
    let mut issues = Vec::new();
    let m = &spec.material;
    let mut check = |ok: bool, field: &'static str, msg: &str| {
        if !ok {
            issues.push(ValidationIssue::new(field, msg));
        }
    };

    check(m.rho > 0.0 && m.rho.is_finite(), "rho", "rho must be positive");
    check(m.youngs >= 0.0 && m.youngs.is_finite(), "youngs", "youngs modulus must be non-negative");
    check(
        (0.0..0.5).contains(&m.poisson),
        "poisson",
        "poisson ratio must lie in [0, 0.5)",
    );
    check(m.d1 >= 0.0 && m.d1.is_finite(), "d1", "d1 must be non-negative");
    check(m.d3 >= 0.0 && m.d3.is_finite(), "d3", "d3 must be non-negative");

    match spec.geometry {
        Geometry::String { length, area } => {
            check(length > 0.0 && length.is_finite(), "geometry.length", "length must be positive");
            check(area > 0.0 && area.is_finite(), "geometry.area", "area must be positive");
        }
        Geometry::RectMembrane { lx, ly, thickness } | Geometry::RectPlate { lx, ly, thickness } => {
            check(lx > 0.0 && lx.is_finite(), "geometry.lx", "lx must be positive");
            check(ly > 0.0 && ly.is_finite(), "geometry.ly", "ly must be positive");
            check(
                thickness > 0.0 && thickness.is_finite(),
                "geometry.thickness",
                "thickness must be positive",
            );
        }
    }

    check(spec.tension >= 0.0 && spec.tension.is_finite(), "tension", "tension must be non-negative");
    if let Some(d) = spec.stiffness {
        check(d >= 0.0 && d.is_finite(), "stiffness", "stiffness must be non-negative");
    }
    let d = spec.resolved_stiffness();
    check(
        spec.tension > 0.0 || d > 0.0,
        "tension",
        "degenerate dispersion: tension and stiffness are both zero",
    );

    match spec.nonlinearity {
        Nonlinearity::VonKarman => check(
            matches!(spec.geometry, Geometry::RectPlate { .. }),
            "nonlinearity",
            "von-karman requires rect_plate geometry",
        ),
        Nonlinearity::TensionModulated => check(
            !matches!(spec.geometry, Geometry::RectPlate { .. }),
            "nonlinearity",
            "tension-modulated requires string or rect_membrane geometry",
        ),
        Nonlinearity::Linear => {}
    }

    match (spec.density_convention(), spec.geometry.is_one_dimensional()) {
        (DensityConvention::Linear, false) => {
            check(false, "density_convention", "linear density is only valid for strings")
        }
        (DensityConvention::Areal | DensityConvention::Volumetric, true) => {
            check(false, "density_convention", "strings use linear density")
        }
        _ => {}
    }

    if issues.is_empty() {
        Ok(ValidatedSpec(spec.clone()))
    } else {
        Err(issues)
    }
}

/// Convenience wrapper mapping the issue list into the crate error.
pub fn validated(spec: &ModelSpec) -> Result<ValidatedSpec> {
    validate(spec).map_err(Error::Validation)
}

/// Tension-modulation coefficient: `EA / 2L` for strings and
/// `Eh / (2 Lx Ly (1 - nu²))` for membranes.
pub fn derive_tau(spec: &ValidatedSpec) -> Result<f64> {
    let m = &spec.material;
    match spec.geometry {
        Geometry::String { length, area } => Ok(m.youngs * area / (2.0 * length)),
        Geometry::RectMembrane { lx, ly, thickness } => {
            Ok(m.youngs * thickness / (2.0 * lx * ly * (1.0 - m.poisson * m.poisson)))
        }
        Geometry::RectPlate { .. } => Err(Error::Incompatible(
            "tension modulation coefficient is undefined for plates; use the von Karman model".into(),
        )),
    }
}

/// Density-normalised parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedParams {
    /// D / rho.
    pub d_hat: f64,
    /// T0 / rho.
    pub t0_hat: f64,
    /// Tension-modulation coefficient divided by rho, so that it enters the
    /// modal equations on the same footing as `t0_hat`. Zero for linear and
    /// von Kármán models.
    pub tau: f64,
    pub nonlinearity: Nonlinearity,
}

pub fn derive_normalized(spec: &ValidatedSpec) -> NormalizedParams {
    let rho = spec.effective_density();
    let tau = match (spec.nonlinearity, spec.geometry) {
        (Nonlinearity::TensionModulated, Geometry::String { .. } | Geometry::RectMembrane { .. }) => {
            derive_tau(spec).map(|t| t / rho).unwrap_or(0.0)
        }
        _ => 0.0,
    };
    NormalizedParams {
        d_hat: spec.resolved_stiffness() / rho,
        t0_hat: spec.tension / rho,
        tau,
        nonlinearity: spec.nonlinearity,
    }
}

/// `E / (2 rho_vol)`, the prefactor of the von Kármán modal force. With an
/// areal density convention this is `E h / (2 rho)`.
pub fn von_karman_prefactor(spec: &ValidatedSpec) -> f64 {
    let h = spec.geometry.thickness().unwrap_or(1.0);
    spec.material.youngs * h / (2.0 * spec.effective_density())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn string_spec() -> ModelSpec {
        ModelSpec {
            material: MaterialParams { rho: 1.0, youngs: 2.0, poisson: 0.0, d1: 0.0, d3: 0.0 },
            geometry: Geometry::String { length: 1.0, area: 1.0 },
            tension: 1.0,
            stiffness: None,
            nonlinearity: Nonlinearity::TensionModulated,
            density_convention: None,
        }
    }

    fn plate_spec() -> ModelSpec {
        ModelSpec {
            material: MaterialParams { rho: 7860.0, youngs: 2e11, poisson: 0.3, d1: 0.0, d3: 0.0 },
            geometry: Geometry::RectPlate { lx: 0.2, ly: 0.3, thickness: 1e-3 },
            tension: 0.0,
            stiffness: None,
            nonlinearity: Nonlinearity::VonKarman,
            density_convention: None,
        }
    }

    #[test]
    fn tau_unit_inputs() {
        let s = validate(&string_spec()).unwrap();
        assert_eq!(derive_tau(&s).unwrap(), 1.0);

        let mut m = string_spec();
        m.geometry = Geometry::RectMembrane { lx: 1.0, ly: 1.0, thickness: 1.0 };
        m.density_convention = Some(DensityConvention::Areal);
        let s = validate(&m).unwrap();
        assert_eq!(derive_tau(&s).unwrap(), 1.0);
    }

    #[test]
    fn tau_steel_string() {
        let mut m = string_spec();
        m.material.youngs = 2e11;
        m.geometry = Geometry::String { length: 0.65, area: 5.0265e-7 };
        let tau = derive_tau(&validate(&m).unwrap()).unwrap();
        // 2e11 * 5.0265e-7 / 1.3
        assert!((tau - 7.733_077e4).abs() / 7.7331e4 < 1e-5, "{tau}");
    }

    #[test]
    fn tau_rejects_plate() {
        let s = validate(&plate_spec()).unwrap();
        assert!(matches!(derive_tau(&s), Err(Error::Incompatible(_))));
    }

    #[test]
    fn tau_is_homogeneous_in_youngs() {
        for geometry in [
            Geometry::String { length: 0.7, area: 3e-7 },
            Geometry::RectMembrane { lx: 0.3, ly: 0.4, thickness: 1e-4 },
        ] {
            let mut m = string_spec();
            m.geometry = geometry;
            m.material.youngs = 3e9;
            m.material.poisson = 0.2;
            let t1 = derive_tau(&validate(&m).unwrap()).unwrap();
            m.material.youngs *= 2.0;
            let t2 = derive_tau(&validate(&m).unwrap()).unwrap();
            assert!((t2 - 2.0 * t1).abs() <= 1e-12 * t2);
        }
    }

    #[test]
    fn normalized_examples() {
        let mut m = string_spec();
        m.stiffness = Some(10.0);
        m.material.rho = 2.0;
        m.nonlinearity = Nonlinearity::Linear;
        let n = derive_normalized(&validate(&m).unwrap());
        assert_eq!(n.d_hat, 5.0);
        assert_eq!(n.tau, 0.0);

        let mut m = string_spec();
        m.tension = 0.0;
        m.stiffness = Some(1.0);
        let n = derive_normalized(&validate(&m).unwrap());
        assert_eq!((n.t0_hat, n.d_hat), (0.0, 1.0));

        let n = derive_normalized(&validate(&plate_spec()).unwrap());
        assert_eq!(n.tau, 0.0);
        assert_eq!(n.nonlinearity, Nonlinearity::VonKarman);
    }

    #[test]
    fn normalized_scales_inversely_with_density() {
        let mut m = string_spec();
        m.stiffness = Some(3.0);
        m.tension = 7.0;
        let a = derive_normalized(&validate(&m).unwrap());
        m.material.rho *= 4.0;
        let b = derive_normalized(&validate(&m).unwrap());
        assert!((b.d_hat - a.d_hat / 4.0).abs() < 1e-15);
        assert!((b.t0_hat - a.t0_hat / 4.0).abs() < 1e-15);
    }

    #[test]
    fn plate_stiffness_from_material() {
        let s = validate(&plate_spec()).unwrap();
        let d = 2e11 * 1e-9 / (12.0 * (1.0 - 0.09));
        assert!((s.resolved_stiffness() - d).abs() < 1e-12 * d);
        let mut m = plate_spec();
        m.stiffness = Some(1.5);
        assert_eq!(m.resolved_stiffness(), 1.5);
        assert!((s.effective_density() - 7.86).abs() < 1e-12);
        assert!((von_karman_prefactor(&s) - 2e11 / (2.0 * 7860.0)).abs() < 1e-6);
    }

    #[test]
    fn validation_reports_every_issue() {
        let mut m = string_spec();
        m.material.rho = -1.0;
        m.tension = 0.0;
        m.material.poisson = 0.7;
        let issues = validate(&m).unwrap_err();
        let text: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
        assert!(text.iter().any(|t| t.contains("rho must be positive")), "{text:?}");
        assert!(text.iter().any(|t| t.contains("degenerate dispersion")), "{text:?}");
        assert!(text.iter().any(|t| t.contains("poisson")), "{text:?}");
        assert_eq!(issues.len(), 3);
    }

    #[test]
    fn von_karman_needs_plate() {
        let mut m = string_spec();
        m.nonlinearity = Nonlinearity::VonKarman;
        let issues = validate(&m).unwrap_err();
        assert_eq!(issues[0].field, "nonlinearity");
    }

    #[test]
    fn validation_is_idempotent() {
        let v = validate(&plate_spec()).unwrap();
        let again = validate(v.spec()).unwrap();
        assert_eq!(v, again);
    }

    #[test]
    fn json_round_trip() {
        let m = plate_spec();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"kind\":\"rect_plate\""));
        let back: ModelSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
