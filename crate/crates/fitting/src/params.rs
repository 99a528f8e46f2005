//! Fittable parameters, their transforms, and the fixed model structure they
//! plug into.

use serde::{Deserialize, Serialize};

use modal_coupling::{c_from_h, CouplingTensors, VkContraction};
use modal_core::error::{Error, Result};
use modal_integrators::{
    ftm_coeffs, sv_coeffs, Damping, ModalSystem, NonlinearHook, OscillatorBank, SchemeCoeffs, SchemeKind, TensionHook,
};
use modal_core::model::{derive_normalized, von_karman_prefactor, Nonlinearity, ValidatedSpec};
use modal_core::modes::ModeBasis;

/// Structure of the nonlinear term that stays fixed during a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilyNonlinearity {
    Linear,
    Tension { out_weight: Vec<f64>, energy_weight: Vec<f64> },
    VonKarman { n_psi: usize, zeta4: Vec<f64>, kappa: f64 },
}

/// Everything about a model that is not a free parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFamily {
    pub eigenvalues: Vec<f64>,
    pub scheme: SchemeKind,
    pub sample_rate: f64,
    pub nonlinearity: FamilyNonlinearity,
}

/// Physical values of every parameter a fit can touch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalParams {
    pub d_hat: f64,
    pub t0_hat: f64,
    pub tau: f64,
    pub gamma: Vec<f64>,
    pub b2: Vec<f64>,
    /// Output weights of the readout `y = sum_mu w_mu q_mu`.
    pub weights: Vec<f64>,
    /// Coupling tensor `H[n][i][j]`, empty unless von Kármán.
    pub h: Vec<f64>,
}

/// Derivatives of a scalar with respect to every entry of [`ModalParams`].
/// Symmetric coupling entries are reported per stored element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalGrad(pub ModalParams);

impl ModelFamily {
    /// Family and starting parameters for a validated model. `weights` is
    /// the output readout; `tensors` is required for von Kármán models.
    pub fn from_model(
        spec: &ValidatedSpec,
        basis: &ModeBasis,
        tensors: Option<&CouplingTensors>,
        scheme: SchemeKind,
        sample_rate: f64,
        weights: Vec<f64>,
    ) -> Result<(Self, ModalParams)> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::arg(format!("sample rate must be positive, got {sample_rate}")));
        }
        if weights.len() != basis.len() {
            return Err(Error::arg(format!("expected {} output weights, got {}", basis.len(), weights.len())));
        }
        let norm = derive_normalized(spec);
        let damping = Damping::from_spec(spec);
        let lam = basis.eigenvalues().to_vec();
        let (nonlinearity, h) = match spec.nonlinearity {
            Nonlinearity::Linear => (FamilyNonlinearity::Linear, Vec::new()),
            Nonlinearity::TensionModulated => {
                let hook = TensionHook::new(basis, 1.0);
                (
                    FamilyNonlinearity::Tension { out_weight: hook.out_weight, energy_weight: hook.energy_weight },
                    Vec::new(),
                )
            }
            Nonlinearity::VonKarman => {
                let ct = tensors.ok_or_else(|| {
                    Error::Incompatible("von Kármán fitting needs coupling tensors".into())
                })?;
                if ct.n_phi != basis.len() {
                    return Err(Error::arg("coupling tensors do not match the mode basis"));
                }
                (
                    FamilyNonlinearity::VonKarman {
                        n_psi: ct.n_psi,
                        zeta4: ct.zeta4.clone(),
                        kappa: von_karman_prefactor(spec),
                    },
                    ct.h.clone(),
                )
            }
        };
        let params = ModalParams {
            d_hat: norm.d_hat,
            t0_hat: norm.t0_hat,
            tau: norm.tau,
            gamma: lam.iter().map(|&l| damping.gamma(l)).collect(),
            b2: vec![0.0; lam.len()],
            weights,
            h,
        };
        let family = Self { eigenvalues: lam, scheme, sample_rate, nonlinearity };
        params.check(&family)?;
        Ok((family, params))
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.nonlinearity, FamilyNonlinearity::Linear)
    }

    pub fn n_psi(&self) -> usize {
        match &self.nonlinearity {
            FamilyNonlinearity::VonKarman { n_psi, .. } => *n_psi,
            _ => 0,
        }
    }
}

impl ModalParams {
    pub fn check(&self, family: &ModelFamily) -> Result<()> {
        let m = family.modes();
        if self.gamma.len() != m || self.b2.len() != m || self.weights.len() != m {
            return Err(Error::arg(format!("parameters must have {m} entries per mode")));
        }
        let ns = family.n_psi();
        if self.h.len() != ns * m * m {
            return Err(Error::arg(format!("coupling tensor must have {} entries, got {}", ns * m * m, self.h.len())));
        }
        let scalars = [self.d_hat, self.t0_hat, self.tau];
        if scalars.iter().chain(&self.gamma).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::arg("stiffness, tension, tau and damping must be finite and non-negative"));
        }
        if self.b2.iter().chain(&self.weights).chain(&self.h).any(|v| !v.is_finite()) {
            return Err(Error::arg("parameters must be finite"));
        }
        Ok(())
    }

    /// `omega² = D lambda² + T0 lambda`.
    pub fn omega2(&self, family: &ModelFamily) -> Vec<f64> {
        family.eigenvalues.iter().map(|l| self.d_hat * l * l + self.t0_hat * l).collect()
    }

    pub fn bank(&self, family: &ModelFamily) -> Result<OscillatorBank> {
        OscillatorBank::from_parts(self.omega2(family), self.gamma.clone())
    }

    pub fn hook(&self, family: &ModelFamily) -> Result<NonlinearHook> {
        Ok(match &family.nonlinearity {
            FamilyNonlinearity::Linear => NonlinearHook::Linear,
            FamilyNonlinearity::Tension { out_weight, energy_weight } => NonlinearHook::Tension(TensionHook {
                tau: self.tau,
                out_weight: out_weight.clone(),
                energy_weight: energy_weight.clone(),
            }),
            FamilyNonlinearity::VonKarman { n_psi, zeta4, kappa } => {
                let m = family.modes();
                let ct =
                    CouplingTensors::from_parts(m, *n_psi, self.h.clone(), c_from_h(&self.h, m, *n_psi), zeta4.clone())?;
                NonlinearHook::VonKarman(VkContraction::new(&ct, *kappa))
            }
        })
    }

    /// Runnable system; the transfer-function scheme rejects overdamped modes.
    pub fn system(&self, family: &ModelFamily) -> Result<ModalSystem> {
        self.check(family)?;
        let bank = self.bank(family)?;
        let coeffs = match family.scheme {
            SchemeKind::Ftm => SchemeCoeffs::Ftm(ftm_coeffs(&bank, family.period(), Some(&self.b2))?),
            SchemeKind::Sv => SchemeCoeffs::Sv(sv_coeffs(&bank, family.period())?),
        };
        ModalSystem::new(bank, coeffs, self.hook(family)?)
    }

    /// All-zero parameters shaped like `self`.
    pub fn zeros_like(&self) -> Self {
        Self {
            d_hat: 0.0,
            t0_hat: 0.0,
            tau: 0.0,
            gamma: vec![0.0; self.gamma.len()],
            b2: vec![0.0; self.b2.len()],
            weights: vec![0.0; self.weights.len()],
            h: vec![0.0; self.h.len()],
        }
    }

    fn h_index(&self, n: usize, i: usize, j: usize) -> usize {
        let m = self.weights.len();
        (n * m + i) * m + j
    }

    pub fn get(&self, kind: ParamKind) -> f64 {
        match kind {
            ParamKind::StiffnessHat => self.d_hat,
            ParamKind::TensionHat => self.t0_hat,
            ParamKind::Tau => self.tau,
            ParamKind::Gamma(k) => self.gamma[k],
            ParamKind::B2(k) => self.b2[k],
            ParamKind::Weight(k) => self.weights[k],
            ParamKind::Coupling { n, i, j } => self.h[self.h_index(n, i, j)],
        }
    }

    /// Sets a value; coupling entries are written symmetrically.
    pub fn set(&mut self, kind: ParamKind, value: f64) {
        match kind {
            ParamKind::StiffnessHat => self.d_hat = value,
            ParamKind::TensionHat => self.t0_hat = value,
            ParamKind::Tau => self.tau = value,
            ParamKind::Gamma(k) => self.gamma[k] = value,
            ParamKind::B2(k) => self.b2[k] = value,
            ParamKind::Weight(k) => self.weights[k] = value,
            ParamKind::Coupling { n, i, j } => {
                let (a, b) = (self.h_index(n, i, j), self.h_index(n, j, i));
                self.h[a] = value;
                self.h[b] = value;
            }
        }
    }
}

impl ModalGrad {
    pub fn zeros_like(params: &ModalParams) -> Self {
        Self(params.zeros_like())
    }

    /// Derivative with respect to one free parameter; a symmetric coupling
    /// parameter moves two stored entries.
    pub fn get(&self, kind: ParamKind) -> f64 {
        match kind {
            ParamKind::Coupling { n, i, j } if i != j => {
                let g = &self.0;
                g.h[g.h_index(n, i, j)] + g.h[g.h_index(n, j, i)]
            }
            other => self.0.get(other),
        }
    }
}

/// One free parameter. Coupling entries are symmetric in `(i, j)` and are
/// named with `i <= j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "kebab-case")]
pub enum ParamKind {
    StiffnessHat,
    TensionHat,
    Tau,
    Gamma(usize),
    B2(usize),
    Weight(usize),
    Coupling { n: usize, i: usize, j: usize },
}

impl ParamKind {
    /// Every damping parameter of a family.
    pub fn all_gamma(modes: usize) -> Vec<Self> {
        (0..modes).map(ParamKind::Gamma).collect()
    }

    pub fn all_b2(modes: usize) -> Vec<Self> {
        (0..modes).map(ParamKind::B2).collect()
    }

    pub fn all_weights(modes: usize) -> Vec<Self> {
        (0..modes).map(ParamKind::Weight).collect()
    }

    /// Independent entries of a symmetric coupling tensor.
    pub fn all_coupling(n_psi: usize, modes: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for n in 0..n_psi {
            for i in 0..modes {
                for j in i..modes {
                    out.push(ParamKind::Coupling { n, i, j });
                }
            }
        }
        out
    }

    pub fn group(&self) -> &'static str {
        match self {
            ParamKind::StiffnessHat => "stiffness",
            ParamKind::TensionHat => "tension",
            ParamKind::Tau => "tau",
            ParamKind::Gamma(_) => "gamma",
            ParamKind::B2(_) => "b2",
            ParamKind::Weight(_) => "weight",
            ParamKind::Coupling { .. } => "coupling",
        }
    }

    /// Checks the parameter exists in this family.
    fn check(&self, family: &ModelFamily) -> Result<()> {
        let m = family.modes();
        let ok = match *self {
            ParamKind::StiffnessHat | ParamKind::TensionHat => true,
            ParamKind::Tau => matches!(family.nonlinearity, FamilyNonlinearity::Tension { .. }),
            ParamKind::Gamma(k) | ParamKind::Weight(k) => k < m,
            ParamKind::B2(k) => k < m && family.scheme == SchemeKind::Ftm,
            ParamKind::Coupling { n, i, j } => n < family.n_psi() && i <= j && j < m,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::arg(format!("parameter {self:?} does not exist in this model")))
        }
    }
}

impl std::fmt::Display for ParamKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamKind::StiffnessHat => write!(f, "d_hat"),
            ParamKind::TensionHat => write!(f, "t0_hat"),
            ParamKind::Tau => write!(f, "tau"),
            ParamKind::Gamma(k) => write!(f, "gamma[{k}]"),
            ParamKind::B2(k) => write!(f, "b2[{k}]"),
            ParamKind::Weight(k) => write!(f, "weight[{k}]"),
            ParamKind::Coupling { n, i, j } => write!(f, "h[{n}][{i}][{j}]"),
        }
    }
}

impl ParamKind {
    /// Expands a selector into parameters of `family`: a single parameter as
    /// printed by `Display` (`gamma[3]`, `h[0][1][2]`), or a whole group
    /// (`gamma`, `b2`, `weights`, `h`).
    pub fn select(selector: &str, family: &ModelFamily) -> Result<Vec<Self>> {
        let modes = family.modes();
        let sel = selector.trim();
        let group = match sel {
            "d_hat" => Some(vec![ParamKind::StiffnessHat]),
            "t0_hat" => Some(vec![ParamKind::TensionHat]),
            "tau" => Some(vec![ParamKind::Tau]),
            "gamma" => Some(Self::all_gamma(modes)),
            "b2" => Some(Self::all_b2(modes)),
            "weights" | "weight" => Some(Self::all_weights(modes)),
            "h" => Some(Self::all_coupling(family.n_psi(), modes)),
            _ => None,
        };
        if let Some(kinds) = group {
            return Ok(kinds);
        }
        let bad = || Error::arg(format!("unknown parameter selector {sel:?}"));
        let open = sel.find('[').ok_or_else(bad)?;
        let (name, rest) = sel.split_at(open);
        let indices: Vec<usize> = rest
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(bad)?
            .split("][")
            .map(|v| v.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let kind = match (name, indices.as_slice()) {
            ("gamma", [k]) => ParamKind::Gamma(*k),
            ("b2", [k]) => ParamKind::B2(*k),
            ("weight", [k]) => ParamKind::Weight(*k),
            ("h", [n, i, j]) => ParamKind::Coupling { n: *n, i: (*i).min(*j), j: (*i).max(*j) },
            _ => return Err(bad()),
        };
        Ok(vec![kind])
    }
}

/// Map from the optimiser's unconstrained value `r` to a physical value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Transform {
    /// `exp(r)`, strictly positive.
    Log,
    /// `scale ln(1 + e^r)`, strictly positive; keeps decay rates, and so
    /// every pole, inside the stable region.
    Softplus { scale: f64 },
    /// `scale r`.
    Linear { scale: f64 },
}

impl Transform {
    pub fn forward(self, raw: f64) -> f64 {
        match self {
            Transform::Log => raw.exp(),
            Transform::Softplus { scale } => scale * softplus(raw),
            Transform::Linear { scale } => scale * raw,
        }
    }

    /// `d phys / d raw`.
    pub fn derivative(self, raw: f64) -> f64 {
        match self {
            Transform::Log => raw.exp(),
            Transform::Softplus { scale } => scale * sigmoid(raw),
            Transform::Linear { scale } => scale,
        }
    }

    /// Typical magnitude of the physical value per unit of `r`.
    pub fn scale(self) -> f64 {
        match self {
            Transform::Log => 1.0,
            Transform::Softplus { scale } | Transform::Linear { scale } => scale,
        }
    }

    pub fn inverse(self, phys: f64) -> Result<f64> {
        match self {
            Transform::Log | Transform::Softplus { .. } if !(phys > 0.0) => {
                Err(Error::arg(format!("positive parameter has value {phys}")))
            }
            Transform::Log => Ok(phys.ln()),
            Transform::Softplus { scale } => {
                let v = phys / scale;
                // ln(e^v - 1) without overflow
                Ok(v + (-(-v).exp_m1()).ln())
            }
            Transform::Linear { scale } => Ok(phys / scale),
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// The selected free parameters with their transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub kinds: Vec<ParamKind>,
    pub transforms: Vec<Transform>,
}

impl ParamVector {
    /// Default transforms: log for positive scalars, softplus for damping,
    /// linear with a magnitude-matched scale for the rest.
    pub fn new(kinds: Vec<ParamKind>, family: &ModelFamily, params: &ModalParams) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::arg("no free parameters selected"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for k in &kinds {
            k.check(family)?;
            if !seen.insert(*k) {
                return Err(Error::arg(format!("parameter {k} listed twice")));
            }
        }
        let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len().max(1) as f64).sqrt();
        let h_scale = Some(rms(&params.h)).filter(|s| *s > 0.0).unwrap_or(1.0);
        let period = family.period();
        let transforms = kinds
            .iter()
            .map(|k| match k {
                ParamKind::StiffnessHat | ParamKind::TensionHat | ParamKind::Tau => Transform::Log,
                ParamKind::Gamma(_) => Transform::Softplus { scale: 1.0 },
                ParamKind::B2(_) => Transform::Linear { scale: period * period },
                ParamKind::Weight(_) => Transform::Linear { scale: 1.0 },
                ParamKind::Coupling { .. } => Transform::Linear { scale: h_scale },
            })
            .collect();
        Ok(Self { kinds, transforms })
    }

    pub fn with_transform(mut self, kind: ParamKind, transform: Transform) -> Result<Self> {
        let pos = self
            .kinds
            .iter()
            .position(|k| *k == kind)
            .ok_or_else(|| Error::arg(format!("{kind} is not a free parameter")))?;
        self.transforms[pos] = transform;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn to_raw(&self, params: &ModalParams) -> Result<Vec<f64>> {
        self.kinds.iter().zip(&self.transforms).map(|(k, t)| t.inverse(params.get(*k))).collect()
    }

    /// `base` with the free parameters replaced by the transformed raw values.
    pub fn apply(&self, raw: &[f64], base: &ModalParams) -> ModalParams {
        let mut p = base.clone();
        for ((k, t), r) in self.kinds.iter().zip(&self.transforms).zip(raw) {
            p.set(*k, t.forward(*r));
        }
        p
    }

    /// Gradient with respect to the physical values of the free parameters.
    pub fn physical_grad(&self, grad: &ModalGrad) -> Vec<f64> {
        self.kinds.iter().map(|k| grad.get(*k)).collect()
    }

    /// Chain rule through the transforms.
    pub fn raw_grad(&self, grad: &ModalGrad, raw: &[f64]) -> Vec<f64> {
        self.kinds.iter().zip(&self.transforms).zip(raw).map(|((k, t), r)| grad.get(*k) * t.derivative(*r)).collect()
    }
}
