//! Parameter recovery: spectral losses, exact gradients through the
//! simulation and transfer function, and the multi-start optimiser.

mod adjoint;
mod fit;
mod loss;
mod objective;
mod optim;
mod params;

pub use fit::{
    fit, fit_frequency_domain, fit_time_domain, FitConfig, FitDomain, FitResult, InitRange, InitRanges, Schedule,
    StartResult, StartStatus,
};
pub use loss::{loss_log, loss_sc, loss_sot, loss_total, loss_with_grad, Layout, LossValue, LossWeights};
pub use objective::{
    gradient, FrequencyDomainObjective, GradientEntry, GradientReport, Objective, TimeDomainObjective,
    FD_RELATIVE_STEP, FD_STEP_LADDER,
};
pub use optim::{adam_step, one_cycle_lr, AdamConfig, AdamState, WARMUP_FRACTION};
pub use params::{FamilyNonlinearity, ModalGrad, ModalParams, ModelFamily, ParamKind, ParamVector, Transform};
