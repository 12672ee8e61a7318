//! Channel capacity as minimization of G(P) = −I(P,W) over the input
//! simplex: Ψ[P](x) = −D(W(·|x) ‖ W·P). At γ = 1 the update is the
//! Arimoto-Blahut iteration.

use std::sync::Arc;

use crate::error::Result;
use crate::family::{Distribution, MixtureFamily};
use crate::problems::{Channel, FamilyKind, ProblemInstance, ReportTransform, Sign};
use crate::solver::PsiOracle;

pub(crate) struct CapacityPsi {
    pub(crate) w: Channel,
}

impl PsiOracle for CapacityPsi {
    fn eval(&self, p: &Distribution) -> Vec<f64> {
        let m = match self.w.output_marginal(p) {
            Ok(m) => m,
            Err(_) => return vec![f64::NAN; p.len()],
        };
        (0..self.w.input_size())
            .map(|x| -self.w.row_divergence(x, &m))
            .collect()
    }

    fn domain_is_full_simplex(&self) -> bool {
        true
    }
}

/// Capacity = −min G; descent holds at γ = 1.
pub fn channel_capacity(w: Channel) -> Result<ProblemInstance> {
    let n = w.input_size();
    Ok(ProblemInstance {
        psi: Arc::new(CapacityPsi { w }),
        family: FamilyKind::Mixture(MixtureFamily::full_simplex(n)),
        recommended_gamma: 1.0,
        sign: Sign::Minimize,
        transform: ReportTransform::Negate,
        multi_restart: false,
        label: "channel-capacity",
    })
}
