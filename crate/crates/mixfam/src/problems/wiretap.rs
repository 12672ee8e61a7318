//! Secrecy-capacity problems. The general case optimizes over joints on
//! 𝒱×𝒳 (an auxiliary prefix variable V feeding the channel input); the
//! degraded case needs no auxiliary variable and maximizes I(X;Y|Z) through
//! a joint-output channel.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::family::{Distribution, MixtureFamily};
use crate::problems::{Channel, FamilyKind, ProblemInstance, ReportTransform, Sign};
use crate::solver::PsiOracle;

/// Ψ over 𝒱×𝒳 (index v·|𝒳| + x):
/// D(W_Z·P_{X|V=v} ‖ W_Z·P_X) − D(W_Y·P_{X|V=v} ‖ W_Y·P_X), constant in x
/// for fixed v. G is then I(V;Z) − I(V;Y).
struct WiretapPsi {
    w_y: Channel,
    w_z: Channel,
    v_size: usize,
}

fn divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a.ln() - b.ln()))
        .sum()
}

impl PsiOracle for WiretapPsi {
    fn eval(&self, p: &Distribution) -> Vec<f64> {
        let nx = self.w_y.input_size();
        let nv = self.v_size;
        let probs = p.probs();
        let mut p_x = vec![0.0; nx];
        for v in 0..nv {
            for x in 0..nx {
                p_x[x] += probs[v * nx + x];
            }
        }
        let p_x = match Distribution::new(p_x) {
            Ok(d) => d,
            Err(_) => return vec![f64::NAN; p.len()],
        };
        let my = self.w_y.output_marginal(&p_x).expect("size checked");
        let mz = self.w_z.output_marginal(&p_x).expect("size checked");

        let mut out = vec![0.0; nv * nx];
        for v in 0..nv {
            let pv: f64 = (0..nx).map(|x| probs[v * nx + x]).sum();
            let cond =
                Distribution::normalized((0..nx).map(|x| probs[v * nx + x]).collect());
            let cond = match cond {
                Ok(d) => d,
                Err(_) => return vec![f64::NAN; p.len()],
            };
            let _ = pv;
            let my_v = self.w_y.output_marginal(&cond).expect("size checked");
            let mz_v = self.w_z.output_marginal(&cond).expect("size checked");
            let value = divergence(&mz_v, &mz) - divergence(&my_v, &my);
            for x in 0..nx {
                out[v * nx + x] = value;
            }
        }
        out
    }

    fn domain_is_full_simplex(&self) -> bool {
        true
    }
}

/// Ψ over 𝒳 for the prefix-free choice V = X:
/// D(W_Z(·|x) ‖ W_Z·P) − D(W_Y(·|x) ‖ W_Y·P), so G = I(X;Z) − I(X;Y).
struct WiretapNoPrefixPsi {
    w_y: Channel,
    w_z: Channel,
}

impl PsiOracle for WiretapNoPrefixPsi {
    fn eval(&self, p: &Distribution) -> Vec<f64> {
        let my = match self.w_y.output_marginal(p) {
            Ok(m) => m,
            Err(_) => return vec![f64::NAN; p.len()],
        };
        let mz = self.w_z.output_marginal(p).expect("size checked");
        (0..p.len())
            .map(|x| self.w_z.row_divergence(x, &mz) - self.w_y.row_divergence(x, &my))
            .collect()
    }

    fn domain_is_full_simplex(&self) -> bool {
        true
    }
}

/// Secrecy capacity max I(V;Y) − I(V;Z) over joints on 𝒱×𝒳, as
/// −min G. `v_size = 1` selects the prefix-free formulation V = X over 𝒳
/// itself (a singleton prefix alphabet would force V independent of X and
/// make the objective identically zero). Neither descent condition is known
/// to hold in general, so the instance is flagged for multi-restart runs.
pub fn wiretap_general(w_y: Channel, w_z: Channel, v_size: usize) -> Result<ProblemInstance> {
    if w_y.input_size() != w_z.input_size() {
        return Err(Error::DimensionMismatch {
            expected: w_y.input_size(),
            got: w_z.input_size(),
        });
    }
    if v_size == 0 {
        return Err(Error::InvalidParameter("v_size = 0".into()));
    }
    let nx = w_y.input_size();
    let (psi, n): (Arc<dyn PsiOracle>, usize) = if v_size == 1 {
        (Arc::new(WiretapNoPrefixPsi { w_y, w_z }), nx)
    } else {
        (
            Arc::new(WiretapPsi { w_y, w_z, v_size }),
            v_size * nx,
        )
    };
    Ok(ProblemInstance {
        psi,
        family: FamilyKind::Mixture(MixtureFamily::full_simplex(n)),
        recommended_gamma: 1.0,
        sign: Sign::MaximizeViaNegation,
        transform: ReportTransform::Negate,
        multi_restart: true,
        label: "wiretap-general",
    })
}

/// Ψ over 𝒳 for a joint-output channel W(y,z|x) (output index y·|𝒵| + z):
/// Ψ(x) = −Σ_z P(z|x)·D(P_{Y|x,z} ‖ P_{Y|z}), so G = −I(X;Y|Z).
struct DegradedPsi {
    w_yz: Channel,
    z_size: usize,
}

impl PsiOracle for DegradedPsi {
    fn eval(&self, p: &Distribution) -> Vec<f64> {
        let nx = self.w_yz.input_size();
        let nz = self.z_size;
        let ny = self.w_yz.output_size() / nz;
        let probs = p.probs();

        // Joint output marginal P_YZ(y,z) and its z-marginal.
        let mut p_yz = vec![0.0; ny * nz];
        for (x, row) in self.w_yz.rows().iter().enumerate() {
            for (out, &w) in p_yz.iter_mut().zip(row) {
                *out += probs[x] * w;
            }
        }
        let mut p_z = vec![0.0; nz];
        for y in 0..ny {
            for z in 0..nz {
                p_z[z] += p_yz[y * nz + z];
            }
        }

        (0..nx)
            .map(|x| {
                let row = &self.w_yz.rows()[x];
                let mut total = 0.0;
                for z in 0..nz {
                    let pz_x: f64 = (0..ny).map(|y| row[y * nz + z]).sum();
                    if pz_x <= 0.0 || p_z[z] <= 0.0 {
                        continue;
                    }
                    // Σ_y W(y,z|x)·ln[(W(y,z|x)/P(z|x)) / (P_YZ(y,z)/P_Z(z))]
                    for y in 0..ny {
                        let w = row[y * nz + z];
                        if w > 0.0 {
                            total += w
                                * ((w / pz_x).ln() - (p_yz[y * nz + z] / p_z[z]).ln());
                        }
                    }
                }
                -total
            })
            .collect()
    }

    fn domain_is_full_simplex(&self) -> bool {
        true
    }
}

/// Secrecy capacity max_P I(X;Y|Z) for an eavesdropper output Z that is a
/// degraded version of Y, given through the joint-output channel W(y,z|x)
/// with output index y·z_size + z. Descent holds at γ = 1.
pub fn wiretap_degraded(w_yz: Channel, z_size: usize) -> Result<ProblemInstance> {
    if z_size == 0 || w_yz.output_size() % z_size != 0 {
        return Err(Error::InvalidParameter(format!(
            "output size {} is not a multiple of z_size {z_size}; note that \
             all-zero (y,z) columns are stripped at channel construction",
            w_yz.output_size()
        )));
    }
    let n = w_yz.input_size();
    Ok(ProblemInstance {
        psi: Arc::new(DegradedPsi { w_yz, z_size }),
        family: FamilyKind::Mixture(MixtureFamily::full_simplex(n)),
        recommended_gamma: 1.0,
        sign: Sign::MaximizeViaNegation,
        transform: ReportTransform::Negate,
        multi_restart: false,
        label: "wiretap-degraded",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{bsc_capacity, grid_minimize, GridSpec};
    use crate::problems::channel_capacity;

    #[test]
    fn useless_eavesdropper_reduces_to_capacity() {
        let p = 0.1;
        let w_y = Channel::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap();
        let w_z = Channel::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let prob = wiretap_general(w_y, w_z, 1).unwrap();
        let result = prob.solve_restarts(&prob.default_config(), 3, 5).unwrap();
        assert!(
            (prob.headline(result.objective) - bsc_capacity(p).unwrap()).abs() < 1e-8
        );
    }

    #[test]
    fn identical_channels_leak_everything() {
        let w = Channel::new(vec![vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap();
        for v_size in [1, 2] {
            let prob = wiretap_general(w.clone(), w.clone(), v_size).unwrap();
            let result = prob.solve(&prob.default_config()).unwrap();
            assert!(prob.headline(result.objective).abs() < 1e-10);
        }
    }

    #[test]
    fn small_instance_matches_grid_with_restarts() {
        let w_y = Channel::new(vec![vec![0.95, 0.05], vec![0.1, 0.9]]).unwrap();
        let w_z = Channel::new(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
        let prob = wiretap_general(w_y, w_z, 2).unwrap();
        let best = prob.solve_restarts(&prob.default_config(), 10, 3).unwrap();
        let spec = GridSpec::new(60, 1e-9).unwrap();
        let grid = grid_minimize(
            prob.psi.as_ref(),
            prob.family.as_projection(),
            &spec,
        )
        .unwrap();
        assert!(
            (best.objective - grid.value).abs() < 2e-3,
            "{} vs {}",
            best.objective,
            grid.value
        );
    }

    fn independent_z_channel(p: f64, qz: &[f64; 2]) -> Channel {
        // W(y,z|x) = W_bsc(y|x)·q(z); output index y·2 + z.
        let bsc = [[1.0 - p, p], [p, 1.0 - p]];
        Channel::new(
            (0..2)
                .map(|x| {
                    let mut row = Vec::with_capacity(4);
                    for y in 0..2 {
                        for z in 0..2 {
                            row.push(bsc[x][y] * qz[z]);
                        }
                    }
                    row
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn independent_eavesdropper_gives_plain_capacity() {
        let w_yz = independent_z_channel(0.1, &[0.4, 0.6]);
        let prob = wiretap_degraded(w_yz, 2).unwrap();
        let result = prob.solve(&prob.default_config()).unwrap();
        assert!(
            (prob.headline(result.objective) - bsc_capacity(0.1).unwrap()).abs() < 1e-8
        );
    }

    #[test]
    fn near_equal_outputs_give_near_zero() {
        // Z ≈ Y through a 1e-3-noisy copy; I(X;Y|Z) is then O(h(1e-3)).
        let p = 0.1;
        let bsc = [[1.0 - p, p], [p, 1.0 - p]];
        let eps = 1e-3;
        let w_yz = Channel::new(
            (0..2)
                .map(|x| {
                    let mut row = Vec::with_capacity(4);
                    for y in 0..2 {
                        for z in 0..2 {
                            let copy = if y == z { 1.0 - eps } else { eps };
                            row.push(bsc[x][y] * copy);
                        }
                    }
                    row
                })
                .collect(),
        )
        .unwrap();
        let prob = wiretap_degraded(w_yz, 2).unwrap();
        let result = prob.solve(&prob.default_config()).unwrap();
        let c = prob.headline(result.objective);
        assert!((0.0..0.02).contains(&c), "c = {c}");
    }

    #[test]
    fn degraded_matches_grid() {
        let w_yz = Channel::new(vec![
            vec![0.5, 0.2, 0.2, 0.1],
            vec![0.1, 0.3, 0.2, 0.4],
        ])
        .unwrap();
        let prob = wiretap_degraded(w_yz, 2).unwrap();
        let result = prob.solve(&prob.default_config()).unwrap();
        let spec = GridSpec::new(2000, 1e-9).unwrap();
        let grid = grid_minimize(
            prob.psi.as_ref(),
            prob.family.as_projection(),
            &spec,
        )
        .unwrap();
        assert!((result.objective - grid.value).abs() < 1e-5);
    }

    #[test]
    fn degraded_rejects_mismatched_z_size() {
        let w_yz = Channel::new(vec![vec![0.5, 0.2, 0.3], vec![0.1, 0.3, 0.6]]).unwrap();
        assert!(wiretap_degraded(w_yz, 2).is_err());
    }

    #[test]
    fn no_prefix_equals_capacity_difference_form() {
        // v_size = 1: the objective at P is I(X;Y) − I(X;Z) exactly.
        let w_y = Channel::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let w_z = Channel::new(vec![vec![0.6, 0.4], vec![0.45, 0.55]]).unwrap();
        let prob = wiretap_general(w_y.clone(), w_z.clone(), 1).unwrap();
        let p = Distribution::new(vec![0.3, 0.7]).unwrap();
        let g = crate::solver::objective(&p, prob.psi.as_ref()).unwrap();
        let cap_y = channel_capacity(w_y).unwrap();
        let cap_z = channel_capacity(w_z).unwrap();
        let iy = -crate::solver::objective(&p, cap_y.psi.as_ref()).unwrap();
        let iz = -crate::solver::objective(&p, cap_z.psi.as_ref()).unwrap();
        assert!((-g - (iy - iz)).abs() < 1e-12);
    }
}
