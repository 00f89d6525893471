//! Normalized problem data shared by the solvers.
//!
//! Channels are divided by `σ·κ` with `κ² = mean_t ‖h_ab,t‖² / σ²`, which
//! makes the noise power one and keeps the transmit power near unity.
//! A normalized power `P′` corresponds to `P = P′ / κ²` watts.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{effective, lift_channels, BeamformingSolution, CVec, LiftedChannels};
use crate::scenario::Scenario;

#[derive(Clone, Debug)]
pub struct Instance {
    pub lifted: LiftedChannels,
    pub gamma_s: f64,
    /// `κ²`: normalized power per watt.
    pub power_scale: f64,
    pub m: usize,
    pub n: usize,
    pub groups: usize,
}

impl Instance {
    pub fn new(scenario: &Scenario) -> Result<Instance> {
        let lifted = lift_channels(&scenario.channels, &scenario.config)?;
        Self::from_lifted(lifted, scenario.config.sigma2, scenario.config.gamma_s)
    }

    pub fn from_lifted(lifted: LiftedChannels, sigma2: f64, gamma_s: f64) -> Result<Instance> {
        let n = lifted.n();
        let gain: f64 = lifted
            .h_kj
            .iter()
            .map(|h| h.row(n).norm_squared())
            .sum::<f64>()
            / lifted.h_kj.len() as f64;
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(Error::Domain("direct channels carry no energy".into()));
        }
        let kappa2 = gain / sigma2;
        let lifted = lifted.scaled(1.0 / gain.sqrt());
        Ok(Instance {
            m: lifted.m(),
            n,
            groups: lifted.groups,
            lifted,
            gamma_s,
            power_scale: kappa2,
        })
    }

    pub fn users(&self) -> usize {
        self.lifted.users.len()
    }

    pub fn eves(&self) -> usize {
        self.lifted.eves()
    }

    /// `2^{γ_s}`.
    pub fn rate_factor(&self) -> f64 {
        2f64.powf(self.gamma_s)
    }

    pub fn to_watts(&self, p: f64) -> f64 {
        p / self.power_scale
    }

    pub fn to_physical(&self, sol: &BeamformingSolution) -> BeamformingSolution {
        sol.scaled(1.0 / self.power_scale.sqrt())
    }

    pub fn to_normalized(&self, sol: &BeamformingSolution) -> BeamformingSolution {
        sol.scaled(self.power_scale.sqrt())
    }

    /// Effective channels `H_tᴴ u` for every user and every Eve.
    pub fn effective_channels(&self, u: &CVec) -> (Vec<CVec>, Vec<CVec>) {
        (
            self.lifted.h_kj.iter().map(|h| effective(h, u)).collect(),
            self.lifted.h_l.iter().map(|h| effective(h, u)).collect(),
        )
    }

    /// Minimum over `(k, j, l)` of `ln(1+SINR_b) − ln(1+SINR_e) − γ_s ln 2`
    /// with unit noise.
    pub fn log_margin(&self, sol: &BeamformingSolution) -> f64 {
        let (cb, ce) = self.effective_channels(&sol.u());
        let eve: Vec<Vec<f64>> = (0..self.groups)
            .map(|k| ce.iter().map(|c| sinr1(c, &sol.w, k, &sol.q_an)).collect())
            .collect();
        let mut m = f64::INFINITY;
        for (t, &(k, _)) in self.lifted.users.iter().enumerate() {
            let b = sinr1(&cb[t], &sol.w, k, &sol.q_an).ln_1p();
            for e in &eve[k] {
                m = m.min(b - e.ln_1p());
            }
        }
        m - self.gamma_s * std::f64::consts::LN_2
    }

    /// Same model with only the direct links.
    pub fn without_irs(&self) -> Instance {
        let n = self.n;
        let strip = |h: &crate::model::CMat| h.rows(n, 1).into_owned();
        Instance {
            lifted: LiftedChannels {
                users: self.lifted.users.clone(),
                groups: self.groups,
                h_kj: self.lifted.h_kj.iter().map(strip).collect(),
                h_l: self.lifted.h_l.iter().map(strip).collect(),
            },
            n: 0,
            ..self.clone()
        }
    }
}

/// SINR with unit noise.
pub fn sinr1(c: &CVec, w: &[CVec], k: usize, q: &CVec) -> f64 {
    crate::model::sinr(c, w, k, q, 1.0)
}

pub(crate) fn unit_phases(theta: impl Iterator<Item = f64>) -> CVec {
    let v: Vec<Complex64> = theta.map(|t| Complex64::from_polar(1.0, t)).collect();
    CVec::from_vec(v)
}
