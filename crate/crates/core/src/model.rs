//! Lifted channels and exact evaluation of rates and power.
//!
//! With `u = [v; 1]` the effective channel of user `(k, j)` is `uᴴ H_kj`,
//! where `H_kj` stacks the cascaded IRS rows `diag(h_ibᴴ) G` over the direct
//! row `h_abᴴ`. The phase vector follows the `v = [e^{jθ_1}, …]ᴴ` convention,
//! so `v_n = e^{−jθ_n}` with `θ` the physical phase shift of element `n`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{from_pairs, to_pairs, ChannelSet, Pair, SystemConfig};
use crate::units::watts_to_dbm;

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

#[derive(Clone, Debug, PartialEq)]
pub struct LiftedChannels {
    /// `(group, member)` of every user, flat order.
    pub users: Vec<(usize, usize)>,
    pub groups: usize,
    /// `(N+1) × M` per user.
    pub h_kj: Vec<CMat>,
    /// `(N+1) × M` per eavesdropper.
    pub h_l: Vec<CMat>,
}

impl LiftedChannels {
    pub fn n(&self) -> usize {
        self.h_kj[0].nrows() - 1
    }

    pub fn m(&self) -> usize {
        self.h_kj[0].ncols()
    }

    pub fn eves(&self) -> usize {
        self.h_l.len()
    }

    pub fn user_index(&self, k: usize, j: usize) -> Option<usize> {
        self.users.iter().position(|&u| u == (k, j))
    }

    /// Multiplies every channel by `s`.
    pub fn scaled(&self, s: f64) -> LiftedChannels {
        let f = Complex64::new(s, 0.0);
        LiftedChannels {
            users: self.users.clone(),
            groups: self.groups,
            h_kj: self.h_kj.iter().map(|h| h * f).collect(),
            h_l: self.h_l.iter().map(|h| h * f).collect(),
        }
    }
}

fn lift_one(g: &CMat, h_direct: &CVec, h_irs: &CVec, beta: f64) -> CMat {
    let (n, m) = g.shape();
    let mut out = CMat::zeros(n + 1, m);
    for r in 0..n {
        let a = h_irs[r].conj() * beta;
        for c in 0..m {
            out[(r, c)] = a * g[(r, c)];
        }
    }
    for c in 0..m {
        out[(n, c)] = h_direct[c].conj();
    }
    out
}

pub fn lift_channels(channels: &ChannelSet, config: &SystemConfig) -> Result<LiftedChannels> {
    config.validate()?;
    channels.validate(config)?;
    let users = config.users();
    let h_kj = users
        .iter()
        .enumerate()
        .map(|(t, _)| lift_one(&channels.g, &channels.h_ab[t], &channels.h_ib[t], config.beta))
        .collect();
    let h_l = (0..config.l)
        .map(|l| lift_one(&channels.g, &channels.h_ae[l], &channels.h_ie[l], config.beta))
        .collect();
    Ok(LiftedChannels {
        users,
        groups: config.k,
        h_kj,
        h_l,
    })
}

/// `u = [v; 1]`.
pub fn extend_phase(v: &CVec) -> CVec {
    let n = v.len();
    CVec::from_fn(n + 1, |i, _| if i < n { v[i] } else { Complex64::new(1.0, 0.0) })
}

/// `c = Hᴴ u`, so that `uᴴ H w = cᴴ w`.
pub fn effective(h: &CMat, u: &CVec) -> CVec {
    h.adjoint() * u
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamformingSolution {
    /// One beamformer per group.
    pub w: Vec<CVec>,
    pub q_an: CVec,
    /// IRS coefficients, `v_n = e^{−jθ_n}`.
    pub v: CVec,
    pub theta: Vec<f64>,
}

impl BeamformingSolution {
    pub fn new(w: Vec<CVec>, q_an: CVec, v: CVec) -> Self {
        let theta = v.iter().map(|z| -z.arg()).collect();
        BeamformingSolution { w, q_an, v, theta }
    }

    pub fn from_theta(w: Vec<CVec>, q_an: CVec, theta: Vec<f64>) -> Self {
        let v = CVec::from_iterator(theta.len(), theta.iter().map(|t| Complex64::from_polar(1.0, -t)));
        BeamformingSolution { w, q_an, v, theta }
    }

    /// All-zero transmission with the given phases.
    pub fn zero(groups: usize, m: usize, v: CVec) -> Self {
        Self::new(vec![CVec::zeros(m); groups], CVec::zeros(m), v)
    }

    pub fn u(&self) -> CVec {
        extend_phase(&self.v)
    }

    /// Scales every beamformer and the AN vector by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let f = Complex64::new(s, 0.0);
        BeamformingSolution {
            w: self.w.iter().map(|w| w * f).collect(),
            q_an: &self.q_an * f,
            v: self.v.clone(),
            theta: self.theta.clone(),
        }
    }
}

/// `|cᴴ w_k|² / (Σ_{g≠k} |cᴴ w_g|² + |cᴴ q|² + σ²)`.
pub fn sinr(c: &CVec, w: &[CVec], k: usize, q: &CVec, sigma2: f64) -> f64 {
    let p = |x: &CVec| c.dotc(x).norm_sqr();
    let interference: f64 = w
        .iter()
        .enumerate()
        .filter(|(g, _)| *g != k)
        .map(|(_, x)| p(x))
        .sum();
    p(&w[k]) / (interference + p(q) + sigma2)
}

pub fn bob_sinr(sol: &BeamformingSolution, lifted: &LiftedChannels, sigma2: f64, t: usize) -> f64 {
    let (k, _) = lifted.users[t];
    let c = effective(&lifted.h_kj[t], &sol.u());
    sinr(&c, &sol.w, k, &sol.q_an, sigma2)
}

pub fn eve_sinr(sol: &BeamformingSolution, lifted: &LiftedChannels, sigma2: f64, k: usize, l: usize) -> f64 {
    let c = effective(&lifted.h_l[l], &sol.u());
    sinr(&c, &sol.w, k, &sol.q_an, sigma2)
}

/// Rate of user `(k, j)` in bits/s/Hz.
pub fn bob_rate(sol: &BeamformingSolution, lifted: &LiftedChannels, sigma2: f64, k: usize, j: usize) -> f64 {
    let t = lifted.user_index(k, j).expect("unknown user");
    (1.0 + bob_sinr(sol, lifted, sigma2, t)).log2()
}

/// Rate at Eve `l` when decoding group `k`'s stream.
pub fn eve_rate(sol: &BeamformingSolution, lifted: &LiftedChannels, sigma2: f64, k: usize, l: usize) -> f64 {
    (1.0 + eve_sinr(sol, lifted, sigma2, k, l)).log2()
}

/// `[R_b(k,j) − max_l R_e(k,l)]⁺`.
pub fn secrecy_rate(sol: &BeamformingSolution, lifted: &LiftedChannels, sigma2: f64, k: usize, j: usize) -> f64 {
    let rb = bob_rate(sol, lifted, sigma2, k, j);
    let re = (0..lifted.eves())
        .map(|l| eve_rate(sol, lifted, sigma2, k, l))
        .fold(f64::NEG_INFINITY, f64::max);
    (rb - re).max(0.0)
}

/// `Σ_k ‖w_k‖² + ‖q‖²` in watts.
pub fn transmit_power(sol: &BeamformingSolution) -> f64 {
    sol.w.iter().map(|w| w.norm_squared()).sum::<f64>() + sol.q_an.norm_squared()
}

/// `min_{k,j,l} (R_b(k,j) − R_e(k,l)) − γ_s`, unclamped.
pub fn min_secrecy_margin(sol: &BeamformingSolution, lifted: &LiftedChannels, sigma2: f64, gamma_s: f64) -> f64 {
    let u = sol.u();
    let re: Vec<Vec<f64>> = (0..lifted.groups)
        .map(|k| {
            lifted
                .h_l
                .iter()
                .map(|h| (1.0 + sinr(&effective(h, &u), &sol.w, k, &sol.q_an, sigma2)).log2())
                .collect()
        })
        .collect();
    let mut m = f64::INFINITY;
    for (t, &(k, _)) in lifted.users.iter().enumerate() {
        let rb = (1.0 + sinr(&effective(&lifted.h_kj[t], &u), &sol.w, k, &sol.q_an, sigma2)).log2();
        for r in &re[k] {
            m = m.min(rb - r);
        }
    }
    m - gamma_s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub r_b: Vec<f64>,
    /// Strongest Eve per user's group.
    pub r_e_max: Vec<f64>,
    pub r_s: Vec<f64>,
    pub power: f64,
    pub min_secrecy_margin: f64,
    pub max_modulus_error: f64,
    pub feasible: bool,
}

pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-4;

pub fn check_feasible(sol: &BeamformingSolution, lifted: &LiftedChannels, config: &SystemConfig, tol: f64) -> RateReport {
    let sigma2 = config.sigma2;
    let mut r_b = Vec::new();
    let mut r_e_max = Vec::new();
    let mut r_s = Vec::new();
    for &(k, j) in &lifted.users {
        let rb = bob_rate(sol, lifted, sigma2, k, j);
        let re = (0..lifted.eves())
            .map(|l| eve_rate(sol, lifted, sigma2, k, l))
            .fold(f64::NEG_INFINITY, f64::max);
        r_b.push(rb);
        r_e_max.push(re);
        r_s.push((rb - re).max(0.0));
    }
    let max_modulus_error = sol.v.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    let feasible = r_s.iter().all(|&r| r >= config.gamma_s - tol) && max_modulus_error <= tol;
    RateReport {
        r_b,
        r_e_max,
        r_s,
        power: transmit_power(sol),
        min_secrecy_margin: min_secrecy_margin(sol, lifted, sigma2, config.gamma_s),
        max_modulus_error,
        feasible,
    }
}

/// On-disk solution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionFile {
    pub w: Vec<Vec<Pair>>,
    #[serde(rename = "q_AN")]
    pub q_an: Vec<Pair>,
    pub theta: Vec<f64>,
    pub power_w: f64,
    /// Written as `null` for zero power.
    #[serde(deserialize_with = "dbm_or_null")]
    pub power_dbm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RateReport>,
}

fn dbm_or_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
}

impl SolutionFile {
    pub fn new(sol: &BeamformingSolution, rates: Option<RateReport>, method: Option<String>) -> Self {
        let p = transmit_power(sol);
        SolutionFile {
            w: sol.w.iter().map(to_pairs).collect(),
            q_an: to_pairs(&sol.q_an),
            theta: sol.theta.clone(),
            power_w: p,
            power_dbm: watts_to_dbm(p),
            method,
            rates,
        }
    }

    pub fn to_solution(&self, config: &SystemConfig) -> Result<BeamformingSolution> {
        if self.w.len() != config.k
            || self.w.iter().any(|w| w.len() != config.m)
            || self.q_an.len() != config.m
            || self.theta.len() != config.n
        {
            return Err(Error::Dimension("solution does not match the scenario".into()));
        }
        Ok(BeamformingSolution::from_theta(
            self.w.iter().map(|w| from_pairs(w)).collect(),
            from_pairs(&self.q_an),
            self.theta.clone(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Geometry, Preset, Scenario};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rand_cvec(rng: &mut ChaCha8Rng, n: usize) -> CVec {
        CVec::from_fn(n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn random_phases(rng: &mut ChaCha8Rng, n: usize) -> CVec {
        CVec::from_fn(n, |_, _| Complex64::from_polar(1.0, 6.3 * rng.random::<f64>()))
    }

    fn scenario(seed: u64) -> (Scenario, LiftedChannels) {
        let s = Scenario::generate(Preset::Large.config(), Geometry::default(), seed).unwrap();
        let l = lift_channels(&s.channels, &s.config).unwrap();
        (s, l)
    }

    #[test]
    fn zero_irs_links_lift_to_direct_row() {
        let (mut s, _) = scenario(1);
        s.channels.g.fill(c(0.0, 0.0));
        let l = lift_channels(&s.channels, &s.config).unwrap();
        let h = &l.h_kj[2];
        assert!(h.rows(0, 50).iter().all(|z| z.norm() == 0.0));
        for col in 0..8 {
            assert_eq!(h[(50, col)], s.channels.h_ab[2][col].conj());
        }
    }

    #[test]
    fn single_element_row_is_scaled_g_row() {
        let cfg = SystemConfig {
            n: 1,
            ..Preset::Desk.config()
        };
        let s = Scenario::generate(cfg, Geometry::default(), 4).unwrap();
        let l = lift_channels(&s.channels, &s.config).unwrap();
        for col in 0..4 {
            let expect = s.channels.h_ib[0][0].conj() * s.channels.g[(0, col)];
            assert!((l.h_kj[0][(0, col)] - expect).norm() <= 1e-15 * expect.norm());
        }
    }

    #[test]
    fn lifting_identity_against_unlifted_form() {
        let (s, l) = scenario(7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let v = random_phases(&mut rng, 50);
            let w = rand_cvec(&mut rng, 8);
            let u = extend_phase(&v);
            for t in 0..4 {
                let lifted = (u.adjoint() * &l.h_kj[t] * &w)[(0, 0)];
                // vᴴ diag(h_ibᴴ) G w + h_abᴴ w
                let hb = CMat::from_diagonal(&s.channels.h_ib[t].map(|z| z.conj())) * &s.channels.g;
                let direct = (v.adjoint() * hb * &w)[(0, 0)] + s.channels.h_ab[t].dotc(&w);
                assert!((lifted - direct).norm() <= 1e-10 * direct.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn scalar_snr_example() {
        let l = LiftedChannels {
            users: vec![(0, 0)],
            groups: 1,
            h_kj: vec![CMat::from_element(1, 1, c(1.0, 0.0))],
            h_l: vec![CMat::from_element(1, 1, c(0.0, 0.0))],
        };
        let sol = BeamformingSolution::new(vec![CVec::from_element(1, c(1.0, 0.0))], CVec::zeros(1), CVec::zeros(0));
        assert!((bob_rate(&sol, &l, 1.0, 0, 0) - 1.0).abs() < 1e-15);
        assert_eq!(eve_rate(&sol, &l, 1.0, 0, 0), 0.0);
        assert!((secrecy_rate(&sol, &l, 1.0, 0, 0) - 1.0).abs() < 1e-15);
        let zero = BeamformingSolution::zero(1, 1, CVec::zeros(0));
        assert_eq!(bob_rate(&zero, &l, 1.0, 0, 0), 0.0);
    }

    fn unlifted_sinr(direct: &CVec, irs: &CVec, g: &CMat, v: &CVec, w: &[CVec], k: usize, q: &CVec, s2: f64) -> f64 {
        // channel row: h_directᴴ + Σ_n conj(v_n) conj(h_irs,n) G[n,:]
        let eff = |x: &CVec| {
            let mut acc = direct.dotc(x);
            for n in 0..irs.len() {
                let mut gx = c(0.0, 0.0);
                for col in 0..x.len() {
                    gx += g[(n, col)] * x[col];
                }
                acc += v[n].conj() * irs[n].conj() * gx;
            }
            acc.norm_sqr()
        };
        let intf: f64 = (0..w.len()).filter(|&g2| g2 != k).map(|g2| eff(&w[g2])).sum();
        eff(&w[k]) / (intf + eff(q) + s2)
    }

    #[test]
    fn rates_match_unlifted_formulas() {
        let (s, l) = scenario(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let scale = 1e5;
        let w: Vec<CVec> = (0..2).map(|_| rand_cvec(&mut rng, 8) * c(scale, 0.0)).collect();
        let q = rand_cvec(&mut rng, 8) * c(scale, 0.0);
        let v = random_phases(&mut rng, 50);
        let sol = BeamformingSolution::new(w.clone(), q.clone(), v.clone());
        let s2 = s.config.sigma2;
        for (t, &(k, j)) in l.users.iter().enumerate() {
            let o = unlifted_sinr(&s.channels.h_ab[t], &s.channels.h_ib[t], &s.channels.g, &v, &w, k, &q, s2);
            let r = bob_rate(&sol, &l, s2, k, j);
            assert!((r - (1.0 + o).log2()).abs() < 1e-10);
        }
        for k in 0..2 {
            for e in 0..2 {
                let o = unlifted_sinr(&s.channels.h_ae[e], &s.channels.h_ie[e], &s.channels.g, &v, &w, k, &q, s2);
                assert!((eve_rate(&sol, &l, s2, k, e) - (1.0 + o).log2()).abs() < 1e-10);
            }
        }
        // pairwise oracle for the secrecy rate
        for &(k, j) in &l.users {
            let mut best = f64::INFINITY;
            for e in 0..2 {
                best = best.min(bob_rate(&sol, &l, s2, k, j) - eve_rate(&sol, &l, s2, k, e));
            }
            assert!((secrecy_rate(&sol, &l, s2, k, j) - best.max(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn an_power_lowers_eve_rate() {
        let (s, l) = scenario(8);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w: Vec<CVec> = (0..2).map(|_| rand_cvec(&mut rng, 8) * c(1e5, 0.0)).collect();
        let q = rand_cvec(&mut rng, 8) * c(1e5, 0.0);
        let v = random_phases(&mut rng, 50);
        let mut last = f64::INFINITY;
        for a in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let sol = BeamformingSolution::new(w.clone(), &q * c(a, 0.0), v.clone());
            let r = eve_rate(&sol, &l, s.config.sigma2, 0, 1);
            assert!(r < last);
            last = r;
        }
    }

    #[test]
    fn power_and_feasibility_checks() {
        let sol = BeamformingSolution::new(
            vec![CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])],
            CVec::zeros(2),
            CVec::zeros(0),
        );
        assert_eq!(transmit_power(&sol), 1.0);
        let sol3 = BeamformingSolution::new(
            vec![CVec::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]), CVec::from_vec(vec![c(0.0, 1.0), c(0.0, 0.0)])],
            CVec::from_vec(vec![c(0.0, 0.0), c(-1.0, 0.0)]),
            CVec::zeros(0),
        );
        assert!((transmit_power(&sol3) - 3.0).abs() < 1e-15);

        let (s, l) = scenario(2);
        let cfg0 = SystemConfig {
            gamma_s: 0.0,
            ..s.config.clone()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = random_phases(&mut rng, 50);
        let z = BeamformingSolution::zero(2, 8, v.clone());
        assert!(check_feasible(&z, &l, &cfg0, 1e-6).feasible);
        let mut bad = v.clone();
        bad[3] *= c(0.9, 0.0);
        let zb = BeamformingSolution::zero(2, 8, bad);
        assert!(!check_feasible(&zb, &l, &cfg0, 1e-6).feasible);
    }

    #[test]
    fn theta_round_trip_and_solution_file() {
        let (s, _) = scenario(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sol = BeamformingSolution::new(
            vec![rand_cvec(&mut rng, 8), rand_cvec(&mut rng, 8)],
            rand_cvec(&mut rng, 8),
            random_phases(&mut rng, 50),
        );
        let f = SolutionFile::new(&sol, None, None);
        let text = serde_json::to_string(&f).unwrap();
        let back: SolutionFile = serde_json::from_str(&text).unwrap();
        let sol2 = back.to_solution(&s.config).unwrap();
        assert_eq!(sol2.w, sol.w);
        for (a, b) in sol2.v.iter().zip(sol.v.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
