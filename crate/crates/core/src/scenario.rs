//! System configuration, geometry and Rayleigh channel generation.
//!
//! Layout in the plane: Alice at the origin, the IRS at `(d_AI, d_v)`, the
//! Bob cluster centred at `(d_AB_h, 0)` and the Eve cluster at `(d_AE_h, 0)`.
//! Every random quantity is drawn from its own ChaCha stream keyed by kind
//! and index, so for example the first `N` IRS elements of a realization do
//! not change when `N` grows.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{dbm_to_watts, watts_to_dbm};

#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    /// Antennas at Alice.
    pub m: usize,
    /// IRS elements.
    pub n: usize,
    /// Multicast groups.
    pub k: usize,
    pub group_sizes: Vec<usize>,
    /// Eavesdroppers.
    pub l: usize,
    /// Noise power in watts.
    pub sigma2: f64,
    /// Secrecy-rate target in bits/s/Hz.
    pub gamma_s: f64,
    /// Reflection amplitude.
    pub beta: f64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 || self.l == 0 {
            return Err(Error::Domain("M, K and L must be positive".into()));
        }
        if self.group_sizes.len() != self.k {
            return Err(Error::Dimension(format!(
                "{} group sizes for K = {}",
                self.group_sizes.len(),
                self.k
            )));
        }
        if self.group_sizes.iter().any(|&g| g == 0) {
            return Err(Error::Domain("group sizes must be positive".into()));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Domain("noise power must be positive".into()));
        }
        if !(self.gamma_s >= 0.0 && self.gamma_s.is_finite()) {
            return Err(Error::Domain("secrecy target must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Domain("beta must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Total number of legitimate users.
    pub fn total_users(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    /// `(group, member)` for every user in flat order.
    pub fn users(&self) -> Vec<(usize, usize)> {
        self.group_sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &g)| (0..g).map(move |j| (k, j)))
            .collect()
    }
}

/// Missing fields take their default values when deserializing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[allow(non_snake_case)]
pub struct Geometry {
    pub d_AI: f64,
    pub d_AB_h: f64,
    pub d_AE_h: f64,
    pub d_v: f64,
    pub r_B: f64,
    pub r_E: f64,
    pub alpha_AI: f64,
    pub alpha_IU: f64,
    pub alpha_AU: f64,
    pub PL0_db: f64,
    pub d0: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            d_AI: 70.0,
            d_AB_h: 70.0,
            d_AE_h: 60.0,
            d_v: 5.0,
            r_B: 5.0,
            r_E: 2.5,
            alpha_AI: 2.2,
            alpha_IU: 2.5,
            alpha_AU: 3.5,
            PL0_db: -30.0,
            d0: 1.0,
        }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let dists = [self.d_AI, self.d_AB_h, self.d_AE_h, self.d_v, self.d0];
        if dists.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Domain("distances must be positive".into()));
        }
        if !(self.r_B >= 0.0 && self.r_E >= 0.0) {
            return Err(Error::Domain("cluster radii must be non-negative".into()));
        }
        if [self.alpha_AI, self.alpha_IU, self.alpha_AU]
            .iter()
            .any(|a| !(*a > 0.0))
        {
            return Err(Error::Domain("path-loss exponents must be positive".into()));
        }
        Ok(())
    }

    pub fn irs_position(&self) -> [f64; 2] {
        [self.d_AI, self.d_v]
    }
}

/// `PL0 − 10·α·log10(d/d0)` in dB.
pub fn path_loss_db(d: f64, alpha: f64, geometry: &Geometry) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {d}")));
    }
    Ok(geometry.PL0_db - 10.0 * alpha * (d / geometry.d0).log10())
}

fn path_loss_linear(d: f64, alpha: f64, geometry: &Geometry) -> Result<f64> {
    Ok(10f64.powf(path_loss_db(d, alpha, geometry)? / 10.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Positions {
    pub bobs: Vec<[f64; 2]>,
    pub eves: Vec<[f64; 2]>,
}

#[derive(Clone, Copy)]
enum Stream {
    BobPosition = 1,
    EvePosition = 2,
    Irs = 3,
    AliceBob = 4,
    IrsBob = 5,
    AliceEve = 6,
    IrsEve = 7,
}

fn stream_rng(seed: u64, kind: Stream, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((kind as u64) << 32) | index as u64);
    rng
}

fn disk_point(rng: &mut ChaCha8Rng, center: [f64; 2], radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    [center[0] + r * phi.cos(), center[1] + r * phi.sin()]
}

/// Bobs uniform in the disk of radius `r_B` around the Bob-cluster centre,
/// Eves likewise around the Eve-cluster centre.
pub fn user_positions(config: &SystemConfig, geometry: &Geometry, seed: u64) -> Positions {
    let bobs = (0..config.total_users())
        .map(|t| {
            let mut rng = stream_rng(seed, Stream::BobPosition, t);
            disk_point(&mut rng, [geometry.d_AB_h, 0.0], geometry.r_B)
        })
        .collect();
    let eves = (0..config.l)
        .map(|l| {
            let mut rng = stream_rng(seed, Stream::EvePosition, l);
            disk_point(&mut rng, [geometry.d_AE_h, 0.0], geometry.r_E)
        })
        .collect();
    Positions { bobs, eves }
}

/// Raw channel responses of one realization.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    /// Alice → IRS, `N × M`.
    pub g: DMatrix<Complex64>,
    /// Alice → Bob per user (flat order), length `M`.
    pub h_ab: Vec<DVector<Complex64>>,
    /// IRS → Bob per user, length `N`.
    pub h_ib: Vec<DVector<Complex64>>,
    /// Alice → Eve, length `M`.
    pub h_ae: Vec<DVector<Complex64>>,
    /// IRS → Eve, length `N`.
    pub h_ie: Vec<DVector<Complex64>>,
}

impl ChannelSet {
    pub fn validate(&self, config: &SystemConfig) -> Result<()> {
        let (m, n) = (config.m, config.n);
        let t = config.total_users();
        let ok = self.g.shape() == (n, m)
            && self.h_ab.len() == t
            && self.h_ib.len() == t
            && self.h_ae.len() == config.l
            && self.h_ie.len() == config.l
            && self.h_ab.iter().chain(&self.h_ae).all(|h| h.len() == m)
            && self.h_ib.iter().chain(&self.h_ie).all(|h| h.len() == n);
        if !ok {
            return Err(Error::Dimension(
                "channel dimensions do not match the configuration".into(),
            ));
        }
        let finite = self
            .g
            .iter()
            .chain(self.h_ab.iter().flat_map(|h| h.iter()))
            .chain(self.h_ib.iter().flat_map(|h| h.iter()))
            .chain(self.h_ae.iter().flat_map(|h| h.iter()))
            .chain(self.h_ie.iter().flat_map(|h| h.iter()))
            .all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(Error::Domain("non-finite channel entry".into()));
        }
        Ok(())
    }

    /// Same realization with every IRS-side link removed.
    pub fn without_irs(&self) -> ChannelSet {
        let m = self.g.ncols();
        ChannelSet {
            g: DMatrix::zeros(0, m),
            h_ab: self.h_ab.clone(),
            h_ib: vec![DVector::zeros(0); self.h_ib.len()],
            h_ae: self.h_ae.clone(),
            h_ie: vec![DVector::zeros(0); self.h_ie.len()],
        }
    }
}

pub(crate) fn cn(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

fn cn_vector(rng: &mut ChaCha8Rng, len: usize, variance: f64) -> DVector<Complex64> {
    DVector::from_fn(len, |_, _| cn(rng, variance))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn irs_link(n: usize, d: f64, geometry: &Geometry) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    path_loss_linear(d, geometry.alpha_IU, geometry)
}

/// i.i.d. `CN(0, PL(d))` entries for every link.
pub fn sample_channels(
    config: &SystemConfig,
    geometry: &Geometry,
    positions: &Positions,
    seed: u64,
) -> Result<ChannelSet> {
    let (m, n) = (config.m, config.n);
    let alice = [0.0, 0.0];
    let irs = geometry.irs_position();
    let pl_ai = path_loss_linear(dist(alice, irs), geometry.alpha_AI, geometry)?;
    let mut g = DMatrix::zeros(n, m);
    for row in 0..n {
        let mut rng = stream_rng(seed, Stream::Irs, row);
        for col in 0..m {
            g[(row, col)] = cn(&mut rng, pl_ai);
        }
    }
    let mut h_ab = Vec::new();
    let mut h_ib = Vec::new();
    for (t, &p) in positions.bobs.iter().enumerate() {
        let pl_au = path_loss_linear(dist(alice, p), geometry.alpha_AU, geometry)?;
        let pl_iu = irs_link(n, dist(irs, p), geometry)?;
        h_ab.push(cn_vector(&mut stream_rng(seed, Stream::AliceBob, t), m, pl_au));
        h_ib.push(cn_vector(&mut stream_rng(seed, Stream::IrsBob, t), n, pl_iu));
    }
    let mut h_ae = Vec::new();
    let mut h_ie = Vec::new();
    for (l, &p) in positions.eves.iter().enumerate() {
        let pl_au = path_loss_linear(dist(alice, p), geometry.alpha_AU, geometry)?;
        let pl_iu = irs_link(n, dist(irs, p), geometry)?;
        h_ae.push(cn_vector(&mut stream_rng(seed, Stream::AliceEve, l), m, pl_au));
        h_ie.push(cn_vector(&mut stream_rng(seed, Stream::IrsEve, l), n, pl_iu));
    }
    Ok(ChannelSet {
        g,
        h_ab,
        h_ib,
        h_ae,
        h_ie,
    })
}

/// A configuration together with one channel realization.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub config: SystemConfig,
    pub geometry: Geometry,
    pub seed: u64,
    pub channels: ChannelSet,
}

impl Scenario {
    /// Draws positions and channels from `seed`.
    pub fn generate(config: SystemConfig, geometry: Geometry, seed: u64) -> Result<Scenario> {
        config.validate()?;
        geometry.validate()?;
        let positions = user_positions(&config, &geometry, seed);
        let channels = sample_channels(&config, &geometry, &positions, seed)?;
        Ok(Scenario {
            config,
            geometry,
            seed,
            channels,
        })
    }

    pub fn from_parts(
        config: SystemConfig,
        geometry: Geometry,
        seed: u64,
        channels: ChannelSet,
    ) -> Result<Scenario> {
        config.validate()?;
        channels.validate(&config)?;
        Ok(Scenario {
            config,
            geometry,
            seed,
            channels,
        })
    }

    /// Copy with the IRS removed (`N = 0`).
    pub fn without_irs(&self) -> Scenario {
        let mut s = self.clone();
        s.config.n = 0;
        s.channels = self.channels.without_irs();
        s
    }

    pub fn to_json(&self, include_channels: bool) -> Result<String> {
        let file = ScenarioFile {
            config: ConfigFile::from(&self.config),
            geometry: self.geometry.clone(),
            seed: self.seed,
            channels: include_channels.then(|| ChannelsFile::from(&self.channels)),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Parses a scenario file; channels are regenerated from the seed when
    /// the file carries none.
    pub fn from_json(text: &str) -> Result<Scenario> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        let config = SystemConfig::from(&file.config);
        match file.channels {
            Some(ch) => {
                let channels = ch.into_channels(&config)?;
                Scenario::from_parts(config, file.geometry, file.seed, channels)
            }
            None => Scenario::generate(config, file.geometry, file.seed),
        }
    }
}

/// On-disk form of [`SystemConfig`]; noise power is given in dBm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ConfigFile {
    pub M: usize,
    pub N: usize,
    pub K: usize,
    pub group_sizes: Vec<usize>,
    pub L: usize,
    pub sigma2_dbm: f64,
    pub gamma_s: f64,
    #[serde(default = "one")]
    pub beta: f64,
}

fn one() -> f64 {
    1.0
}

impl From<&SystemConfig> for ConfigFile {
    fn from(c: &SystemConfig) -> Self {
        ConfigFile {
            M: c.m,
            N: c.n,
            K: c.k,
            group_sizes: c.group_sizes.clone(),
            L: c.l,
            sigma2_dbm: watts_to_dbm(c.sigma2),
            gamma_s: c.gamma_s,
            beta: c.beta,
        }
    }
}

impl From<&ConfigFile> for SystemConfig {
    fn from(c: &ConfigFile) -> Self {
        SystemConfig {
            m: c.M,
            n: c.N,
            k: c.K,
            group_sizes: c.group_sizes.clone(),
            l: c.L,
            sigma2: dbm_to_watts(c.sigma2_dbm),
            gamma_s: c.gamma_s,
            beta: c.beta,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ScenarioFile {
    config: ConfigFile,
    geometry: Geometry,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    channels: Option<ChannelsFile>,
}

pub(crate) type Pair = [f64; 2];

pub(crate) fn to_pairs(v: &DVector<Complex64>) -> Vec<Pair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub(crate) fn from_pairs(p: &[Pair]) -> DVector<Complex64> {
    DVector::from_iterator(p.len(), p.iter().map(|a| Complex64::new(a[0], a[1])))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[allow(non_snake_case)]
struct ChannelsFile {
    /// Row-major `N × M`.
    G: Vec<Vec<Pair>>,
    h_ab: Vec<Vec<Pair>>,
    h_ib: Vec<Vec<Pair>>,
    h_ae: Vec<Vec<Pair>>,
    h_ie: Vec<Vec<Pair>>,
}

impl From<&ChannelSet> for ChannelsFile {
    fn from(c: &ChannelSet) -> Self {
        ChannelsFile {
            G: (0..c.g.nrows())
                .map(|r| c.g.row(r).iter().map(|z| [z.re, z.im]).collect())
                .collect(),
            h_ab: c.h_ab.iter().map(to_pairs).collect(),
            h_ib: c.h_ib.iter().map(to_pairs).collect(),
            h_ae: c.h_ae.iter().map(to_pairs).collect(),
            h_ie: c.h_ie.iter().map(to_pairs).collect(),
        }
    }
}

impl ChannelsFile {
    fn into_channels(self, config: &SystemConfig) -> Result<ChannelSet> {
        let (n, m) = (config.n, config.m);
        if self.G.len() != n || self.G.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension(format!("G must be {n} x {m}")));
        }
        let g = DMatrix::from_fn(n, m, |r, c| Complex64::new(self.G[r][c][0], self.G[r][c][1]));
        let conv = |v: &Vec<Vec<Pair>>| v.iter().map(|p| from_pairs(p)).collect::<Vec<_>>();
        let set = ChannelSet {
            g,
            h_ab: conv(&self.h_ab),
            h_ib: conv(&self.h_ib),
            h_ae: conv(&self.h_ae),
            h_ie: conv(&self.h_ie),
        };
        set.validate(config)?;
        Ok(set)
    }
}

/// Named parameter sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// M=4, N=16, K=2 single-user groups, one Eve.
    Desk,
    /// M=8, N=50, K=2 groups of two users, two Eves.
    Large,
    /// Group-count sweep setting: two users per group, `d_v = 2`, `γ_s = 0.5`.
    GroupSweep,
}

impl Preset {
    pub fn parse(name: &str) -> Option<Preset> {
        match name {
            "desk" => Some(Preset::Desk),
            "large" => Some(Preset::Large),
            "group-sweep" => Some(Preset::GroupSweep),
            _ => None,
        }
    }

    pub fn config(self) -> SystemConfig {
        let base = SystemConfig {
            m: 4,
            n: 16,
            k: 2,
            group_sizes: vec![1, 1],
            l: 1,
            sigma2: dbm_to_watts(-90.0),
            gamma_s: 1.0,
            beta: 1.0,
        };
        match self {
            Preset::Desk => base,
            Preset::Large => SystemConfig {
                m: 8,
                n: 50,
                group_sizes: vec![2, 2],
                l: 2,
                ..base
            },
            Preset::GroupSweep => SystemConfig {
                group_sizes: vec![2, 2],
                gamma_s: 0.5,
                ..base
            },
        }
    }

    pub fn geometry(self) -> Geometry {
        match self {
            Preset::GroupSweep => Geometry {
                d_v: 2.0,
                ..Geometry::default()
            },
            _ => Geometry::default(),
        }
    }
}
