//! Network instances: configuration, random realizations, the fixed two-user
//! example network, and the standard-form normalization of the direct links.
//!
//! Conventions used throughout the crate:
//!
//! * `direct[(j, k)]` is the gain `f_jk` from source `j` to destination `k`.
//! * column `k` of `uplink` is `g_kR`, the source `k` → relay vector.
//! * column `k` of `downlink` is `h_Rk`; destination `k` receives
//!   `h_Rk^H x_R` from the relay.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::C64;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
    #[error("direct gain f_{{{index}{index}}} is zero; standard form undefined for user {index}")]
    ZeroDiagonal { index: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("channel matrix {0} contains a non-finite entry")]
    NonFinite(&'static str),
    #[error("channel document: {0}")]
    Json(#[from] serde_json::Error),
}

/// Size and randomness parameters of one network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// Number of source-destination pairs.
    #[serde(rename = "K")]
    pub users: usize,
    /// Relay antennas.
    #[serde(rename = "M")]
    pub relay_antennas: usize,
    #[serde(rename = "sigma2", default = "default_noise_var")]
    pub noise_var: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_noise_var() -> f64 {
    1.0
}

impl NetworkConfig {
    pub fn new(users: usize, relay_antennas: usize, seed: u64) -> Self {
        Self {
            users,
            relay_antennas,
            noise_var: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.users == 0 {
            return Err(ChannelError::InvalidConfig("K must be at least 1".into()));
        }
        if self.relay_antennas == 0 {
            return Err(ChannelError::InvalidConfig("M must be at least 1".into()));
        }
        if !(self.noise_var.is_finite() && self.noise_var > 0.0) {
            return Err(ChannelError::InvalidConfig(format!(
                "sigma2 must be positive and finite, got {}",
                self.noise_var
            )));
        }
        Ok(())
    }
}

/// All complex gains of one network instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    direct: DMatrix<C64>,
    uplink: DMatrix<C64>,
    downlink: DMatrix<C64>,
}

impl ChannelRealization {
    /// `direct` is K×K, `uplink` and `downlink` are M×K.
    pub fn new(
        direct: DMatrix<C64>,
        uplink: DMatrix<C64>,
        downlink: DMatrix<C64>,
    ) -> Result<Self, ChannelError> {
        let k = direct.nrows();
        if k == 0 || direct.ncols() != k {
            return Err(ChannelError::Shape(format!(
                "F must be square and nonempty, got {}x{}",
                direct.nrows(),
                direct.ncols()
            )));
        }
        let m = uplink.nrows();
        if m == 0 || uplink.ncols() != k {
            return Err(ChannelError::Shape(format!(
                "G must be Mx{k} with M >= 1, got {}x{}",
                uplink.nrows(),
                uplink.ncols()
            )));
        }
        if downlink.shape() != (m, k) {
            return Err(ChannelError::Shape(format!(
                "H must be {m}x{k}, got {}x{}",
                downlink.nrows(),
                downlink.ncols()
            )));
        }
        for (name, mat) in [("F", &direct), ("G", &uplink), ("H", &downlink)] {
            if mat.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(ChannelError::NonFinite(name));
            }
        }
        Ok(Self {
            direct,
            uplink,
            downlink,
        })
    }

    pub fn users(&self) -> usize {
        self.direct.nrows()
    }

    pub fn relay_antennas(&self) -> usize {
        self.uplink.nrows()
    }

    /// K×K matrix of `f_jk` (row = source, column = destination).
    pub fn direct(&self) -> &DMatrix<C64> {
        &self.direct
    }

    /// M×K matrix whose columns are the source → relay vectors.
    pub fn uplink(&self) -> &DMatrix<C64> {
        &self.uplink
    }

    /// M×K matrix whose columns are the relay → destination vectors.
    pub fn downlink(&self) -> &DMatrix<C64> {
        &self.downlink
    }

    pub fn to_json(&self) -> Result<String, ChannelError> {
        Ok(serde_json::to_string_pretty(&ChannelDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self, ChannelError> {
        let doc: ChannelDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// Wire form: `K`, `M` and row-major `[re, im]` arrays `F` (K×K), `G` and `H` (M×K).
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelDoc {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "F")]
    f: Vec<[f64; 2]>,
    #[serde(rename = "G")]
    g: Vec<[f64; 2]>,
    #[serde(rename = "H")]
    h: Vec<[f64; 2]>,
}

fn row_major(mat: &DMatrix<C64>) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(mat.len());
    for r in 0..mat.nrows() {
        for c in 0..mat.ncols() {
            let z = mat[(r, c)];
            out.push([z.re, z.im]);
        }
    }
    out
}

fn from_row_major(
    name: &str,
    rows: usize,
    cols: usize,
    data: &[[f64; 2]],
) -> Result<DMatrix<C64>, ChannelError> {
    if data.len() != rows * cols {
        return Err(ChannelError::Shape(format!(
            "{name} has {} entries, expected {rows}x{cols}",
            data.len()
        )));
    }
    Ok(DMatrix::from_row_iterator(
        rows,
        cols,
        data.iter().map(|&[re, im]| C64::new(re, im)),
    ))
}

impl From<&ChannelRealization> for ChannelDoc {
    fn from(ch: &ChannelRealization) -> Self {
        Self {
            k: ch.users(),
            m: ch.relay_antennas(),
            f: row_major(&ch.direct),
            g: row_major(&ch.uplink),
            h: row_major(&ch.downlink),
        }
    }
}

impl TryFrom<ChannelDoc> for ChannelRealization {
    type Error = ChannelError;

    fn try_from(doc: ChannelDoc) -> Result<Self, Self::Error> {
        let f = from_row_major("F", doc.k, doc.k, &doc.f)?;
        let g = from_row_major("G", doc.m, doc.k, &doc.g)?;
        let h = from_row_major("H", doc.m, doc.k, &doc.h)?;
        ChannelRealization::new(f, g, h)
    }
}

/// Draws an i.i.d. unit-variance circularly-symmetric complex Gaussian
/// realization. The ChaCha stream is selected by `trial`, so each trial is a
/// pure function of `(config.seed, trial)`.
pub fn generate_channels(config: &NetworkConfig, trial: u64) -> ChannelRealization {
    let k = config.users;
    let m = config.relay_antennas;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(trial);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut draw = |rows: usize, cols: usize| {
        DMatrix::from_row_iterator(
            rows,
            cols,
            (0..rows * cols)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    C64::new(scale * re, scale * im)
                })
                .collect::<Vec<_>>(),
        )
    };
    let direct = draw(k, k);
    let uplink = draw(m, k);
    let downlink = draw(m, k);
    ChannelRealization {
        direct,
        uplink,
        downlink,
    }
}

/// The two-user, two-antenna example network with real positive gains.
///
/// The printed list names the second source → relay vector `h_2R`; it is read
/// as `g_2R = [1.2, 2]`.
pub fn paper_example_channels() -> ChannelRealization {
    let re = |v: f64| C64::new(v, 0.0);
    let direct = DMatrix::from_row_slice(2, 2, &[re(2.0), re(0.75), re(0.75), re(2.0)]);
    // columns g_1R = [2, 0.8], g_2R = [1.2, 2]
    let uplink = DMatrix::from_row_slice(2, 2, &[re(2.0), re(1.2), re(0.8), re(2.0)]);
    // columns h_R1 = [2, 1], h_R2 = [1, 0.8]
    let downlink = DMatrix::from_row_slice(2, 2, &[re(2.0), re(1.0), re(1.0), re(0.8)]);
    ChannelRealization {
        direct,
        uplink,
        downlink,
    }
}

/// Normalized cross gains `a_jk = |f_jk|² / |f_jj|²` with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardForm {
    gains: DMatrix<f64>,
}

impl StandardForm {
    pub fn users(&self) -> usize {
        self.gains.nrows()
    }

    /// `a_jk`, zero-based indices.
    pub fn gain(&self, j: usize, k: usize) -> f64 {
        self.gains[(j, k)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.gains
    }
}

pub fn standard_form(direct: &DMatrix<C64>) -> Result<StandardForm, ChannelError> {
    let k = direct.nrows();
    if direct.ncols() != k {
        return Err(ChannelError::Shape(format!(
            "F must be square, got {}x{}",
            k,
            direct.ncols()
        )));
    }
    let mut gains = DMatrix::from_element(k, k, 0.0);
    for j in 0..k {
        let own = direct[(j, j)].norm_sqr();
        if own == 0.0 {
            return Err(ChannelError::ZeroDiagonal { index: j });
        }
        for c in 0..k {
            gains[(j, c)] = if c == j {
                1.0
            } else {
                direct[(j, c)].norm_sqr() / own
            };
        }
    }
    Ok(StandardForm { gains })
}
