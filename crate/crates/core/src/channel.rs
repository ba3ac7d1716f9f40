//! Rician channel synthesis for the direct (BS–user) and indirect
//! (BS–RIS–user) links.

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{Link, SystemConfig};
use crate::error::{Error, Result};

/// Array response of an `len`-element uniform linear array:
/// element `l` is `exp(-j π (d/λ) l cos ψ)`.
pub fn steering_vector(len: usize, psi: f64, d_over_lambda: f64) -> Array1<Complex64> {
    let step = -std::f64::consts::PI * d_over_lambda * psi.cos();
    Array1::from_iter((0..len).map(|l| Complex64::from_polar(1.0, step * l as f64)))
}

/// One draw of all channels plus the matrices the optimizers work on.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// BS–RIS channel `H`, N×M.
    pub bs_ris: Array2<Complex64>,
    /// RIS–user channel `h`, length N.
    pub ris_user: Array1<Complex64>,
    /// BS–user channel `g`, length M.
    pub bs_user: Array1<Complex64>,
    /// Cascaded channel `E = diag(h) H`, N×M.
    pub cascaded: Array2<Complex64>,
    /// `G`: rows of `E` followed by the row `μ gᵀ`, (N+1)×M.
    pub stacked: Array2<Complex64>,
    /// Direct/indirect amplitude ratio used to build the last row of `G`.
    pub mu: f64,
}

impl ChannelRealization {
    pub fn from_links(
        bs_ris: Array2<Complex64>,
        ris_user: Array1<Complex64>,
        bs_user: Array1<Complex64>,
        mu: f64,
    ) -> Result<Self> {
        let (n, m) = bs_ris.dim();
        if ris_user.len() != n || bs_user.len() != m {
            return Err(Error::Dimension(format!(
                "H is {n}x{m} but h has {} entries and g has {}",
                ris_user.len(),
                bs_user.len()
            )));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::Domain(format!("mu must be non-negative, got {mu}")));
        }
        let cascaded = &bs_ris * &ris_user.view().insert_axis(Axis(1));
        let mut stacked = Array2::zeros((n + 1, m));
        stacked.slice_mut(ndarray::s![..n, ..]).assign(&cascaded);
        stacked.row_mut(n).assign(&bs_user.mapv(|x| x * mu));
        Ok(Self { bs_ris, ris_user, bs_user, cascaded, stacked, mu })
    }

    /// Builds a realization straight from a cascaded matrix `E` (taking
    /// `h = 1`), for experiments that start from `E`/`G` directly.
    pub fn from_cascaded(cascaded: Array2<Complex64>, bs_user: Array1<Complex64>, mu: f64) -> Result<Self> {
        let n = cascaded.nrows();
        Self::from_links(cascaded, Array1::from_elem(n, Complex64::new(1.0, 0.0)), bs_user, mu)
    }

    pub fn antennas(&self) -> usize {
        self.bs_ris.ncols()
    }

    pub fn elements(&self) -> usize {
        self.bs_ris.nrows()
    }

    pub fn has_direct_link(&self) -> bool {
        self.mu > 0.0
    }

    /// Same links with every channel multiplied by the real factor `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let k = Complex64::new(c, 0.0);
        Self {
            bs_ris: self.bs_ris.clone(),
            ris_user: self.ris_user.mapv(|x| x * k),
            bs_user: self.bs_user.mapv(|x| x * k),
            cascaded: self.cascaded.mapv(|x| x * k),
            stacked: self.stacked.mapv(|x| x * k),
            mu: self.mu,
        }
    }
}

/// Independent random stream for trial `trial` under master seed `seed`.
/// Streams are keyed by (seed, trial), so trials can run in any order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Circularly-symmetric complex Gaussian with unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

struct LosParts {
    bs_ris: Array2<Complex64>,
    ris_user: Array1<Complex64>,
    bs_user: Array1<Complex64>,
}

fn los_parts(cfg: &SystemConfig) -> LosParts {
    let a_ris = steering_vector(cfg.n, cfg.theta_ra, cfg.d_over_lambda);
    let a_bs = steering_vector(cfg.m, cfg.theta_bd_i, cfg.d_over_lambda);
    let bs_ris = Array2::from_shape_fn((cfg.n, cfg.m), |(i, j)| a_ris[i] * a_bs[j]);
    LosParts {
        bs_ris,
        ris_user: steering_vector(cfg.n, cfg.theta_rd, cfg.d_over_lambda),
        bs_user: steering_vector(cfg.m, cfg.theta_bd_d, cfg.d_over_lambda),
    }
}

/// Draws `H`, `h`, `g` as LoS plus scattered components weighted by each
/// link's Rician factor. Gaussian samples are consumed in a fixed order
/// (`H` row-major, then `h`, then `g`) regardless of the Rician factors, so
/// the same stream gives paired draws across different `K`.
pub fn draw_channel<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> ChannelRealization {
    let los = los_parts(cfg);
    let (l1, n1) = cfg.kappa(Link::BsRis);
    let (l2, n2) = cfg.kappa(Link::RisUser);
    let (l0, n0) = cfg.kappa(Link::BsUser);
    let mut bs_ris = los.bs_ris;
    for x in bs_ris.iter_mut() {
        *x = *x * l1 + complex_normal(rng) * n1;
    }
    let mut ris_user = los.ris_user;
    for x in ris_user.iter_mut() {
        *x = *x * l2 + complex_normal(rng) * n2;
    }
    let mut bs_user = los.bs_user;
    for x in bs_user.iter_mut() {
        *x = *x * l0 + complex_normal(rng) * n0;
    }
    ChannelRealization::from_links(bs_ris, ris_user, bs_user, cfg.mu()).expect("shapes follow the config")
}

/// The deterministic all-LoS channel (every Rician factor infinite).
pub fn los_channel(cfg: &SystemConfig) -> ChannelRealization {
    let los = los_parts(cfg);
    ChannelRealization::from_links(los.bs_ris, los.ris_user, los.bs_user, cfg.mu()).expect("shapes follow the config")
}
