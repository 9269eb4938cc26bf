//! BS->RIS Rician channel, semi-correlated RIS->user Rayleigh channels,
//! path loss, and user-drop geometry.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::cmatrix::CMatrix;
use crate::config::{db_to_linear, ScenarioConfig};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Large-scale gain `C0 (d / 1 m)^(-alpha)`.
pub fn path_loss<T: Real>(d: T, alpha: T, c0_db: T) -> Result<T> {
    if !(d > T::zero()) {
        return Err(Error::Domain(format!("path loss needs a positive distance, got {d}")));
    }
    let c0 = T::lit(db_to_linear(c0_db.to_f64_lossy()));
    Ok(c0 * d.powf(-alpha))
}

/// Half-wavelength ULA steering vector, entry `i` is `e^{-j pi i sin(angle)}`.
pub fn ula_steering<T: Real>(n_elements: usize, angle: T) -> Vec<Complex<T>> {
    let psi = T::PI() * angle.sin();
    (0..n_elements)
        .map(|i| {
            if i == 0 {
                Complex::new(T::one(), T::zero())
            } else {
                let ph = -psi * T::lit(i as f64);
                Complex::new(ph.cos(), ph.sin())
            }
        })
        .collect()
}

/// Exponential correlation matrix `R[m][n] = r^|m-n|`.
pub fn exponential_correlation(n: usize, r: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| r.powi(i.abs_diff(j) as i32))
}

/// Hermitian square root of the RIS-side correlation matrix, through a
/// symmetric eigendecomposition with eigenvalues clamped at zero.
pub fn correlation_sqrt<T: Real>(n: usize, r_corr: f64) -> Result<CMatrix<T>> {
    let r = exponential_correlation(n, r_corr);
    let eig = SymmetricEigen::try_new(r, f64::EPSILON, 0)
        .ok_or_else(|| Error::Internal("correlation eigendecomposition did not converge".into()))?;
    let v = &eig.eigenvectors;
    let sqrt_vals = eig.eigenvalues.map(|x| x.max(0.0).sqrt());
    let root = v * DMatrix::from_diagonal(&sqrt_vals) * v.transpose();
    if root.iter().any(|x| !x.is_finite()) {
        return Err(Error::Internal("non-finite correlation square root".into()));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| Complex::new(T::lit(root[(i, j)]), T::zero())))
}

/// RIS-centric user positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserDrop<T> {
    pub distance: Vec<T>,
    pub angle: Vec<T>,
}

/// One Monte Carlo draw of the two channel matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    /// BS->RIS, `N x M`.
    pub h_t: CMatrix<T>,
    /// RIS->users, `K x N`; row `k` is `h_{r,k}^H`.
    pub h_r: CMatrix<T>,
    pub drop: UserDrop<T>,
}

/// Deterministic per-trial RNG: the master seed picks the key, the trial index the stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Standard circularly-symmetric complex normal, `E|z|^2 = 1`.
fn complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::lit(re * std::f64::consts::FRAC_1_SQRT_2), T::lit(im * std::f64::consts::FRAC_1_SQRT_2))
}

/// Scenario-level quantities shared by every trial: the correlation root,
/// the LoS component and the BS-RIS path loss.
#[derive(Debug, Clone)]
pub struct ChannelModel<T> {
    cfg: ScenarioConfig,
    corr_sqrt: CMatrix<T>,
    los: CMatrix<T>,
    pl_br: T,
}

impl<T: Real> ChannelModel<T> {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let corr_sqrt = correlation_sqrt(cfg.n, cfg.r_corr)?;
        let a_ris = ula_steering::<T>(cfg.n, T::lit(cfg.aoa));
        let a_bs = ula_steering::<T>(cfg.m, T::lit(cfg.aod));
        let los = CMatrix::outer(&a_ris, &a_bs);
        let pl_br = path_loss(T::lit(cfg.d_br), T::lit(cfg.alpha_br), T::lit(cfg.c0_db))?;
        Ok(Self { cfg: cfg.clone(), corr_sqrt, los, pl_br })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    /// `a_RIS(aoa) a_BS(aod)^H`.
    pub fn los(&self) -> &CMatrix<T> {
        &self.los
    }

    pub fn bs_ris_path_loss(&self) -> T {
        self.pl_br
    }

    pub fn correlation_root(&self) -> &CMatrix<T> {
        &self.corr_sqrt
    }

    pub fn drop_users<R: Rng + ?Sized>(&self, rng: &mut R) -> UserDrop<T> {
        let c = &self.cfg;
        let mut distance = Vec::with_capacity(c.k);
        let mut angle = Vec::with_capacity(c.k);
        for _ in 0..c.k {
            let d: f64 = if c.d_min == c.d_max { c.d_min } else { rng.random_range(c.d_min..=c.d_max) };
            let a: f64 =
                if c.fan_halfangle == 0.0 { 0.0 } else { rng.random_range(-c.fan_halfangle..=c.fan_halfangle) };
            distance.push(T::lit(d));
            angle.push(T::lit(a));
        }
        UserDrop { distance, angle }
    }

    pub fn bs_ris_channel<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix<T> {
        let beta = T::lit(self.cfg.beta);
        let one = T::one();
        let los_w = (beta / (beta + one)).sqrt();
        let nlos_w = (one / (beta + one)).sqrt();
        let amp = self.pl_br.sqrt();
        let (n, m) = self.los.shape();
        let mut h = CMatrix::zeros(n, m);
        for r in 0..n {
            for c in 0..m {
                let z: Complex<T> = complex_normal(rng);
                h[(r, c)] = (self.los[(r, c)] * los_w + z * nlos_w) * amp;
            }
        }
        h
    }

    pub fn ris_user_channels<R: Rng + ?Sized>(&self, drop: &UserDrop<T>, rng: &mut R) -> Result<CMatrix<T>> {
        let (k, n) = (self.cfg.k, self.cfg.n);
        if drop.distance.len() != k {
            return Err(Error::Contract(format!("user drop has {} users, expected {k}", drop.distance.len())));
        }
        let alpha = T::lit(self.cfg.alpha_ru);
        let c0_db = T::lit(self.cfg.c0_db);
        let mut h = CMatrix::zeros(k, n);
        let mut z = vec![Complex::new(T::zero(), T::zero()); n];
        for (u, &d) in drop.distance.iter().enumerate() {
            let amp = path_loss(d, alpha, c0_db)?.sqrt();
            for zi in z.iter_mut() {
                *zi = complex_normal(rng);
            }
            let row = h.row_mut(u);
            for (i, out) in row.iter_mut().enumerate() {
                let h_i = self.corr_sqrt.row(i).iter().zip(&z).fold(Complex::new(T::zero(), T::zero()), |a, (r, zj)| a + r * zj);
                *out = h_i.conj() * amp;
            }
        }
        Ok(h)
    }

    /// Draws user positions, then `H_t`, then `H_r`, from one RNG.
    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelRealization<T>> {
        let drop = self.drop_users(rng);
        let h_t = self.bs_ris_channel(rng);
        let h_r = self.ris_user_channels(&drop, rng)?;
        let out = ChannelRealization { h_t, h_r, drop };
        if !out.h_t.is_finite() || !out.h_r.is_finite() {
            return Err(Error::Internal("non-finite channel entry".into()));
        }
        Ok(out)
    }

    /// The channel draw for a given trial of this scenario.
    pub fn trial(&self, trial_index: u64) -> Result<ChannelRealization<T>> {
        self.realize(&mut trial_rng(self.cfg.seed, trial_index))
    }
}

pub fn drop_users<T: Real, R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<UserDrop<T>> {
    Ok(ChannelModel::<T>::new(cfg)?.drop_users(rng))
}

pub fn gen_bs_ris_channel<T: Real, R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<CMatrix<T>> {
    Ok(ChannelModel::<T>::new(cfg)?.bs_ris_channel(rng))
}

pub fn gen_ris_user_channels<T: Real, R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    drop: &UserDrop<T>,
    rng: &mut R,
) -> Result<CMatrix<T>> {
    ChannelModel::<T>::new(cfg)?.ris_user_channels(drop, rng)
}
