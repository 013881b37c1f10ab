//! Array geometries, geometric multipath channels, and the DFT beamspace.
//!
//! Steering vectors take *spatial frequencies* `x ∈ [-1, 1]` as input:
//! element `k` of `β(x, N)` is `exp(-jπkx)/√N`. Normalized path angles are
//! fed to `β` directly. For the UPA RIS the vector is `β(x_y, N_y) ⊗ β(x_z, N_z)`
//! with element `(i_y, i_z)` at flat index `i_y·N_z + i_z`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArrayKind {
    Ula,
    Upa,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub kind: ArrayKind,
    pub n_y: usize,
    pub n_z: usize,
    pub element_spacing_over_wavelength: f64,
}

impl ArrayGeometry {
    pub fn ula(n: usize, spacing: f64) -> Result<Self> {
        Self::validated(ArrayKind::Ula, n, 1, spacing)
    }

    pub fn upa(n_y: usize, n_z: usize, spacing: f64) -> Result<Self> {
        Self::validated(ArrayKind::Upa, n_y, n_z, spacing)
    }

    /// Closest-to-square UPA factorization `n = n_y · n_z` with `n_y ≥ n_z`.
    pub fn square_upa(n: usize, spacing: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("UPA needs at least one element".into()));
        }
        let mut n_z = (n as f64).sqrt().floor() as usize;
        while n % n_z != 0 {
            n_z -= 1;
        }
        Self::upa(n / n_z, n_z, spacing)
    }

    fn validated(kind: ArrayKind, n_y: usize, n_z: usize, spacing: f64) -> Result<Self> {
        if n_y == 0 || n_z == 0 {
            return Err(Error::InvalidArgument("array dimensions must be positive".into()));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "element spacing over wavelength must be positive, got {spacing}"
            )));
        }
        Ok(Self {
            kind,
            n_y,
            n_z,
            element_spacing_over_wavelength: spacing,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.n_y * self.n_z
    }
}

/// One propagation path. All angles are normalized spatial frequencies in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    pub gain: Complex64,
    /// RIS-side frequency along y.
    pub azimuth_aoa_ris: f64,
    /// RIS-side frequency along z.
    pub elevation_aoa_ris: f64,
    /// UE-side frequency.
    pub azimuth_aod_ue: f64,
}

/// Whether path angles are snapped onto the DFT grid of the arrays.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleGrid {
    #[default]
    OffGrid,
    OnGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleDomain {
    /// Physical range `[-π/2, π/2]`.
    Azimuth,
    /// Physical range `[-π/4, π/4]`.
    Elevation,
}

fn check_unit_interval(x: f64, what: &str) -> Result<()> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("{what} {x} outside [-1, 1]")));
    }
    Ok(())
}

/// `β(x, n)`: unit-norm ULA response at spatial frequency `x`.
pub fn steering_ula(x: f64, n: usize) -> Result<CVector> {
    check_unit_interval(x, "spatial frequency")?;
    if n == 0 {
        return Err(Error::InvalidArgument("steering vector length must be positive".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(CVector::from_fn(n, |k, _| {
        Complex64::from_polar(scale, -PI * k as f64 * x)
    }))
}

/// UPA response from the two spatial frequencies directly.
pub fn steering_upa(x_y: f64, x_z: f64, geometry: &ArrayGeometry) -> Result<CVector> {
    if geometry.kind != ArrayKind::Upa {
        return Err(Error::InvalidArgument("RIS steering requires a UPA geometry".into()));
    }
    let a_y = steering_ula(x_y, geometry.n_y)?;
    let a_z = steering_ula(x_z, geometry.n_z)?;
    Ok(a_y.kronecker(&a_z))
}

/// RIS response `a_y(θ,φ) ⊗ a_z(φ)` with `a_y = β(sinθ·sinφ, N_y)` and
/// `a_z = β(cosφ, N_z)`.
pub fn steering_ris(theta: f64, phi: f64, geometry: &ArrayGeometry) -> Result<CVector> {
    let x_y = (theta.sin() * phi.sin()).clamp(-1.0, 1.0);
    let x_z = phi.cos().clamp(-1.0, 1.0);
    steering_upa(x_y, x_z, geometry)
}

/// `(d/λ)·sin(physical)`.
pub fn normalize_angle(physical: f64, spacing_over_wavelength: f64, domain: AngleDomain) -> Result<f64> {
    let limit = match domain {
        AngleDomain::Azimuth => FRAC_PI_2,
        AngleDomain::Elevation => FRAC_PI_4,
    };
    if !(physical.abs() <= limit) {
        return Err(Error::InvalidArgument(format!(
            "physical angle {physical} outside [-{limit}, {limit}]"
        )));
    }
    let x = spacing_over_wavelength * physical.sin();
    check_unit_interval(x, "normalized angle")?;
    Ok(x)
}

/// Standard circular complex Gaussian `CN(0, 1)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Maps a DFT bin index onto its spatial frequency in `[-1, 1)`.
pub fn grid_frequency(bin: usize, n: usize) -> f64 {
    let x = 2.0 * bin as f64 / n as f64;
    if x >= 1.0 {
        x - 2.0
    } else {
        x
    }
}

fn draw_frequency<R: Rng + ?Sized>(rng: &mut R, n: usize, grid: AngleGrid) -> f64 {
    match grid {
        AngleGrid::OffGrid => rng.random_range(-1.0..=1.0),
        AngleGrid::OnGrid => grid_frequency(rng.random_range(0..n), n),
    }
}

fn ue_steering(ue: &ArrayGeometry, x: f64) -> Result<CVector> {
    if ue.kind != ArrayKind::Ula {
        return Err(Error::InvalidArgument("UE arrays must be ULAs".into()));
    }
    steering_ula(x, ue.n_elements())
}

/// `√(N_ue·N_RIS/P) Σ_p g_p a_RIS(p) a_ue(p)ᴴ` for the given paths.
pub fn channel_from_paths(
    paths: &[PathParams],
    ue: &ArrayGeometry,
    ris: &ArrayGeometry,
) -> Result<CMatrix> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("at least one path is required".into()));
    }
    let scale = ((ue.n_elements() * ris.n_elements()) as f64 / paths.len() as f64).sqrt();
    let mut h = CMatrix::zeros(ris.n_elements(), ue.n_elements());
    for p in paths {
        let a_ris = steering_upa(p.azimuth_aoa_ris, p.elevation_aoa_ris, ris)?;
        let a_ue = ue_steering(ue, p.azimuth_aod_ue)?;
        h += (a_ris * a_ue.adjoint()) * (p.gain * scale);
    }
    Ok(h)
}

/// Draws a geometric channel with `num_paths` paths between a ULA UE and the UPA RIS.
///
/// Gains are `CN(0,1)` and frequencies uniform on `[-1, 1]` (or uniform over DFT
/// bins with [`AngleGrid::OnGrid`]).
pub fn sample_channel<R: Rng + ?Sized>(
    ue: &ArrayGeometry,
    ris: &ArrayGeometry,
    num_paths: usize,
    grid: AngleGrid,
    rng: &mut R,
) -> Result<(CMatrix, Vec<PathParams>)> {
    if num_paths == 0 {
        return Err(Error::InvalidArgument("num_paths must be at least 1".into()));
    }
    let paths: Vec<PathParams> = (0..num_paths)
        .map(|_| {
            let gain = complex_gaussian(rng);
            let azimuth_aoa_ris = draw_frequency(rng, ris.n_y, grid);
            let elevation_aoa_ris = draw_frequency(rng, ris.n_z, grid);
            let azimuth_aod_ue = draw_frequency(rng, ue.n_elements(), grid);
            PathParams {
                gain,
                azimuth_aoa_ris,
                elevation_aoa_ris,
                azimuth_aod_ue,
            }
        })
        .collect();
    let h = channel_from_paths(&paths, ue, ris)?;
    Ok((h, paths))
}

/// Geometric ULA-to-ULA channel (`rx × tx`), used for the direct UE link.
pub fn sample_ula_link<R: Rng + ?Sized>(
    rx: usize,
    tx: usize,
    num_paths: usize,
    rng: &mut R,
) -> Result<CMatrix> {
    if num_paths == 0 {
        return Err(Error::InvalidArgument("num_paths must be at least 1".into()));
    }
    let scale = ((rx * tx) as f64 / num_paths as f64).sqrt();
    let mut h = CMatrix::zeros(rx, tx);
    for _ in 0..num_paths {
        let g = complex_gaussian(rng);
        let a_rx = steering_ula(rng.random_range(-1.0..=1.0), rx)?;
        let a_tx = steering_ula(rng.random_range(-1.0..=1.0), tx)?;
        h += (a_rx * a_tx.adjoint()) * (g * scale);
    }
    Ok(h)
}

/// Unitary DFT matrix, entry `(k, l) = exp(-j2πkl/n)/√n`.
pub fn dft_matrix(n: usize) -> CMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |k, l| {
        // reduce kl mod n before scaling to keep the phase exact for large n
        let kl = (k * l) % n.max(1);
        Complex64::from_polar(scale, -2.0 * PI * kl as f64 / n as f64)
    })
}

/// DFT dictionaries on both sides of the stacked channel `H̄ = [H1 H2]`.
#[derive(Debug, Clone)]
pub struct BeamspaceBasis {
    pub d_ris: CMatrix,
    pub d_ue1: CMatrix,
    pub d_ue2: CMatrix,
    pub d_ues: CMatrix,
}

impl BeamspaceBasis {
    /// For a UPA the RIS dictionary is `D_{N_y} ⊗ D_{N_z}`, matching the
    /// steering-vector ordering; for a ULA it is the plain DFT.
    pub fn new(ris: &ArrayGeometry, n1: usize, n2: usize) -> Self {
        let d_ris = match ris.kind {
            ArrayKind::Upa => dft_matrix(ris.n_y).kronecker(&dft_matrix(ris.n_z)),
            ArrayKind::Ula => dft_matrix(ris.n_elements()),
        };
        let d_ue1 = dft_matrix(n1);
        let d_ue2 = dft_matrix(n2);
        let mut d_ues = CMatrix::zeros(n1 + n2, n1 + n2);
        d_ues.view_mut((0, 0), (n1, n1)).copy_from(&d_ue1);
        d_ues.view_mut((n1, n1), (n2, n2)).copy_from(&d_ue2);
        Self {
            d_ris,
            d_ue1,
            d_ue2,
            d_ues,
        }
    }

    pub fn n_ris(&self) -> usize {
        self.d_ris.nrows()
    }

    pub fn n_ues(&self) -> usize {
        self.d_ues.nrows()
    }
}

/// `Z̄ = D_RISᴴ H̄ D_UEs`.
pub fn to_beamspace(h_bar: &CMatrix, basis: &BeamspaceBasis) -> Result<CMatrix> {
    crate::linalg::check_shape("to_beamspace", h_bar, basis.n_ris(), basis.n_ues())?;
    Ok(basis.d_ris.adjoint() * h_bar * &basis.d_ues)
}

/// `H̄ = D_RIS Z̄ D_UEsᴴ`.
pub fn from_beamspace(z_bar: &CMatrix, basis: &BeamspaceBasis) -> Result<CMatrix> {
    crate::linalg::check_shape("from_beamspace", z_bar, basis.n_ris(), basis.n_ues())?;
    Ok(&basis.d_ris * z_bar * basis.d_ues.adjoint())
}

/// Horizontal concatenation `[H1 H2]`.
pub fn stack_channels(h1: &CMatrix, h2: &CMatrix) -> Result<CMatrix> {
    if h1.nrows() != h2.nrows() {
        return Err(Error::dims("stack_channels", h1.shape(), h2.shape()));
    }
    let mut out = CMatrix::zeros(h1.nrows(), h1.ncols() + h2.ncols());
    out.columns_mut(0, h1.ncols()).copy_from(h1);
    out.columns_mut(h1.ncols(), h2.ncols()).copy_from(h2);
    Ok(out)
}

/// Splits `H̄` back into `(H1, H2)` after the first `n1` columns.
pub fn split_channels(h_bar: &CMatrix, n1: usize) -> (CMatrix, CMatrix) {
    let n2 = h_bar.ncols() - n1;
    (
        h_bar.columns(0, n1).into_owned(),
        h_bar.columns(n1, n2).into_owned(),
    )
}
