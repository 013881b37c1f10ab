//! Semi-passive RIS reception front end.
//!
//! Covers Lorentzian codebooks, the waveguide propagation matrix `P`, the
//! absorption profile bank `W`, random RF-chain selection masks `Ω`, pilot
//! blocks, and synthesis of the stacked observation matrix
//! `R = Ω ∘ (Wᵀ Pᴴ (H1 S1 + H2 S2)) + N`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::complex_gaussian;
use crate::linalg::{c, check_shape, condition_number, CMatrix, J};

/// Condition number above which a profile bank is treated as singular.
pub const MAX_PROFILE_CONDITION: f64 = 1e12;

/// Phase resolution of a Lorentzian codebook: `b` bits or a continuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resolution {
    Bits(u32),
    Infinite,
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Bits(b) => write!(f, "{b}"),
            Resolution::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Resolution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Resolution::Bits(b) => s.serialize_u32(*b),
            Resolution::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Resolution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u32),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(b) => Ok(Resolution::Bits(b)),
            Raw::Text(t) if matches!(t.as_str(), "inf" | "infinite" | "continuous") => {
                Ok(Resolution::Infinite)
            }
            Raw::Text(t) => t
                .parse::<u32>()
                .map(Resolution::Bits)
                .map_err(|_| serde::de::Error::custom(format!("invalid resolution {t:?}"))),
        }
    }
}

/// `0.5·(j + e^{jφ})`: a point on the Lorentzian circle.
#[inline]
pub fn lorentzian(phase: f64) -> Complex64 {
    0.5 * (J + Complex64::from_polar(1.0, phase))
}

/// True when `v` lies on the circle `|v − 0.5j| = 0.5`.
pub fn on_lorentzian_circle(v: Complex64, tol: f64) -> bool {
    ((v - 0.5 * J).norm() - 0.5).abs() <= tol
}

/// Phase grid `{2^{2−b}·π·m}` for `m = 0..=2^{b−1}`.
///
/// Both endpoints `0` and `2π` are kept, so the first and last codebook
/// values coincide.
pub fn phase_grid(bits: u32) -> Result<Vec<f64>> {
    if bits == 0 {
        return Err(Error::InvalidArgument("codebook needs at least one bit".into()));
    }
    if bits > 30 {
        return Err(Error::InvalidArgument(format!("{bits} bits is too many")));
    }
    let levels = 1usize << (bits - 1);
    let spacing = 2.0 * PI / levels as f64;
    Ok((0..=levels).map(|m| spacing * m as f64).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum LorentzianCodebook {
    Discrete {
        bits: u32,
        phases: Vec<f64>,
        values: Vec<Complex64>,
    },
    /// Any phase in `[0, 2π]`.
    Continuous,
}

impl LorentzianCodebook {
    pub fn resolution(&self) -> Resolution {
        match self {
            LorentzianCodebook::Discrete { bits, .. } => Resolution::Bits(*bits),
            LorentzianCodebook::Continuous => Resolution::Infinite,
        }
    }

    /// Number of listed states (duplicated endpoint included); `None` for a continuum.
    pub fn len(&self) -> Option<usize> {
        match self {
            LorentzianCodebook::Discrete { values, .. } => Some(values.len()),
            LorentzianCodebook::Continuous => None,
        }
    }

    pub fn contains(&self, v: Complex64, tol: f64) -> bool {
        match self {
            LorentzianCodebook::Discrete { values, .. } => {
                values.iter().any(|w| (w - v).norm() <= tol)
            }
            LorentzianCodebook::Continuous => on_lorentzian_circle(v, tol),
        }
    }

    /// Uniform draw from the listed states, or a uniform phase for a continuum.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match self {
            LorentzianCodebook::Discrete { values, .. } => values[rng.random_range(0..values.len())],
            LorentzianCodebook::Continuous => lorentzian(rng.random_range(0.0..2.0 * PI)),
        }
    }
}

pub fn build_codebook(resolution: Resolution) -> Result<LorentzianCodebook> {
    match resolution {
        Resolution::Infinite => Ok(LorentzianCodebook::Continuous),
        Resolution::Bits(bits) => {
            let phases = phase_grid(bits)?;
            let values = phases.iter().map(|&p| lorentzian(p)).collect();
            Ok(LorentzianCodebook::Discrete {
                bits,
                phases,
                values,
            })
        }
    }
}

/// Per-waveguide propagation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveguideModel {
    /// `α_i`, nepers per unit length.
    pub attenuation: Vec<f64>,
    /// `β_i`, radians per unit length.
    pub wavenumber: Vec<f64>,
    /// `ρ_{i,n}`: position of element `n` along waveguide `i`.
    pub element_positions: Vec<Vec<f64>>,
}

impl WaveguideModel {
    /// Lossless guides with elements a quarter guided wavelength apart.
    pub fn lossless(n_rf: usize, n_e: usize, guide_wavelength: f64) -> Self {
        let beta = 2.0 * PI / guide_wavelength;
        let positions: Vec<f64> = (0..n_e).map(|n| n as f64 * guide_wavelength / 4.0).collect();
        Self {
            attenuation: vec![0.0; n_rf],
            wavenumber: vec![beta; n_rf],
            element_positions: vec![positions; n_rf],
        }
    }
}

/// Diagonal `P` with entry `(i·N_E + n)` equal to `exp(−ρ_{i,n}(α_i + jβ_i))`.
pub fn build_propagation_matrix(waveguides: &WaveguideModel, n_rf: usize, n_e: usize) -> Result<CMatrix> {
    let WaveguideModel {
        attenuation,
        wavenumber,
        element_positions,
    } = waveguides;
    if attenuation.len() != n_rf || wavenumber.len() != n_rf || element_positions.len() != n_rf {
        return Err(Error::InvalidArgument(format!(
            "waveguide model must describe {n_rf} guides"
        )));
    }
    if let Some(a) = attenuation.iter().find(|a| !(**a >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative attenuation {a}")));
    }
    if element_positions.iter().any(|p| p.len() != n_e) {
        return Err(Error::InvalidArgument(format!(
            "each waveguide must list {n_e} element positions"
        )));
    }
    let n = n_rf * n_e;
    let mut p = CMatrix::zeros(n, n);
    for i in 0..n_rf {
        let k = c(attenuation[i], wavenumber[i]);
        for (e, &rho) in element_positions[i].iter().enumerate() {
            p[(i * n_e + e, i * n_e + e)] = (-rho * k).exp();
        }
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Architecture {
    #[serde(rename = "pc")]
    PartiallyConnected,
    #[serde(rename = "fc")]
    FullyConnected,
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::PartiallyConnected => "pc",
            Architecture::FullyConnected => "fc",
        })
    }
}

/// Waveguide index of RIS element `row` in PC mode.
#[inline]
pub fn waveguide_of_element(row: usize, n_e: usize) -> usize {
    row / n_e
}

/// Waveguide served by column `col` of a PC profile bank (`col = k·N_RF + j`).
#[inline]
pub fn waveguide_of_profile_column(col: usize, n_rf: usize) -> usize {
    col % n_rf
}

/// Number of draws attempted before giving up on a nonsingular bank.
const BANK_ATTEMPTS: usize = 64;

/// Draws the `N_RIS × N_RIS` profile bank `W`.
///
/// PC: horizontal concatenation of `N_E` distinct `N_RIS × N_RF` matrices `U`
/// with `U[i·N_E + n, j] ≠ 0` only when `i = j`. FC: dense. Entries are uniform
/// codebook draws; banks that come out singular are redrawn.
pub fn build_profile_bank<R: Rng + ?Sized>(
    mode: Architecture,
    n_ris: usize,
    n_rf: usize,
    codebook: &LorentzianCodebook,
    rng: &mut R,
) -> Result<CMatrix> {
    if n_rf == 0 || n_rf > n_ris {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= n_rf <= n_ris, got n_rf={n_rf}, n_ris={n_ris}"
        )));
    }
    if mode == Architecture::PartiallyConnected && n_ris % n_rf != 0 {
        return Err(Error::InvalidArgument(format!(
            "partially-connected mode needs n_ris divisible by n_rf ({n_ris} % {n_rf} != 0)"
        )));
    }
    let mut last_condition = f64::INFINITY;
    for _ in 0..BANK_ATTEMPTS {
        let w = match mode {
            Architecture::FullyConnected => CMatrix::from_fn(n_ris, n_ris, |_, _| codebook.sample(rng)),
            Architecture::PartiallyConnected => draw_pc_bank(n_ris, n_rf, codebook, rng),
        };
        last_condition = condition_number(&w);
        if last_condition <= MAX_PROFILE_CONDITION {
            return Ok(w);
        }
    }
    Err(Error::SingularProfileBank {
        condition: last_condition,
    })
}

fn draw_pc_bank<R: Rng + ?Sized>(
    n_ris: usize,
    n_rf: usize,
    codebook: &LorentzianCodebook,
    rng: &mut R,
) -> CMatrix {
    let n_e = n_ris / n_rf;
    let mut profiles: Vec<Vec<Complex64>> = Vec::with_capacity(n_e);
    while profiles.len() < n_e {
        // u_{i,n} for all elements; the waveguide is implied by the row
        let u: Vec<Complex64> = (0..n_ris).map(|_| codebook.sample(rng)).collect();
        // a codebook with a single distinct value can only ever give one profile
        let distinct_possible = codebook.len().map_or(true, |l| l > 2);
        if distinct_possible && profiles.iter().any(|p| p == &u) {
            continue;
        }
        profiles.push(u);
    }
    let mut w = CMatrix::zeros(n_ris, n_ris);
    for (k, u) in profiles.iter().enumerate() {
        for (row, &val) in u.iter().enumerate() {
            let guide = waveguide_of_element(row, n_e);
            w[(row, k * n_rf + guide)] = val;
        }
    }
    w
}

#[derive(Debug, Clone)]
pub struct FrontEndModel {
    pub mode: Architecture,
    pub n_ris: usize,
    pub n_rf: usize,
    pub n_e: usize,
    pub p_matrix: CMatrix,
    pub profile_bank: CMatrix,
    pub codebook: LorentzianCodebook,
}

impl FrontEndModel {
    /// Draws a profile bank and assembles the front end. In FC mode the
    /// surface is modeled as a single guide of `N_RIS` elements (`n_e = n_ris`).
    pub fn draw<R: Rng + ?Sized>(
        mode: Architecture,
        n_ris: usize,
        n_rf: usize,
        codebook: LorentzianCodebook,
        waveguides: Option<&WaveguideModel>,
        rng: &mut R,
    ) -> Result<Self> {
        let profile_bank = build_profile_bank(mode, n_ris, n_rf, &codebook, rng)?;
        let (guides, n_e) = match mode {
            Architecture::PartiallyConnected => (n_rf, n_ris / n_rf),
            Architecture::FullyConnected => (1, n_ris),
        };
        let p_matrix = match waveguides {
            Some(model) => build_propagation_matrix(model, guides, n_e)?,
            None => build_propagation_matrix(&WaveguideModel::lossless(guides, n_e, 1.0), guides, n_e)?,
        };
        Ok(Self {
            mode,
            n_ris,
            n_rf,
            n_e,
            p_matrix,
            profile_bank,
            codebook,
        })
    }

    /// Front end with `W = P = I` (digital pass-through).
    pub fn identity(n_ris: usize) -> Self {
        Self {
            mode: Architecture::FullyConnected,
            n_ris,
            n_rf: n_ris,
            n_e: 1,
            p_matrix: CMatrix::identity(n_ris, n_ris),
            profile_bank: CMatrix::identity(n_ris, n_ris),
            codebook: LorentzianCodebook::Continuous,
        }
    }

    /// `Wᵀ Pᴴ`, the per-slot combining map applied before masking.
    pub fn combiner(&self) -> CMatrix {
        self.profile_bank.transpose() * self.p_matrix.adjoint()
    }
}

/// Binary `N_RIS × T` selection matrix; column `t` marks the RF outputs
/// observed in slot `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMask {
    entries: DMatrix<bool>,
}

impl SelectionMask {
    pub fn all_ones(n_ris: usize, t_slots: usize) -> Self {
        Self {
            entries: DMatrix::from_element(n_ris, t_slots, true),
        }
    }

    pub fn from_entries(entries: DMatrix<bool>) -> Self {
        Self { entries }
    }

    pub fn n_ris(&self) -> usize {
        self.entries.nrows()
    }

    pub fn t_slots(&self) -> usize {
        self.entries.ncols()
    }

    #[inline]
    pub fn is_selected(&self, row: usize, slot: usize) -> bool {
        self.entries[(row, slot)]
    }

    pub fn entries(&self) -> &DMatrix<bool> {
        &self.entries
    }

    pub fn column_sums(&self) -> Vec<usize> {
        self.entries
            .column_iter()
            .map(|col| col.iter().filter(|&&b| b).count())
            .collect()
    }

    pub fn is_all_ones(&self) -> bool {
        self.entries.iter().all(|&b| b)
    }

    /// Observed scalar equations, `Σ Ω`.
    pub fn observed_count(&self) -> usize {
        self.entries.iter().filter(|&&b| b).count()
    }

    /// `Ω` as a 0/1 complex matrix.
    pub fn to_matrix(&self) -> CMatrix {
        self.entries.map(|b| if b { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    /// `Ω ∘ M`.
    pub fn apply(&self, m: &CMatrix) -> CMatrix {
        let mut out = m.clone();
        out.zip_apply(&self.entries, |v, keep| {
            if !keep {
                *v = c(0.0, 0.0);
            }
        });
        out
    }
}

/// Selects `n_rf` distinct rows per slot, uniformly without replacement.
pub fn sample_selection_mask<R: Rng + ?Sized>(
    n_ris: usize,
    n_rf: usize,
    t_slots: usize,
    rng: &mut R,
) -> Result<SelectionMask> {
    if n_rf > n_ris {
        return Err(Error::InvalidArgument(format!(
            "cannot select {n_rf} of {n_ris} outputs"
        )));
    }
    let mut entries = DMatrix::from_element(n_ris, t_slots, false);
    for t in 0..t_slots {
        for row in rand::seq::index::sample(rng, n_ris, n_rf).iter() {
            entries[(row, t)] = true;
        }
    }
    Ok(SelectionMask { entries })
}

#[derive(Debug, Clone)]
pub struct PilotBlock {
    pub s1: CMatrix,
    pub s2: CMatrix,
    /// `S̄ = [S1; S2]`.
    pub stacked: CMatrix,
}

impl PilotBlock {
    pub fn from_parts(s1: CMatrix, s2: CMatrix) -> Result<Self> {
        if s1.ncols() != s2.ncols() {
            return Err(Error::dims("pilot blocks", s1.shape(), s2.shape()));
        }
        let (n1, n2, t) = (s1.nrows(), s2.nrows(), s1.ncols());
        let mut stacked = CMatrix::zeros(n1 + n2, t);
        stacked.rows_mut(0, n1).copy_from(&s1);
        stacked.rows_mut(n1, n2).copy_from(&s2);
        Ok(Self { s1, s2, stacked })
    }

    pub fn t_slots(&self) -> usize {
        self.stacked.ncols()
    }
}

/// I.i.d. complex Gaussian pilots; each UE's per-slot vector has expected
/// squared norm `power`.
pub fn generate_pilots<R: Rng + ?Sized>(
    n1: usize,
    n2: usize,
    t_slots: usize,
    power: f64,
    rng: &mut R,
) -> Result<PilotBlock> {
    if t_slots == 0 || n1 == 0 || n2 == 0 {
        return Err(Error::InvalidArgument("pilot block dimensions must be positive".into()));
    }
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::InvalidArgument(format!("pilot power must be positive, got {power}")));
    }
    let mut draw = |n: usize| {
        let scale = (power / n as f64).sqrt();
        CMatrix::from_fn(n, t_slots, |_, _| complex_gaussian(rng) * scale)
    };
    let s1 = draw(n1);
    let s2 = draw(n2);
    PilotBlock::from_parts(s1, s2)
}

#[derive(Debug, Clone)]
pub struct ObservationBlock {
    /// `R`, `N_RIS × T`, zero wherever the mask is zero.
    pub r_matrix: CMatrix,
    pub noise_variance: f64,
}

/// `R = Ω ∘ (Wᵀ Pᴴ (H1 S1 + H2 S2)) + N`, with `CN(0, σ²)` noise only on
/// selected entries.
pub fn synthesize_observations<R: Rng + ?Sized>(
    h1: &CMatrix,
    h2: &CMatrix,
    pilots: &PilotBlock,
    front_end: &FrontEndModel,
    mask: &SelectionMask,
    noise_variance: f64,
    rng: &mut R,
) -> Result<ObservationBlock> {
    let n_ris = front_end.n_ris;
    let t = pilots.t_slots();
    check_shape("synthesize_observations: h1", h1, n_ris, pilots.s1.nrows())?;
    check_shape("synthesize_observations: h2", h2, n_ris, pilots.s2.nrows())?;
    if mask.n_ris() != n_ris || mask.t_slots() != t {
        return Err(Error::dims(
            "synthesize_observations: mask",
            (n_ris, t),
            (mask.n_ris(), mask.t_slots()),
        ));
    }
    if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid noise variance {noise_variance}")));
    }
    let y_ris = front_end.p_matrix.adjoint() * (h1 * &pilots.s1 + h2 * &pilots.s2);
    let combined = front_end.profile_bank.transpose() * y_ris;
    let mut r_matrix = mask.apply(&combined);
    if noise_variance > 0.0 {
        let std = noise_variance.sqrt();
        // column-major walk keeps the noise draw order fixed
        for slot in 0..t {
            for row in 0..n_ris {
                if mask.is_selected(row, slot) {
                    r_matrix[(row, slot)] += complex_gaussian(rng) * std;
                }
            }
        }
    }
    Ok(ObservationBlock {
        r_matrix,
        noise_variance,
    })
}
