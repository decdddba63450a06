//! Successive LoS component detection over a matched-filter angular spectrum.
//!
//! Each round computes `T(m, n) = |a(theta_m, phi_n)^H h|^2 / M` on the
//! elevation/azimuth grid, compares the peak against `kappa` times the grid
//! mean, and on detection subtracts the least-squares fit `mu a` of the peak
//! direction from the working estimate.
//!
//! Grid spectra are evaluated with FFTs when the azimuth grid size is a
//! multiple of the antenna count: rotating the look direction by one element
//! spacing cyclically shifts the UCA response, so every elevation row is a
//! circular convolution. Other grid sizes fall back to direct inner products.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Arc, OnceLock};

use rustfft::{Fft, FftPlanner};

use crate::channel::{steering_vector, ArrayGeometry};
use crate::{ChannelVector, Error, Result, VectorRole, C64};

/// Residual energy (relative to the input estimate) below which the residual
/// is treated as numerically zero and detection stops.
pub const NUMERICAL_FLOOR: f64 = 1e-24;

/// Search grid over `theta in [0, pi/2)` and `phi in [-pi, pi)`.
///
/// `theta_m = m pi / (2 N_theta)` and `phi_n = 2 pi n / N_phi - pi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngularGrid {
    n_theta: usize,
    n_phi: usize,
}

impl AngularGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(Error::invalid("grid", "N_theta and N_phi must be positive"));
        }
        Ok(Self { n_theta, n_phi })
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn cells(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn theta(&self, m: usize) -> f64 {
        m as f64 * PI / (2.0 * self.n_theta as f64)
    }

    pub fn phi(&self, n: usize) -> f64 {
        2.0 * PI * n as f64 / self.n_phi as f64 - PI
    }

    pub fn theta_step(&self) -> f64 {
        PI / (2.0 * self.n_theta as f64)
    }

    pub fn phi_step(&self) -> f64 {
        2.0 * PI / self.n_phi as f64
    }

    /// Nearest grid cell to an arbitrary direction (theta clamped to the grid).
    pub fn nearest_cell(&self, theta: f64, phi: f64) -> (usize, usize) {
        let m = (theta / self.theta_step())
            .round()
            .clamp(0.0, (self.n_theta - 1) as f64) as usize;
        let wrapped = (phi + PI).rem_euclid(2.0 * PI);
        let n = (wrapped / self.phi_step()).round() as usize % self.n_phi;
        (m, n)
    }

    /// Whether both grid steps are finer than the supplied 3-dB beamwidths.
    pub fn resolves(&self, beamwidths: Beamwidths) -> bool {
        self.theta_step() < beamwidths.theta && self.phi_step() < beamwidths.phi
    }
}

/// Full 3-dB beamwidths of the array response (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beamwidths {
    pub theta: f64,
    pub phi: f64,
}

/// Numerically measured 3-dB beamwidths: elevation at the zenith, azimuth at
/// the horizon, where each is narrowest.
pub fn beamwidths(array: &ArrayGeometry) -> Beamwidths {
    let m = array.antennas() as f64;
    let width = |look: ChannelVector, probe: &dyn Fn(f64) -> ChannelVector| {
        // bisection on the half-power point of |a(look)^H a(probe)|^2 / M^2
        let gain = |x: f64| look.inner(&probe(x)).norm_sqr() / (m * m);
        let (mut lo, mut hi) = (0.0, PI / 2.0);
        let mut step = 1e-4;
        while step < PI / 2.0 && gain(step) > 0.5 {
            step *= 1.5;
        }
        hi = hi.min(step);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if gain(mid) > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        2.0 * lo
    };
    let theta = width(steering_vector(array, 0.0, 0.0), &|x| steering_vector(array, x, 0.0));
    let phi = width(steering_vector(array, PI / 2.0, 0.0), &|x| {
        steering_vector(array, PI / 2.0, x)
    });
    Beamwidths { theta, phi }
}

/// Row-major `N_theta x N_phi` matched-filter output.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    n_theta: usize,
    n_phi: usize,
}

impl Spectrum {
    pub fn new(values: Vec<f64>, n_theta: usize, n_phi: usize) -> Result<Self> {
        if values.len() != n_theta * n_phi {
            return Err(Error::DimensionMismatch {
                expected: n_theta * n_phi,
                actual: values.len(),
            });
        }
        Ok(Self { values, n_theta, n_phi })
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.values[m * self.n_phi + n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Peak cell; ties resolve to the lowest row-major index.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (best / self.n_phi, best % self.n_phi, self.values[best])
    }

    /// Dumps `theta,phi,T` rows.
    pub fn write_csv<W: Write>(&self, grid: &AngularGrid, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "phi", "T"])?;
        for m in 0..self.n_theta {
            for n in 0..self.n_phi {
                w.write_record([
                    grid.theta(m).to_string(),
                    grid.phi(n).to_string(),
                    self.get(m, n).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Reference evaluation by direct inner products, `O(M N_theta N_phi)`.
pub fn matched_filter_spectrum(
    estimate: &ChannelVector,
    grid: &AngularGrid,
    array: &ArrayGeometry,
) -> Result<Spectrum> {
    estimate.ensure_len(array.antennas())?;
    let m = array.antennas() as f64;
    let mut values = Vec::with_capacity(grid.cells());
    for mi in 0..grid.n_theta() {
        for ni in 0..grid.n_phi() {
            let a = steering_vector(array, grid.theta(mi), grid.phi(ni));
            values.push(a.inner(estimate).norm_sqr() / m);
        }
    }
    Spectrum::new(values, grid.n_theta(), grid.n_phi())
}

enum Engine {
    Fft {
        /// Per elevation row: DFT of the conjugate-response kernel, pre-divided
        /// by `N_phi` to fold in the inverse-transform normalisation.
        kernels: Vec<Vec<C64>>,
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
    },
    Direct {
        /// Grid steering vectors, cell-major.
        table: Vec<C64>,
    },
}

/// Precomputed matched-filter bank for one array geometry and grid. Immutable
/// and shareable across worker threads.
pub struct MatchedFilterBank {
    array: ArrayGeometry,
    grid: AngularGrid,
    engine: Engine,
    /// Grid responses to grid steering vectors, built on first use (FFT
    /// engine only); see [`MatchedFilterBank::subtract_atom`].
    shift_table: OnceLock<Option<Vec<C64>>>,
}

/// Upper bound on the response table size, bytes.
const SHIFT_TABLE_LIMIT: usize = 96 << 20;

impl std::fmt::Debug for MatchedFilterBank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MatchedFilterBank")
            .field("array", &self.array)
            .field("grid", &self.grid)
            .field("fft", &matches!(self.engine, Engine::Fft { .. }))
            .finish()
    }
}

impl MatchedFilterBank {
    pub fn new(array: ArrayGeometry, grid: AngularGrid) -> Self {
        let m = array.antennas();
        let n = grid.n_phi();
        let engine = if n.is_multiple_of(m) {
            let mut planner = FftPlanner::new();
            let fft_n = planner.plan_fft_forward(n);
            let kernels = (0..grid.n_theta())
                .map(|mi| {
                    let ks = array.phase_scale() * grid.theta(mi).sin();
                    // conj(a_k(theta, phi_j)) = c[(j - r k) mod N],
                    // c[j] = exp(-j ks cos(2 pi j / N))
                    let mut c: Vec<C64> = (0..n)
                        .map(|j| C64::from_polar(1.0, -ks * (2.0 * PI * j as f64 / n as f64).cos()))
                        .collect();
                    fft_n.process(&mut c);
                    c.iter_mut().for_each(|z| *z /= n as f64);
                    c
                })
                .collect();
            Engine::Fft {
                kernels,
                forward: planner.plan_fft_forward(m),
                inverse: planner.plan_fft_inverse(n),
            }
        } else {
            let mut table = Vec::with_capacity(grid.cells() * m);
            for mi in 0..grid.n_theta() {
                for ni in 0..grid.n_phi() {
                    table.extend_from_slice(steering_vector(&array, grid.theta(mi), grid.phi(ni)).entries());
                }
            }
            Engine::Direct { table }
        };
        Self {
            array,
            grid,
            engine,
            shift_table: OnceLock::new(),
        }
    }

    pub fn array(&self) -> &ArrayGeometry {
        &self.array
    }

    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    pub fn uses_fft(&self) -> bool {
        matches!(self.engine, Engine::Fft { .. })
    }

    pub fn steering(&self, m: usize, n: usize) -> ChannelVector {
        match &self.engine {
            Engine::Direct { table } => {
                let len = self.array.antennas();
                let start = (m * self.grid.n_phi() + n) * len;
                ChannelVector::new(table[start..start + len].to_vec(), VectorRole::Steering)
            }
            Engine::Fft { .. } => steering_vector(&self.array, self.grid.theta(m), self.grid.phi(n)),
        }
    }

    /// Complex matched-filter outputs `a(theta_m, phi_n)^H h`, row-major.
    pub fn responses(&self, estimate: &ChannelVector) -> Result<Vec<C64>> {
        let m = self.array.antennas();
        estimate.ensure_len(m)?;
        let n_phi = self.grid.n_phi();
        let mut out = Vec::with_capacity(self.grid.cells());
        match &self.engine {
            Engine::Fft {
                kernels,
                forward,
                inverse,
            } => {
                let mut spectrum_m = estimate.entries().to_vec();
                forward.process(&mut spectrum_m);
                let mut buf = vec![C64::new(0.0, 0.0); n_phi];
                let mut scratch = vec![C64::new(0.0, 0.0); inverse.get_inplace_scratch_len()];
                for kernel in kernels {
                    for (f, (b, k)) in buf.iter_mut().zip(kernel).enumerate() {
                        *b = k * spectrum_m[f % m];
                    }
                    inverse.process_with_scratch(&mut buf, &mut scratch);
                    out.extend_from_slice(&buf);
                }
            }
            Engine::Direct { table } => {
                for a in table.chunks_exact(m) {
                    out.push(
                        a.iter()
                            .zip(estimate.entries())
                            .fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y),
                    );
                }
            }
        }
        Ok(out)
    }

    pub fn spectrum(&self, estimate: &ChannelVector) -> Result<Spectrum> {
        let mf = self.array.antennas() as f64;
        let values = self.responses(estimate)?.iter().map(|z| z.norm_sqr() / mf).collect();
        Spectrum::new(values, self.grid.n_theta(), self.grid.n_phi())
    }

    /// Azimuth cells per element rotation, when the FFT engine is active.
    fn cells_per_element(&self) -> Option<usize> {
        match self.engine {
            Engine::Fft { .. } => Some(self.grid.n_phi() / self.array.antennas()),
            Engine::Direct { .. } => None,
        }
    }

    /// Rotating the look direction by one element spacing is a cyclic shift
    /// of the UCA response, so the grid response to the steering vector of
    /// cell `(m0, p + r s)` is that of `(m0, p)` shifted by `r s` azimuth
    /// cells. Only `N_theta * r` reference responses are stored.
    fn shift_table(&self) -> Option<&[C64]> {
        self.shift_table
            .get_or_init(|| {
                let r = self.cells_per_element()?;
                let size = self.grid.n_theta() * r * self.grid.cells() * std::mem::size_of::<C64>();
                if size > SHIFT_TABLE_LIMIT {
                    return None;
                }
                let mut table = Vec::with_capacity(size / std::mem::size_of::<C64>());
                for m0 in 0..self.grid.n_theta() {
                    for p in 0..r {
                        let a = steering_vector(&self.array, self.grid.theta(m0), self.grid.phi(p));
                        table.extend(self.responses(&a).expect("steering length matches"));
                    }
                }
                Some(table)
            })
            .as_deref()
    }

    /// Updates `responses` for `h <- h - mu a(cell)` without recomputing them.
    /// Returns `false` when no response table is available; the caller must
    /// then recompute from the updated estimate.
    pub fn subtract_atom(&self, responses: &mut [C64], cell: (usize, usize), mu: C64) -> bool {
        let (Some(table), Some(r)) = (self.shift_table(), self.cells_per_element()) else {
            return false;
        };
        let n_phi = self.grid.n_phi();
        let (m0, n0) = cell;
        let (p, shift) = (n0 % r, n0 - n0 % r);
        let block = &table[(m0 * r + p) * self.grid.cells()..(m0 * r + p + 1) * self.grid.cells()];
        for (row_out, row_ref) in responses.chunks_exact_mut(n_phi).zip(block.chunks_exact(n_phi)) {
            // out[j] -= mu * ref[(j - shift) mod N]
            let (head, tail) = row_out.split_at_mut(shift);
            for (o, g) in tail.iter_mut().zip(&row_ref[..n_phi - shift]) {
                *o -= mu * g;
            }
            for (o, g) in head.iter_mut().zip(&row_ref[n_phi - shift..]) {
                *o -= mu * g;
            }
        }
        true
    }
}

/// `kappa` times the arithmetic mean of the spectrum.
pub fn detection_threshold(spectrum: &Spectrum, kappa: f64) -> f64 {
    kappa * spectrum.mean()
}

/// Least-squares gain of `steering` in `estimate`: `a^H h / M` (valid for
/// unit-modulus steering vectors, where `a^H a = M`).
pub fn fit_los_gain(estimate: &ChannelVector, steering: &ChannelVector) -> C64 {
    steering.inner(estimate) / steering.len() as f64
}

/// One grid direction and its fitted gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAtom {
    pub theta: f64,
    pub phi: f64,
    pub cell: (usize, usize),
    pub mu: C64,
}

impl GridAtom {
    pub fn steering(&self, array: &ArrayGeometry) -> ChannelVector {
        steering_vector(array, self.theta, self.phi)
    }
}

/// A detected LoS component. The primary direction is where it was first
/// found; later peaks inside its main lobe (leakage left by earlier
/// subtractions, off-grid mismatch) are folded in as extra atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct LoSComponent {
    pub theta: f64,
    pub phi: f64,
    /// Grid cell the component was first detected in.
    pub cell: (usize, usize),
    /// Accumulated gain at the primary cell.
    pub mu: C64,
    pub peak_value: f64,
    pub extra: Vec<GridAtom>,
}

impl LoSComponent {
    pub fn new(theta: f64, phi: f64, cell: (usize, usize), mu: C64, peak_value: f64) -> Self {
        Self {
            theta,
            phi,
            cell,
            mu,
            peak_value,
            extra: Vec::new(),
        }
    }

    /// Steering vector of the primary direction.
    pub fn steering(&self, array: &ArrayGeometry) -> ChannelVector {
        steering_vector(array, self.theta, self.phi)
    }

    pub fn atoms(&self) -> impl Iterator<Item = GridAtom> + '_ {
        std::iter::once(GridAtom {
            theta: self.theta,
            phi: self.phi,
            cell: self.cell,
            mu: self.mu,
        })
        .chain(self.extra.iter().copied())
    }

    /// Everything this component subtracted: `sum mu_i a_i` over its atoms.
    pub fn reconstruct(&self, array: &ArrayGeometry) -> ChannelVector {
        let mut v = ChannelVector::zeros(array.antennas(), VectorRole::Steering);
        for atom in self.atoms() {
            v.axpy(atom.mu, &atom.steering(array));
        }
        v
    }

    fn absorb(&mut self, cell: (usize, usize), theta: f64, phi: f64, mu: C64) {
        if self.cell == cell {
            self.mu += mu;
        } else if let Some(a) = self.extra.iter_mut().find(|a| a.cell == cell) {
            a.mu += mu;
        } else {
            self.extra.push(GridAtom { theta, phi, cell, mu });
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    /// Distinct detected directions in order of first detection.
    pub components: Vec<LoSComponent>,
    pub residual: ChannelVector,
    /// Residual energy after each removal round.
    pub round_energies: Vec<f64>,
    /// A cap stopped detection while the threshold test still fired.
    pub truncated: bool,
}

impl DetectionOutcome {
    pub fn count(&self) -> usize {
        self.components.len()
    }

    pub fn rounds(&self) -> usize {
        self.round_energies.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub kappa: f64,
    pub max_iterations: usize,
}

impl DetectorConfig {
    pub fn new(kappa: f64, max_iterations: usize) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::invalid("kappa", "must be positive"));
        }
        if max_iterations < 1 {
            return Err(Error::invalid("max_iterations", "must be >= 1"));
        }
        Ok(Self { kappa, max_iterations })
    }
}

/// Detector bound to a filter bank. Cheap to clone (shares the bank).
#[derive(Debug, Clone)]
pub struct Detector {
    pub bank: Arc<MatchedFilterBank>,
    pub config: DetectorConfig,
}

impl Detector {
    pub fn new(bank: Arc<MatchedFilterBank>, config: DetectorConfig) -> Self {
        Self { bank, config }
    }

    pub fn array(&self) -> &ArrayGeometry {
        self.bank.array()
    }

    pub fn detect(&self, estimate: &ChannelVector) -> Result<DetectionOutcome> {
        successive_detection(estimate, &self.bank, self.config.kappa, self.config.max_iterations)
    }
}

/// Upper bound on removal rounds per allowed component. Re-detections of an
/// already detected cell (leakage between non-orthogonal components) consume
/// rounds but not components.
pub const ROUNDS_PER_COMPONENT: usize = 8;

/// Row-major argmax (lowest index on ties) and mean of `|y|^2 / M`.
fn peak_and_mean(responses: &[C64], m: f64) -> (usize, f64, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    let mut sum = 0.0;
    for (i, z) in responses.iter().enumerate() {
        let t = z.norm_sqr();
        sum += t;
        if t > best.1 {
            best = (i, t);
        }
    }
    (best.0, best.1 / m, sum / m / responses.len() as f64)
}

/// Normalised correlation `|a1^H a2| / M` above which two directions are
/// treated as the same component (half-power main-lobe overlap).
pub const MAIN_LOBE_CORRELATION: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Component that a new peak belongs to: one already holding that cell,
/// otherwise the most correlated primary direction inside the main lobe.
/// `primaries[i]` is the steering vector of `components[i]`.
fn owning_component(
    components: &[LoSComponent],
    primaries: &[ChannelVector],
    cell: (usize, usize),
    steering: &ChannelVector,
) -> Option<usize> {
    if let Some(i) = components.iter().position(|c| c.atoms().any(|a| a.cell == cell)) {
        return Some(i);
    }
    let m = steering.len() as f64;
    primaries
        .iter()
        .enumerate()
        .map(|(i, a)| (i, a.inner(steering).norm() / m))
        .filter(|(_, rho)| *rho >= MAIN_LOBE_CORRELATION)
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
}

/// Iteratively extracts the strongest grid direction while its matched-filter
/// peak strictly exceeds `kappa` times the spectrum mean, recomputing the
/// spectrum and threshold from the residual every round.
///
/// A peak inside the main lobe of an already detected component is still
/// subtracted as `mu a`, but is recorded as part of that component, so
/// `components` lists distinct directions. `max_iterations` caps the number
/// of distinct components.
pub fn successive_detection(
    estimate: &ChannelVector,
    bank: &MatchedFilterBank,
    kappa: f64,
    max_iterations: usize,
) -> Result<DetectionOutcome> {
    DetectorConfig::new(kappa, max_iterations)?;
    estimate.ensure_len(bank.array().antennas())?;
    let floor = estimate.norm_sqr() * NUMERICAL_FLOOR;
    let max_rounds = max_iterations.saturating_mul(ROUNDS_PER_COMPONENT);
    let mut residual = estimate.clone().with_role(VectorRole::Residual);
    let mut components: Vec<LoSComponent> = Vec::new();
    let mut round_energies = Vec::new();
    let mut truncated = false;
    let mf = bank.array().antennas() as f64;
    let n_phi = bank.grid().n_phi();
    let mut responses = bank.responses(&residual)?;
    let mut primaries: Vec<ChannelVector> = Vec::new();
    loop {
        if residual.norm_sqr() <= floor {
            break;
        }
        let (idx, peak, mean) = peak_and_mean(&responses, mf);
        let (m, n) = (idx / n_phi, idx % n_phi);
        if !(peak > kappa * mean) {
            break;
        }
        let a = bank.steering(m, n);
        let existing = owning_component(&components, &primaries, (m, n), &a);
        if round_energies.len() == max_rounds || (existing.is_none() && components.len() == max_iterations) {
            truncated = true;
            break;
        }
        let mu = fit_los_gain(&residual, &a);
        residual.axpy(-mu, &a);
        round_energies.push(residual.norm_sqr());
        if !bank.subtract_atom(&mut responses, (m, n), mu) {
            responses = bank.responses(&residual)?;
        }
        let (theta, phi) = (bank.grid().theta(m), bank.grid().phi(n));
        match existing {
            Some(i) => components[i].absorb((m, n), theta, phi, mu),
            None => {
                components.push(LoSComponent::new(theta, phi, (m, n), mu, peak));
                primaries.push(a);
            }
        }
    }
    Ok(DetectionOutcome {
        components,
        residual,
        round_energies,
        truncated,
    })
}
