//! Histograms of transverse exit velocities and the shape metrics used to
//! label them.
//!
//! Velocities are binned in units of a reference velocity (`v*` for particle
//! runs, `v0` for quantum maps). Histogram values are row-major with `z`
//! (the second velocity component) selecting the row.

use crate::error::AnalysisError;
use crate::newton::ExitRecord;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisUnit {
    VStar,
    V0,
}

impl AxisUnit {
    pub fn label(self) -> &'static str {
        match self {
            AxisUnit::VStar => "v_star",
            AxisUnit::V0 => "v0",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramGrid {
    pub nx: usize,
    pub nz: usize,
    pub x_range: (f64, f64),
    pub z_range: (f64, f64),
    /// `values[iz * nx + ix]`: counts or probability mass.
    pub values: Vec<f64>,
    /// Mass that fell outside the ranges.
    pub overflow: f64,
    pub unit: AxisUnit,
}

impl HistogramGrid {
    pub fn zeros(bins: usize, range: f64, unit: AxisUnit) -> Self {
        Self {
            nx: bins,
            nz: bins,
            x_range: (-range, range),
            z_range: (-range, range),
            values: vec![0.0; bins * bins],
            overflow: 0.0,
            unit,
        }
    }

    pub fn dx(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) / self.nx as f64
    }

    pub fn dz(&self) -> f64 {
        (self.z_range.1 - self.z_range.0) / self.nz as f64
    }

    pub fn x_center(&self, ix: usize) -> f64 {
        self.x_range.0 + (ix as f64 + 0.5) * self.dx()
    }

    pub fn z_center(&self, iz: usize) -> f64 {
        self.z_range.0 + (iz as f64 + 0.5) * self.dz()
    }

    pub fn in_range_total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Adds `w` at `(x, z)` or to the overflow.
    pub fn add(&mut self, x: f64, z: f64, w: f64) {
        match (bin_index(x, self.x_range, self.nx), bin_index(z, self.z_range, self.nz)) {
            (Some(ix), Some(iz)) => self.values[iz * self.nx + ix] += w,
            _ => self.overflow += w,
        }
    }

    /// Copy whose in-range bins sum to one (unchanged if empty).
    pub fn normalized(&self) -> HistogramGrid {
        let total = self.in_range_total();
        let mut h = self.clone();
        if total > 0.0 {
            for v in &mut h.values {
                *v /= total;
            }
            h.overflow /= total;
        }
        h
    }

    fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.nz).flat_map(move |iz| {
            (0..self.nx).map(move |ix| (self.x_center(ix), self.z_center(iz), self.values[iz * self.nx + ix]))
        })
    }
}

fn bin_index(v: f64, range: (f64, f64), n: usize) -> Option<usize> {
    if !(v >= range.0 && v < range.1) {
        return None;
    }
    let i = ((v - range.0) / (range.1 - range.0) * n as f64) as usize;
    Some(i.min(n - 1))
}

/// Bin count and symmetric range `[−range, range]` in velocity units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binning {
    pub bins: usize,
    pub range: f64,
}

impl Default for Binning {
    /// 201 bins over ±1.5: the odd count puts zero at a bin center.
    fn default() -> Self {
        Self { bins: 201, range: 1.5 }
    }
}

impl Binning {
    fn validate(&self) -> Result<(), AnalysisError> {
        if self.bins < 2 {
            return Err(AnalysisError::TooFewBins(self.bins));
        }
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(AnalysisError::BadRange(self.range));
        }
        Ok(())
    }
}

fn check_unit(v_unit: f64) -> Result<(), AnalysisError> {
    if v_unit > 0.0 && v_unit.is_finite() {
        Ok(())
    } else {
        Err(AnalysisError::BadUnit(v_unit))
    }
}

/// Counts of `(vx, vz) / v_unit`.
pub fn histogram2d(
    records: &[ExitRecord],
    v_unit: f64,
    binning: Binning,
) -> Result<HistogramGrid, AnalysisError> {
    binning.validate()?;
    check_unit(v_unit)?;
    let mut h = HistogramGrid::zeros(binning.bins, binning.range, AxisUnit::VStar);
    for r in records {
        h.add(r.vx / v_unit, r.vz / v_unit, 1.0);
    }
    Ok(h)
}

/// Moves the mass of every source bin to the target bin containing its
/// center.
pub fn rebin(source: &HistogramGrid, binning: Binning) -> Result<HistogramGrid, AnalysisError> {
    binning.validate()?;
    let mut h = HistogramGrid::zeros(binning.bins, binning.range, source.unit);
    h.overflow = source.overflow;
    for (x, z, w) in source.cells() {
        h.add(x, z, w);
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Vx,
    Vz,
}

/// 1D histogram along `axis` of the records whose other component lies
/// within `±window`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowProjection {
    pub axis: Axis,
    pub window: f64,
    pub centers: Vec<f64>,
    pub counts: Vec<f64>,
}

fn components(r: &ExitRecord, axis: Axis, v_unit: f64) -> (f64, f64) {
    match axis {
        Axis::Vx => (r.vx / v_unit, r.vz / v_unit),
        Axis::Vz => (r.vz / v_unit, r.vx / v_unit),
    }
}

fn windowed<'a>(
    records: &'a [ExitRecord],
    axis: Axis,
    window: f64,
    v_unit: f64,
    binning: Binning,
) -> impl Iterator<Item = (usize, &'a ExitRecord)> + 'a {
    let range = (-binning.range, binning.range);
    records.iter().filter_map(move |r| {
        let (along, across) = components(r, axis, v_unit);
        if across.abs() > window {
            return None;
        }
        bin_index(along, range, binning.bins).map(|i| (i, r))
    })
}

fn centers(binning: Binning) -> Vec<f64> {
    let w = 2.0 * binning.range / binning.bins as f64;
    (0..binning.bins).map(|i| -binning.range + (i as f64 + 0.5) * w).collect()
}

pub fn window_projection(
    records: &[ExitRecord],
    v_unit: f64,
    axis: Axis,
    window: f64,
    binning: Binning,
) -> Result<WindowProjection, AnalysisError> {
    binning.validate()?;
    check_unit(v_unit)?;
    if !(window > 0.0) {
        return Err(AnalysisError::BadWindow(window));
    }
    let mut counts = vec![0.0; binning.bins];
    for (i, _) in windowed(records, axis, window, v_unit, binning) {
        counts[i] += 1.0;
    }
    Ok(WindowProjection { axis, window, centers: centers(binning), counts })
}

/// Mean exit spin per bin of a window projection; `None` for empty bins.
pub fn conditional_spin_average(
    records: &[ExitRecord],
    v_unit: f64,
    axis: Axis,
    window: f64,
    binning: Binning,
) -> Result<Vec<Option<Vec3>>, AnalysisError> {
    binning.validate()?;
    check_unit(v_unit)?;
    if !(window > 0.0) {
        return Err(AnalysisError::BadWindow(window));
    }
    let mut sum = vec![Vec3::ZERO; binning.bins];
    let mut n = vec![0usize; binning.bins];
    for (i, r) in windowed(records, axis, window, v_unit, binning) {
        sum[i] += r.spin;
        n[i] += 1;
    }
    Ok(sum.into_iter().zip(n).map(|(s, k)| (k > 0).then(|| s * (1.0 / k as f64))).collect())
}

/// Depth of the dip between the two highest maxima on either side of zero:
/// the smallest value between them divided by the smaller of the two.
/// `None` if one side has no mass.
pub fn valley_ratio(profile: &WindowProjection) -> Option<f64> {
    let (neg, pos): (Vec<_>, Vec<_>) =
        profile.centers.iter().zip(&profile.counts).enumerate().partition(|(_, (c, _))| **c < 0.0);
    let peak = |side: &[(usize, (&f64, &f64))]| {
        side.iter().max_by(|a, b| a.1 .1.total_cmp(b.1 .1)).map(|(i, (_, v))| (*i, **v))
    };
    let (il, vl) = peak(&neg)?;
    let (ir, vr) = peak(&pos)?;
    if vl <= 0.0 || vr <= 0.0 {
        return None;
    }
    let valley = profile.counts[il..=ir].iter().cloned().fold(f64::INFINITY, f64::min);
    Some(valley / vl.min(vr))
}

/// Mass per annulus of width `shell` around the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub shell: f64,
    pub mass: Vec<f64>,
}

impl RadialProfile {
    /// Center of the annulus holding the most mass.
    pub fn peak(&self) -> f64 {
        let i = self
            .mass
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i);
        (i as f64 + 0.5) * self.shell
    }
}

pub fn radial_profile(hist: &HistogramGrid) -> RadialProfile {
    let shell = 2.0 * hist.dx().max(hist.dz());
    let r_max = hist.x_range.1.max(hist.z_range.1).hypot(hist.x_range.0.abs().max(hist.z_range.0.abs()));
    let mut mass = vec![0.0; (r_max / shell).ceil() as usize + 1];
    for (x, z, w) in hist.cells() {
        mass[(x.hypot(z) / shell) as usize] += w;
    }
    RadialProfile { shell, mass }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    TwoSpots,
    Stripe,
    Ring,
    Other,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::TwoSpots => "two_spots",
            Shape::Stripe => "stripe",
            Shape::Ring => "ring",
            Shape::Other => "other",
        }
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Metrics behind a [`Shape`] label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeReport {
    pub shape: Shape,
    /// Fraction of the mass within 15° of the `±vz` directions.
    pub pole_fraction: f64,
    /// Distance between the `vz < 0` and `vz > 0` cluster means over their
    /// pooled standard deviation.
    pub separation: f64,
    pub radial_peak: f64,
    /// 10° per 36th-of-a-turn sector holding at least a tenth of the mean
    /// sector mass.
    pub angular_spread_deg: f64,
    pub vx_std: f64,
    /// Distance between the 1st and 99th percentiles of `vz`.
    pub vz_span: f64,
}

pub const POLE_FRACTION_MIN: f64 = 0.6;
pub const SEPARATION_MIN: f64 = 4.0;
pub const RING_PEAK: (f64, f64) = (0.8, 1.1);
pub const RING_SPREAD_MIN_DEG: f64 = 270.0;
pub const STRIPE_VX_STD_MAX: f64 = 0.05;
pub const STRIPE_VZ_SPAN_MIN: f64 = 1.5;

pub fn classify_shape(hist: &HistogramGrid) -> ShapeReport {
    let total = hist.in_range_total();
    if !(total > 0.0) {
        return ShapeReport {
            shape: Shape::Other,
            pole_fraction: 0.0,
            separation: 0.0,
            radial_peak: 0.0,
            angular_spread_deg: 0.0,
            vx_std: 0.0,
            vz_span: 0.0,
        };
    }
    let tan15 = 15f64.to_radians().tan();
    let mut pole = 0.0;
    let mut sectors = [0.0; 36];
    let (mut sx, mut sxx) = (0.0, 0.0);
    // running moments of the two vz half-planes: (mass, Σvz, Σvz²)
    let mut lower = (0.0, 0.0, 0.0);
    let mut upper = (0.0, 0.0, 0.0);
    for (x, z, w) in hist.cells() {
        if w == 0.0 {
            continue;
        }
        sx += w * x;
        sxx += w * x * x;
        if x == 0.0 && z == 0.0 {
            continue;
        }
        if x.abs() <= tan15 * z.abs() {
            pole += w;
        }
        let angle = z.atan2(x).rem_euclid(std::f64::consts::TAU);
        sectors[((angle / std::f64::consts::TAU * 36.0) as usize).min(35)] += w;
        let side = if z < 0.0 { &mut lower } else if z > 0.0 { &mut upper } else { continue };
        side.0 += w;
        side.1 += w * z;
        side.2 += w * z * z;
    }
    let pole_fraction = pole / total;
    let separation = match (lower, upper) {
        ((ml, _, _), (mu, _, _)) if ml == 0.0 || mu == 0.0 => 0.0,
        ((ml, s1l, s2l), (mu, s1u, s2u)) => {
            let (ml_, mu_) = (s1l / ml, s1u / mu);
            let var = |m: f64, s1: f64, s2: f64| (s2 / m - (s1 / m).powi(2)).max(0.0);
            let pooled = (0.5 * (var(ml, s1l, s2l) + var(mu, s1u, s2u))).sqrt();
            if pooled > 0.0 {
                (mu_ - ml_) / pooled
            } else {
                f64::INFINITY
            }
        }
    };
    let mean_sector = sectors.iter().sum::<f64>() / 36.0;
    let angular_spread_deg =
        10.0 * sectors.iter().filter(|&&m| mean_sector > 0.0 && m >= 0.1 * mean_sector).count() as f64;
    let mean_x = sx / total;
    let vx_std = (sxx / total - mean_x * mean_x).max(0.0).sqrt();
    let vz_span = percentile_z(hist, 0.99) - percentile_z(hist, 0.01);
    let radial_peak = radial_profile(hist).peak();

    let shape = if pole_fraction > POLE_FRACTION_MIN && separation > SEPARATION_MIN {
        Shape::TwoSpots
    } else if (RING_PEAK.0..=RING_PEAK.1).contains(&radial_peak) && angular_spread_deg > RING_SPREAD_MIN_DEG {
        Shape::Ring
    } else if vx_std < STRIPE_VX_STD_MAX && vz_span > STRIPE_VZ_SPAN_MIN {
        Shape::Stripe
    } else {
        Shape::Other
    };
    ShapeReport { shape, pole_fraction, separation, radial_peak, angular_spread_deg, vx_std, vz_span }
}

/// `vz` below which a fraction `q` of the in-range mass lies (bin centers).
fn percentile_z(hist: &HistogramGrid, q: f64) -> f64 {
    let total = hist.in_range_total();
    let mut acc = 0.0;
    for iz in 0..hist.nz {
        acc += hist.values[iz * hist.nx..(iz + 1) * hist.nx].iter().sum::<f64>();
        if acc >= q * total {
            return hist.z_center(iz);
        }
    }
    hist.z_range.1
}

/// Mass fractions with `vz < 0` and `vz > 0`; a row straddling zero is
/// split evenly.
pub fn side_weights(hist: &HistogramGrid) -> (f64, f64) {
    let (mut neg, mut pos) = (0.0, 0.0);
    let half = 0.5 * hist.dz();
    for iz in 0..hist.nz {
        let row: f64 = hist.values[iz * hist.nx..(iz + 1) * hist.nx].iter().sum();
        let z = hist.z_center(iz);
        if z + half <= 0.0 {
            neg += row;
        } else if z - half >= 0.0 {
            pos += row;
        } else {
            neg += 0.5 * row;
            pos += 0.5 * row;
        }
    }
    let total = neg + pos;
    if total > 0.0 {
        (neg / total, pos / total)
    } else {
        (0.0, 0.0)
    }
}

/// Fractions of records with `vz < 0` and `vz > 0`; records at exactly zero
/// count half to each side.
pub fn side_weights_records(records: &[ExitRecord]) -> (f64, f64) {
    if records.is_empty() {
        return (0.0, 0.0);
    }
    let (mut neg, mut pos) = (0.0, 0.0);
    for r in records {
        match r.vz.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Less) => neg += 1.0,
            Some(std::cmp::Ordering::Greater) => pos += 1.0,
            _ => {
                neg += 0.5;
                pos += 0.5;
            }
        }
    }
    let n = records.len() as f64;
    (neg / n, pos / n)
}

/// One-sample Kolmogorov-Smirnov test against the uniform distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    /// Critical value at the 1% level.
    pub critical: f64,
}

impl KsResult {
    pub fn passes(&self) -> bool {
        self.statistic < self.critical
    }
}

pub fn ks_uniform(samples: &[f64], lo: f64, hi: f64) -> KsResult {
    let mut s: Vec<f64> = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in s.iter().enumerate() {
        let f = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sq = n.sqrt();
    KsResult { statistic: d, critical: 1.628 / (sq + 0.12 + 0.11 / sq) }
}
