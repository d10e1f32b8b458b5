//! Hand trajectories and simulated quadrature Doppler baseband.
//!
//! Coordinate frame: the antennas sit in the `z = 0` plane and look up the
//! `+z` boresight. RX1 is on the `-x` side of the transmitter and RX2 on the
//! `+x` side, 10 cm each. Gestures are drawn in the horizontal plane
//! `z = distance_d` above the array, so every trajectory point keeps a strictly
//! positive range to every antenna.
//!
//! Phase convention: the complex baseband of receiver `k` is
//! `A(t) * exp(-j * 2 * pi * L_k(t) / lambda)` where `L_k` is the bistatic path
//! `|p - tx| + |p - rx_k|`. A receding hand therefore shows up at negative
//! Doppler frequencies.

use std::f64::consts::{FRAC_PI_6, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const DEFAULT_CARRIER_HZ: f64 = 5.8e9;
pub const DEFAULT_SAMPLE_RATE: f64 = 600.0;
/// Hand-speed cap used to bound the Doppler bandwidth.
pub const MAX_HAND_SPEED: f64 = 4.0;
/// Smallest allowed gesture-centre distance.
pub const MIN_DISTANCE: f64 = 0.05;
/// Receiver offset from the transmitter along the baseline.
pub const ANTENNA_SPACING: f64 = 0.10;
/// Fraction of the duration spent ramping the speed up (and again down).
const SPEED_TAPER: f64 = 0.5;
/// Fine-grid oversampling used when integrating the speed profile.
const PROFILE_OVERSAMPLE: usize = 32;

pub type Vec3 = [f64; 3];

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn dist(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

/// One of the four standard gestures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GestureClass {
    Circle,
    Square,
    Tick,
    Cross,
}

impl GestureClass {
    pub const ALL: [GestureClass; 4] = [
        GestureClass::Circle,
        GestureClass::Square,
        GestureClass::Tick,
        GestureClass::Cross,
    ];
    pub const COUNT: usize = 4;

    /// Stable integer label used by dataset files and the classifier.
    pub fn label(self) -> usize {
        match self {
            GestureClass::Circle => 0,
            GestureClass::Square => 1,
            GestureClass::Tick => 2,
            GestureClass::Cross => 3,
        }
    }

    pub fn from_label(label: usize) -> Result<Self> {
        Self::ALL
            .get(label)
            .copied()
            .ok_or_else(|| Error::domain(format!("gesture label {label} out of range 0..4")))
    }

    pub fn name(self) -> &'static str {
        match self {
            GestureClass::Circle => "circle",
            GestureClass::Square => "square",
            GestureClass::Tick => "tick",
            GestureClass::Cross => "cross",
        }
    }
}

/// Everything needed to reproduce one gesture execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureParams {
    pub class: GestureClass,
    /// Characteristic stroke extent in metres.
    pub scale_r: f64,
    /// Height of the gesture centre above the transmitter, metres.
    pub distance_d: f64,
    /// Seconds.
    pub duration: f64,
    /// Relative depth of the random speed modulation, in `[0, 0.5)`.
    pub speed_jitter: f64,
    /// Relative size of the random rotation/offset of the drawn shape, in `[0, 1]`.
    pub pose_jitter: f64,
    /// Square corner radius as a fraction of `scale_r`, in `[0, 0.5)`.
    pub corner_rounding: f64,
    pub seed: u64,
}

impl GestureParams {
    pub fn new(class: GestureClass, scale_r: f64, distance_d: f64, seed: u64) -> Self {
        GestureParams {
            class,
            scale_r,
            distance_d,
            duration: 1.0,
            speed_jitter: 0.0,
            pose_jitter: 0.0,
            corner_rounding: 0.05,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::domain(format!("duration must be > 0, got {}", self.duration)));
        }
        if !(self.scale_r > 0.0 && self.scale_r.is_finite()) {
            return Err(Error::domain(format!("scale_r must be > 0, got {}", self.scale_r)));
        }
        if !(self.distance_d >= MIN_DISTANCE && self.distance_d.is_finite()) {
            return Err(Error::domain(format!(
                "distance_d must be >= {MIN_DISTANCE} m, got {}",
                self.distance_d
            )));
        }
        if !(0.0..0.5).contains(&self.speed_jitter) {
            return Err(Error::domain(format!(
                "speed_jitter must lie in [0, 0.5), got {}",
                self.speed_jitter
            )));
        }
        if !(0.0..=1.0).contains(&self.pose_jitter) {
            return Err(Error::domain(format!(
                "pose_jitter must lie in [0, 1], got {}",
                self.pose_jitter
            )));
        }
        if !(0.0..0.5).contains(&self.corner_rounding) {
            return Err(Error::domain(format!(
                "corner_rounding must lie in [0, 0.5), got {}",
                self.corner_rounding
            )));
        }
        Ok(())
    }
}

/// One transmitter and two receivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarGeometry {
    pub carrier_hz: f64,
    pub tx_pos: Vec3,
    pub rx1_pos: Vec3,
    pub rx2_pos: Vec3,
}

impl Default for RadarGeometry {
    fn default() -> Self {
        RadarGeometry {
            carrier_hz: DEFAULT_CARRIER_HZ,
            tx_pos: [0.0, 0.0, 0.0],
            rx1_pos: [-ANTENNA_SPACING, 0.0, 0.0],
            rx2_pos: [ANTENNA_SPACING, 0.0, 0.0],
        }
    }
}

impl RadarGeometry {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn receivers(&self) -> [Vec3; 2] {
        [self.rx1_pos, self.rx2_pos]
    }
}

/// Scatterer positions sampled uniformly in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub sample_rate: f64,
    pub points: Vec<Vec3>,
}

impl Trajectory {
    pub fn from_points(sample_rate: f64, points: Vec<Vec3>) -> Result<Self> {
        if !(sample_rate > 0.0) {
            return Err(Error::domain("sample_rate must be > 0"));
        }
        if points.is_empty() {
            return Err(Error::domain("trajectory must not be empty"));
        }
        Ok(Trajectory { sample_rate, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest displacement between consecutive samples, converted to m/s.
    pub fn peak_speed(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| dist(w[0], w[1]))
            .fold(0.0, f64::max)
            * self.sample_rate
    }

    /// Sum of consecutive displacements.
    pub fn polyline_length(&self) -> f64 {
        self.points.windows(2).map(|w| dist(w[0], w[1])).sum()
    }

    /// Mirror image across the `x = 0` plane (swaps the receiver sides).
    pub fn mirrored_x(&self) -> Trajectory {
        Trajectory {
            sample_rate: self.sample_rate,
            points: self.points.iter().map(|p| [-p[0], p[1], p[2]]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Segment {
    Line { from: Vec3, to: Vec3 },
    /// Arc in a plane of constant z.
    Arc { center: Vec3, radius: f64, start: f64, sweep: f64 },
}

impl Segment {
    fn length(&self) -> f64 {
        match *self {
            Segment::Line { from, to } => dist(from, to),
            Segment::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Point at fraction `u` in `[0, 1]` along the segment.
    fn at(&self, u: f64) -> Vec3 {
        match *self {
            Segment::Line { from, to } => [
                from[0] + (to[0] - from[0]) * u,
                from[1] + (to[1] - from[1]) * u,
                from[2] + (to[2] - from[2]) * u,
            ],
            Segment::Arc { center, radius, start, sweep } => {
                let a = start + sweep * u;
                [center[0] + radius * a.cos(), center[1] + radius * a.sin(), center[2]]
            }
        }
    }
}

/// A gesture shape in its local frame, parameterised by arc length.
#[derive(Debug, Clone)]
pub struct GesturePath {
    segments: Vec<Segment>,
    cumulative: Vec<f64>,
}

impl GesturePath {
    fn new(segments: Vec<Segment>) -> Self {
        let mut cumulative = Vec::with_capacity(segments.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for s in &segments {
            acc += s.length();
            cumulative.push(acc);
        }
        GesturePath { segments, cumulative }
    }

    /// Canonical (jitter-free) shape centred at the local origin in the `z = 0` plane.
    pub fn canonical(class: GestureClass, scale_r: f64, corner_rounding: f64) -> Self {
        match class {
            GestureClass::Circle => GesturePath::new(vec![Segment::Arc {
                center: [0.0, 0.0, 0.0],
                radius: scale_r / 2.0,
                start: -PI / 2.0,
                sweep: 2.0 * PI,
            }]),
            GestureClass::Square => rounded_square(scale_r, corner_rounding * scale_r),
            GestureClass::Tick => tick(scale_r),
            GestureClass::Cross => cross(scale_r),
        }
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    /// Position at arc length `s`, clamped to `[0, length]`.
    pub fn at_arclength(&self, s: f64) -> Vec3 {
        let s = s.clamp(0.0, self.length());
        let idx = match self.cumulative[1..].iter().position(|&c| s <= c) {
            Some(i) => i,
            None => self.segments.len() - 1,
        };
        let seg = &self.segments[idx];
        let len = seg.length();
        let u = if len > 0.0 { (s - self.cumulative[idx]) / len } else { 0.0 };
        seg.at(u.clamp(0.0, 1.0))
    }

    /// `n` points spaced uniformly in arc length, endpoints excluded at the far end.
    pub fn sample_uniform(&self, n: usize) -> Vec<Vec3> {
        let l = self.length();
        (0..n).map(|i| self.at_arclength(l * i as f64 / n as f64)).collect()
    }
}

fn rounded_square(side: f64, corner: f64) -> GesturePath {
    let h = side / 2.0;
    let straight = side - 2.0 * corner;
    let mut segs = Vec::with_capacity(8);
    // counter-clockwise, starting at the left end of the bottom edge
    let edges: [(Vec3, Vec3, Vec3); 4] = [
        ([-h + corner, -h, 0.0], [1.0, 0.0, 0.0], [h - corner, -h + corner, 0.0]),
        ([h, -h + corner, 0.0], [0.0, 1.0, 0.0], [h - corner, h - corner, 0.0]),
        ([h - corner, h, 0.0], [-1.0, 0.0, 0.0], [-h + corner, h - corner, 0.0]),
        ([-h, h - corner, 0.0], [0.0, -1.0, 0.0], [-h + corner, -h + corner, 0.0]),
    ];
    for (k, (start, dir, arc_center)) in edges.iter().enumerate() {
        let end = [
            start[0] + dir[0] * straight,
            start[1] + dir[1] * straight,
            0.0,
        ];
        segs.push(Segment::Line { from: *start, to: end });
        if corner > 0.0 {
            segs.push(Segment::Arc {
                center: *arc_center,
                radius: corner,
                start: -PI / 2.0 + k as f64 * PI / 2.0,
                sweep: PI / 2.0,
            });
        }
    }
    GesturePath::new(segs)
}

/// Short stroke down-right, then a stroke twice as long up-right; 100 degrees at the joint.
fn tick(scale: f64) -> GesturePath {
    let down = 45f64.to_radians();
    let up = 35f64.to_radians();
    let short = scale / 2.0;
    let a: Vec3 = [0.0, 0.0, 0.0];
    let b = [short * down.cos(), -short * down.sin(), 0.0];
    let c = [b[0] + scale * up.cos(), b[1] + scale * up.sin(), 0.0];
    let (xmin, xmax) = (a[0].min(c[0]), a[0].max(c[0]));
    let (ymin, ymax) = (b[1].min(c[1]).min(a[1]), a[1].max(c[1]));
    let off = [(xmin + xmax) / 2.0, (ymin + ymax) / 2.0, 0.0];
    let (a, b, c) = (sub(a, off), sub(b, off), sub(c, off));
    GesturePath::new(vec![Segment::Line { from: a, to: b }, Segment::Line { from: b, to: c }])
}

/// Two diagonal strokes of length `scale`, with the hand lifted by `0.25 * scale` in between.
fn cross(scale: f64) -> GesturePath {
    let a = scale / (2.0 * 2f64.sqrt());
    let lift = 0.25 * scale;
    let p = |x: f64, y: f64, z: f64| -> Vec3 { [x, y, z] };
    let pts = [
        p(-a, a, 0.0),
        p(a, -a, 0.0),
        p(a, -a, lift),
        p(a, a, lift),
        p(a, a, 0.0),
        p(-a, -a, 0.0),
    ];
    GesturePath::new(
        pts.windows(2)
            .map(|w| Segment::Line { from: w[0], to: w[1] })
            .collect(),
    )
}

/// Tapered raised-cosine speed envelope on `tau` in `[0, 1]`.
fn speed_envelope(tau: f64) -> f64 {
    let edge = SPEED_TAPER / 2.0;
    if tau < edge {
        0.5 * (1.0 - (PI * tau / edge).cos())
    } else if tau > 1.0 - edge {
        0.5 * (1.0 - (PI * (1.0 - tau) / edge).cos())
    } else {
        1.0
    }
}

/// Cumulative progress in `[0, 1]` evaluated at `n` uniformly spaced times.
fn progress_profile(n: usize, jitter: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let harmonic = rng.random_range(1..=3) as f64;
    let phase = rng.random_range(0.0..2.0 * PI);
    let speed = |tau: f64| speed_envelope(tau) * (1.0 + jitter * (2.0 * PI * harmonic * tau + phase).sin());

    let fine = n * PROFILE_OVERSAMPLE;
    let dt = 1.0 / fine as f64;
    let mut cum = Vec::with_capacity(fine + 1);
    cum.push(0.0);
    let mut prev = speed(0.0);
    let mut acc = 0.0;
    for i in 1..=fine {
        let cur = speed(i as f64 * dt);
        acc += 0.5 * (prev + cur) * dt;
        cum.push(acc);
        prev = cur;
    }
    let total = acc;
    (0..n).map(|i| cum[i * PROFILE_OVERSAMPLE] / total).collect()
}

/// Sample one gesture execution as a time series of 3-D hand positions.
pub fn generate_trajectory(
    params: &GestureParams,
    geometry: &RadarGeometry,
    sample_rate: f64,
) -> Result<Trajectory> {
    params.validate()?;
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(Error::domain(format!("sample_rate must be > 0, got {sample_rate}")));
    }
    let n = (params.duration * sample_rate).round() as usize;
    if n < 2 {
        return Err(Error::domain("duration * sample_rate must give at least 2 samples"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let progress = progress_profile(n, params.speed_jitter, &mut rng);

    let pj = params.pose_jitter;
    let rot = pj * FRAC_PI_6 * rng.random_range(-1.0..1.0);
    let offset = [
        pj * 0.1 * params.scale_r * rng.random_range(-1.0..1.0),
        pj * 0.1 * params.scale_r * rng.random_range(-1.0..1.0),
        pj * 0.1 * params.distance_d * rng.random_range(-1.0..1.0),
    ];
    let (sin_r, cos_r) = rot.sin_cos();

    let path = GesturePath::canonical(params.class, params.scale_r, params.corner_rounding);
    let length = path.length();
    let points: Vec<Vec3> = progress
        .iter()
        .map(|&u| {
            let q = path.at_arclength(u * length);
            [
                cos_r * q[0] - sin_r * q[1] + offset[0],
                sin_r * q[0] + cos_r * q[1] + offset[1],
                params.distance_d + q[2] + offset[2],
            ]
        })
        .collect();

    let traj = Trajectory { sample_rate, points };
    let peak = traj.peak_speed();
    if peak > MAX_HAND_SPEED {
        return Err(Error::domain(format!(
            "gesture needs {peak:.2} m/s, above the {MAX_HAND_SPEED} m/s hand-speed cap"
        )));
    }
    let antennas = [geometry.tx_pos, geometry.rx1_pos, geometry.rx2_pos];
    if traj
        .points
        .iter()
        .any(|p| antennas.iter().any(|a| dist(*p, *a) <= 0.0))
    {
        return Err(Error::domain("trajectory touches an antenna"));
    }
    Ok(traj)
}

/// Received amplitude as a function of the two leg lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeModel {
    Unit,
    #[default]
    InverseR2,
    InverseR4,
}

impl AmplitudeModel {
    fn raw(self, tx_leg: f64, rx_leg: f64) -> f64 {
        match self {
            AmplitudeModel::Unit => 1.0,
            AmplitudeModel::InverseR2 => 1.0 / (tx_leg * rx_leg),
            AmplitudeModel::InverseR4 => 1.0 / (tx_leg * tx_leg * rx_leg * rx_leg),
        }
    }
}

/// Additive white Gaussian noise request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
    /// Random-stream index used for RX1 and RX2 respectively.
    pub streams: [u64; 2],
}

impl NoiseSpec {
    pub fn new(snr_db: f64, seed: u64) -> Self {
        NoiseSpec { snr_db, seed, streams: [0, 1] }
    }
}

/// Four channels in the order RX1-I, RX1-Q, RX2-I, RX2-Q.
pub type Channels = [Vec<f64>; 4];

/// Clean echo and noise kept apart, before DC removal.
#[derive(Debug, Clone, PartialEq)]
pub struct BasebandComponents {
    pub sample_rate: f64,
    pub clean: Channels,
    pub noise: Channels,
}

/// DC-free four-channel quadrature baseband.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasebandSignal {
    pub sample_rate: f64,
    pub channels: Channels,
    pub meta: Option<GestureParams>,
}

impl BasebandSignal {
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same signal with RX1 and RX2 exchanged.
    pub fn swap_receivers(&self) -> BasebandSignal {
        let [a, b, c, d] = self.channels.clone();
        BasebandSignal { sample_rate: self.sample_rate, channels: [c, d, a, b], meta: self.meta.clone() }
    }

    /// Every channel multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> BasebandSignal {
        let mut out = self.clone();
        for ch in out.channels.iter_mut() {
            ch.iter_mut().for_each(|v| *v *= factor);
        }
        out
    }
}

fn mean_power(chs: &Channels) -> f64 {
    let n: usize = chs.iter().map(Vec::len).sum();
    chs.iter().flatten().map(|v| v * v).sum::<f64>() / n as f64
}

/// Clean echo plus (optional) noise, without DC removal.
pub fn simulate_components(
    traj: &Trajectory,
    geometry: &RadarGeometry,
    amplitude: AmplitudeModel,
    noise: Option<NoiseSpec>,
) -> Result<BasebandComponents> {
    if traj.is_empty() {
        return Err(Error::domain("trajectory must not be empty"));
    }
    let lambda = geometry.wavelength();
    let n = traj.len();
    let receivers = geometry.receivers();

    let mut legs = Vec::with_capacity(2);
    let mut peak_amp = 0.0f64;
    for rx in receivers {
        let mut per = Vec::with_capacity(n);
        for p in &traj.points {
            let tx_leg = dist(*p, geometry.tx_pos);
            let rx_leg = dist(*p, rx);
            if !(tx_leg > 0.0 && rx_leg > 0.0) {
                return Err(Error::domain("scatterer coincides with an antenna"));
            }
            let a = amplitude.raw(tx_leg, rx_leg);
            peak_amp = peak_amp.max(a);
            per.push((tx_leg + rx_leg, a));
        }
        legs.push(per);
    }

    let mut clean: Channels = Default::default();
    for (k, per) in legs.iter().enumerate() {
        let (i_ch, q_ch): (Vec<f64>, Vec<f64>) = per
            .iter()
            .map(|&(path, a)| {
                let phase = -2.0 * PI * path / lambda;
                let amp = if peak_amp > 0.0 { a / peak_amp } else { 0.0 };
                (amp * phase.cos(), amp * phase.sin())
            })
            .unzip();
        clean[2 * k] = i_ch;
        clean[2 * k + 1] = q_ch;
    }

    let mut noise_chs: Channels = Default::default();
    match noise {
        None => {
            for ch in noise_chs.iter_mut() {
                *ch = vec![0.0; n];
            }
        }
        Some(spec) => {
            if !spec.snr_db.is_finite() {
                return Err(Error::domain("snr_db must be finite"));
            }
            let power = mean_power(&clean);
            if power <= 0.0 {
                return Err(Error::domain("cannot scale noise to an SNR when signal power is zero"));
            }
            let sigma = (power / 10f64.powf(spec.snr_db / 10.0)).sqrt();
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::domain(e.to_string()))?;
            for (k, stream) in spec.streams.iter().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                rng.set_stream(*stream);
                let (i_ch, q_ch): (Vec<f64>, Vec<f64>) =
                    (0..n).map(|_| (normal.sample(&mut rng), normal.sample(&mut rng))).unzip();
                noise_chs[2 * k] = i_ch;
                noise_chs[2 * k + 1] = q_ch;
            }
        }
    }

    Ok(BasebandComponents { sample_rate: traj.sample_rate, clean, noise: noise_chs })
}

fn remove_dc(ch: &mut [f64]) {
    let n = ch.len() as f64;
    let rough = ch.iter().sum::<f64>() / n;
    // second pass corrects the rounding of the first
    let mean = rough + ch.iter().map(|v| v - rough).sum::<f64>() / n;
    ch.iter_mut().for_each(|v| *v -= mean);
}

/// Simulated receiver output: bistatic phase, amplitude model, AWGN, then DC removal.
pub fn simulate_baseband(
    traj: &Trajectory,
    geometry: &RadarGeometry,
    amplitude: AmplitudeModel,
    noise: Option<NoiseSpec>,
) -> Result<BasebandSignal> {
    let parts = simulate_components(traj, geometry, amplitude, noise)?;
    let mut channels = parts.clean;
    for (ch, nz) in channels.iter_mut().zip(parts.noise.iter()) {
        ch.iter_mut().zip(nz).for_each(|(c, z)| *c += z);
        remove_dc(ch);
    }
    if channels.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("baseband sample".into()));
    }
    Ok(BasebandSignal { sample_rate: parts.sample_rate, channels, meta: None })
}

/// Complex receiver signals `I + jQ` for RX1 and RX2.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexChannels {
    pub sample_rate: f64,
    pub rx: [Vec<Complex64>; 2],
}

pub fn complex_channels(sig: &BasebandSignal) -> ComplexChannels {
    let pair = |i: &[f64], q: &[f64]| -> Vec<Complex64> {
        i.iter().zip(q).map(|(&re, &im)| Complex64::new(re, im)).collect()
    };
    ComplexChannels {
        sample_rate: sig.sample_rate,
        rx: [
            pair(&sig.channels[0], &sig.channels[1]),
            pair(&sig.channels[2], &sig.channels[3]),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(class: GestureClass) -> GestureParams {
        GestureParams::new(class, 0.2, 0.2, 7)
    }

    #[test]
    fn labels_round_trip() {
        for (i, c) in GestureClass::ALL.iter().enumerate() {
            assert_eq!(c.label(), i);
            assert_eq!(GestureClass::from_label(i).unwrap(), *c);
        }
        assert!(GestureClass::from_label(4).is_err());
    }

    #[test]
    fn default_geometry() {
        let g = RadarGeometry::default();
        assert!((dist(g.rx1_pos, g.tx_pos) - 0.10).abs() < 1e-15);
        assert!((dist(g.rx2_pos, g.tx_pos) - 0.10).abs() < 1e-15);
        assert_eq!(g.wavelength(), 299_792_458.0 / 5.8e9);
    }

    #[test]
    fn rejects_bad_params() {
        let g = RadarGeometry::default();
        let mut p = params(GestureClass::Circle);
        p.duration = 0.0;
        assert!(matches!(generate_trajectory(&p, &g, 600.0), Err(Error::Domain(_))));
        let mut p = params(GestureClass::Circle);
        p.scale_r = -0.1;
        assert!(matches!(generate_trajectory(&p, &g, 600.0), Err(Error::Domain(_))));
        let p = params(GestureClass::Circle);
        assert!(matches!(generate_trajectory(&p, &g, 0.0), Err(Error::Domain(_))));
        let mut p = params(GestureClass::Circle);
        p.distance_d = 0.01;
        assert!(generate_trajectory(&p, &g, 600.0).is_err());
    }

    #[test]
    fn trajectory_length_and_plane() {
        let g = RadarGeometry::default();
        for class in GestureClass::ALL {
            let t = generate_trajectory(&params(class), &g, 600.0).unwrap();
            assert_eq!(t.len(), 600);
            if class != GestureClass::Cross {
                assert!(t.points.iter().all(|p| (p[2] - 0.2).abs() < 1e-12));
            }
            assert!(t.peak_speed() <= MAX_HAND_SPEED);
        }
    }

    #[test]
    fn circle_diameter_is_scale() {
        let path = GesturePath::canonical(GestureClass::Circle, 0.2, 0.05);
        let pts = path.sample_uniform(1000);
        let mut best = 0.0f64;
        for a in &pts {
            for b in &pts {
                best = best.max(dist(*a, *b));
            }
        }
        assert!((best - 0.2).abs() < 1e-9, "diameter {best}");
    }

    #[test]
    fn square_perimeter_matches_closed_form() {
        let r = 0.2;
        let rho = 0.05 * r;
        let expected = 4.0 * r - (8.0 - 2.0 * PI) * rho;
        let path = GesturePath::canonical(GestureClass::Square, r, 0.05);
        assert!((path.length() - expected).abs() < 1e-12);
        // path is continuous: neighbouring segments meet
        let pts = path.sample_uniform(20_000);
        let poly: f64 = pts.windows(2).map(|w| dist(w[0], w[1])).sum::<f64>()
            + dist(*pts.last().unwrap(), pts[0]);
        assert!((poly - expected).abs() < 1e-6, "{poly} vs {expected}");
    }

    #[test]
    fn tick_geometry() {
        let path = GesturePath::canonical(GestureClass::Tick, 0.3, 0.05);
        assert!((path.length() - 0.45).abs() < 1e-12);
        let a = path.at_arclength(0.0);
        let b = path.at_arclength(0.15);
        let c = path.at_arclength(0.45);
        let u = sub(a, b);
        let v = sub(c, b);
        let cos = (u[0] * v[0] + u[1] * v[1]) / (norm(u) * norm(v));
        assert!((cos.acos().to_degrees() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn cross_lifts_between_strokes() {
        let path = GesturePath::canonical(GestureClass::Cross, 0.2, 0.05);
        let top = path.sample_uniform(500).iter().map(|p| p[2]).fold(0.0, f64::max);
        assert!((top - 0.05).abs() < 1e-12);
    }

    #[test]
    fn too_fast_gesture_is_rejected() {
        let mut p = GestureParams::new(GestureClass::Square, 1.0, 0.5, 1);
        p.duration = 0.5;
        assert!(matches!(
            generate_trajectory(&p, &RadarGeometry::default(), 600.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn static_target_gives_zero_channels() {
        let t = Trajectory::from_points(600.0, vec![[0.01, 0.02, 0.3]; 600]).unwrap();
        let g = RadarGeometry::default();
        let parts = simulate_components(&t, &g, AmplitudeModel::Unit, None).unwrap();
        for ch in &parts.clean {
            assert!(ch.iter().all(|v| *v == ch[0]));
        }
        let sig = simulate_baseband(&t, &g, AmplitudeModel::Unit, None).unwrap();
        for ch in &sig.channels {
            assert!(ch.iter().all(|v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn zero_amplitude_noise_is_rejected() {
        let t = Trajectory::from_points(600.0, vec![[0.0, 0.0, 0.3]; 10]).unwrap();
        let g = RadarGeometry::default();
        // amplitude underflows to exactly zero
        let mut far = g.clone();
        far.tx_pos = [0.0, 0.0, 1e300];
        let err = simulate_components(&t, &far, AmplitudeModel::InverseR4, Some(NoiseSpec::new(10.0, 1)));
        assert!(err.is_err());
    }

    #[test]
    fn dc_removed_channels_have_zero_mean() {
        let g = RadarGeometry::default();
        let t = generate_trajectory(&params(GestureClass::Square), &g, 600.0).unwrap();
        let sig = simulate_baseband(&t, &g, AmplitudeModel::InverseR2, Some(NoiseSpec::new(10.0, 3))).unwrap();
        for ch in &sig.channels {
            let mean = ch.iter().sum::<f64>() / ch.len() as f64;
            let rms = (ch.iter().map(|v| v * v).sum::<f64>() / ch.len() as f64).sqrt();
            assert!(mean.abs() < 1e-9 * rms);
        }
    }

    #[test]
    fn complex_channels_pair_i_and_q() {
        let sig = BasebandSignal {
            sample_rate: 600.0,
            channels: [vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]],
            meta: None,
        };
        let c = complex_channels(&sig);
        assert_eq!(c.rx[0], vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        assert_eq!(c.rx[1][0], Complex64::new(2.0, 3.0));
        assert_eq!(c.sample_rate, 600.0);
    }

    #[test]
    fn mirrored_trajectory_swaps_receivers() {
        let g = RadarGeometry::default();
        let mut p = params(GestureClass::Tick);
        p.pose_jitter = 0.7;
        p.speed_jitter = 0.3;
        let t = generate_trajectory(&p, &g, 600.0).unwrap();
        let noise = NoiseSpec::new(5.0, 11);
        let a = simulate_baseband(&t, &g, AmplitudeModel::InverseR2, Some(noise)).unwrap();
        let swapped_noise = NoiseSpec { streams: [1, 0], ..noise };
        let b = simulate_baseband(&t.mirrored_x(), &g, AmplitudeModel::InverseR2, Some(swapped_noise))
            .unwrap()
            .swap_receivers();
        for (x, y) in a.channels.iter().zip(&b.channels) {
            for (u, v) in x.iter().zip(y) {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }
}
