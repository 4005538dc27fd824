//! Frequency-selective MIMO channels from a planar single-bounce scattering scene.
//!
//! Every antenna/user pair sees one line-of-sight ray plus one ray per
//! scatterer. A ray of total length `d` contributes `exp(-j 2π d f / c) / d`
//! on subcarrier frequency `f`; rays whose segments cross the obstacle
//! rectangle are dropped. The resulting tensor is normalised to unit mean
//! power over all antennas, users and subcarriers.
//!
//! Subcarriers sit on a uniform grid centred on the carrier:
//! `f_s = f_c - B/2 + (s + 0.5) B / S`.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::linalg::CMatrix;
use crate::seed;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, thiserror::Error)]
pub enum ChannelError {
    #[error("scene needs at least one antenna")]
    NoAntennas,
    #[error("scene needs at least one user")]
    NoUsers,
    #[error("number of subcarriers must be positive")]
    NoSubcarriers,
    #[error("placement region has zero area")]
    DegenerateRegion,
    #[error("could not place a point outside the obstacle after {0} attempts")]
    PlacementFailed(usize),
    #[error("antennas {0} and {1} share identical coordinates")]
    CoincidentAntennas(usize, usize),
    #[error("antenna {antenna} coincides with user {user}")]
    ZeroDistance { antenna: usize, user: usize },
    #[error("every ray is blocked: raw channel is identically zero")]
    DegenerateChannel,
    #[error("cannot normalise an all-zero channel tensor")]
    AllZero,
    #[error("CSI error variance must be non-negative, got {0}")]
    NegativeVariance(f64),
    #[error("subcarrier count {count} outside 1..={available}")]
    InvalidSubcarrierCount { count: usize, available: usize },
    #[error("malformed channel container: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ChannelError>;

/// A point in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min).max(0.0) * (self.y_max - self.y_min).max(0.0)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Liang–Barsky clip test; touching the boundary counts as a hit.
    pub fn intersects_segment(&self, a: Point, b: Point) -> bool {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        let checks = [
            (-dx, a.x - self.x_min),
            (dx, self.x_max - a.x),
            (-dy, a.y - self.y_min),
            (dy, self.y_max - a.y),
        ];
        for (p, q) in checks {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

/// Parameters for drawing a random scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub num_antennas: usize,
    pub num_users: usize,
    pub num_scatterers: usize,
    /// Region where antennas, users and scatterers are dropped.
    pub area: Rect,
    pub obstacle: Option<Rect>,
    pub carrier_frequency: f64,
    pub bandwidth: f64,
    pub num_subcarriers: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            num_antennas: 64,
            num_users: 12,
            num_scatterers: 75,
            area: Rect::new(0.0, 0.0, 200.0, 200.0),
            obstacle: Some(Rect::new(70.0, 90.0, 130.0, 110.0)),
            carrier_frequency: 2.6e9,
            bandwidth: 20e6,
            num_subcarriers: 300,
        }
    }
}

/// A concrete planar scene; serialises as the JSON scene descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub antenna_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    pub scatterer_positions: Vec<Point>,
    pub obstacle: Option<Rect>,
    pub carrier_frequency: f64,
    pub bandwidth: f64,
    pub num_subcarriers: usize,
    pub rng_seed: u64,
}

impl Scene {
    /// Center frequency of subcarrier `s`.
    pub fn subcarrier_frequency(&self, s: usize) -> f64 {
        self.carrier_frequency - self.bandwidth / 2.0
            + (s as f64 + 0.5) * self.bandwidth / self.num_subcarriers as f64
    }

    fn blocked(&self, a: Point, b: Point) -> bool {
        self.obstacle.is_some_and(|o| o.intersects_segment(a, b))
    }

    /// Total lengths of every unblocked ray between antenna `t` and user `r`.
    pub fn ray_lengths(&self, t: usize, r: usize) -> Vec<f64> {
        let a = self.antenna_positions[t];
        let u = self.user_positions[r];
        let mut out = Vec::with_capacity(self.scatterer_positions.len() + 1);
        if !self.blocked(a, u) {
            out.push(a.distance(u));
        }
        for &s in &self.scatterer_positions {
            if !self.blocked(a, s) && !self.blocked(s, u) {
                out.push(a.distance(s) + s.distance(u));
            }
        }
        out
    }

    pub fn without_obstacle(&self) -> Scene {
        Scene {
            obstacle: None,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.antenna_positions.is_empty() {
            return Err(ChannelError::NoAntennas);
        }
        if self.user_positions.is_empty() {
            return Err(ChannelError::NoUsers);
        }
        if self.num_subcarriers == 0 {
            return Err(ChannelError::NoSubcarriers);
        }
        for (i, a) in self.antenna_positions.iter().enumerate() {
            for (j, b) in self.antenna_positions.iter().enumerate().skip(i + 1) {
                if a == b {
                    return Err(ChannelError::CoincidentAntennas(i, j));
                }
            }
            for (r, u) in self.user_positions.iter().enumerate() {
                if a == u {
                    return Err(ChannelError::ZeroDistance { antenna: i, user: r });
                }
            }
        }
        Ok(())
    }
}

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

fn sample_point<R: Rng>(rng: &mut R, area: &Rect, obstacle: Option<&Rect>) -> Result<Point> {
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let p = Point::new(
            rng.random_range(area.x_min..area.x_max),
            rng.random_range(area.y_min..area.y_max),
        );
        if obstacle.is_none_or(|o| !o.contains(p)) {
            return Ok(p);
        }
    }
    Err(ChannelError::PlacementFailed(MAX_PLACEMENT_ATTEMPTS))
}

/// Drops antennas, users and scatterers uniformly in the configured area,
/// outside the obstacle.
pub fn generate_scene(config: &SceneConfig, seed: u64) -> Result<Scene> {
    if config.num_antennas == 0 {
        return Err(ChannelError::NoAntennas);
    }
    if config.num_users == 0 {
        return Err(ChannelError::NoUsers);
    }
    if config.num_subcarriers == 0 {
        return Err(ChannelError::NoSubcarriers);
    }
    if !(config.area.area() > 0.0) {
        return Err(ChannelError::DegenerateRegion);
    }
    let obstacle = config.obstacle.as_ref();
    // Separate streams so adding scatterers does not move the antennas.
    let mut ant_rng = seed::derived_rng(seed, &[0xA]);
    let mut user_rng = seed::derived_rng(seed, &[0xB]);
    let mut scat_rng = seed::derived_rng(seed, &[0xC]);

    let mut antennas: Vec<Point> = Vec::with_capacity(config.num_antennas);
    while antennas.len() < config.num_antennas {
        let p = sample_point(&mut ant_rng, &config.area, obstacle)?;
        if !antennas.contains(&p) {
            antennas.push(p);
        }
    }
    let mut users = Vec::with_capacity(config.num_users);
    while users.len() < config.num_users {
        let p = sample_point(&mut user_rng, &config.area, obstacle)?;
        if !antennas.contains(&p) {
            users.push(p);
        }
    }
    let scatterers = (0..config.num_scatterers)
        .map(|_| sample_point(&mut scat_rng, &config.area, obstacle))
        .collect::<Result<Vec<_>>>()?;

    Ok(Scene {
        antenna_positions: antennas,
        user_positions: users,
        scatterer_positions: scatterers,
        obstacle: config.obstacle,
        carrier_frequency: config.carrier_frequency,
        bandwidth: config.bandwidth,
        num_subcarriers: config.num_subcarriers,
        rng_seed: seed,
    })
}

/// Complex gains indexed by (antenna, user, subcarrier), stored row-major in
/// that order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    n_t: usize,
    n_r: usize,
    n_s: usize,
    gains: Vec<Complex64>,
}

impl ChannelTensor {
    pub fn from_fn(
        n_t: usize,
        n_r: usize,
        n_s: usize,
        mut f: impl FnMut(usize, usize, usize) -> Complex64,
    ) -> Self {
        let mut gains = Vec::with_capacity(n_t * n_r * n_s);
        for t in 0..n_t {
            for r in 0..n_r {
                for s in 0..n_s {
                    gains.push(f(t, r, s));
                }
            }
        }
        Self { n_t, n_r, n_s, gains }
    }

    /// Builds a tensor from `(t, r, s)` row-major data.
    pub fn from_row_major(n_t: usize, n_r: usize, n_s: usize, gains: Vec<Complex64>) -> Result<Self> {
        if gains.len() != n_t * n_r * n_s {
            return Err(ChannelError::Format(format!(
                "expected {} gains for {n_t}×{n_r}×{n_s}, got {}",
                n_t * n_r * n_s,
                gains.len()
            )));
        }
        Ok(Self { n_t, n_r, n_s, gains })
    }

    /// One subcarrier, every antenna: an `N_T × N_R` matrix.
    pub fn from_matrix(h: &CMatrix) -> Self {
        Self::from_fn(h.rows(), h.cols(), 1, |t, r, _| h[(t, r)])
    }

    /// I.i.d. `CN(0, 1)` gains, handy for small synthetic instances.
    pub fn rayleigh(n_t: usize, n_r: usize, n_s: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid sigma");
        Self::from_fn(n_t, n_r, n_s, |_, _, _| {
            Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng))
        })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_s
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    #[inline]
    pub fn get(&self, t: usize, r: usize, s: usize) -> Complex64 {
        self.gains[(t * self.n_r + r) * self.n_s + s]
    }

    /// `H_c` for subcarrier `s`: the listed antenna rows, all users.
    pub fn submatrix(&self, s: usize, antennas: &[usize]) -> CMatrix {
        CMatrix::from_fn(antennas.len(), self.n_r, |i, r| self.get(antennas[i], r, s))
    }

    /// Full `N_T × N_R` matrix on subcarrier `s`.
    pub fn subcarrier_matrix(&self, s: usize) -> CMatrix {
        CMatrix::from_fn(self.n_t, self.n_r, |t, r| self.get(t, r, s))
    }

    pub fn mean_power(&self) -> f64 {
        self.gains.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.gains.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.gains.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn scaled(&self, k: f64) -> Self {
        Self {
            gains: self.gains.iter().map(|z| z * k).collect(),
            ..*self
        }
    }

    /// Writes the binary container (see [`ChannelTensor::read_from`]).
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CONTAINER_MAGIC)?;
        w.write_all(&CONTAINER_VERSION.to_le_bytes())?;
        for dim in [self.n_t, self.n_r, self.n_s] {
            w.write_all(&(dim as u64).to_le_bytes())?;
        }
        for z in &self.gains {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads the binary container:
    ///
    /// ```text
    /// offset  size  field
    /// 0       4     magic "RVCT"
    /// 4       4     version, u32 LE (= 1)
    /// 8       8     N_T, u64 LE
    /// 16      8     N_R, u64 LE
    /// 24      8     S,   u64 LE
    /// 32      16·N  (re, im) f64 LE pairs, row-major over (t, r, s)
    /// ```
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CONTAINER_MAGIC {
            return Err(ChannelError::Format("bad magic".into()));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != CONTAINER_VERSION {
            return Err(ChannelError::Format(format!("unsupported version {version}")));
        }
        let mut dims = [0usize; 3];
        for d in dims.iter_mut() {
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf)?;
            *d = usize::try_from(u64::from_le_bytes(buf))
                .map_err(|_| ChannelError::Format("dimension overflow".into()))?;
        }
        let [n_t, n_r, n_s] = dims;
        let len = n_t
            .checked_mul(n_r)
            .and_then(|x| x.checked_mul(n_s))
            .ok_or_else(|| ChannelError::Format("dimension overflow".into()))?;
        // A corrupt header must not trigger a huge allocation up front.
        let mut gains = Vec::with_capacity(len.min(1 << 20));
        let mut buf = [0u8; 16];
        for _ in 0..len {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
            gains.push(Complex64::new(re, im));
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(ChannelError::Format("trailing bytes after payload".into()));
        }
        Ok(Self { n_t, n_r, n_s, gains })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

const CONTAINER_MAGIC: &[u8; 4] = b"RVCT";
const CONTAINER_VERSION: u32 = 1;

/// Path-sum channel before normalisation.
pub fn synthesize_raw(scene: &Scene) -> Result<ChannelTensor> {
    scene.validate()?;
    let n_t = scene.antenna_positions.len();
    let n_r = scene.user_positions.len();
    let n_s = scene.num_subcarriers;
    let wavenumbers: Vec<f64> = (0..n_s)
        .map(|s| 2.0 * std::f64::consts::PI * scene.subcarrier_frequency(s) / SPEED_OF_LIGHT)
        .collect();

    let mut gains = vec![Complex64::new(0.0, 0.0); n_t * n_r * n_s];
    for t in 0..n_t {
        for r in 0..n_r {
            let base = (t * n_r + r) * n_s;
            for d in scene.ray_lengths(t, r) {
                let amp = 1.0 / d;
                for (s, k) in wavenumbers.iter().enumerate() {
                    gains[base + s] += Complex64::from_polar(amp, -k * d);
                }
            }
        }
    }
    let tensor = ChannelTensor { n_t, n_r, n_s, gains };
    if tensor.gains.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(ChannelError::DegenerateChannel);
    }
    Ok(tensor)
}

/// Path-sum channel normalised to unit mean power.
pub fn synthesize_channel(scene: &Scene) -> Result<ChannelTensor> {
    normalize(&synthesize_raw(scene)?)
}

/// Scales the tensor so the mean of `|h|²` over every entry is one.
pub fn normalize(raw: &ChannelTensor) -> Result<ChannelTensor> {
    let p = raw.mean_power();
    if !(p > 0.0) {
        return Err(ChannelError::AllZero);
    }
    Ok(raw.scaled(1.0 / p.sqrt()))
}

/// Adds independent circularly-symmetric complex Gaussian noise of the given
/// variance to every entry.
pub fn perturb_csi(h: &ChannelTensor, error_variance: f64, seed: u64) -> Result<ChannelTensor> {
    if !(error_variance >= 0.0) {
        return Err(ChannelError::NegativeVariance(error_variance));
    }
    if error_variance == 0.0 {
        return Ok(h.clone());
    }
    let mut rng = seed::derived_rng(seed, &[0xC51]);
    let normal = Normal::new(0.0, (error_variance / 2.0).sqrt()).expect("finite sigma");
    let gains = h
        .gains
        .iter()
        .map(|z| z + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect();
    Ok(ChannelTensor { gains, ..*h })
}

/// Keeps a uniformly drawn subset of `count` subcarriers, in ascending order.
pub fn subsample_subcarriers(h: &ChannelTensor, count: usize, seed: u64) -> Result<ChannelTensor> {
    let picked = subsample_indices(h.n_s, count, seed)?;
    Ok(ChannelTensor::from_fn(h.n_t, h.n_r, count, |t, r, i| h.get(t, r, picked[i])))
}

/// The indices `subsample_subcarriers` would keep, for bookkeeping.
pub fn subsample_indices(n_s: usize, count: usize, seed: u64) -> Result<Vec<usize>> {
    if count == 0 || count > n_s {
        return Err(ChannelError::InvalidSubcarrierCount { count, available: n_s });
    }
    let mut rng = seed::derived_rng(seed, &[0x5B5]);
    let mut picked = rand::seq::index::sample(&mut rng, n_s, count).into_vec();
    picked.sort_unstable();
    Ok(picked)
}
