//! Deployment geometry: AP antenna and UE placement inside a rectangular
//! service area.
//!
//! Every generator is a pure function of its arguments and the supplied RNG,
//! so a seeded stream reproduces the same [`Topology`] bit for bit.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::Point3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Antenna spacing of roughly five wavelengths at 3.5 GHz.
pub const DEFAULT_MIN_ANTENNA_SPACING_M: f64 = 0.43;
pub const DEFAULT_CLUSTER_RADIUS_M: f64 = 15.0;

/// Placement attempts per AP before giving up on the spacing constraint.
const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

pub type Position = Point3<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AreaSpec {
    pub width: f64,
    pub depth: f64,
    pub ap_heights: Vec<f64>,
    pub ue_height: f64,
}

impl Default for AreaSpec {
    fn default() -> Self {
        Self {
            width: 200.0,
            depth: 200.0,
            ap_heights: vec![25.0, 35.0, 45.0],
            ue_height: 1.5,
        }
    }
}

impl AreaSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.depth > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "area must have positive extent, got {}x{}",
                self.width, self.depth
            )));
        }
        if self.ap_heights.is_empty() {
            return Err(Error::InvalidArgument("no AP heights given".into()));
        }
        if self.ap_heights.iter().any(|h| !(*h > 0.0)) || !(self.ue_height > 0.0) {
            return Err(Error::InvalidArgument("heights must be positive".into()));
        }
        Ok(())
    }

    fn contains_xy(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width).contains(&x) && (0.0..=self.depth).contains(&y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApPlacement {
    Random,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UePlacement {
    Spread,
    Clustered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Environment {
    Outdoor,
    Indoor,
}

impl Environment {
    pub fn as_str(self) -> &'static str {
        match self {
            Environment::Outdoor => "outdoor",
            Environment::Indoor => "indoor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApAntenna {
    pub position: Position,
    pub ap_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ue {
    pub position: Position,
    pub environment: Environment,
}

/// A drop: `L` APs with `N` antennas each (`M = L * N` antennas) and `K` UEs.
///
/// Antennas are stored AP by AP, so rows `l*N .. (l+1)*N` of every channel
/// matrix belong to AP `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub ap_antennas: Vec<ApAntenna>,
    pub ues: Vec<Ue>,
    pub num_aps: usize,
    pub antennas_per_ap: usize,
}

impl Topology {
    pub fn new(ap_antennas: Vec<ApAntenna>, ues: Vec<Ue>, num_aps: usize, antennas_per_ap: usize) -> Result<Self> {
        if ap_antennas.len() != num_aps * antennas_per_ap {
            return Err(Error::InvalidArgument(format!(
                "{} antennas do not match {num_aps} APs x {antennas_per_ap}",
                ap_antennas.len()
            )));
        }
        if ues.is_empty() {
            return Err(Error::InvalidArgument("topology needs at least one UE".into()));
        }
        Ok(Self {
            ap_antennas,
            ues,
            num_aps,
            antennas_per_ap,
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.ap_antennas.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ues.len()
    }

    /// Antennas belonging to AP `l`.
    pub fn ap(&self, l: usize) -> &[ApAntenna] {
        let n = self.antennas_per_ap;
        &self.ap_antennas[l * n..(l + 1) * n]
    }

    /// Plain-text table, one row per antenna and per UE:
    /// `kind,id,x,y,z,group` where `group` is the AP index for antennas and the
    /// environment tag for UEs.
    pub fn to_table(&self) -> String {
        let mut out = String::from("kind,id,x,y,z,group\n");
        for (m, a) in self.ap_antennas.iter().enumerate() {
            let p = a.position;
            let _ = writeln!(out, "antenna,{m},{},{},{},{}", p.x, p.y, p.z, a.ap_index);
        }
        for (k, u) in self.ues.iter().enumerate() {
            let p = u.position;
            let _ = writeln!(out, "ue,{k},{},{},{},{}", p.x, p.y, p.z, u.environment.as_str());
        }
        out
    }
}

/// Grid shape `(columns along width, rows along depth)` for `num_aps` cells:
/// the factorization `a * b` with `a >= b` and `a / b` smallest.
pub fn grid_shape(num_aps: usize) -> (usize, usize) {
    let mut b = (num_aps as f64).sqrt() as usize;
    while b > 1 && num_aps % b != 0 {
        b -= 1;
    }
    let b = b.max(1);
    (num_aps / b, b)
}

/// Place `num_aps` APs with `antennas_per_ap` antennas each.
///
/// Each AP's antennas form a horizontal uniform linear array centred on the
/// AP anchor, with a random azimuth and `min_spacing` between neighbours.
pub fn place_aps<R: Rng + ?Sized>(
    area: &AreaSpec,
    num_aps: usize,
    antennas_per_ap: usize,
    mode: ApPlacement,
    min_spacing: f64,
    rng: &mut R,
) -> Result<Vec<ApAntenna>> {
    area.validate()?;
    if num_aps == 0 || antennas_per_ap == 0 {
        return Err(Error::InvalidArgument("need at least one AP with one antenna".into()));
    }
    if antennas_per_ap > 1 && !(min_spacing > 0.0) {
        return Err(Error::InvalidArgument("antenna spacing must be positive".into()));
    }
    let array_length = (antennas_per_ap - 1) as f64 * min_spacing;
    if array_length > area.width.hypot(area.depth) {
        return Err(Error::InfeasibleGeometry(format!(
            "array of {antennas_per_ap} antennas spans {array_length} m, more than the area diagonal"
        )));
    }

    let (cols, rows) = grid_shape(num_aps);
    let (cell_w, cell_d) = (area.width / cols as f64, area.depth / rows as f64);
    let mut antennas = Vec::with_capacity(num_aps * antennas_per_ap);
    for l in 0..num_aps {
        let (x0, y0, w, d) = match mode {
            ApPlacement::Random => (0.0, 0.0, area.width, area.depth),
            ApPlacement::Grid => {
                let (c, r) = (l % cols, l / cols);
                (c as f64 * cell_w, r as f64 * cell_d, cell_w, cell_d)
            }
        };
        let height = area.ap_heights[rng.random_range(0..area.ap_heights.len())];
        let placed = (0..MAX_PLACEMENT_ATTEMPTS).find_map(|_| {
            let ax = x0 + rng.random::<f64>() * w;
            let ay = y0 + rng.random::<f64>() * d;
            let azimuth = rng.random::<f64>() * 2.0 * PI;
            let (dx, dy) = (azimuth.cos() * min_spacing, azimuth.sin() * min_spacing);
            let centre = (antennas_per_ap as f64 - 1.0) / 2.0;
            let line: Vec<Position> = (0..antennas_per_ap)
                .map(|j| {
                    let off = j as f64 - centre;
                    Position::new(ax + off * dx, ay + off * dy, height)
                })
                .collect();
            line.iter().all(|p| area.contains_xy(p.x, p.y)).then_some(line)
        });
        let line = placed.ok_or_else(|| {
            Error::InfeasibleGeometry(format!(
                "could not fit {antennas_per_ap} antennas of AP {l} inside the area"
            ))
        })?;
        antennas.extend(line.into_iter().map(|position| ApAntenna { position, ap_index: l }));
    }
    Ok(antennas)
}

/// Place `num_ues` single-antenna UEs.
///
/// Clustered UEs are uniform in a disc of `cluster_radius` around a uniformly
/// drawn centre; points falling outside the area are re-drawn.
pub fn place_ues<R: Rng + ?Sized>(
    area: &AreaSpec,
    num_ues: usize,
    mode: UePlacement,
    cluster_radius: f64,
    indoor_fraction: f64,
    rng: &mut R,
) -> Result<Vec<Ue>> {
    area.validate()?;
    if num_ues == 0 {
        return Err(Error::InvalidArgument("need at least one UE".into()));
    }
    if !(0.0..=1.0).contains(&indoor_fraction) {
        return Err(Error::InvalidArgument(format!("indoor fraction {indoor_fraction} outside [0, 1]")));
    }
    if mode == UePlacement::Clustered && !(cluster_radius > 0.0) {
        return Err(Error::InvalidArgument("cluster radius must be positive".into()));
    }

    let centre = (rng.random::<f64>() * area.width, rng.random::<f64>() * area.depth);
    let mut ues = Vec::with_capacity(num_ues);
    while ues.len() < num_ues {
        let (x, y) = match mode {
            UePlacement::Spread => (rng.random::<f64>() * area.width, rng.random::<f64>() * area.depth),
            UePlacement::Clustered => {
                let r = cluster_radius * rng.random::<f64>().sqrt();
                let phi = rng.random::<f64>() * 2.0 * PI;
                (centre.0 + r * phi.cos(), centre.1 + r * phi.sin())
            }
        };
        if !area.contains_xy(x, y) {
            continue;
        }
        let environment = if rng.random_bool(indoor_fraction) {
            Environment::Indoor
        } else {
            Environment::Outdoor
        };
        ues.push(Ue {
            position: Position::new(x, y, area.ue_height),
            environment,
        });
    }
    Ok(ues)
}

pub fn link_distance(ap_antenna: &Position, ue: &Position) -> f64 {
    (ap_antenna - ue).norm()
}
