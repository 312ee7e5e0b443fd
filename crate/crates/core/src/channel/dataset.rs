//! Measured-channel container.
//!
//! Binary layout (all integers `u32`, all floats `f64`, little-endian):
//!
//! ```text
//! magic "CFMD" | version = 1 | M | K | F
//! M x (x, y, z)        antenna-location coordinates
//! K x (x, y, z)        UE-location coordinates
//! M x K x F x (re, im) coefficients, row-major over (m, k, i)
//! ```
//!
//! The text variant is CSV with header `m,k,i,re,im`. Coordinates may be
//! given in comment lines `# ap,m,x,y,z` and `# ue,k,x,y,z`; they must then
//! be present for every location.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;

use super::{complex_normal, PathLossModel};
use crate::scenario::{link_distance, Position};
use crate::{CMatrix, Cx, Error, RMatrix, Result};

const MAGIC: &[u8; 4] = b"CFMD";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetLayout {
    Binary,
    Csv,
}

impl DatasetLayout {
    /// `.csv` files are text, anything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DatasetLayout::Csv,
            _ => DatasetLayout::Binary,
        }
    }
}

/// Flat-fading coefficients for every (antenna location, UE location) link at
/// `F` frequency indices. Each frequency index is one realization of `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredDataset {
    num_ap_locations: usize,
    num_ue_locations: usize,
    num_freqs: usize,
    ap_coords: Option<Vec<Position>>,
    ue_coords: Option<Vec<Position>>,
    data: Vec<Cx>,
}

impl MeasuredDataset {
    pub fn new(
        num_ap_locations: usize,
        num_ue_locations: usize,
        num_freqs: usize,
        ap_coords: Option<Vec<Position>>,
        ue_coords: Option<Vec<Position>>,
        data: Vec<Cx>,
    ) -> Result<Self> {
        if num_ap_locations == 0 || num_ue_locations == 0 || num_freqs == 0 {
            return Err(Error::MalformedDataset("empty dimension".into()));
        }
        if data.len() != num_ap_locations * num_ue_locations * num_freqs {
            return Err(Error::MalformedDataset(format!(
                "expected {} coefficients, found {}",
                num_ap_locations * num_ue_locations * num_freqs,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::MalformedDataset("non-finite coefficient".into()));
        }
        let coords_ok = |c: &Option<Vec<Position>>, n: usize| match c {
            None => true,
            Some(v) => v.len() == n && v.iter().all(|p| p.iter().all(|x| x.is_finite())),
        };
        if !coords_ok(&ap_coords, num_ap_locations) || !coords_ok(&ue_coords, num_ue_locations) {
            return Err(Error::MalformedDataset("coordinate table does not match dimensions".into()));
        }
        if ap_coords.is_some() != ue_coords.is_some() {
            return Err(Error::MalformedDataset("coordinates given for only one end".into()));
        }
        Ok(Self {
            num_ap_locations,
            num_ue_locations,
            num_freqs,
            ap_coords,
            ue_coords,
            data,
        })
    }

    pub fn num_ap_locations(&self) -> usize {
        self.num_ap_locations
    }

    pub fn num_ue_locations(&self) -> usize {
        self.num_ue_locations
    }

    pub fn num_freqs(&self) -> usize {
        self.num_freqs
    }

    pub fn ap_coords(&self) -> Option<&[Position]> {
        self.ap_coords.as_deref()
    }

    pub fn ue_coords(&self) -> Option<&[Position]> {
        self.ue_coords.as_deref()
    }

    /// Coefficient vector of one link across all frequency indices.
    pub fn link(&self, m: usize, k: usize) -> &[Cx] {
        let start = (m * self.num_ue_locations + k) * self.num_freqs;
        &self.data[start..start + self.num_freqs]
    }

    /// Large-scale gain of every link: mean of `|h(i)|^2` over frequency.
    pub fn beta(&self) -> RMatrix {
        RMatrix::from_fn(self.num_ap_locations, self.num_ue_locations, |m, k| {
            self.link(m, k).iter().map(|z| z.norm_sqr()).sum::<f64>() / self.num_freqs as f64
        })
    }

    /// Channel matrix at frequency index `freq` for the selected locations.
    pub fn channel(&self, freq: usize, ap_rows: &[usize], ue_cols: &[usize]) -> CMatrix {
        CMatrix::from_fn(ap_rows.len(), ue_cols.len(), |r, c| self.link(ap_rows[r], ue_cols[c])[freq])
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = fs::read(path.as_ref())?;
        if bytes.starts_with(MAGIC) {
            Self::from_bytes(&bytes)
        } else {
            let text = String::from_utf8(bytes).map_err(|_| Error::MalformedDataset("neither binary nor UTF-8 text".into()))?;
            Self::from_csv(&text)
        }
    }

    pub fn save(&self, path: impl AsRef<Path>, layout: DatasetLayout) -> Result<()> {
        match layout {
            DatasetLayout::Binary => fs::write(path, self.to_bytes())?,
            DatasetLayout::Csv => fs::write(path, self.to_csv())?,
        }
        Ok(())
    }

    /// Binary encoding. Datasets without coordinates are written with zeros.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 48 * (self.num_ap_locations + self.num_ue_locations) + 16 * self.data.len());
        out.extend_from_slice(MAGIC);
        for v in [VERSION, self.num_ap_locations as u32, self.num_ue_locations as u32, self.num_freqs as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let zeros_ap = vec![Position::origin(); self.num_ap_locations];
        let zeros_ue = vec![Position::origin(); self.num_ue_locations];
        let aps = self.ap_coords.as_ref().unwrap_or(&zeros_ap);
        let ues = self.ue_coords.as_ref().unwrap_or(&zeros_ue);
        for p in aps.iter().chain(ues) {
            for x in p.iter() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        for z in &self.data {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut reader = ByteReader { bytes, pos: 0 };
        if reader.take(4)? != MAGIC {
            return Err(Error::MalformedDataset("bad magic".into()));
        }
        let version = reader.u32()?;
        if version != VERSION {
            return Err(Error::MalformedDataset(format!("unsupported version {version}")));
        }
        let m = reader.u32()? as usize;
        let k = reader.u32()? as usize;
        let f = reader.u32()? as usize;
        let expected = 20usize
            .checked_add(m.saturating_add(k).saturating_mul(24))
            .and_then(|n| n.checked_add(m.checked_mul(k)?.checked_mul(f)?.checked_mul(16)?))
            .ok_or_else(|| Error::MalformedDataset("dimensions overflow".into()))?;
        if bytes.len() != expected {
            return Err(Error::MalformedDataset(format!("expected {expected} bytes, found {}", bytes.len())));
        }
        let point = |r: &mut ByteReader| -> Result<Position> { Ok(Position::new(r.f64()?, r.f64()?, r.f64()?)) };
        let ap_coords = (0..m).map(|_| point(&mut reader)).collect::<Result<Vec<_>>>()?;
        let ue_coords = (0..k).map(|_| point(&mut reader)).collect::<Result<Vec<_>>>()?;
        let data = (0..m * k * f)
            .map(|_| Ok(Cx::new(reader.f64()?, reader.f64()?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(m, k, f, Some(ap_coords), Some(ue_coords), data)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let (Some(aps), Some(ues)) = (&self.ap_coords, &self.ue_coords) {
            for (m, p) in aps.iter().enumerate() {
                let _ = writeln!(out, "# ap,{m},{},{},{}", p.x, p.y, p.z);
            }
            for (k, p) in ues.iter().enumerate() {
                let _ = writeln!(out, "# ue,{k},{},{},{}", p.x, p.y, p.z);
            }
        }
        out.push_str("m,k,i,re,im\n");
        for m in 0..self.num_ap_locations {
            for k in 0..self.num_ue_locations {
                for (i, z) in self.link(m, k).iter().enumerate() {
                    let _ = writeln!(out, "{m},{k},{i},{},{}", z.re, z.im);
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let malformed = |line: usize, what: &str| Error::MalformedDataset(format!("line {line}: {what}"));
        let mut aps: Vec<(usize, Position)> = Vec::new();
        let mut ues: Vec<(usize, Position)> = Vec::new();
        let mut entries: Vec<(usize, usize, usize, Cx)> = Vec::new();
        let mut seen_header = false;
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let fields: Vec<&str> = comment.split(',').map(str::trim).collect();
                if fields.len() == 5 && (fields[0] == "ap" || fields[0] == "ue") {
                    let idx: usize = fields[1].parse().map_err(|_| malformed(line_no, "bad location index"))?;
                    let xyz: Vec<f64> = fields[2..]
                        .iter()
                        .map(|s| s.parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| malformed(line_no, "bad coordinate"))?;
                    let p = Position::new(xyz[0], xyz[1], xyz[2]);
                    if fields[0] == "ap" { aps.push((idx, p)) } else { ues.push((idx, p)) }
                }
                continue;
            }
            if !seen_header {
                let header: Vec<&str> = line.split(',').map(str::trim).collect();
                if header != ["m", "k", "i", "re", "im"] {
                    return Err(malformed(line_no, "expected header m,k,i,re,im"));
                }
                seen_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(malformed(line_no, "expected 5 columns"));
            }
            let idx = |s: &str| s.parse::<usize>().map_err(|_| malformed(line_no, "bad index"));
            let num = |s: &str| s.parse::<f64>().map_err(|_| malformed(line_no, "bad number"));
            entries.push((idx(fields[0])?, idx(fields[1])?, idx(fields[2])?, Cx::new(num(fields[3])?, num(fields[4])?)));
        }
        if entries.is_empty() {
            return Err(Error::MalformedDataset("no coefficients".into()));
        }
        let m = entries.iter().map(|e| e.0).max().unwrap_or(0) + 1;
        let k = entries.iter().map(|e| e.1).max().unwrap_or(0) + 1;
        let f = entries.iter().map(|e| e.2).max().unwrap_or(0) + 1;
        if entries.len() != m * k * f {
            return Err(Error::MalformedDataset(format!(
                "{} rows do not fill a {m}x{k}x{f} dataset",
                entries.len()
            )));
        }
        let mut data = vec![Cx::new(f64::NAN, f64::NAN); m * k * f];
        for (mi, ki, fi, z) in entries {
            let slot = &mut data[(mi * k + ki) * f + fi];
            if !slot.re.is_nan() {
                return Err(Error::MalformedDataset(format!("duplicate entry ({mi},{ki},{fi})")));
            }
            *slot = z;
        }
        let table = |mut v: Vec<(usize, Position)>, n: usize, what: &str| -> Result<Option<Vec<Position>>> {
            if v.is_empty() {
                return Ok(None);
            }
            v.sort_by_key(|e| e.0);
            if v.len() != n || v.iter().enumerate().any(|(i, e)| e.0 != i) {
                return Err(Error::MalformedDataset(format!("incomplete {what} coordinate table")));
            }
            Ok(Some(v.into_iter().map(|e| e.1).collect()))
        };
        let ap_coords = table(aps, m, "ap")?;
        let ue_coords = table(ues, k, "ue")?;
        Self::new(m, k, f, ap_coords, ue_coords, data)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let out = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::MalformedDataset("truncated file".into()))?;
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Build a dataset from a path-loss model, one shadowing draw per link.
///
/// With `rayleigh` each frequency index gets an independent Rayleigh draw;
/// otherwise the coefficients have constant magnitude `sqrt(beta)` and random
/// phase, so the per-link mean power equals the model gain exactly.
pub fn synthesize_dataset<R: Rng + ?Sized>(
    ap_coords: Vec<Position>,
    ue_coords: Vec<Position>,
    model: &PathLossModel,
    num_freqs: usize,
    rayleigh: bool,
    rng: &mut R,
) -> Result<MeasuredDataset> {
    model.validate()?;
    let shadow = rand_distr::Normal::new(0.0, model.shadow_sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut data = Vec::with_capacity(ap_coords.len() * ue_coords.len() * num_freqs);
    for a in &ap_coords {
        for u in &ue_coords {
            let d = link_distance(a, u);
            let x: f64 = rand_distr::Distribution::sample(&shadow, rng);
            let beta = 10f64.powf((-model.path_loss_db(d)? - x) / 10.0);
            let amp = beta.sqrt();
            for _ in 0..num_freqs {
                let z = if rayleigh {
                    complex_normal(rng)
                } else {
                    Cx::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)
                };
                data.push(z * amp);
            }
        }
    }
    MeasuredDataset::new(ap_coords.len(), ue_coords.len(), num_freqs, Some(ap_coords), Some(ue_coords), data)
}
