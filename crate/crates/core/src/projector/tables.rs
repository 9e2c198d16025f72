//! X-ray spectrum and material attenuation tables.
//!
//! Both load from tab-separated text so tests can substitute synthetic
//! monoenergetic tables with hand-picked coefficients. Mass attenuation is
//! interpolated log-log between tabulated energies, the usual treatment for
//! attenuation data.

use std::path::Path;

use crate::error::{Error, Result};
use crate::materials::Material;

/// Polychromatic beam: expected photon count per detector pixel per energy bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bins: Vec<(f64, f64)>, // (energy keV, photons)
}

impl Spectrum {
    pub fn new(bins: Vec<(f64, f64)>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidParam("spectrum needs at least one bin".into()));
        }
        for w in bins.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidParam("spectrum energies must be strictly increasing".into()));
            }
        }
        if bins.iter().any(|&(e, n)| e <= 0.0 || n < 0.0) {
            return Err(Error::InvalidParam(
                "spectrum energies must be positive and photon counts nonnegative".into(),
            ));
        }
        if bins.iter().map(|&(_, n)| n).sum::<f64>() <= 0.0 {
            return Err(Error::InvalidParam("spectrum must carry photons".into()));
        }
        Ok(Self { bins })
    }

    /// Single-line spectrum, handy for analytic tests.
    pub fn mono(energy_kev: f64, photons: f64) -> Result<Self> {
        Self::new(vec![(energy_kev, photons)])
    }

    pub fn bins(&self) -> &[(f64, f64)] {
        &self.bins
    }

    /// Total expected photons per pixel.
    pub fn total_photons(&self) -> f64 {
        self.bins.iter().map(|&(_, n)| n).sum()
    }

    /// Unattenuated energy-weighted intensity Σ photons·E.
    pub fn unattenuated_intensity(&self) -> f64 {
        self.bins.iter().map(|&(e, n)| n * e).sum()
    }

    /// Parses `energy_kev<TAB>photons` rows under a matching header.
    pub fn from_tsv_str(text: &str, origin: Option<&Path>) -> Result<Self> {
        let path = |o: Option<&Path>| o.map(Path::to_path_buf);
        let mut bins = Vec::new();
        let mut saw_header = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if !saw_header {
                if fields != ["energy_kev", "photons"] {
                    return Err(Error::parse(
                        path(origin),
                        format!("line {}: expected header `energy_kev\tphotons`", lineno + 1),
                    ));
                }
                saw_header = true;
                continue;
            }
            if fields.len() != 2 {
                return Err(Error::parse(path(origin), format!("line {}: expected 2 fields", lineno + 1)));
            }
            let e: f64 = fields[0]
                .parse()
                .map_err(|_| Error::parse(path(origin), format!("line {}: bad energy", lineno + 1)))?;
            let n: f64 = fields[1]
                .parse()
                .map_err(|_| Error::parse(path(origin), format!("line {}: bad photon count", lineno + 1)))?;
            bins.push((e, n));
        }
        Self::new(bins)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv_str(&text, Some(path))
    }
}

/// Mass attenuation coefficients (cm²/g) per material over energy, plus
/// material densities (g/cm³).
#[derive(Debug, Clone, PartialEq)]
pub struct AttenuationTable {
    energies: Vec<f64>,
    mu_rho: [Vec<f64>; 3], // indexed by Material
    density: [f64; 3],
}

impl AttenuationTable {
    pub fn new(energies: Vec<f64>, mu_rho: [Vec<f64>; 3], density: [f64; 3]) -> Result<Self> {
        if energies.len() < 2 {
            return Err(Error::InvalidParam("attenuation table needs at least two energies".into()));
        }
        for w in energies.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParam("attenuation energies must be strictly increasing".into()));
            }
        }
        if energies.iter().any(|&e| e <= 0.0) {
            return Err(Error::InvalidParam("attenuation energies must be positive".into()));
        }
        for col in &mu_rho {
            if col.len() != energies.len() {
                return Err(Error::SizeMismatch {
                    expected: energies.len(),
                    actual: col.len(),
                    what: "attenuation coefficient rows".into(),
                });
            }
            if col.iter().any(|&c| c <= 0.0) {
                return Err(Error::InvalidParam("attenuation coefficients must be positive".into()));
            }
        }
        if density.iter().any(|&d| d < 0.0) {
            return Err(Error::InvalidParam("densities must be nonnegative".into()));
        }
        Ok(Self { energies, mu_rho, density })
    }

    pub fn density(&self, m: Material) -> f64 {
        self.density[m as usize]
    }

    pub fn energy_range(&self) -> (f64, f64) {
        (self.energies[0], *self.energies.last().unwrap())
    }

    /// Mass attenuation coefficient at `energy_kev`, log-log interpolated.
    /// Energies outside the tabulated range are an error.
    pub fn mu_rho(&self, m: Material, energy_kev: f64) -> Result<f64> {
        let (e_min, e_max) = self.energy_range();
        if energy_kev < e_min || energy_kev > e_max {
            return Err(Error::InvalidParam(format!(
                "energy {energy_kev} keV outside attenuation table range [{e_min}, {e_max}]"
            )));
        }
        let col = &self.mu_rho[m as usize];
        // partition_point finds the first tabulated energy >= query.
        let hi = self.energies.partition_point(|&e| e < energy_kev).min(self.energies.len() - 1).max(1);
        let lo = hi - 1;
        let (e0, e1) = (self.energies[lo], self.energies[hi]);
        if energy_kev == e0 {
            return Ok(col[lo]);
        }
        if energy_kev == e1 {
            return Ok(col[hi]);
        }
        let w = (energy_kev.ln() - e0.ln()) / (e1.ln() - e0.ln());
        Ok((col[lo].ln() * (1.0 - w) + col[hi].ln() * w).exp())
    }

    /// Linear attenuation μ = (μ/ρ)·ρ in 1/cm.
    pub fn mu_linear(&self, m: Material, energy_kev: f64) -> Result<f64> {
        Ok(self.mu_rho(m, energy_kev)? * self.density(m))
    }

    /// Parses a table with a `density` row and per-material columns:
    ///
    /// ```text
    /// density      0.001205  1.06  1.92
    /// energy_kev   air       soft  bone
    /// 20           0.7779    0.8205  4.001
    /// ```
    pub fn from_tsv_str(text: &str, origin: Option<&Path>) -> Result<Self> {
        let path = |o: Option<&Path>| o.map(Path::to_path_buf);
        let mut density: Option<[f64; 3]> = None;
        let mut saw_header = false;
        let mut energies = Vec::new();
        let mut cols: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.first() == Some(&"density") {
                if fields.len() != 4 {
                    return Err(Error::parse(
                        path(origin),
                        format!("line {}: density row needs 3 values", lineno + 1),
                    ));
                }
                let mut d = [0.0; 3];
                for (i, f) in fields[1..].iter().enumerate() {
                    d[i] = f.parse().map_err(|_| {
                        Error::parse(path(origin), format!("line {}: bad density", lineno + 1))
                    })?;
                }
                density = Some(d);
                continue;
            }
            if !saw_header {
                if fields != ["energy_kev", "air", "soft", "bone"] {
                    return Err(Error::parse(
                        path(origin),
                        format!(
                            "line {}: expected header `energy_kev\tair\tsoft\tbone`",
                            lineno + 1
                        ),
                    ));
                }
                saw_header = true;
                continue;
            }
            if fields.len() != 4 {
                return Err(Error::parse(path(origin), format!("line {}: expected 4 fields", lineno + 1)));
            }
            let mut vals = [0.0f64; 4];
            for (i, f) in fields.iter().enumerate() {
                vals[i] = f.parse().map_err(|_| {
                    Error::parse(path(origin), format!("line {}: bad number `{f}`", lineno + 1))
                })?;
            }
            energies.push(vals[0]);
            for m in 0..3 {
                cols[m].push(vals[m + 1]);
            }
        }
        let density = density
            .ok_or_else(|| Error::parse(path(origin), "attenuation table lacks a density row"))?;
        Self::new(energies, cols, density)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv_str(&text, Some(path))
    }

    /// Synthetic uniform table: the same μ/ρ at every energy for a material,
    /// for closed-form attenuation tests.
    pub fn uniform(energy_range: (f64, f64), mu_rho: [f64; 3], density: [f64; 3]) -> Result<Self> {
        Self::new(
            vec![energy_range.0, energy_range.1],
            [vec![mu_rho[0]; 2], vec![mu_rho[1]; 2], vec![mu_rho[2]; 2]],
            density,
        )
    }
}
