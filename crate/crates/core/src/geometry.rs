//! Hexagonal multi-site layout with sectorised sites, uniform UE drops and
//! site-to-UE angles.
//!
//! Angles follow the mathematical convention: degrees counter-clockwise from
//! the +x axis. Site hexagons have their flat sides facing the six
//! neighbouring sites (neighbours at 0°, 60°, ...), so with the default 30°
//! azimuth offset every sector boresight points at a hexagon corner.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const PLACEMENT_ATTEMPTS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("could not place a UE in sector {sector} of site {site} after {attempts} attempts")]
    PlacementFailed {
        site: usize,
        sector: usize,
        attempts: usize,
    },
    #[error("UE coincides with the site in the horizontal plane")]
    ZeroDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn horizontal_distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One sector (cell) of a site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorId {
    pub site_index: usize,
    pub sector_index: usize,
    /// Boresight direction in degrees, in `[0, 360)`.
    pub azimuth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub sites: Vec<Position>,
    /// Site-major: sector `k` of site `s` is at `s * sectors_per_site + k`.
    pub sectors: Vec<SectorId>,
    pub isd: f64,
    pub rings: u32,
    pub sectors_per_site: usize,
}

impl Layout {
    pub fn sector(&self, site: usize, sector: usize) -> usize {
        site * self.sectors_per_site + sector
    }

    /// Distance from a site to its hexagon corners.
    pub fn cell_radius(&self) -> f64 {
        self.isd / 3f64.sqrt()
    }

    /// Whether a horizontal offset from a site lies inside that site's hexagon.
    fn in_hexagon(&self, dx: f64, dy: f64) -> bool {
        let half = self.isd / 2.0;
        (0..3).all(|k| {
            let a = (60.0 * k as f64).to_radians();
            (dx * a.cos() + dy * a.sin()).abs() <= half
        })
    }

    /// The sector of `site` whose boresight is angularly closest to `bearing`.
    fn closest_sector(&self, site: usize, bearing: f64) -> usize {
        (0..self.sectors_per_site)
            .map(|k| (k, wrap_degrees(bearing - self.sectors[self.sector(site, k)].azimuth).abs()))
            .fold((0, f64::INFINITY), |best, (k, off)| if off < best.1 { (k, off) } else { best })
            .0
    }
}

/// Wraps an angle in degrees to `(-180, 180]`.
pub fn wrap_degrees(a: f64) -> f64 {
    let r = a.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Builds a hexagonal grid of `1 + 3·rings·(rings+1)` sites centred on the origin.
///
/// Sites are ordered centre first, then ring by ring.
pub fn build_hex_layout(
    isd: f64,
    rings: u32,
    sectors_per_site: usize,
    azimuth_offset: f64,
    site_height: f64,
) -> Result<Layout, GeometryError> {
    if !(isd.is_finite() && isd > 0.0) {
        return Err(GeometryError::InvalidLayout(format!("inter-site distance must be positive, got {isd}")));
    }
    if sectors_per_site == 0 {
        return Err(GeometryError::InvalidLayout("at least one sector per site required".into()));
    }
    let n = rings as i64;
    let mut axial: Vec<(i64, i64)> = Vec::new();
    for q in -n..=n {
        for r in (-n).max(-q - n)..=n.min(-q + n) {
            axial.push((q, r));
        }
    }
    let ring_of = |(q, r): (i64, i64)| (q.abs() + r.abs() + (q + r).abs()) / 2;
    axial.sort_by_key(|&c| (ring_of(c), c));

    let sites: Vec<Position> = axial
        .iter()
        .map(|&(q, r)| {
            let (q, r) = (q as f64, r as f64);
            Position::new(isd * (q + r / 2.0), isd * r * 3f64.sqrt() / 2.0, site_height)
        })
        .collect();
    let step = 360.0 / sectors_per_site as f64;
    let sectors = (0..sites.len())
        .flat_map(|s| {
            (0..sectors_per_site).map(move |k| SectorId {
                site_index: s,
                sector_index: k,
                azimuth: (azimuth_offset + step * k as f64).rem_euclid(360.0),
            })
        })
        .collect();
    Ok(Layout {
        sites,
        sectors,
        isd,
        rings,
        sectors_per_site,
    })
}

/// A dropped UE and the sector serving it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroppedUe {
    pub position: Position,
    /// Global sector index into [`Layout::sectors`].
    pub sector: usize,
}

/// Drops `ues_per_sector` UEs uniformly in every sector region.
///
/// A sector region is the part of its site's hexagon angularly closest to the
/// sector boresight, minus a disc of radius `min_dist` around the site. UEs
/// are generated site by site, sector by sector, from one generator, so the
/// centre site's drops do not depend on the number of rings.
pub fn drop_ues<R: Rng + ?Sized>(
    layout: &Layout,
    ues_per_sector: usize,
    min_dist: f64,
    rx_height: f64,
    rng: &mut R,
) -> Result<Vec<DroppedUe>, GeometryError> {
    if !(min_dist >= 0.0 && min_dist < layout.cell_radius()) {
        return Err(GeometryError::InvalidLayout(format!(
            "minimum UE distance {min_dist} m must be below the cell radius {:.3} m",
            layout.cell_radius()
        )));
    }
    let half = layout.isd / 2.0;
    let radius = layout.cell_radius();
    let mut out = Vec::with_capacity(layout.sectors.len() * ues_per_sector);
    for (s, site) in layout.sites.iter().enumerate() {
        for k in 0..layout.sectors_per_site {
            for _ in 0..ues_per_sector {
                let mut placed = None;
                for _ in 0..PLACEMENT_ATTEMPTS {
                    let dx = rng.random_range(-half..=half);
                    let dy = rng.random_range(-radius..=radius);
                    if !layout.in_hexagon(dx, dy) || dx.hypot(dy) < min_dist {
                        continue;
                    }
                    if layout.closest_sector(s, dy.atan2(dx).to_degrees()) == k {
                        placed = Some(Position::new(site.x + dx, site.y + dy, rx_height));
                        break;
                    }
                }
                let position = placed.ok_or(GeometryError::PlacementFailed {
                    site: s,
                    sector: k,
                    attempts: PLACEMENT_ATTEMPTS,
                })?;
                out.push(DroppedUe {
                    position,
                    sector: layout.sector(s, k),
                });
            }
        }
    }
    Ok(out)
}

/// Offsets of a UE from a sector's boresight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angles {
    /// Bearing minus azimuth, in `(-180, 180]`.
    pub horizontal_offset: f64,
    /// Elevation below the horizon as seen from the site.
    pub vertical_offset: f64,
}

pub fn angles(sector: &SectorId, site: &Position, ue: &Position) -> Result<Angles, GeometryError> {
    let (dx, dy) = (ue.x - site.x, ue.y - site.y);
    let d = dx.hypot(dy);
    if d == 0.0 {
        return Err(GeometryError::ZeroDistance);
    }
    let bearing = dy.atan2(dx).to_degrees();
    Ok(Angles {
        horizontal_offset: wrap_degrees(bearing - sector.azimuth),
        vertical_offset: ((site.z - ue.z) / d).atan().to_degrees(),
    })
}

/// CSV of site, sector and UE coordinates.
pub fn layout_csv(layout: &Layout, ues: &[DroppedUe]) -> String {
    let mut out = String::from("kind,id,site,sector,x,y,z,azimuth_deg\n");
    for (i, s) in layout.sites.iter().enumerate() {
        let _ = writeln!(out, "site,{i},{i},,{},{},{},", s.x, s.y, s.z);
    }
    for (i, s) in layout.sectors.iter().enumerate() {
        let p = layout.sites[s.site_index];
        let _ = writeln!(out, "sector,{i},{},{},{},{},{},{}", s.site_index, s.sector_index, p.x, p.y, p.z, s.azimuth);
    }
    for (i, u) in ues.iter().enumerate() {
        let s = layout.sectors[u.sector];
        let p = u.position;
        let _ = writeln!(out, "ue,{i},{},{},{},{},{},", s.site_index, s.sector_index, p.x, p.y, p.z);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layout(rings: u32) -> Layout {
        build_hex_layout(500.0, rings, 3, 30.0, 20.0).unwrap()
    }

    #[test]
    fn site_counts() {
        for rings in 0..=4u32 {
            let l = layout(rings);
            let expected = 1 + (1..=rings).map(|r| 6 * r as usize).sum::<usize>();
            assert_eq!(l.sites.len(), expected);
            assert_eq!(l.sites.len(), 1 + 3 * rings as usize * (rings as usize + 1));
            assert_eq!(l.sectors.len(), 3 * expected);
        }
        assert_eq!(layout(2).sites.len(), 19);
        let single = layout(0);
        assert_eq!(single.sites, vec![Position::new(0.0, 0.0, 20.0)]);
    }

    #[test]
    fn one_ring_layout() {
        let l = layout(1);
        assert_eq!(l.sites.len(), 7);
        assert_eq!(l.sectors.len(), 21);
        assert_eq!((l.sites[0].x, l.sites[0].y), (0.0, 0.0));
        let az: Vec<f64> = l.sectors[..3].iter().map(|s| s.azimuth).collect();
        assert_eq!(az, vec![30.0, 150.0, 270.0]);
        for s in &l.sectors {
            let expected = (30.0 + 120.0 * s.sector_index as f64).rem_euclid(360.0);
            assert!((s.azimuth - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn nearest_neighbour_spacing_is_isd() {
        for rings in 1..=3 {
            let l = layout(rings);
            for (i, a) in l.sites.iter().enumerate() {
                let nearest = l
                    .sites
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, b)| a.horizontal_distance(b))
                    .fold(f64::INFINITY, f64::min);
                assert!((nearest - 500.0).abs() / 500.0 < 1e-9, "{nearest}");
            }
        }
    }

    #[test]
    fn drops_respect_min_distance_and_counts() {
        let l = layout(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ues = drop_ues(&l, 10, 35.0, 1.5, &mut rng).unwrap();
        assert_eq!(ues.len(), 210);
        for u in &ues {
            assert_eq!(u.position.z, 1.5);
            for s in &l.sites {
                assert!(u.position.horizontal_distance(s) >= 35.0);
            }
        }
        for sector in 0..21 {
            assert_eq!(ues.iter().filter(|u| u.sector == sector).count(), 10);
        }
        // Each UE is inside its own site's hexagon and closest to its boresight.
        for u in &ues {
            let sec = l.sectors[u.sector];
            let site = l.sites[sec.site_index];
            let own = u.position.horizontal_distance(&site);
            assert!(own <= l.cell_radius() + 1e-9);
            let off = angles(&sec, &site, &u.position).unwrap().horizontal_offset.abs();
            assert!(off <= 60.0 + 1e-9, "{off}");
        }
    }

    #[test]
    fn drops_are_reproducible() {
        let l = layout(0);
        let a = drop_ues(&l, 1, 35.0, 1.5, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = drop_ues(&l, 1, 35.0, 1.5, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let bits = |v: &[DroppedUe]| v.iter().flat_map(|u| [u.position.x.to_bits(), u.position.y.to_bits()]).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert!(drop_ues(&l, 0, 35.0, 1.5, &mut ChaCha8Rng::seed_from_u64(7)).unwrap().is_empty());
    }

    #[test]
    fn min_distance_must_fit() {
        let l = layout(0);
        assert!(matches!(
            drop_ues(&l, 1, 400.0, 1.5, &mut ChaCha8Rng::seed_from_u64(7)),
            Err(GeometryError::InvalidLayout(_))
        ));
    }

    /// Area of the hexagon part between bearings `a` and `b` (degrees) outside
    /// a disc of radius `r0`, by midpoint quadrature of ½∫(ρ(θ)² − r0²)dθ.
    fn wedge_area(a: f64, b: f64, r0: f64) -> f64 {
        let n = 20_000;
        let h = (b - a) / n as f64;
        (0..n)
            .map(|i| {
                let t = (a + (i as f64 + 0.5) * h).to_radians();
                // Flat sides at distance 250 m with normals every 60 degrees.
                let rho = (0..6)
                    .map(|k| {
                        let c = (t - (60.0 * k as f64).to_radians()).cos();
                        if c > 1e-12 { 250.0 / c } else { f64::INFINITY }
                    })
                    .fold(f64::INFINITY, f64::min);
                0.5 * (rho * rho - r0 * r0) * h.to_radians()
            })
            .sum()
    }

    #[test]
    fn drops_are_uniform_within_a_sector() {
        // Sector 0 spans bearings -30..90; split it into four 30-degree wedges.
        let l = layout(0);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = [0usize; 4];
        let n = 10_000;
        for u in drop_ues(&l, n, 35.0, 1.5, &mut rng).unwrap().iter().filter(|u| u.sector == 0) {
            let b = u.position.y.atan2(u.position.x).to_degrees();
            let idx = (((b + 30.0) / 30.0).floor() as usize).min(3);
            counts[idx] += 1;
        }
        let areas: Vec<f64> = (0..4).map(|i| wedge_area(-30.0 + 30.0 * i as f64, 30.0 * i as f64, 35.0)).collect();
        let total: f64 = areas.iter().sum();
        let chi2: f64 = counts
            .iter()
            .zip(&areas)
            .map(|(&c, a)| {
                let e = n as f64 * a / total;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // 3 degrees of freedom, 0.1% critical value.
        assert!(chi2 < 16.266, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn angle_cases() {
        let site = Position::new(0.0, 0.0, 20.0);
        let sec = SectorId { site_index: 0, sector_index: 0, azimuth: 30.0 };
        let along = |deg: f64, d: f64| {
            let t = f64::to_radians(deg);
            Position::new(d * t.cos(), d * t.sin(), 1.5)
        };
        let a = angles(&sec, &site, &along(30.0, 100.0)).unwrap();
        assert!(a.horizontal_offset.abs() < 1e-12);
        assert!((a.vertical_offset - (18.5f64 / 100.0).atan().to_degrees()).abs() < 1e-12);
        assert!((a.vertical_offset - 10.4807).abs() < 1e-3);

        let back = angles(&sec, &site, &along(210.0, 100.0)).unwrap();
        assert!((back.horizontal_offset - 180.0).abs() < 1e-9);

        assert_eq!(angles(&sec, &site, &Position::new(0.0, 0.0, 1.5)), Err(GeometryError::ZeroDistance));
    }

    #[test]
    fn horizontal_offset_is_antisymmetric_under_reflection() {
        let site = Position::new(10.0, -5.0, 20.0);
        for az in [0.0, 30.0, 150.0, 270.0, 333.0] {
            let sec = SectorId { site_index: 0, sector_index: 0, azimuth: az };
            for off in [1.0, 17.0, 59.0, 90.0, 135.0, 179.0] {
                let at = |deg: f64| {
                    let t = f64::to_radians(az + deg);
                    Position::new(site.x + 80.0 * t.cos(), site.y + 80.0 * t.sin(), 1.5)
                };
                let p = angles(&sec, &site, &at(off)).unwrap().horizontal_offset;
                let m = angles(&sec, &site, &at(-off)).unwrap().horizontal_offset;
                assert!((p + m).abs() < 1e-9, "az {az} off {off}: {p} vs {m}");
            }
        }
    }

    #[test]
    fn wrap() {
        assert_eq!(wrap_degrees(180.0), 180.0);
        assert_eq!(wrap_degrees(-180.0), 180.0);
        assert_eq!(wrap_degrees(190.0), -170.0);
        assert_eq!(wrap_degrees(720.0), 0.0);
    }
}
