//! Co-pilot cell layout and user drops.
//!
//! Only the `K` cells that share the tracked pilot are instantiated. Their
//! centres sit on the co-channel sub-lattice of a hexagonal grid, so the
//! nearest co-pilot neighbours are `sqrt(3 R) * radius` apart. Intermediate
//! cells (other pilots) exist only implicitly through that spacing.

use std::f64::consts::PI;
use std::io::Write;

use rand::seq::index;
use rand::Rng;

use crate::{Error, Result};

/// Horizontal guard distance between a user and its serving BS, in metres.
pub const MIN_HORIZONTAL_DISTANCE: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    pub fn horizontal_distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteGeometry {
    pub position: Position,
    pub cell_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UserKind {
    Uav,
    Gue,
}

impl UserKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UserKind::Uav => "uav",
            UserKind::Gue => "gue",
        }
    }
}

impl std::str::FromStr for UserKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uav" => Ok(UserKind::Uav),
            "gue" => Ok(UserKind::Gue),
            other => Err(Error::invalid("kind", format!("unknown user kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserPlacement {
    pub position: Position,
    pub kind: UserKind,
    pub serving_cell: usize,
}

/// Heights used when dropping users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightProfile {
    pub bs: f64,
    pub uav_min: f64,
    pub uav_max: f64,
    pub gue: f64,
}

impl Default for HeightProfile {
    fn default() -> Self {
        Self {
            bs: 25.0,
            uav_min: 25.0,
            uav_max: 300.0,
            gue: 1.5,
        }
    }
}

impl HeightProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.bs > 0.0) {
            return Err(Error::invalid("bs_height", "must be positive"));
        }
        if !(self.gue > 0.0) {
            return Err(Error::invalid("gue_height", "must be positive"));
        }
        if !(self.uav_min >= self.bs) {
            return Err(Error::invalid("uav_height_min", "must not be below the BS height"));
        }
        if !(self.uav_max >= self.uav_min) {
            return Err(Error::invalid("uav_height_max", "must be >= uav_height_min"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkLayout {
    pub sites: Vec<SiteGeometry>,
    pub users: Vec<UserPlacement>,
    pub reuse_factor: usize,
    pub cell_radius: f64,
}

impl NetworkLayout {
    pub fn num_cells(&self) -> usize {
        self.sites.len()
    }

    pub fn num_uavs(&self) -> usize {
        self.users.iter().filter(|u| u.kind == UserKind::Uav).count()
    }

    /// Writes one CSV row per site and user.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "role", "x", "y", "z", "kind", "serving_cell"])?;
        for s in &self.sites {
            w.write_record([
                format!("site{}", s.cell_index),
                "site".into(),
                s.position.x.to_string(),
                s.position.y.to_string(),
                s.position.z.to_string(),
                "bs".into(),
                s.cell_index.to_string(),
            ])?;
        }
        for (i, u) in self.users.iter().enumerate() {
            w.write_record([
                format!("user{i}"),
                "user".into(),
                u.position.x.to_string(),
                u.position.y.to_string(),
                u.position.z.to_string(),
                u.kind.as_str().into(),
                u.serving_cell.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Decomposes a hexagonal reuse factor as `i^2 + i j + j^2` with `i >= 1`.
pub fn reuse_shift(reuse_factor: usize) -> Option<(i64, i64)> {
    let r = reuse_factor as i64;
    for i in 1..=r {
        for j in 0..=i {
            if i * i + i * j + j * j == r {
                return Some((i, j));
            }
        }
    }
    None
}

/// Places `k` co-pilot sites on the reuse-`R` co-channel lattice, nearest to
/// the origin first. Users are not dropped yet.
pub fn build_layout(cell_radius: f64, reuse_factor: usize, k: usize, bs_height: f64) -> Result<NetworkLayout> {
    if !(cell_radius > 0.0) {
        return Err(Error::invalid("cell_radius", "must be positive"));
    }
    if k < 2 {
        return Err(Error::invalid("users", "K >= 2 is required so that 1 <= K_u < K"));
    }
    if !(bs_height > 0.0) {
        return Err(Error::invalid("bs_height", "must be positive"));
    }
    let (i, j) = reuse_shift(reuse_factor).ok_or(Error::InvalidReuseFactor(reuse_factor))?;

    // Hex centre lattice, spacing sqrt(3) r, basis vectors 60 degrees apart.
    let s = 3f64.sqrt() * cell_radius;
    let e1 = (s, 0.0);
    let e2 = (s * 0.5, s * 3f64.sqrt() * 0.5);
    let (i, j) = (i as f64, j as f64);
    let u1 = (i * e1.0 + j * e2.0, i * e1.1 + j * e2.1);
    // u2 is u1 rotated by +60 degrees
    let (c, sn) = ((PI / 3.0).cos(), (PI / 3.0).sin());
    let u2 = (u1.0 * c - u1.1 * sn, u1.0 * sn + u1.1 * c);

    let span = ((k as f64).sqrt().ceil() as i64) + 2;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for a in -span..=span {
        for b in -span..=span {
            let (a, b) = (a as f64, b as f64);
            points.push((a * u1.0 + b * u2.0, a * u1.1 + b * u2.1));
        }
    }
    let key = |p: &(f64, f64)| {
        let dist = (p.0.hypot(p.1) * 1e6).round() as i64;
        // angle in [0, 2pi), quantised so that ties are broken reproducibly
        let mut ang = p.1.atan2(p.0);
        if ang < -1e-12 {
            ang += 2.0 * PI;
        }
        (dist, (ang.max(0.0) * 1e9).round() as i64)
    };
    points.sort_by_key(key);

    let sites = points
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(idx, (x, y))| SiteGeometry {
            position: Position::new(clean(x), clean(y), bs_height),
            cell_index: idx,
        })
        .collect();

    Ok(NetworkLayout {
        sites,
        users: Vec::new(),
        reuse_factor,
        cell_radius,
    })
}

fn clean(v: f64) -> f64 {
    if v.abs() < 1e-9 {
        0.0
    } else {
        v
    }
}

/// Drops one user per site: `num_uavs` UAVs in randomly chosen cells, ground
/// users elsewhere. Horizontal positions are uniform over each cell's disc
/// outside the guard radius.
pub fn place_users<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    num_uavs: usize,
    heights: &HeightProfile,
    rng: &mut R,
) -> Result<NetworkLayout> {
    let k = layout.num_cells();
    if num_uavs < 1 || num_uavs >= k {
        return Err(Error::invalid(
            "uavs",
            format!("K_u = {num_uavs} must satisfy 1 <= K_u < K = {k}"),
        ));
    }
    heights.validate()?;

    let mut is_uav = vec![false; k];
    for c in index::sample(rng, k, num_uavs) {
        is_uav[c] = true;
    }
    let users = layout
        .sites
        .iter()
        .map(|site| {
            let kind = if is_uav[site.cell_index] {
                UserKind::Uav
            } else {
                UserKind::Gue
            };
            drop_user(site, kind, layout.cell_radius, heights, rng)
        })
        .collect();

    Ok(NetworkLayout {
        users,
        ..layout.clone()
    })
}

/// Draws a single user of `kind` inside `site`'s cell.
pub fn drop_user<R: Rng + ?Sized>(
    site: &SiteGeometry,
    kind: UserKind,
    cell_radius: f64,
    heights: &HeightProfile,
    rng: &mut R,
) -> UserPlacement {
    let r_min = MIN_HORIZONTAL_DISTANCE.min(cell_radius * 0.5);
    let r2 = rng.gen_range(r_min * r_min..=cell_radius * cell_radius);
    let r = r2.sqrt();
    let ang = rng.gen_range(-PI..PI);
    let z = match kind {
        UserKind::Uav if heights.uav_max > heights.uav_min => rng.gen_range(heights.uav_min..=heights.uav_max),
        UserKind::Uav => heights.uav_min,
        UserKind::Gue => heights.gue,
    };
    UserPlacement {
        position: Position::new(site.position.x + r * ang.cos(), site.position.y + r * ang.sin(), z),
        kind,
        serving_cell: site.cell_index,
    }
}

/// Angle of arrival at a BS: `theta` is the polar angle from the upward
/// vertical (0 = zenith), `phi` the azimuth from the +x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aoa {
    pub theta: f64,
    pub phi: f64,
    pub distance: f64,
}

pub fn geometry_to_aoa(bs: &SiteGeometry, user: &UserPlacement) -> Result<Aoa> {
    let dx = user.position.x - bs.position.x;
    let dy = user.position.y - bs.position.y;
    let dz = user.position.z - bs.position.z;
    let horizontal = dx.hypot(dy);
    let distance = (horizontal * horizontal + dz * dz).sqrt();
    if distance == 0.0 {
        return Err(Error::CoincidentPositions);
    }
    Ok(Aoa {
        theta: horizontal.atan2(dz),
        phi: dy.atan2(dx),
        distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn nearest_pair_distance(layout: &NetworkLayout) -> f64 {
        let mut best = f64::INFINITY;
        for (a, sa) in layout.sites.iter().enumerate() {
            for sb in &layout.sites[a + 1..] {
                best = best.min(sa.position.distance(&sb.position));
            }
        }
        best
    }

    #[test]
    fn reuse_seven_nine_sites() {
        let layout = build_layout(500.0, 7, 9, 25.0).unwrap();
        assert_eq!(layout.sites.len(), 9);
        assert_abs_diff_eq!(nearest_pair_distance(&layout), 21f64.sqrt() * 500.0, epsilon = 1e-6);
        assert_abs_diff_eq!(nearest_pair_distance(&layout), 2291.2878, epsilon = 1e-3);
        assert!(layout.sites.iter().all(|s| s.position.z == 25.0));
        // centre site first, six first-tier neighbours at the co-channel distance
        let origin = layout.sites[0].position;
        assert_eq!((origin.x, origin.y), (0.0, 0.0));
        let tier1 = layout.sites[1..7]
            .iter()
            .filter(|s| (s.position.horizontal_distance(&origin) - 21f64.sqrt() * 500.0).abs() < 1e-6)
            .count();
        assert_eq!(tier1, 6);
    }

    #[test]
    fn reuse_one_two_sites() {
        let layout = build_layout(500.0, 1, 2, 25.0).unwrap();
        assert_eq!(layout.sites.len(), 2);
        assert_abs_diff_eq!(nearest_pair_distance(&layout), 3f64.sqrt() * 500.0, epsilon = 1e-6);
    }

    #[test]
    fn layout_rejects_bad_parameters() {
        assert!(build_layout(500.0, 7, 1, 25.0).is_err());
        assert!(matches!(
            build_layout(500.0, 2, 9, 25.0),
            Err(Error::InvalidReuseFactor(2))
        ));
        assert!(build_layout(0.0, 7, 9, 25.0).is_err());
        for r in [1, 3, 4, 7, 9, 12, 13] {
            assert!(reuse_shift(r).is_some(), "R = {r}");
        }
        for r in [2, 5, 6, 8, 10, 11] {
            assert!(reuse_shift(r).is_none(), "R = {r}");
        }
    }

    #[test]
    fn placement_counts_heights_and_radius() {
        let layout = build_layout(500.0, 7, 9, 25.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let placed = place_users(&layout, 3, &HeightProfile::default(), &mut rng).unwrap();
        assert_eq!(placed.num_uavs(), 3);
        assert_eq!(placed.users.len(), 9);
        for u in &placed.users {
            let site = &placed.sites[u.serving_cell];
            let h = u.position.horizontal_distance(&site.position);
            assert!((MIN_HORIZONTAL_DISTANCE - 1e-9..=500.0 + 1e-9).contains(&h));
            match u.kind {
                UserKind::Gue => assert_eq!(u.position.z, 1.5),
                UserKind::Uav => assert!((25.0..=300.0).contains(&u.position.z)),
            }
        }
    }

    #[test]
    fn placement_rejects_ku_out_of_range() {
        let layout = build_layout(500.0, 7, 9, 25.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(place_users(&layout, 9, &HeightProfile::default(), &mut rng).is_err());
        assert!(place_users(&layout, 0, &HeightProfile::default(), &mut rng).is_err());
    }

    #[test]
    fn placement_is_deterministic() {
        let layout = build_layout(500.0, 7, 9, 25.0).unwrap();
        let a = place_users(&layout, 3, &HeightProfile::default(), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = place_users(&layout, 3, &HeightProfile::default(), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    fn user_at(x: f64, y: f64, z: f64) -> UserPlacement {
        UserPlacement {
            position: Position::new(x, y, z),
            kind: UserKind::Uav,
            serving_cell: 0,
        }
    }

    #[test]
    fn aoa_reference_cases() {
        let bs = SiteGeometry {
            position: Position::new(0.0, 0.0, 25.0),
            cell_index: 0,
        };
        let zenith = geometry_to_aoa(&bs, &user_at(0.0, 0.0, 125.0)).unwrap();
        assert_eq!(zenith.theta, 0.0);
        assert_abs_diff_eq!(zenith.distance, 100.0);

        let horizon = geometry_to_aoa(&bs, &user_at(500.0, 0.0, 25.0)).unwrap();
        assert_abs_diff_eq!(horizon.theta, PI / 2.0);
        assert_abs_diff_eq!(horizon.phi, 0.0);
        assert_abs_diff_eq!(horizon.distance, 500.0);

        let diag = geometry_to_aoa(&bs, &user_at(0.0, 100.0, 125.0)).unwrap();
        assert_abs_diff_eq!(diag.theta, PI / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(diag.phi, PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(diag.distance, 100.0 * 2f64.sqrt(), epsilon = 1e-9);

        assert!(matches!(
            geometry_to_aoa(&bs, &user_at(0.0, 0.0, 25.0)),
            Err(Error::CoincidentPositions)
        ));
    }

    #[test]
    fn uavs_above_and_gues_below_every_bs() {
        let layout = build_layout(500.0, 7, 9, 25.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let placed = place_users(&layout, 4, &HeightProfile::default(), &mut rng).unwrap();
            for site in &placed.sites {
                for u in &placed.users {
                    let aoa = geometry_to_aoa(site, u).unwrap();
                    match u.kind {
                        UserKind::Uav => assert!(aoa.theta >= 0.0 && aoa.theta < PI / 2.0),
                        UserKind::Gue => assert!(aoa.theta > PI / 2.0),
                    }
                }
            }
        }
    }

    #[test]
    fn layout_csv_has_header_and_rows() {
        let layout = build_layout(500.0, 7, 9, 25.0).unwrap();
        let placed = place_users(&layout, 3, &HeightProfile::default(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let mut buf = Vec::new();
        placed.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("id,role,x,y,z,kind,serving_cell\n"));
        assert_eq!(text.lines().count(), 1 + 9 + 9);
    }
}
