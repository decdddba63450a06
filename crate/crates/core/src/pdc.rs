//! Pilot decontamination.
//!
//! * Ground users: every LoS component found in the above-BS search range is
//!   interference and is removed.
//! * UAV users: a second training block with a fresh pilot separates the
//!   user's own LoS component (present in both blocks) from interferers
//!   (different in each block).
//! * Genie projection onto the orthogonal complement of the true interferer
//!   steering vectors, used as the performance reference.

use nalgebra::DMatrix;

use crate::channel::{steering_vector, ArrayGeometry};
use crate::detector::{Detector, LoSComponent};
use crate::{ChannelVector, Error, Result, VectorRole, C64};

/// Relative singular-value tolerance for the interferer steering matrix.
pub const RANK_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PdcMethod {
    GuePdc,
    UavTwoBlock,
    PerfectProjection,
    None,
}

/// Which branch of the two-block procedure produced the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UavBranch {
    /// At most one component in block 1; estimate kept as is.
    SingleComponent,
    /// No component matched across blocks; estimate kept as is.
    NoMatch,
    /// Exactly one matched component.
    UniqueMatch,
    /// Several matched components; only unmatched ones removed.
    MultipleMatches,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecontaminatedEstimate {
    pub vector: ChannelVector,
    pub removed: Vec<LoSComponent>,
    /// Components treated as the user's own LoS path (UAV case).
    pub kept: Vec<LoSComponent>,
    pub method: PdcMethod,
    pub branch: Option<UavBranch>,
    /// Components found in the (block-1) estimate; `removed` and `kept`
    /// partition them on the removal branches.
    pub detected: usize,
    /// Some detection pass hit its iteration cap.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchTolerance {
    epsilon_rel: f64,
}

impl MatchTolerance {
    pub fn new(epsilon_rel: f64) -> Result<Self> {
        if !(epsilon_rel > 0.0 && epsilon_rel < 1.0) {
            return Err(Error::invalid("epsilon_rel", "must lie in (0, 1)"));
        }
        Ok(Self { epsilon_rel })
    }

    pub fn epsilon_rel(&self) -> f64 {
        self.epsilon_rel
    }
}

impl Default for MatchTolerance {
    fn default() -> Self {
        Self { epsilon_rel: 0.15 }
    }
}

/// Removes every detected LoS component from a ground user's estimate.
pub fn decontaminate_gue(estimate: &ChannelVector, detector: &Detector) -> Result<DecontaminatedEstimate> {
    let outcome = detector.detect(estimate)?;
    Ok(DecontaminatedEstimate {
        vector: outcome.residual.with_role(VectorRole::Estimate),
        detected: outcome.components.len(),
        removed: outcome.components,
        kept: Vec::new(),
        method: PdcMethod::GuePdc,
        branch: None,
        truncated: outcome.truncated,
    })
}

/// Phase-invariant relative distance between the primary atoms
/// `v1 = mu1 a1`, `v2 = mu2 a2`:
/// `sqrt(|v1|^2 + |v2|^2 - 2 |v1^H v2|) / max(|v1|, |v2|)`, i.e. the
/// Euclidean distance after the best common phase rotation. Absorbed
/// main-lobe atoms are left out: they carry block-specific leakage.
pub fn component_distance(c1: &LoSComponent, c2: &LoSComponent, array: &ArrayGeometry) -> f64 {
    vector_distance(&primary_atom(c1, array), &primary_atom(c2, array))
}

fn primary_atom(c: &LoSComponent, array: &ArrayGeometry) -> ChannelVector {
    c.steering(array).scaled(c.mu)
}

fn vector_distance(v1: &ChannelVector, v2: &ChannelVector) -> f64 {
    let n1 = v1.norm_sqr();
    let n2 = v2.norm_sqr();
    let cross = v1.inner(v2).norm();
    let scale = n1.max(n2).sqrt();
    if scale == 0.0 {
        return 0.0;
    }
    (n1 + n2 - 2.0 * cross).max(0.0).sqrt() / scale
}

/// Pairs components across the two blocks whose phase-aligned distance is
/// below the tolerance. Greedy by increasing distance, one partner each;
/// returns the block-1 member of every pair in block-1 order.
pub fn match_components(
    block1: &[LoSComponent],
    block2: &[LoSComponent],
    tol: &MatchTolerance,
    array: &ArrayGeometry,
) -> Vec<LoSComponent> {
    let v1: Vec<ChannelVector> = block1.iter().map(|c| primary_atom(c, array)).collect();
    let v2: Vec<ChannelVector> = block2.iter().map(|c| primary_atom(c, array)).collect();
    matched_indices(&v1, &v2, tol)
        .into_iter()
        .map(|i| block1[i].clone())
        .collect()
}

fn matched_indices(v1: &[ChannelVector], v2: &[ChannelVector], tol: &MatchTolerance) -> Vec<usize> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in v1.iter().enumerate() {
        for (j, b) in v2.iter().enumerate() {
            let d = vector_distance(a, b);
            if d < tol.epsilon_rel() {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used1 = vec![false; v1.len()];
    let mut used2 = vec![false; v2.len()];
    for (_, i, j) in pairs {
        if !used1[i] && !used2[j] {
            used1[i] = true;
            used2[j] = true;
        }
    }
    (0..v1.len()).filter(|&i| used1[i]).collect()
}

/// Two-training-block UAV decontamination. `block2` is only examined when
/// block 1 shows contamination (two or more components).
pub fn decontaminate_uav(
    block1: &ChannelVector,
    block2: &ChannelVector,
    detector: &Detector,
    tol: &MatchTolerance,
) -> Result<DecontaminatedEstimate> {
    let first = detector.detect(block1)?;
    let detected = first.count();
    let keep_all = |branch, kept: Vec<LoSComponent>, truncated| DecontaminatedEstimate {
        vector: block1.clone().with_role(VectorRole::Estimate),
        removed: Vec::new(),
        kept,
        method: PdcMethod::UavTwoBlock,
        branch: Some(branch),
        detected,
        truncated,
    };
    if first.count() <= 1 {
        return Ok(keep_all(UavBranch::SingleComponent, first.components, first.truncated));
    }
    let second = detector.detect(block2)?;
    let truncated = first.truncated || second.truncated;
    let matched = match_components(&first.components, &second.components, tol, detector.array());
    if matched.is_empty() {
        return Ok(keep_all(UavBranch::NoMatch, Vec::new(), truncated));
    }
    let branch = if matched.len() == 1 {
        UavBranch::UniqueMatch
    } else {
        UavBranch::MultipleMatches
    };
    let removed: Vec<LoSComponent> = first
        .components
        .iter()
        .filter(|c| !matched.iter().any(|k| k.cell == c.cell))
        .cloned()
        .collect();
    let mut vector = block1.clone().with_role(VectorRole::Estimate);
    for c in &removed {
        vector = vector.sub(&c.reconstruct(detector.array()));
    }
    Ok(DecontaminatedEstimate {
        vector,
        removed,
        kept: matched,
        method: PdcMethod::UavTwoBlock,
        branch: Some(branch),
        detected,
        truncated,
    })
}

/// Orthogonal projector onto the complement of span(A), with the basis taken
/// from the left singular vectors of A.
#[derive(Debug, Clone)]
pub struct OrthogonalProjector {
    /// Orthonormal basis of span(A), column-major, `rank` columns of length M.
    basis: Vec<ChannelVector>,
    len: usize,
}

impl OrthogonalProjector {
    /// `columns` must be non-empty-compatible: an empty set yields the identity.
    pub fn from_columns(columns: &[ChannelVector], len: usize) -> Result<Self> {
        if columns.is_empty() {
            return Ok(Self { basis: Vec::new(), len });
        }
        for c in columns {
            c.ensure_len(len)?;
        }
        if columns.len() >= len {
            return Err(Error::invalid(
                "interferers",
                format!("{} steering vectors for {} antennas", columns.len(), len),
            ));
        }
        let a = DMatrix::<C64>::from_fn(len, columns.len(), |r, c| columns[c][r]);
        let svd = a.svd(true, false);
        let sigma = &svd.singular_values;
        let smax = sigma.iter().cloned().fold(0.0, f64::max);
        let rank = sigma.iter().filter(|s| **s > RANK_TOLERANCE * smax).count();
        if rank < columns.len() || smax == 0.0 {
            return Err(Error::RankDeficient {
                rank,
                columns: columns.len(),
            });
        }
        let u = svd.u.expect("requested U");
        let basis = (0..u.ncols())
            .map(|c| ChannelVector::new(u.column(c).iter().copied().collect(), VectorRole::Steering))
            .collect();
        Ok(Self { basis, len })
    }

    pub fn apply(&self, v: &ChannelVector) -> Result<ChannelVector> {
        v.ensure_len(self.len)?;
        let mut out = v.clone();
        for q in &self.basis {
            let coeff = q.inner(v);
            out.axpy(-coeff, q);
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }
}

/// Genie decontamination `(I - A A^+) h` with A built from the true
/// interferer directions.
pub fn perfect_pdc(
    estimate: &ChannelVector,
    interferer_aoas: &[(f64, f64)],
    array: &ArrayGeometry,
) -> Result<DecontaminatedEstimate> {
    estimate.ensure_len(array.antennas())?;
    for (i, a) in interferer_aoas.iter().enumerate() {
        if interferer_aoas[..i].iter().any(|b| b == a) {
            return Err(Error::RankDeficient {
                rank: i,
                columns: interferer_aoas.len(),
            });
        }
    }
    let columns: Vec<ChannelVector> = interferer_aoas
        .iter()
        .map(|&(t, p)| steering_vector(array, t, p))
        .collect();
    let projector = OrthogonalProjector::from_columns(&columns, array.antennas())?;
    Ok(DecontaminatedEstimate {
        vector: projector.apply(estimate)?.with_role(VectorRole::Estimate),
        removed: Vec::new(),
        kept: Vec::new(),
        method: PdcMethod::PerfectProjection,
        branch: None,
        detected: 0,
        truncated: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_gaussian, gen_gue_channel, uav_channel_with_phase};
    use crate::detector::{AngularGrid, DetectorConfig, MatchedFilterBank};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn setup(m: usize, n_theta: usize, n_phi: usize) -> (ArrayGeometry, Detector) {
        let arr = ArrayGeometry::half_wavelength(m, 0.15).unwrap();
        let bank = Arc::new(MatchedFilterBank::new(arr, AngularGrid::new(n_theta, n_phi).unwrap()));
        (arr, Detector::new(bank, DetectorConfig::new(3.0, 18).unwrap()))
    }

    fn comp(det: &Detector, cell: (usize, usize), mu: C64) -> LoSComponent {
        let g = det.bank.grid();
        LoSComponent::new(g.theta(cell.0), g.phi(cell.1), cell, mu, 0.0)
    }

    fn on_grid(det: &Detector, cell: (usize, usize), beta: f64, psi: f64) -> ChannelVector {
        let g = det.bank.grid();
        uav_channel_with_phase(det.array(), beta, g.theta(cell.0), g.phi(cell.1), psi).unwrap()
    }

    #[test]
    fn gue_without_interference_is_untouched() {
        // a single weak on-grid direction is below threshold only if absent;
        // with a zero estimate nothing at all is removed
        let (_, det) = setup(32, 8, 64);
        let zero = ChannelVector::zeros(32, VectorRole::Estimate);
        let out = decontaminate_gue(&zero, &det).unwrap();
        assert!(out.removed.is_empty());
        assert_eq!(out.vector.entries(), zero.entries());
        assert_eq!(out.method, PdcMethod::GuePdc);
    }

    /// Correlation of a component's primary direction with a planted cell.
    fn hits(det: &Detector, c: &LoSComponent, cell: (usize, usize)) -> bool {
        let g = det.bank.grid();
        let a = steering_vector(det.array(), g.theta(cell.0), g.phi(cell.1));
        c.steering(det.array()).inner(&a).norm() / det.array().antennas() as f64 >= 0.7
    }

    #[test]
    fn gue_planted_interferers_removed() {
        let (arr, det) = setup(128, 64, 256);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let h = gen_gue_channel(128, 1.0, &mut rng).unwrap();
            let c1 = (60, rng.gen_range(0..128));
            let c2 = (55, rng.gen_range(128..256));
            let i1 = on_grid(&det, c1, 1.5, rng.gen_range(0.0..6.0));
            let i2 = on_grid(&det, c2, 1.0, rng.gen_range(0.0..6.0));
            let noise = ChannelVector::new(complex_gaussian(128, 0.01, &mut rng), VectorRole::Estimate);
            let est = h.add(&i1).add(&i2).add(&noise);
            let out = decontaminate_gue(&est, &det).unwrap();
            // the removed part lies in the span of the removed steering vectors
            let removed = est.sub(&out.vector);
            let cols: Vec<_> = out
                .removed
                .iter()
                .flat_map(|c| c.atoms())
                .map(|a| a.steering(&arr))
                .collect();
            let p = OrthogonalProjector::from_columns(&cols, 128).unwrap();
            assert!(p.apply(&removed).unwrap().norm() < 1e-9 * removed.norm());
            // both interferers are among the detections and nothing of them is left
            assert!(out.removed.iter().any(|c| hits(&det, c, c1)));
            assert!(out.removed.iter().any(|c| hits(&det, c, c2)));
            for (cell, beta) in [(c1, 1.5f64), (c2, 1.0)] {
                let a = steering_vector(&arr, det.bank.grid().theta(cell.0), det.bank.grid().phi(cell.1));
                // at least 20 dB suppression along the interferer direction
                let left = a.inner(&out.vector).norm() / 128.0;
                assert!(left < 0.1 * beta.sqrt(), "{left}");
            }
        }
    }

    #[test]
    fn identical_components_match() {
        let (arr, det) = setup(64, 16, 64);
        let c = comp(&det, (5, 9), C64::new(1.0, 0.5));
        let matched = match_components(
            std::slice::from_ref(&c),
            std::slice::from_ref(&c),
            &MatchTolerance::default(),
            &arr,
        );
        assert_eq!(matched, vec![c.clone()]);
        // phase rotation between blocks does not matter
        let mut rotated = c.clone();
        rotated.mu *= C64::from_polar(1.0, 2.1);
        assert_eq!(
            match_components(&[c], &[rotated], &MatchTolerance::default(), &arr).len(),
            1
        );
    }

    #[test]
    fn well_separated_components_do_not_match() {
        let (arr, det) = setup(64, 16, 64);
        let c1 = comp(&det, (5, 9), C64::new(1.0, 0.0));
        let c2 = comp(&det, (12, 40), C64::new(1.0, 0.0));
        assert!(match_components(&[c1], std::slice::from_ref(&c2), &MatchTolerance::default(), &arr).is_empty());
        // adjacent cells one beamwidth apart do not match either
        let c3 = comp(&det, (12, 42), C64::new(1.0, 0.0));
        assert!(match_components(&[c2], &[c3], &MatchTolerance::default(), &arr).is_empty());
    }

    #[test]
    fn own_component_is_the_common_one() {
        let (arr, det) = setup(64, 16, 64);
        let own1 = comp(&det, (4, 20), C64::from_polar(2.0, 0.3));
        let own2 = comp(&det, (4, 20), C64::from_polar(2.02, -1.1));
        let a = comp(&det, (14, 50), C64::new(0.8, 0.0));
        let b = comp(&det, (13, 5), C64::new(0.9, 0.0));
        let matched = match_components(&[own1.clone(), a], &[b, own2], &MatchTolerance::default(), &arr);
        assert_eq!(matched, vec![own1]);
    }

    #[test]
    fn greedy_matching_is_one_to_one() {
        let (arr, det) = setup(64, 16, 64);
        let x = comp(&det, (4, 20), C64::new(1.0, 0.0));
        let y = comp(&det, (4, 20), C64::new(1.05, 0.0));
        let z = comp(&det, (4, 20), C64::new(1.01, 0.0));
        let matched = match_components(&[x.clone(), y], &[z], &MatchTolerance::default(), &arr);
        assert_eq!(matched, vec![x]);
        assert!(MatchTolerance::new(0.0).is_err());
        assert!(MatchTolerance::new(1.0).is_err());
    }

    #[test]
    fn uav_without_interference_keeps_block_one() {
        let (_, det) = setup(128, 64, 256);
        let own = on_grid(&det, (20, 77), 4.0, 0.2);
        let own2 = on_grid(&det, (20, 77), 4.0, 2.2);
        let out = decontaminate_uav(&own, &own2, &det, &MatchTolerance::default()).unwrap();
        assert_eq!(out.branch, Some(UavBranch::SingleComponent));
        assert_eq!(out.vector.entries(), own.entries());
        assert!(out.removed.is_empty());
    }

    #[test]
    fn uav_two_block_removes_block_one_interferers() {
        let (arr, det) = setup(128, 64, 256);
        let own_cell = (20, 77);
        let own1 = on_grid(&det, own_cell, 4.0, 0.2);
        let own2 = on_grid(&det, own_cell, 4.0, 2.9);
        let i_a = on_grid(&det, (62, 10), 0.5, 1.0);
        let i_b = on_grid(&det, (60, 150), 0.4, 2.0);
        let j_a = on_grid(&det, (61, 200), 0.6, -1.0);
        let j_b = on_grid(&det, (63, 100), 0.3, 0.5);
        let block1 = own1.add(&i_a).add(&i_b);
        let block2 = own2.add(&j_a).add(&j_b);
        let out = decontaminate_uav(&block1, &block2, &det, &MatchTolerance::default()).unwrap();
        assert_eq!(out.branch, Some(UavBranch::UniqueMatch));
        assert_eq!(out.kept[0].cell, own_cell);
        assert!(out.removed.iter().any(|c| hits(&det, c, (62, 10))));
        assert!(out.removed.iter().any(|c| hits(&det, c, (60, 150))));
        assert!(!out.removed.iter().any(|c| hits(&det, c, own_cell)));
        // what remains is the own LoS term, up to leakage residue
        let err = out.vector.sub(&own1).norm() / own1.norm();
        assert!(err < 0.05, "{err}");
        let _ = arr;
    }

    #[test]
    fn uav_persistent_interferer_takes_multiple_match_branch() {
        let (_, det) = setup(128, 64, 256);
        let own_cell = (20, 77);
        let persist = (62, 10);
        let block1 = on_grid(&det, own_cell, 4.0, 0.2)
            .add(&on_grid(&det, persist, 0.5, 1.0))
            .add(&on_grid(&det, (60, 150), 0.4, 2.0));
        let block2 = on_grid(&det, own_cell, 4.0, 1.2)
            .add(&on_grid(&det, persist, 0.5, -2.0))
            .add(&on_grid(&det, (61, 200), 0.6, 0.0));
        let out = decontaminate_uav(&block1, &block2, &det, &MatchTolerance::default()).unwrap();
        assert_eq!(out.branch, Some(UavBranch::MultipleMatches));
        assert!(out.kept.iter().any(|c| c.cell == own_cell));
        assert!(out.kept.iter().any(|c| hits(&det, c, persist)));
        assert!(out.removed.iter().any(|c| hits(&det, c, (60, 150))));
        // everything in D \ dD is removed, and only that
        let mut expect = block1.clone();
        for c in &out.removed {
            expect = expect.sub(&c.reconstruct(det.array()));
        }
        assert_eq!(out.vector.entries(), expect.entries());
    }

    #[test]
    fn uav_no_match_keeps_block_one() {
        let (_, det) = setup(128, 64, 256);
        let block1 = on_grid(&det, (20, 77), 4.0, 0.2).add(&on_grid(&det, (62, 10), 0.5, 1.0));
        let block2 = on_grid(&det, (30, 5), 4.0, 0.2).add(&on_grid(&det, (61, 200), 0.5, 1.0));
        let out = decontaminate_uav(&block1, &block2, &det, &MatchTolerance::default()).unwrap();
        assert_eq!(out.branch, Some(UavBranch::NoMatch));
        assert_eq!(out.vector.entries(), block1.entries());
    }

    fn random_aoas(rng: &mut ChaCha8Rng, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|_| (rng.gen_range(0.0..PI / 2.0), rng.gen_range(-PI..PI)))
            .collect()
    }

    #[test]
    fn projection_nulls_interferers() {
        let arr = ArrayGeometry::half_wavelength(128, 0.15).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for k in 1..=8 {
            let aoas = random_aoas(&mut rng, k);
            for &(t, p) in &aoas {
                let a = steering_vector(&arr, t, p);
                let out = perfect_pdc(&a, &aoas, &arr).unwrap();
                assert!(out.vector.norm() <= 1e-9 * (128f64).sqrt());
            }
        }
    }

    #[test]
    fn projection_matches_constructed_decomposition() {
        let arr = ArrayGeometry::half_wavelength(64, 0.15).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let aoas = random_aoas(&mut rng, 3);
        let own = gen_gue_channel(64, 1.0, &mut rng).unwrap();
        let noise = ChannelVector::new(complex_gaussian(64, 0.1, &mut rng), VectorRole::Estimate);
        let mut est = own.add(&noise);
        for &(t, p) in &aoas {
            est = est.add(&uav_channel_with_phase(&arr, 2.0, t, p, rng.gen_range(0.0..6.0)).unwrap());
        }
        let lhs = perfect_pdc(&est, &aoas, &arr).unwrap().vector;
        let rhs = perfect_pdc(&own, &aoas, &arr)
            .unwrap()
            .vector
            .add(&perfect_pdc(&noise, &aoas, &arr).unwrap().vector);
        for (a, b) in lhs.entries().iter().zip(rhs.entries()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn projection_rejects_duplicates() {
        let arr = ArrayGeometry::half_wavelength(32, 0.15).unwrap();
        let est = steering_vector(&arr, 0.3, 0.1);
        assert!(matches!(
            perfect_pdc(&est, &[(0.3, 0.1), (0.3, 0.1)], &arr),
            Err(Error::RankDeficient { .. })
        ));
        // all-zenith directions share the same steering vector
        assert!(matches!(
            perfect_pdc(&est, &[(0.0, 0.1), (0.0, 1.1)], &arr),
            Err(Error::RankDeficient { .. })
        ));
        let out = perfect_pdc(&est, &[], &arr).unwrap();
        assert_eq!(out.vector.entries(), est.entries());
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_contracting_and_orthogonal(seed in any::<u64>(), k in 1usize..6) {
            let arr = ArrayGeometry::half_wavelength(48, 0.15).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let aoas = random_aoas(&mut rng, k);
            let h = ChannelVector::new(complex_gaussian(48, 1.0, &mut rng), VectorRole::Estimate);
            let once = perfect_pdc(&h, &aoas, &arr).unwrap().vector;
            let twice = perfect_pdc(&once, &aoas, &arr).unwrap().vector;
            prop_assert!(once.sub(&twice).norm() <= 1e-9 * 48f64.sqrt());
            prop_assert!(once.norm() <= h.norm() + 1e-12);
            for &(t, p) in &aoas {
                prop_assert!(steering_vector(&arr, t, p).inner(&once).norm() <= 1e-10 * 48.0);
            }
        }
    }

    #[test]
    fn noiseless_plant_approaches_projection() {
        // successive subtraction differs from the projection only through the
        // cross-correlation of the planted steering vectors
        let (arr, det) = setup(128, 64, 256);
        let cells = [(30, 0), (30, 128)];
        let aoas: Vec<_> = cells
            .iter()
            .map(|c| (det.bank.grid().theta(c.0), det.bank.grid().phi(c.1)))
            .collect();
        let mut est = ChannelVector::zeros(128, VectorRole::Estimate);
        for (i, c) in cells.iter().enumerate() {
            est = est.add(&on_grid(&det, *c, 1.0 + i as f64, 0.3));
        }
        let cross = steering_vector(&arr, aoas[0].0, aoas[0].1)
            .inner(&steering_vector(&arr, aoas[1].0, aoas[1].1))
            .norm()
            / 128.0;
        let gue = decontaminate_gue(&est, &det).unwrap();
        let proj = perfect_pdc(&est, &aoas, &arr).unwrap();
        assert!(proj.vector.norm() < 1e-10 * est.norm());
        let gap = gue.vector.sub(&proj.vector).norm() / est.norm();
        assert!(gap <= cross.max(1e-6), "{gap} vs {cross}");
    }
}
