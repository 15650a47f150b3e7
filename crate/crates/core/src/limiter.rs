//! Mass-conserving local scaling limiter.
//!
//! A negative cell `k` is repaired by growing an admissible set `S` around it
//! until the mean `c̄` over `S` is positive, then pulling every member towards
//! that mean: `c̃ = θ c + (1 - θ) c̄` with `θ = min(1, c̄ / (c̄ - c_min))`.
//! The sum over `S` is unchanged and the smallest member lands on zero.
//! Weights are `c = h ρ` in 1D and `c = area · ρ` in 2D.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D, Grid2D};

/// Admissible set around a negative anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    /// Flat index of the negative cell.
    pub anchor: usize,
    /// Flat indices in the order the search added them.
    pub members: Vec<usize>,
    pub mean: f64,
    pub min: f64,
    pub theta: f64,
}

impl Neighborhood {
    fn from_members(c: &[f64], anchor: usize, members: Vec<usize>) -> Self {
        let mean = members.iter().map(|&j| c[j]).sum::<f64>() / members.len() as f64;
        let min = members.iter().map(|&j| c[j]).fold(f64::INFINITY, f64::min);
        Self {
            anchor,
            members,
            mean,
            min,
            theta: scaling_factor(mean, min),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// `θ = min(1, c̄ / (c̄ - c_min))`.
pub fn scaling_factor(mean: f64, min: f64) -> f64 {
    if min >= 0.0 {
        1.0
    } else {
        (mean / (mean - min)).min(1.0)
    }
}

/// One repaired neighbourhood.
#[derive(Debug, Clone, PartialEq)]
pub struct LimiterEntry {
    pub anchor: usize,
    pub size: usize,
    pub theta: f64,
    /// Total weighted mass of the whole field before and after this scaling.
    pub mass_before: f64,
    pub mass_after: f64,
    /// `max |c̃ - c|` over the set, and the bound `|S| (-c_min)` it must respect.
    pub max_change: f64,
    pub change_bound: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LimiterReport {
    pub entries: Vec<LimiterEntry>,
}

impl LimiterReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.entries.iter().map(|e| e.size).max().unwrap_or(0)
    }
}

fn check_anchor(c: &[f64], k: usize) -> Result<()> {
    if k >= c.len() {
        return Err(Error::LimiterPrecondition(format!(
            "anchor {k} outside a field of {} cells",
            c.len()
        )));
    }
    if !(c[k] < 0.0) {
        return Err(Error::LimiterPrecondition(format!(
            "anchor {k} holds {} which is not negative",
            c[k]
        )));
    }
    let total: f64 = c.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NonPositiveMass(total));
    }
    Ok(())
}

/// Grows `{k}` alternately to the left and right, skipping zero cells, until
/// the mean is positive.
pub fn find_neighborhood_1d(c: &[f64], k: usize) -> Result<Neighborhood> {
    check_anchor(c, k)?;
    let n = c.len();
    let mut members = vec![k];
    let mut sum = c[k];
    let positive = |sum: f64, len: usize| sum / len as f64 > 0.0;

    for m in 1..n {
        let mut touched = false;
        if k >= m {
            touched = true;
            let j = k - m;
            if c[j] != 0.0 {
                members.push(j);
                sum += c[j];
                if positive(sum, members.len()) {
                    return Ok(Neighborhood::from_members(c, k, members));
                }
            }
        }
        if k + m < n {
            touched = true;
            let j = k + m;
            if c[j] != 0.0 {
                members.push(j);
                sum += c[j];
                if positive(sum, members.len()) {
                    return Ok(Neighborhood::from_members(c, k, members));
                }
            }
        }
        if !touched {
            break;
        }
    }
    Err(Error::NoAdmissibleSet { anchor: k })
}

/// Square rings of radius `m = 1, 2, ...` around `(k, l)`, clipped to the
/// grid, scanned with `y` outer and `x` inner. Cells are flat row-major.
pub fn find_neighborhood_2d(c: &[f64], nx: usize, ny: usize, k: usize, l: usize) -> Result<Neighborhood> {
    if c.len() != nx * ny {
        return Err(Error::ShapeMismatch {
            expected: nx * ny,
            found: c.len(),
        });
    }
    if k >= nx || l >= ny {
        return Err(Error::LimiterPrecondition(format!(
            "anchor ({k}, {l}) outside a {nx}x{ny} grid"
        )));
    }
    let anchor = l * nx + k;
    check_anchor(c, anchor)?;

    let mut members = vec![anchor];
    let mut sum = c[anchor];
    let max_radius = nx.max(ny);
    for m in 1..max_radius {
        let y0 = l.saturating_sub(m);
        let y1 = (l + m).min(ny - 1);
        let x0 = k.saturating_sub(m);
        let x1 = (k + m).min(nx - 1);
        for dy in y0..=y1 {
            for dx in x0..=x1 {
                if dx.abs_diff(k).max(dy.abs_diff(l)) != m {
                    continue;
                }
                let j = dy * nx + dx;
                if c[j] == 0.0 {
                    continue;
                }
                members.push(j);
                sum += c[j];
                if sum / members.len() as f64 > 0.0 {
                    return Ok(Neighborhood::from_members(c, anchor, members));
                }
            }
        }
    }
    Err(Error::NoAdmissibleSet { anchor })
}

/// Scales the members of `nbhd` in place; returns `max |c̃ - c|`.
fn scale_in_place(c: &mut [f64], nbhd: &Neighborhood) -> f64 {
    if nbhd.theta >= 1.0 {
        return 0.0;
    }
    let theta = nbhd.theta;
    let mut max_change: f64 = 0.0;
    for &j in &nbhd.members {
        let old = c[j];
        let new = if old == nbhd.min {
            0.0
        } else {
            (theta * old + (1.0 - theta) * nbhd.mean).max(0.0)
        };
        max_change = max_change.max((new - old).abs());
        c[j] = new;
    }
    max_change
}

/// `c̃ = θ c + (1 - θ) c̄` on the members, identity elsewhere. The minimum is
/// mapped to exactly zero.
pub fn apply_scaling_1d(c: &[f64], nbhd: &Neighborhood) -> Vec<f64> {
    let mut out = c.to_vec();
    scale_in_place(&mut out, nbhd);
    out
}

fn limit_weighted(
    rho: &Field,
    weights: &[f64],
    mut find: impl FnMut(&[f64], usize) -> Result<Neighborhood>,
) -> Result<(Field, LimiterReport)> {
    rho.expect_len(weights.len())?;
    let mut c: Vec<f64> = weights.iter().zip(rho.values()).map(|(w, r)| w * r).collect();
    let total: f64 = c.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NonPositiveMass(total));
    }

    let mut out = rho.values().to_vec();
    let mut report = LimiterReport::default();
    for k in 0..c.len() {
        if !(c[k] < 0.0) {
            continue;
        }
        let nbhd = find(&c, k)?;
        let mass_before: f64 = c.iter().sum();
        let max_change = scale_in_place(&mut c, &nbhd);
        let change_bound = nbhd.len() as f64 * (-nbhd.min);
        debug_assert!(max_change <= change_bound * (1.0 + 1e-12));
        for &j in &nbhd.members {
            out[j] = c[j] / weights[j];
        }
        report.entries.push(LimiterEntry {
            anchor: k,
            size: nbhd.len(),
            theta: nbhd.theta,
            mass_before,
            mass_after: c.iter().sum(),
            max_change,
            change_bound,
        });
    }
    Ok((Field::new(out)?, report))
}

/// Repairs every negative cell, anchors in ascending order, each scaling
/// acting on the output of the previous ones.
pub fn limit_field_1d(rho: &Field, grid: &Grid1D) -> Result<(Field, LimiterReport)> {
    limit_weighted(rho, grid.widths(), find_neighborhood_1d)
}

/// Area-weighted analogue of [`limit_field_1d`].
pub fn limit_field_2d(rho: &Field, grid: &Grid2D) -> Result<(Field, LimiterReport)> {
    let (nx, ny) = (grid.nx(), grid.ny());
    limit_weighted(rho, &grid.areas(), |c, k| {
        find_neighborhood_2d(c, nx, ny, k % nx, k / nx)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-15 * (1.0 + b.abs())
    }

    #[test]
    fn search_right_when_left_is_missing() {
        let s = find_neighborhood_1d(&[-0.1, 0.5, 0.2], 0).unwrap();
        assert_eq!(s.members, vec![0, 1]);
        assert!(close(s.mean, 0.2));
    }

    #[test]
    fn search_tries_left_first() {
        let s = find_neighborhood_1d(&[0.5, -0.1, 0.2], 1).unwrap();
        assert_eq!(s.members, vec![1, 0]);
        assert!(close(s.mean, 0.2));
    }

    #[test]
    fn search_needs_both_sides() {
        let s = find_neighborhood_1d(&[0.1, -0.3, 0.4], 1).unwrap();
        assert_eq!(s.members, vec![1, 0, 2]);
        assert!(close(s.mean, 0.2 / 3.0));
    }

    #[test]
    fn search_wraps_past_a_short_side() {
        let s = find_neighborhood_1d(&[-0.3, 0.1, 0.4], 0).unwrap();
        assert_eq!(s.members, vec![0, 1, 2]);
        assert!(close(s.mean, 1.0 / 15.0));
    }

    #[test]
    fn search_skips_zero_cells() {
        let s = find_neighborhood_1d(&[0.0, -0.1, 0.0, 0.0, 0.5], 1).unwrap();
        assert_eq!(s.members, vec![1, 4]);
    }

    #[test]
    fn search_preconditions() {
        assert!(matches!(
            find_neighborhood_1d(&[0.1, 0.2], 0),
            Err(Error::LimiterPrecondition(_))
        ));
        assert!(matches!(
            find_neighborhood_1d(&[-0.5, 0.2], 0),
            Err(Error::NonPositiveMass(_))
        ));
    }

    #[test]
    fn scaling_two_cells() {
        let c = [-0.1, 0.5];
        let s = find_neighborhood_1d(&c, 0).unwrap();
        assert!(close(s.theta, 2.0 / 3.0));
        let out = apply_scaling_1d(&c, &s);
        assert_eq!(out[0], 0.0);
        assert!(close(out[1], 0.4));
    }

    #[test]
    fn scaling_three_cells() {
        let c = [-0.3, 0.1, 0.4];
        let s = find_neighborhood_1d(&c, 0).unwrap();
        assert!(close(s.theta, 2.0 / 11.0));
        let out = apply_scaling_1d(&c, &s);
        assert_eq!(out[0], 0.0);
        let mean = 1.0 / 15.0;
        assert!(close(out[1], 2.0 / 11.0 * 0.1 + 9.0 / 11.0 * mean));
        assert!(close(out[2], 2.0 / 11.0 * 0.4 + 9.0 / 11.0 * mean));
        assert!((out.iter().sum::<f64>() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn nonnegative_set_is_identity() {
        let c = [0.3, 0.1];
        let s = Neighborhood::from_members(&c, 0, vec![0, 1]);
        assert_eq!(s.theta, 1.0);
        assert_eq!(apply_scaling_1d(&c, &s), c.to_vec());
    }

    #[test]
    fn limit_unit_widths() {
        let g = Grid1D::uniform(0.0, 3.0, 3).unwrap();
        let (out, report) = limit_field_1d(&Field::new(vec![-0.1, 0.5, 0.2]).unwrap(), &g).unwrap();
        assert_eq!(out.values()[0], 0.0);
        assert!(close(out.values()[1], 0.4));
        assert_eq!(out.values()[2], 0.2);
        assert_eq!(report.entries.len(), 1);
        assert_eq!(report.entries[0].size, 2);
    }

    #[test]
    fn limit_uses_width_weights() {
        let g = Grid1D::from_widths(0.0, 3.0, &[2.0, 1.0]).unwrap();
        let (out, report) = limit_field_1d(&Field::new(vec![-0.05, 0.5]).unwrap(), &g).unwrap();
        assert_eq!(out.values()[0], 0.0);
        assert!(close(out.values()[1], 0.4));
        assert!(close(report.entries[0].theta, 2.0 / 3.0));
    }

    #[test]
    fn limit_nonnegative_is_identity() {
        let g = Grid1D::uniform(0.0, 1.0, 4).unwrap();
        let rho = Field::new(vec![0.0, 1.0, 2.0, 0.5]).unwrap();
        let (out, report) = limit_field_1d(&rho, &g).unwrap();
        assert_eq!(out, rho);
        assert!(report.is_empty());
    }

    #[test]
    fn limit_rejects_nonpositive_mass() {
        let g = Grid1D::uniform(0.0, 1.0, 2).unwrap();
        let rho = Field::new(vec![-1.0, 0.5]).unwrap();
        assert!(matches!(limit_field_1d(&rho, &g), Err(Error::NonPositiveMass(_))));
    }

    #[test]
    fn ring_search_on_three_by_three() {
        // Anchor in the middle; ring 1 is scanned row by row.
        let c = [
            0.0, 0.05, 0.0, //
            0.02, -0.2, 0.3, //
            1.0, 1.0, 1.0,
        ];
        let s = find_neighborhood_2d(&c, 3, 3, 1, 1).unwrap();
        // (1,0)=0.05 then (0,1)=0.02 then (2,1)=0.3: sum 0.17 > 0.
        assert_eq!(s.members, vec![4, 1, 3, 5]);
    }

    #[test]
    fn ring_search_clips_at_corner() {
        let c = [-0.1, 0.0, 0.0, 0.3];
        let s = find_neighborhood_2d(&c, 2, 2, 0, 0).unwrap();
        assert_eq!(s.members, vec![0, 3]);
    }

    #[test]
    fn ring_search_rejects_positive_anchor() {
        let c = [0.1, 0.2, 0.3, 0.4];
        assert!(matches!(
            find_neighborhood_2d(&c, 2, 2, 1, 1),
            Err(Error::LimiterPrecondition(_))
        ));
    }

    #[test]
    fn strip_matches_1d() {
        let g1 = Grid1D::from_widths(0.0, 3.0, &[2.0, 1.0]).unwrap();
        let g2 = Grid2D::new(g1.clone(), Grid1D::from_widths(0.0, 1.0, &[0.5, 0.5]).unwrap());
        let rho2 = Field::new(vec![-0.05, 0.5, 0.0, 0.0]).unwrap();
        let (out2, _) = limit_field_2d(&rho2, &g2).unwrap();
        let (out1, _) = limit_field_1d(&Field::new(vec![-0.05, 0.5]).unwrap(), &g1).unwrap();
        assert_eq!(&out2.values()[..2], out1.values());
        assert_eq!(&out2.values()[2..], &[0.0, 0.0]);
    }

    #[test]
    fn small_dip_gives_small_change() {
        let g = Grid2D::uniform((0.0, 1.0), (0.0, 1.0), 4, 4).unwrap();
        for eps in [1e-2, 1e-4, 1e-6] {
            let mut rho = vec![1.0; 16];
            rho[5] = -eps;
            let (out, report) = limit_field_2d(&Field::new(rho.clone()).unwrap(), &g).unwrap();
            let change = out
                .values()
                .iter()
                .zip(&rho)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(change <= 2.0 * eps);
            assert!(1.0 - report.entries[0].theta <= 2.0 * eps);
        }
    }

    fn signed_field() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop_oneof![3 => 0.0..2.0f64, 1 => -0.5..0.0f64, 1 => Just(0.0)], 2..40)
            .prop_filter("positive mass", |v| v.iter().sum::<f64>() > 0.1)
    }

    proptest! {
        #[test]
        fn limited_field_is_nonnegative_and_conservative(
            rho in signed_field(),
            widths in prop::collection::vec(0.2..2.0f64, 40),
        ) {
            let n = rho.len();
            let w = &widths[..n];
            let total: f64 = w.iter().sum();
            let g = Grid1D::from_widths(0.0, total, w).unwrap();
            let before: f64 = w.iter().zip(&rho).map(|(h, r)| h * r).sum();
            prop_assume!(before > 0.0);
            let field = Field::new(rho.clone()).unwrap();
            let (out, report) = limit_field_1d(&field, &g).unwrap();
            prop_assert!(out.values().iter().all(|&v| v >= 0.0));
            let after: f64 = w.iter().zip(out.values()).map(|(h, r)| h * r).sum();
            let scale: f64 = w.iter().zip(&rho).map(|(h, r)| (h * r).abs()).sum();
            prop_assert!((before - after).abs() <= 1e-14 * scale.max(before));
            for e in &report.entries {
                prop_assert!(e.max_change <= e.change_bound * (1.0 + 1e-12));
                prop_assert!(e.theta >= 0.0 && e.theta <= 1.0);
            }
            let (again, second) = limit_field_1d(&out, &g).unwrap();
            prop_assert_eq!(again, out);
            prop_assert!(second.is_empty());
        }

        #[test]
        fn neighbourhood_mean_positive_and_local_sum_kept(rho in signed_field()) {
            if let Some(k) = rho.iter().position(|&v| v < 0.0) {
                let s = find_neighborhood_1d(&rho, k).unwrap();
                prop_assert!(s.mean > 0.0);
                prop_assert!(s.members.iter().all(|&j| rho[j] != 0.0));
                let out = apply_scaling_1d(&rho, &s);
                let before: f64 = s.members.iter().map(|&j| rho[j]).sum();
                let after: f64 = s.members.iter().map(|&j| out[j]).sum();
                let scale: f64 = s.members.iter().map(|&j| rho[j].abs()).sum();
                prop_assert!((before - after).abs() <= 1e-14 * scale);
                for j in 0..rho.len() {
                    if !s.members.contains(&j) {
                        prop_assert_eq!(out[j], rho[j]);
                    }
                }
            }
        }

        #[test]
        fn limited_2d_field_is_nonnegative_and_conservative(
            nx in 2usize..7, ny in 2usize..7,
            raw in prop::collection::vec(prop_oneof![3 => 0.0..2.0f64, 1 => -0.5..0.0f64, 1 => Just(0.0)], 36),
        ) {
            let rho: Vec<f64> = raw[..nx * ny].to_vec();
            prop_assume!(rho.iter().sum::<f64>() > 0.1);
            let g = Grid2D::uniform((0.0, 1.0), (0.0, 2.0), nx, ny).unwrap();
            let (out, report) = limit_field_2d(&Field::new(rho.clone()).unwrap(), &g).unwrap();
            prop_assert!(out.values().iter().all(|&v| v >= 0.0));
            let a = g.areas();
            let before: f64 = a.iter().zip(&rho).map(|(h, r)| h * r).sum();
            let after: f64 = a.iter().zip(out.values()).map(|(h, r)| h * r).sum();
            prop_assert!((before - after).abs() <= 1e-14 * a.iter().zip(&rho).map(|(h, r)| (h * r).abs()).sum::<f64>());
            for e in &report.entries {
                prop_assert!(e.max_change <= e.change_bound * (1.0 + 1e-12));
            }
        }
    }
}
