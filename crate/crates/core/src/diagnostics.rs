//! Mass, discrete free energy, entropy dissipation, error norms and the
//! Doi–Onsager steady-state residual.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D, Grid2D};
use crate::model::{MobilityEvaluator1D, MobilityEvaluator2D, MobilityProfile, MobilityProfile2D};
use crate::model::{ProblemSpec1D, ProblemSpec2D};

/// Nodes used by [`doi_onsager_eta_residual`].
pub const DOI_ONSAGER_NODES: usize = 1024;

/// One row of the energy log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    pub dissipation: f64,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str = "step,time,mass,energy,dissipation";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.step, self.time, self.mass, self.energy, self.dissipation
        )
    }
}

fn same_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { expected, found })
    }
}

/// `sum_j h_j rho_j`.
pub fn total_mass_1d(rho: &Field, grid: &Grid1D) -> Result<f64> {
    same_len(grid.len(), rho.len())?;
    Ok(grid.widths().iter().zip(rho.values()).map(|(h, r)| h * r).sum())
}

/// `sum_{ij} h^x_i h^y_j rho_ij`.
pub fn total_mass_2d(rho: &Field, grid: &Grid2D) -> Result<f64> {
    same_len(grid.len(), rho.len())?;
    Ok(grid.areas().iter().zip(rho.values()).map(|(a, r)| a * r).sum())
}

fn entropy_density(index: usize, r: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::NegativeDensity { index, value: r });
    }
    Ok(if r == 0.0 { 0.0 } else { r * r.ln() })
}

fn energy_sum(weights: &[f64], rho: &[f64], potential: &[f64], conv: &[f64], intensity: f64) -> Result<f64> {
    let mut e = 0.0;
    for (j, (((&w, &r), &v), &g)) in weights.iter().zip(rho).zip(potential).zip(conv).enumerate() {
        e += w * (entropy_density(j, r)? + v * r + 0.5 * intensity * g * r);
    }
    Ok(e)
}

/// `E_h = sum_j h_j (rho_j ln rho_j + V_j rho_j + g_j rho_j / 2)` with
/// `g_j = intensity * sum_i h_i W(x_i - x_j) rho_i` and `0 ln 0 = 0`.
pub fn discrete_energy_1d(rho: &Field, grid: &Grid1D, spec: &ProblemSpec1D) -> Result<f64> {
    let eval = MobilityEvaluator1D::new(grid.clone(), spec.clone())?;
    discrete_energy_with_1d(&eval, rho)
}

/// [`discrete_energy_1d`] reusing an evaluator's cached tables.
pub fn discrete_energy_with_1d(eval: &MobilityEvaluator1D, rho: &Field) -> Result<f64> {
    same_len(eval.grid().len(), rho.len())?;
    let conv = eval.convolution_at_centers(rho.values())?;
    energy_sum(
        eval.grid().widths(),
        rho.values(),
        eval.potential_at_centers(),
        &conv,
        eval.spec().intensity(),
    )
}

pub fn discrete_energy_2d(rho: &Field, grid: &Grid2D, spec: &ProblemSpec2D) -> Result<f64> {
    let eval = MobilityEvaluator2D::new(grid.clone(), spec.clone())?;
    discrete_energy_with_2d(&eval, rho)
}

pub fn discrete_energy_with_2d(eval: &MobilityEvaluator2D, rho: &Field) -> Result<f64> {
    same_len(eval.grid().len(), rho.len())?;
    let conv = eval.convolution_at_centers(rho.values())?;
    energy_sum(
        eval.areas(),
        rho.values(),
        eval.potential_at_centers(),
        &conv,
        eval.spec().intensity(),
    )
}

/// `(G_b - G_a)(ln G_b - ln G_a)`, zero when either side vanishes.
fn dissipation_term(ga: f64, gb: f64) -> f64 {
    if ga <= 0.0 || gb <= 0.0 {
        0.0
    } else {
        (gb - ga) * (gb.ln() - ga.ln())
    }
}

/// `I_h = sum_j (M_{j+1/2} / h_{j+1/2}) (G_{j+1} - G_j)(ln G_{j+1} - ln G_j)`
/// with `G = rho^{n+1} / M^n`.
pub fn dissipation_1d(rho_next: &Field, mob: &MobilityProfile, grid: &Grid1D) -> Result<f64> {
    let n = grid.len();
    same_len(n, rho_next.len())?;
    same_len(n, mob.at_centers.len())?;
    same_len(n - 1, mob.at_interfaces.len())?;
    let g: Vec<f64> = rho_next
        .values()
        .iter()
        .zip(&mob.at_centers)
        .map(|(r, m)| r / m)
        .collect();
    let mut total = 0.0;
    for j in 0..n - 1 {
        total += mob.at_interfaces[j] / grid.half_widths()[j] * dissipation_term(g[j], g[j + 1]);
    }
    Ok(total)
}

/// Area-scaled analogue of [`dissipation_1d`] over x- and y-faces.
pub fn dissipation_2d(rho_next: &Field, mob: &MobilityProfile2D, grid: &Grid2D) -> Result<f64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    same_len(nx * ny, rho_next.len())?;
    same_len(nx * ny, mob.at_centers.len())?;
    same_len((nx - 1) * ny, mob.at_x_faces.len())?;
    same_len(nx * (ny - 1), mob.at_y_faces.len())?;
    let g: Vec<f64> = rho_next
        .values()
        .iter()
        .zip(&mob.at_centers)
        .map(|(r, m)| r / m)
        .collect();
    let (hx, hy) = (grid.gx.widths(), grid.gy.widths());
    let (dx, dy) = (grid.gx.half_widths(), grid.gy.half_widths());
    let mut total = 0.0;
    for j in 0..ny {
        for i in 0..nx - 1 {
            let p = j * nx + i;
            let coupling = hy[j] / dx[i] * mob.at_x_faces[j * (nx - 1) + i];
            total += coupling * dissipation_term(g[p], g[p + 1]);
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx {
            let p = j * nx + i;
            let coupling = hx[i] / dy[j] * mob.at_y_faces[p];
            total += coupling * dissipation_term(g[p], g[p + nx]);
        }
    }
    Ok(total)
}

/// Discrete `l1` (weighted) and max norms of a difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l1: f64,
    pub linf: f64,
}

/// `l1 = sum_j w_j |a_j - b_j|`, `linf = max_j |a_j - b_j|`.
pub fn error_norms(numeric: &[f64], exact: &[f64], weights: &[f64]) -> Result<ErrorNorms> {
    same_len(weights.len(), numeric.len())?;
    same_len(weights.len(), exact.len())?;
    let mut l1 = 0.0;
    let mut linf: f64 = 0.0;
    for ((a, b), w) in numeric.iter().zip(exact).zip(weights) {
        let d = (a - b).abs();
        l1 += w * d;
        linf = linf.max(d);
    }
    Ok(ErrorNorms { l1, linf })
}

pub fn error_norms_1d(numeric: &Field, exact: &Field, grid: &Grid1D) -> Result<ErrorNorms> {
    error_norms(numeric.values(), exact.values(), grid.widths())
}

pub fn error_norms_2d(numeric: &Field, exact: &Field, grid: &Grid2D) -> Result<ErrorNorms> {
    error_norms(numeric.values(), exact.values(), &grid.areas())
}

/// `log2(e_N / e_2N)`.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// `∫cos(2x) e^{-η cos 2x} dx / ∫e^{-η cos 2x} dx + 2η/α` over `[0, 2π]`
/// by the uniform midpoint rule.
pub fn doi_onsager_eta_residual(eta: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidProblem(format!("alpha must be positive, got {alpha}")));
    }
    let dx = std::f64::consts::TAU / DOI_ONSAGER_NODES as f64;
    let shift = eta.abs();
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..DOI_ONSAGER_NODES {
        let c = (2.0 * (k as f64 + 0.5) * dx).cos();
        let w = (-eta * c - shift).exp();
        num += c * w;
        den += w;
    }
    Ok(num / den + 2.0 * eta / alpha)
}

/// Root of [`doi_onsager_eta_residual`] in `[lo, hi]` by bisection.
pub fn doi_onsager_eta(alpha: f64, lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = doi_onsager_eta_residual(a, alpha)?;
    let fb = doi_onsager_eta_residual(b, alpha)?;
    if fa * fb > 0.0 {
        return Err(Error::InvalidProblem(format!(
            "residual does not change sign on [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = doi_onsager_eta_residual(m, alpha)?;
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Least-squares fit of `ln rho ≈ a + p cos 2x + q sin 2x`; returns
/// `sqrt(p^2 + q^2)`, the `η` of the closest `C e^{-η cos 2(x - φ)}` profile.
pub fn fitted_eta(centers: &[f64], rho: &[f64]) -> Result<f64> {
    same_len(centers.len(), rho.len())?;
    if let Some((index, &value)) = rho.iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
        return Err(Error::NegativeDensity { index, value });
    }
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (&x, &r) in centers.iter().zip(rho) {
        let row = [1.0, (2.0 * x).cos(), (2.0 * x).sin()];
        let y = r.ln();
        for a in 0..3 {
            atb[a] += row[a] * y;
            for b in 0..3 {
                ata[a][b] += row[a] * row[b];
            }
        }
    }
    let coef = solve3(ata, atb).ok_or_else(|| {
        Error::InvalidProblem("fit matrix is singular".into())
    })?;
    Ok(coef[1].hypot(coef[2]))
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for k in 0..3 {
        let p = (k..3).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k] == 0.0 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..3 {
            let l = a[i][k] / a[k][k];
            for j in k..3 {
                a[i][j] -= l * a[k][j];
            }
            b[i] -= l * b[k];
        }
    }
    let mut x = [0.0; 3];
    for k in (0..3).rev() {
        let s: f64 = (k + 1..3).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn free_spec() -> ProblemSpec1D {
        ProblemSpec1D::builder(0.0, 2.0).build().unwrap()
    }

    #[test]
    fn masses() {
        let g = Grid1D::uniform(0.0, 1.0, 4).unwrap();
        assert!((total_mass_1d(&Field::constant(4, 1.0), &g).unwrap() - 1.0).abs() < 1e-15);
        let g = Grid1D::from_widths(0.0, 1.0, &[0.25, 0.75]).unwrap();
        assert_eq!(total_mass_1d(&Field::new(vec![4.0, 0.0]).unwrap(), &g).unwrap(), 1.0);
        let g2 = Grid2D::uniform((0.0, 1.0), (0.0, 1.0), 3, 5).unwrap();
        assert!((total_mass_2d(&Field::constant(15, 2.0), &g2).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn energy_of_uniform_unit_density_is_zero() {
        let g = Grid1D::uniform(0.0, 1.0, 5).unwrap();
        let spec = ProblemSpec1D::builder(0.0, 1.0).build().unwrap();
        assert_eq!(discrete_energy_1d(&Field::constant(5, 1.0), &g, &spec).unwrap(), 0.0);
    }

    #[test]
    fn energy_two_cells() {
        let g = Grid1D::uniform(0.0, 2.0, 2).unwrap();
        let e = discrete_energy_1d(&Field::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap(), &g, &free_spec()).unwrap();
        let expected = (2.0f64 / 3.0) * (2.0f64 / 3.0).ln() + (1.0f64 / 3.0) * (1.0f64 / 3.0).ln();
        assert!((e - expected).abs() < 1e-15);
        assert!((e + 0.636514).abs() < 1e-6);
    }

    #[test]
    fn energy_with_zero_cell_is_finite_and_negative_cell_errors() {
        let g = Grid1D::uniform(0.0, 2.0, 2).unwrap();
        let e = discrete_energy_1d(&Field::new(vec![1.0, 0.0]).unwrap(), &g, &free_spec()).unwrap();
        assert_eq!(e, 0.0);
        let err = discrete_energy_1d(&Field::new(vec![1.0, -0.1]).unwrap(), &g, &free_spec());
        assert!(matches!(err, Err(Error::NegativeDensity { index: 1, .. })));
    }

    #[test]
    fn energy_includes_potential_and_interaction() {
        let g = Grid1D::uniform(0.0, 2.0, 2).unwrap();
        let spec = ProblemSpec1D::builder(0.0, 2.0)
            .potential(|x| x)
            .kernel(|_| 1.0)
            .intensity(2.0)
            .build()
            .unwrap();
        let rho = [0.5, 1.5];
        let e = discrete_energy_1d(&Field::new(rho.to_vec()).unwrap(), &g, &spec).unwrap();
        // Centers 0.5 and 1.5; g_j = 2 * (0.5 + 1.5) = 4 for both cells.
        let expected: f64 = [(0.5, 0.5), (1.5, 1.5)]
            .iter()
            .map(|&(r, x): &(f64, f64)| r * r.ln() + x * r + 0.5 * 4.0 * r)
            .sum();
        assert!((e - expected).abs() < 1e-14);
    }

    #[test]
    fn dissipation_two_cells() {
        let g = Grid1D::uniform(0.0, 2.0, 2).unwrap();
        let mob = MobilityProfile {
            at_centers: vec![1.0, 1.0],
            at_interfaces: vec![1.0],
        };
        let i = dissipation_1d(&Field::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap(), &mob, &g).unwrap();
        assert!((i - 2.0f64.ln() / 3.0).abs() < 1e-15);
        assert!((i - 0.231049).abs() < 1e-6);
        let uniform = dissipation_1d(&Field::constant(2, 0.7), &mob, &g).unwrap();
        assert_eq!(uniform, 0.0);
    }

    #[test]
    fn dissipation_skips_empty_cells() {
        let g = Grid1D::uniform(0.0, 3.0, 3).unwrap();
        let mob = MobilityProfile {
            at_centers: vec![1.0; 3],
            at_interfaces: vec![1.0; 2],
        };
        let i = dissipation_1d(&Field::new(vec![0.0, 1.0, 2.0]).unwrap(), &mob, &g).unwrap();
        assert!((i - 2.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn strip_diagnostics_match_1d() {
        let g1 = Grid1D::from_widths(0.0, 3.0, &[1.0, 2.0]).unwrap();
        let g2 = Grid2D::new(g1.clone(), Grid1D::axis(0.0, 1.0, &[1.0]).unwrap());
        let rho = Field::new(vec![0.3, 0.9]).unwrap();
        let mob1 = MobilityProfile {
            at_centers: vec![1.2, 0.8],
            at_interfaces: vec![1.1],
        };
        let mob2 = MobilityProfile2D {
            at_centers: vec![1.2, 0.8],
            at_x_faces: vec![1.1],
            at_y_faces: vec![],
        };
        let i1 = dissipation_1d(&rho, &mob1, &g1).unwrap();
        let i2 = dissipation_2d(&rho, &mob2, &g2).unwrap();
        assert!(i1 > 0.0);
        assert!((i1 - i2).abs() <= 1e-15 * i1);

        let spec1 = ProblemSpec1D::builder(0.0, 3.0).potential(|x| 0.2 * x).build().unwrap();
        let spec2 = ProblemSpec2D::builder((0.0, 3.0), (0.0, 1.0))
            .potential(|x, _| 0.2 * x)
            .build()
            .unwrap();
        let e1 = discrete_energy_1d(&rho, &g1, &spec1).unwrap();
        let e2 = discrete_energy_2d(&rho, &g2, &spec2).unwrap();
        assert!((e1 - e2).abs() <= 1e-15 * e1.abs());
    }

    #[test]
    fn norms() {
        let n = error_norms(&[1.1, 0.9], &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!((n.l1 - 0.2).abs() < 1e-15);
        assert!((n.linf - 0.1).abs() < 1e-15);
        let z = error_norms(&[1.0, 2.0], &[1.0, 2.0], &[0.5, 0.5]).unwrap();
        assert_eq!((z.l1, z.linf), (0.0, 0.0));
        assert_eq!(observed_order(4.0, 1.0), 2.0);
    }

    #[test]
    fn eta_residual_properties() {
        assert!(doi_onsager_eta_residual(0.0, 5.0).unwrap().abs() < 1e-14);
        let lo = 2.5 * (1.0f64 - 4.0 / 5.0).sqrt();
        let a = doi_onsager_eta_residual(lo, 5.0).unwrap();
        let b = doi_onsager_eta_residual(4.0, 5.0).unwrap();
        assert!(a < 0.0 && b > 0.0, "{a} {b}");
        for eta in [0.3, 1.7, 4.2] {
            let p = doi_onsager_eta_residual(eta, 3.0).unwrap();
            let m = doi_onsager_eta_residual(-eta, 3.0).unwrap();
            assert!((p + m).abs() < 1e-13);
        }
        assert!(doi_onsager_eta_residual(1.0, 0.0).is_err());
    }

    #[test]
    fn eta_root_and_subcritical_alpha() {
        let eta = doi_onsager_eta(5.0, 1.118, 4.0).unwrap();
        assert!(doi_onsager_eta_residual(eta, 5.0).unwrap().abs() < 1e-12);
        assert!(eta > 2.5 * 0.2f64.sqrt());
        // Below alpha = 4 the isotropic state is the only root: residual > 0 for eta > 0.
        for eta in [0.1, 1.0, 3.0] {
            assert!(doi_onsager_eta_residual(eta, 3.0).unwrap() > 0.0);
        }
    }

    #[test]
    fn fitted_eta_recovers_profile() {
        let n = 80;
        let centers: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * std::f64::consts::TAU / n as f64).collect();
        let rho: Vec<f64> = centers.iter().map(|&x| 0.3 * (-1.7 * (2.0 * (x - 0.4)).cos()).exp()).collect();
        assert!((fitted_eta(&centers, &rho).unwrap() - 1.7).abs() < 1e-12);
        let flat = vec![0.5; n];
        assert!(fitted_eta(&centers, &flat).unwrap() < 1e-14);
    }

    #[test]
    fn energy_csv_row() {
        let r = EnergyReport {
            step: 3,
            time: 0.5,
            mass: 1.0,
            energy: -0.25,
            dissipation: 0.0,
        };
        assert_eq!(
            r.csv_row(),
            "3,5.0000000000000000e-1,1.0000000000000000e0,-2.5000000000000000e-1,0.0000000000000000e0"
        );
    }

    proptest! {
        #[test]
        fn dissipation_is_nonnegative(
            rho in prop::collection::vec(0.0..3.0f64, 2..30),
            m in prop::collection::vec(0.1..5.0f64, 60),
        ) {
            let n = rho.len();
            let g = Grid1D::uniform(-1.0, 1.0, n).unwrap();
            let mob = MobilityProfile { at_centers: m[..n].to_vec(), at_interfaces: m[n..2 * n - 1].to_vec() };
            prop_assert!(dissipation_1d(&Field::new(rho).unwrap(), &mob, &g).unwrap() >= 0.0);
        }

        #[test]
        fn dissipation_2d_is_nonnegative(
            nx in 2usize..6, ny in 2usize..6,
            rho in prop::collection::vec(0.01..3.0f64, 25),
            m in prop::collection::vec(0.1..5.0f64, 80),
        ) {
            let g = Grid2D::uniform((0.0, 1.0), (0.0, 1.0), nx, ny).unwrap();
            let n = nx * ny;
            let nxf = (nx - 1) * ny;
            let nyf = nx * (ny - 1);
            let mob = MobilityProfile2D {
                at_centers: m[..n].to_vec(),
                at_x_faces: m[n..n + nxf].to_vec(),
                at_y_faces: m[n + nxf..n + nxf + nyf].to_vec(),
            };
            let v = dissipation_2d(&Field::new(rho[..n].to_vec()).unwrap(), &mob, &g).unwrap();
            prop_assert!(v >= 0.0);
        }

        #[test]
        fn norms_vanish_on_equal_fields_and_obey_triangle_inequality(
            a in prop::collection::vec(-2.0..2.0f64, 12),
            b in prop::collection::vec(-2.0..2.0f64, 12),
            c in prop::collection::vec(-2.0..2.0f64, 12),
            w in prop::collection::vec(0.1..1.0f64, 12),
        ) {
            let zero = error_norms(&a, &a, &w).unwrap();
            prop_assert_eq!(zero.l1, 0.0);
            prop_assert_eq!(zero.linf, 0.0);
            let ab = error_norms(&a, &b, &w).unwrap();
            let bc = error_norms(&b, &c, &w).unwrap();
            let ac = error_norms(&a, &c, &w).unwrap();
            prop_assert!(ac.l1 <= ab.l1 + bc.l1 + 1e-12);
            prop_assert!(ac.linf <= ab.linf + bc.linf + 1e-12);
        }
    }
}
