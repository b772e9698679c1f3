use rayon::prelude::*;

use super::{ThermalBoundary, UValueResult, VoxelGrid};
use crate::error::{Error, Result};
use crate::units::mm_to_m;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 50_000;

/// Solve outcome plus the voxel temperatures in K (same layout as the grid).
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSolution {
    pub result: UValueResult,
    pub temperature_k: Vec<f64>,
}

/// Seven-point finite-volume operator with Robin rows on the z faces.
/// Unknowns are `θ = T − T_se_air`, so the outdoor air sits at 0.
struct System {
    nx: usize,
    ny: usize,
    nz: usize,
    /// Conductance between voxel `(i,j,k)` and its +x/+y/+z neighbour, W/K.
    gx: Vec<f64>,
    gy: Vec<f64>,
    gz: Vec<f64>,
    /// Voxel-centre to outdoor/indoor air, per `(i,j)` column.
    g_out: Vec<f64>,
    g_in: Vec<f64>,
    diag: Vec<f64>,
    rhs: Vec<f64>,
    delta_t: f64,
}

impl System {
    fn assemble(grid: &VoxelGrid, bc: &ThermalBoundary) -> Self {
        let (nx, ny, nz) = grid.dims();
        let n = nx * ny * nz;
        let width = |e: &[f64]| e.windows(2).map(|w| mm_to_m(w[1] - w[0])).collect::<Vec<_>>();
        let (dx, dy, dz) = (width(grid.x_edges_mm()), width(grid.y_edges_mm()), width(grid.z_edges_mm()));
        let lam = |i, j, k| grid.conductivity_at(i, j, k);
        let idx = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;

        let (mut gx, mut gy, mut gz) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let (mut g_out, mut g_in) = (vec![0.0; nx * ny], vec![0.0; nx * ny]);
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let p = idx(i, j, k);
                    let l = lam(i, j, k);
                    if i + 1 < nx {
                        let r = 0.5 * dx[i] / l + 0.5 * dx[i + 1] / lam(i + 1, j, k);
                        gx[p] = dy[j] * dz[k] / r;
                    }
                    if j + 1 < ny {
                        let r = 0.5 * dy[j] / l + 0.5 * dy[j + 1] / lam(i, j + 1, k);
                        gy[p] = dx[i] * dz[k] / r;
                    }
                    if k + 1 < nz {
                        let r = 0.5 * dz[k] / l + 0.5 * dz[k + 1] / lam(i, j, k + 1);
                        gz[p] = dx[i] * dy[j] / r;
                    }
                }
                let area = dx[i] * dy[j];
                g_out[i * ny + j] = area / (bc.r_se + 0.5 * dz[0] / lam(i, j, 0));
                g_in[i * ny + j] = area / (bc.r_si + 0.5 * dz[nz - 1] / lam(i, j, nz - 1));
            }
        }

        let mut diag = vec![0.0; n];
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let p = idx(i, j, k);
                    let mut d = gx[p] + gy[p] + gz[p];
                    if i > 0 {
                        d += gx[idx(i - 1, j, k)];
                    }
                    if j > 0 {
                        d += gy[idx(i, j - 1, k)];
                    }
                    if k > 0 {
                        d += gz[p - 1];
                    }
                    if k == 0 {
                        d += g_out[i * ny + j];
                    }
                    if k == nz - 1 {
                        d += g_in[i * ny + j];
                    }
                    diag[p] = d;
                }
            }
        }

        let delta_t = bc.delta_t();
        let mut rhs = vec![0.0; n];
        for c in 0..nx * ny {
            rhs[c * nz + nz - 1] = g_in[c] * delta_t;
        }
        Self { nx, ny, nz, gx, gy, gz, g_out, g_in, diag, rhs, delta_t }
    }

    fn slab(&self) -> usize {
        self.ny * self.nz
    }

    /// `y = A·x`, parallel over x-slabs.
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (ny, nz, nx) = (self.ny, self.nz, self.nx);
        let slab = self.slab();
        y.par_chunks_mut(slab).enumerate().for_each(|(i, ys)| {
            for j in 0..ny {
                for k in 0..nz {
                    let p = (i * ny + j) * nz + k;
                    let mut v = self.diag[p] * x[p];
                    if i + 1 < nx {
                        v -= self.gx[p] * x[p + slab];
                    }
                    if i > 0 {
                        v -= self.gx[p - slab] * x[p - slab];
                    }
                    if j + 1 < ny {
                        v -= self.gy[p] * x[p + nz];
                    }
                    if j > 0 {
                        v -= self.gy[p - nz] * x[p - nz];
                    }
                    if k + 1 < nz {
                        v -= self.gz[p] * x[p + 1];
                    }
                    if k > 0 {
                        v -= self.gz[p - 1] * x[p - 1];
                    }
                    ys[j * nz + k] = v;
                }
            }
        });
    }

    /// Dot product with a fixed reduction order, so results do not depend on
    /// thread scheduling.
    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let slab = self.slab();
        let partial: Vec<f64> = a
            .par_chunks(slab)
            .zip(b.par_chunks(slab))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .collect();
        partial.iter().sum()
    }

    /// Heat flow entering through the indoor face and leaving through the
    /// outdoor face, W (signed along `ΔT`).
    fn face_flows(&self, theta: &[f64]) -> (f64, f64) {
        let nz = self.nz;
        let mut q_in = 0.0;
        let mut q_out = 0.0;
        for c in 0..self.nx * self.ny {
            q_in += self.g_in[c] * (self.delta_t - theta[c * nz + nz - 1]);
            q_out += self.g_out[c] * theta[c * nz];
        }
        (q_in, q_out)
    }

    /// One-dimensional series-resistance profile of each column.
    fn initial_guess(&self) -> Vec<f64> {
        let nz = self.nz;
        let mut x = vec![0.0; self.diag.len()];
        for c in 0..self.nx * self.ny {
            let base = c * nz;
            // Resistances (K/W) from outdoor air to each voxel centre.
            let mut acc = 1.0 / self.g_out[c];
            x[base] = acc;
            for k in 1..nz {
                // Column-area conductance across the face between k-1 and k.
                let g = self.gz[base + k - 1];
                acc += if g > 0.0 { 1.0 / g } else { 0.0 };
                x[base + k] = acc;
            }
            let total = acc + 1.0 / self.g_in[c];
            for v in &mut x[base..base + nz] {
                *v *= self.delta_t / total;
            }
        }
        x
    }
}

/// Steady conduction through `grid` with Robin conditions on the z faces and
/// adiabatic sides, by Jacobi-preconditioned conjugate gradients. Converged
/// means relative residual and global face-flow imbalance both ≤ `tol`.
pub fn solve_temperature(grid: &VoxelGrid, bc: &ThermalBoundary, tol: f64, max_iter: usize) -> Result<ThermalSolution> {
    bc.validate()?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid(format!("tolerance {tol} must be > 0")));
    }
    let sys = System::assemble(grid, bc);
    let n = sys.diag.len();
    let mut x = sys.initial_guess();
    let mut r = vec![0.0; n];
    sys.apply(&x, &mut r);
    r.par_iter_mut().zip(&sys.rhs).for_each(|(r, b)| *r = b - *r);
    let inv_diag: Vec<f64> = sys.diag.iter().map(|d| 1.0 / d).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = sys.dot(&r, &z);
    let b_norm = sys.dot(&sys.rhs, &sys.rhs).sqrt();

    let mut iterations = 0;
    let mut residual = sys.dot(&r, &r).sqrt() / b_norm;
    let mut balance = f64::INFINITY;
    let mut converged = false;
    loop {
        if residual <= tol {
            let (q_in, q_out) = sys.face_flows(&x);
            balance = (q_in - q_out).abs() / q_in.abs();
            if balance <= tol {
                converged = true;
                break;
            }
        }
        if iterations >= max_iter {
            break;
        }
        sys.apply(&p, &mut ap);
        let alpha = rz / sys.dot(&p, &ap);
        x.par_iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        r.par_iter_mut().zip(&ap).for_each(|(r, ap)| *r -= alpha * ap);
        z.par_iter_mut().zip(&r).zip(&inv_diag).for_each(|((z, r), m)| *z = r * m);
        let rz_next = sys.dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        p.par_iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
        iterations += 1;
        residual = sys.dot(&r, &r).sqrt() / b_norm;
    }
    if !converged {
        let (q_in, q_out) = sys.face_flows(&x);
        balance = (q_in - q_out).abs() / q_in.abs();
    }

    let (q_in, _) = sys.face_flows(&x);
    let area = grid.footprint_mm2() * 1e-6;
    let result = UValueResult {
        u: q_in / (area * sys.delta_t),
        heat_flow_w: q_in.abs(),
        converged,
        iterations,
        residual,
        balance_error: balance,
    };
    let temperature_k = x.iter().map(|t| t + bc.t_se_air).collect();
    Ok(ThermalSolution { result, temperature_k })
}

/// U-value of `grid`; a partial result with `converged = false` is returned
/// when `max_iter` is exhausted.
pub fn solve_steady_state(grid: &VoxelGrid, bc: &ThermalBoundary, tol: f64, max_iter: usize) -> Result<UValueResult> {
    Ok(solve_temperature(grid, bc, tol, max_iter)?.result)
}
