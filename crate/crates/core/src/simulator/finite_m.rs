//! Explicit matrix channels at finite antenna counts: how close the realized
//! matched-filter desired power gets to its large-array limit `M^2 P_f P_p beta^2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::Point2D;
use crate::rng::{derive_seed, rng_from_seed, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMConfig {
    pub m_list: Vec<usize>,
    /// Users per cell.
    pub k: usize,
    /// Base-station positions, one cell each.
    pub cells: Vec<Point2D>,
    /// Users are dropped uniformly on `[1 m, ue_radius]` around their station.
    pub ue_radius: f64,
    pub alpha: f64,
    pub p_f: f64,
    pub p_p: f64,
    pub seeds: usize,
    pub master_seed: u64,
}

impl Default for FiniteMConfig {
    fn default() -> Self {
        Self {
            m_list: vec![16, 64, 256],
            k: 4,
            cells: vec![
                Point2D::new(0.0, 0.0),
                Point2D::new(300.0, 0.0),
                Point2D::new(150.0, 260.0),
            ],
            ue_radius: 100.0,
            alpha: 4.0,
            p_f: 7.7,
            p_p: 0.13,
            seeds: 200,
            master_seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FiniteMRow {
    pub m: usize,
    /// Median over seeds and users of `|P / (M^2 P_f P_p beta^2) - 1|`.
    pub median_rel_error: f64,
    pub mean_rel_error: f64,
    /// Median over seeds and cells of `max |(1/M) H^T H^* - D| / max D`.
    pub median_diag_error: f64,
}

fn cn(rng: &mut SimRng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Column-major `M x K` matrix.
struct Mat {
    m: usize,
    data: Vec<Complex64>,
}

impl Mat {
    fn col(&self, k: usize) -> &[Complex64] {
        &self.data[k * self.m..(k + 1) * self.m]
    }
}

/// `a^T b^*`.
fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `(relative errors per user, diagonal errors per cell)` of one seed.
fn one_seed(cfg: &FiniteMConfig, m: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = rng_from_seed(seed);
    let c = cfg.cells.len();
    let users: Vec<Vec<Point2D>> = cfg
        .cells
        .iter()
        .map(|b| {
            (0..cfg.k)
                .map(|_| {
                    let r = (1.0 + (cfg.ue_radius * cfg.ue_radius - 1.0) * rng.random::<f64>()).sqrt();
                    let a = 2.0 * PI * rng.random::<f64>();
                    Point2D::new(b.x + r * a.cos(), b.y + r * a.sin())
                })
                .collect()
        })
        .collect();
    // h[i][u]: channel from station i to the users of cell u
    let beta = |i: usize, u: usize, k: usize| cfg.cells[i].dist(&users[u][k]).powf(-cfg.alpha);
    let h: Vec<Vec<Mat>> = (0..c)
        .map(|i| {
            (0..c)
                .map(|u| {
                    let mut data = Vec::with_capacity(m * cfg.k);
                    for k in 0..cfg.k {
                        let s = beta(i, u, k).sqrt();
                        data.extend((0..m).map(|_| cn(&mut rng) * s));
                    }
                    Mat { m, data }
                })
                .collect()
        })
        .collect();

    let mut rel = Vec::with_capacity(c * cfg.k);
    let mut diag = Vec::with_capacity(c);
    let mf = m as f64;
    for i in 0..c {
        for k in 0..cfg.k {
            let own = h[i][i].col(k);
            // pilot-contaminated estimate (up to sqrt(P_p)) and matched filter
            let mut est: Vec<Complex64> = own.to_vec();
            for u in (0..c).filter(|&u| u != i) {
                for (e, x) in est.iter_mut().zip(h[i][u].col(k)) {
                    *e += x;
                }
            }
            let amp = dot_conj(own, &est);
            let realized = cfg.p_f * cfg.p_p * amp.norm_sqr();
            let b = beta(i, i, k);
            let limit = mf * mf * cfg.p_f * cfg.p_p * b * b;
            rel.push((realized / limit - 1.0).abs());
        }
        let bmax = (0..cfg.k).map(|k| beta(i, i, k)).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for k in 0..cfg.k {
            for l in 0..cfg.k {
                let g = dot_conj(h[i][i].col(k), h[i][i].col(l)) / mf;
                let d = if k == l { beta(i, i, k) } else { 0.0 };
                worst = worst.max((g - d).norm());
            }
        }
        diag.push(worst / bmax);
    }
    (rel, diag)
}

/// Relative deviation of the realized desired power from its large-array
/// limit, one row per antenna count.
pub fn finite_m_validation(cfg: &FiniteMConfig, exec: Exec) -> Result<Vec<FiniteMRow>> {
    if cfg.k == 0 || cfg.cells.is_empty() {
        return Err(Error::param("k", "must be >= 1 with at least one cell"));
    }
    if cfg.m_list.iter().any(|&m| m < cfg.k) {
        return Err(Error::param("antennas_m", "must be >= k for every entry"));
    }
    if cfg.seeds == 0 {
        return Err(Error::param("seeds", "must be >= 1"));
    }
    if !(cfg.ue_radius > 1.0 && cfg.alpha > 0.0) {
        return Err(Error::param("ue_radius", "must be > 1 with alpha > 0"));
    }
    let mut rows = Vec::with_capacity(cfg.m_list.len());
    for (j, &m) in cfg.m_list.iter().enumerate() {
        let per_seed = exec.map_indexed(cfg.seeds, |s| {
            one_seed(cfg, m, derive_seed(derive_seed(cfg.master_seed, j as u64), s as u64))
        });
        let mut rel: Vec<f64> = per_seed.iter().flat_map(|(r, _)| r.iter().copied()).collect();
        let mut diag: Vec<f64> = per_seed.iter().flat_map(|(_, d)| d.iter().copied()).collect();
        let mean = rel.iter().sum::<f64>() / rel.len() as f64;
        rows.push(FiniteMRow {
            m,
            median_rel_error: median(&mut rel),
            mean_rel_error: mean,
            median_diag_error: median(&mut diag),
        });
    }
    Ok(rows)
}
