use crate::error::{Error, Result};

const TOLERANCE: f64 = 1e-9;
const MAX_ITERATIONS: usize = 1000;

/// Top-two principal components of a point cloud and the projected
/// coordinates. The covariance uses the population (`1/n`) convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub coords: Vec<[f64; 2]>,
    pub components: [Vec<f64>; 2],
    pub eigenvalues: [f64; 2],
}

/// Projects points onto their first two principal components, found by power
/// iteration with deflation. Each component's sign makes its largest-magnitude
/// loading positive.
pub fn pca_project_2d(points: &[Vec<f64>]) -> Result<Projection> {
    if points.len() < 3 {
        return Err(Error::invalid("projection needs at least 3 points"));
    }
    let k = points[0].len();
    if k < 2 {
        return Err(Error::invalid("projection needs at least 2 dimensions"));
    }
    if let Some(p) = points.iter().find(|p| p.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: p.len(),
        });
    }
    let n = points.len() as f64;
    let mean: Vec<f64> = (0..k).map(|j| points.iter().map(|p| p[j]).sum::<f64>() / n).collect();
    let centered: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();

    let mut cov = vec![vec![0.0; k]; k];
    for c in &centered {
        for i in 0..k {
            for j in i..k {
                cov[i][j] += c[i] * c[j];
            }
        }
    }
    for i in 0..k {
        for j in i..k {
            cov[i][j] /= n;
            cov[j][i] = cov[i][j];
        }
    }
    if cov.iter().flatten().all(|v| *v == 0.0) {
        return Err(Error::invalid("all points are identical; nothing to project"));
    }

    let (v1, l1) = leading_eigenpair(&cov, &[]);
    let deflated = deflate(&cov, &v1, l1);
    let (v2, l2) = leading_eigenpair(&deflated, std::slice::from_ref(&v1));

    let coords = centered.iter().map(|c| [dot(c, &v1), dot(c, &v2)]).collect();
    Ok(Projection {
        coords,
        components: [v1, v2],
        eigenvalues: [l1, l2],
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, v)).collect()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let d = dot(v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
    }
}

fn deflate(a: &[Vec<f64>], v: &[f64], lambda: f64) -> Vec<Vec<f64>> {
    a.iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().map(|(j, x)| x - lambda * v[i] * v[j]).collect())
        .collect()
}

/// Power iteration restricted to the complement of `basis`.
fn leading_eigenpair(a: &[Vec<f64>], basis: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let k = a.len();
    // Start from the heaviest column; fall back to coordinate axes if the
    // matrix is null on the complement.
    let mut candidates: Vec<Vec<f64>> = (0..k).map(|j| a.iter().map(|row| row[j]).collect()).collect();
    candidates.sort_by(|x, y| dot(y, y).total_cmp(&dot(x, x)));
    candidates.extend((0..k).map(|j| {
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        e
    }));
    let mut v = candidates
        .into_iter()
        .find_map(|mut c| {
            orthogonalize(&mut c, basis);
            (normalize(&mut c) > 1e-12).then_some(c)
        })
        .unwrap_or_else(|| vec![0.0; k]);

    for _ in 0..MAX_ITERATIONS {
        let mut w = mat_vec(a, &v);
        orthogonalize(&mut w, basis);
        if normalize(&mut w) == 0.0 {
            break;
        }
        let diff = w.iter().zip(&v).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        v = w;
        if diff < TOLERANCE {
            break;
        }
    }
    let lambda = dot(&v, &mat_vec(a, &v));
    if let Some(big) = v.iter().copied().max_by(|x, y| x.abs().total_cmp(&y.abs())) {
        if big < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    (v, lambda)
}
