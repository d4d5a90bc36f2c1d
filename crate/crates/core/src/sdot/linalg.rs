use super::LaguerreDiagram;

/// Weighted graph Laplacian of the Laguerre adjacency in compressed rows.
pub(crate) struct Laplacian {
    diag: Vec<f64>,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Laplacian {
    /// Edge weights `(length in Ω₁ + eps·length in holes) / |y_i − y_j|`.
    pub(crate) fn assemble(d: &LaguerreDiagram, eps: f64) -> Self {
        let n = d.len();
        let mut diag = vec![0.0; n];
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        offsets.push(0);
        for i in 0..n {
            for e in &d.adjacency[i] {
                let c = (e.length + eps * e.hole_length) / (d.seeds[i] - d.seeds[e.neighbor]).norm();
                if c > 0.0 {
                    cols.push(e.neighbor);
                    vals.push(c);
                    diag[i] += c;
                }
            }
            offsets.push(cols.len());
        }
        // a vanishing regularization keeps isolated vertices solvable
        let scale = diag.iter().cloned().fold(0.0, f64::max).max(1e-300);
        for d in &mut diag {
            *d += 1e-14 * scale;
        }
        Self { diag, offsets, cols, vals }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.diag.len() {
            let mut s = self.diag[i] * x[i];
            for k in self.offsets[i]..self.offsets[i + 1] {
                s -= self.vals[k] * x[self.cols[k]];
            }
            out[i] = s;
        }
    }

    /// Solves `L x = b` with `x_0 = 0` by Jacobi-preconditioned conjugate
    /// gradients on the remaining unknowns.
    pub(crate) fn solve_pinned(&self, b: &[f64], rel_tol: f64) -> Vec<f64> {
        let n = b.len();
        let mut x = vec![0.0; n];
        if n <= 1 {
            return x;
        }
        let mut r = b.to_vec();
        r[0] = 0.0;
        let bnorm = dot(&r, &r).sqrt();
        if bnorm == 0.0 {
            return x;
        }
        let precond = |r: &[f64], z: &mut [f64]| {
            z[0] = 0.0;
            for i in 1..n {
                z[i] = r[i] / self.diag[i];
            }
        };
        let mut z = vec![0.0; n];
        precond(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        for _ in 0..(4 * n + 200) {
            self.apply(&p, &mut ap);
            ap[0] = 0.0;
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            for i in 1..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if dot(&r, &r).sqrt() <= rel_tol * bnorm {
                break;
            }
            precond(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
