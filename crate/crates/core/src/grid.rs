//! Uniform bucket grid for neighborhood queries over dim-strided coordinate
//! buffers. Candidates are conservative: callers must re-check distances.

pub(crate) struct UniformGrid {
    dim: usize,
    origin: [f64; 3],
    cell: f64,
    shape: [usize; 3],
    bins: Vec<Vec<u32>>,
}

impl UniformGrid {
    pub fn build(dim: usize, coords: &[f64], cell: f64) -> Self {
        assert!(dim == 2 || dim == 3);
        let n = coords.len() / dim;
        let mut origin = [0.0f64; 3];
        let mut upper = [0.0f64; 3];
        for k in 0..dim {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..n {
                let c = coords[i * dim + k];
                lo = lo.min(c);
                hi = hi.max(c);
            }
            if n == 0 {
                lo = 0.0;
                hi = 1.0;
            }
            origin[k] = lo;
            upper[k] = hi;
        }
        let cell = if cell.is_finite() && cell > 0.0 { cell } else { 1.0 };
        let mut shape = [1usize; 3];
        let mut total = 1usize;
        for k in 0..dim {
            let extent = (upper[k] - origin[k]).max(0.0);
            shape[k] = ((extent / cell).floor() as usize + 1).max(1);
            total = total.saturating_mul(shape[k]);
        }
        // keep the bin table bounded even for pathological cell sizes
        let mut cell = cell;
        while total > 4 * n.max(1) + 1024 {
            cell *= 2.0;
            total = 1;
            for k in 0..dim {
                let extent = (upper[k] - origin[k]).max(0.0);
                shape[k] = ((extent / cell).floor() as usize + 1).max(1);
                total = total.saturating_mul(shape[k]);
            }
        }
        let mut grid = UniformGrid { dim, origin, cell, shape, bins: vec![Vec::new(); total] };
        for i in 0..n {
            let idx = grid.bin_of(&coords[i * dim..(i + 1) * dim]);
            grid.bins[idx].push(i as u32);
        }
        grid
    }

    fn coord_bin(&self, k: usize, x: f64) -> usize {
        let b = ((x - self.origin[k]) / self.cell).floor();
        (b.max(0.0) as usize).min(self.shape[k] - 1)
    }

    fn bin_of(&self, p: &[f64]) -> usize {
        let mut idx = 0usize;
        for k in 0..self.dim {
            idx = idx * self.shape[k] + self.coord_bin(k, p[k]);
        }
        idx
    }

    /// Visit indices of all points in bins overlapping the ball `B(c, r)`.
    pub fn for_each_in_ball(&self, c: &[f64], r: f64, mut f: impl FnMut(usize)) {
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for k in 0..self.dim {
            lo[k] = self.coord_bin(k, c[k] - r);
            hi[k] = self.coord_bin(k, c[k] + r);
        }
        let visit = |idx: usize, f: &mut dyn FnMut(usize)| {
            for &i in &self.bins[idx] {
                f(i as usize);
            }
        };
        if self.dim == 2 {
            for a in lo[0]..=hi[0] {
                for b in lo[1]..=hi[1] {
                    visit(a * self.shape[1] + b, &mut f);
                }
            }
        } else {
            for a in lo[0]..=hi[0] {
                for b in lo[1]..=hi[1] {
                    for c3 in lo[2]..=hi[2] {
                        visit((a * self.shape[1] + b) * self.shape[2] + c3, &mut f);
                    }
                }
            }
        }
    }

    /// Nearest point to `q` by expanding ring search; exact because the ring
    /// is grown until the best candidate distance is covered.
    #[allow(dead_code)]
    pub fn nearest(&self, coords: &[f64], q: &[f64]) -> Option<usize> {
        let n = coords.len() / self.dim;
        if n == 0 {
            return None;
        }
        let mut radius = self.cell;
        loop {
            let mut best: Option<(usize, f64)> = None;
            self.for_each_in_ball(q, radius, |i| {
                let p = &coords[i * self.dim..(i + 1) * self.dim];
                let d2 = crate::point_process::sq_dist(p, q);
                if best.is_none_or(|(_, b)| d2 < b || (d2 == b && i < best.unwrap().0)) {
                    best = Some((i, d2));
                }
            });
            if let Some((i, d2)) = best {
                if d2.sqrt() <= radius {
                    return Some(i);
                }
            }
            radius *= 2.0;
            if radius > 1e12 {
                // fall back to linear scan
                let mut bi = 0;
                let mut bd = f64::INFINITY;
                for i in 0..n {
                    let d2 = crate::point_process::sq_dist(&coords[i * self.dim..(i + 1) * self.dim], q);
                    if d2 < bd {
                        bd = d2;
                        bi = i;
                    }
                }
                return Some(bi);
            }
        }
    }
}
