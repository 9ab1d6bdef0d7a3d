//! Level-set extraction by marching squares.

use std::collections::HashMap;

use crate::potential::PlanePoint;

/// Samples of a scalar function on a tensor grid; `values[j * nx + i]` sits
/// at `(xs[i], ys[j])`.
#[derive(Debug, Clone)]
pub struct ScalarGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn sample<F: Fn(PlanePoint) -> f64>(
        f: F,
        x_range: (f64, f64),
        y_range: (f64, f64),
        nx: usize,
        ny: usize,
    ) -> Self {
        let lin = |(a, b): (f64, f64), n: usize| -> Vec<f64> {
            (0..n)
                .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
                .collect()
        };
        let xs = lin(x_range, nx);
        let ys = lin(y_range, ny);
        let mut values = Vec::with_capacity(nx * ny);
        for &y in &ys {
            for &x in &xs {
                values.push(f(PlanePoint::new(x, y)));
            }
        }
        Self { xs, ys, values }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.xs.len() + i]
    }
}

/// Segments of the `level` set, one or two per grid cell. `keep` sees the
/// four corner values of a cell and can veto it (e.g. sign flips through a
/// pole rather than a zero). Saddle cells are resolved by the cell average.
pub fn marching_squares<K>(grid: &ScalarGrid, level: f64, keep: K) -> Vec<(PlanePoint, PlanePoint)>
where
    K: Fn([f64; 4]) -> bool,
{
    let nx = grid.xs.len();
    let ny = grid.ys.len();
    let mut out = Vec::new();
    // Edge points use a fixed orientation so neighbours share them bit for bit.
    let hpoint = |i: usize, j: usize| {
        let (a, b) = (grid.at(i, j) - level, grid.at(i + 1, j) - level);
        let t = a / (a - b);
        PlanePoint::new(grid.xs[i] + t * (grid.xs[i + 1] - grid.xs[i]), grid.ys[j])
    };
    let vpoint = |i: usize, j: usize| {
        let (a, b) = (grid.at(i, j) - level, grid.at(i, j + 1) - level);
        let t = a / (a - b);
        PlanePoint::new(grid.xs[i], grid.ys[j] + t * (grid.ys[j + 1] - grid.ys[j]))
    };
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let v = [
                grid.at(i, j),
                grid.at(i + 1, j),
                grid.at(i + 1, j + 1),
                grid.at(i, j + 1),
            ];
            if v.iter().any(|x| !x.is_finite()) || !keep(v) {
                continue;
            }
            let above: Vec<bool> = v.iter().map(|&x| x > level).collect();
            let code = above
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, &b)| acc | ((b as u8) << k));
            // Edges: 0 bottom, 1 right, 2 top, 3 left.
            let edge = |e: u8| match e {
                0 => hpoint(i, j),
                1 => vpoint(i + 1, j),
                2 => hpoint(i, j + 1),
                _ => vpoint(i, j),
            };
            let pairs: &[(u8, u8)] = match code {
                0 | 15 => &[],
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(3, 2)],
                5 | 10 => {
                    let center = 0.25 * v.iter().sum::<f64>() > level;
                    // Corners 0 and 2 share a side of the level.
                    if (code == 5) == center {
                        &[(3, 2), (0, 1)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                _ => unreachable!(),
            };
            for &(a, b) in pairs {
                let (p, q) = (edge(a), edge(b));
                // A corner exactly on the level yields zero-length pieces.
                if p != q {
                    out.push((p, q));
                }
            }
        }
    }
    out
}

/// Joins segments that share endpoints into polylines.
pub fn chain_segments(segments: &[(PlanePoint, PlanePoint)]) -> Vec<Vec<PlanePoint>> {
    let key = |p: PlanePoint| (p.u1.to_bits(), p.u2.to_bits());
    let mut ends: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        ends.entry(key(*a)).or_default().push(k);
        ends.entry(key(*b)).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut line = vec![segments[start].0, segments[start].1];
        for forward in [true, false] {
            loop {
                let tip = if forward {
                    *line.last().unwrap()
                } else {
                    line[0]
                };
                let next = ends
                    .get(&key(tip))
                    .and_then(|c| c.iter().copied().find(|&k| !used[k]));
                let Some(k) = next else { break };
                used[k] = true;
                let (a, b) = segments[k];
                let other = if key(a) == key(tip) { b } else { a };
                if forward {
                    line.push(other);
                } else {
                    line.insert(0, other);
                }
            }
        }
        lines.push(line);
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_level_set() {
        let g = ScalarGrid::sample(|p| p.norm_sq(), (-2.0, 2.0), (-2.0, 2.0), 81, 81);
        let segs = marching_squares(&g, 1.0, |_| true);
        assert!(!segs.is_empty());
        for (a, b) in &segs {
            assert!((a.norm() - 1.0).abs() < 5e-3 && (b.norm() - 1.0).abs() < 5e-3);
        }
        let lines = chain_segments(&segs);
        assert_eq!(lines.len(), 1);
        let line = &lines[0];
        assert_eq!(line.first(), line.last());
    }

    #[test]
    fn veto_removes_cells() {
        let g = ScalarGrid::sample(|p| p.u1, (-1.0, 1.0), (-1.0, 1.0), 11, 11);
        assert!(marching_squares(&g, 0.0, |_| false).is_empty());
        assert_eq!(
            chain_segments(&marching_squares(&g, 0.0, |_| true)).len(),
            1
        );
    }
}
