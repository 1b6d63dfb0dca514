//! Non-dominated set of visited models in (Ū, F̄) space and its upper-right hull.

/// A visited model and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPoint {
    pub theta: Vec<f64>,
    pub f_bar: f64,
    pub u_bar: f64,
    /// `None` for the base model, otherwise `(episode, step)`.
    pub origin: Option<(usize, usize)>,
}

/// `p` is at least as good as `q` on both axes and better on one.
pub fn dominates(p: (f64, f64), q: (f64, f64)) -> bool {
    p.0 >= q.0 && p.1 >= q.1 && (p.0 > q.0 || p.1 > q.1)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Frontier {
    points: Vec<FrontierPoint>,
}

impl Frontier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Retained points in insertion order.
    pub fn points(&self) -> &[FrontierPoint] {
        &self.points
    }

    /// Inserts `candidate` unless an incumbent dominates it or sits on the same
    /// coordinates, and drops incumbents it dominates. Returns whether it was kept.
    pub fn offer(&mut self, candidate: FrontierPoint) -> bool {
        assert!(
            candidate.f_bar.is_finite() && candidate.u_bar.is_finite(),
            "frontier scores must be finite"
        );
        let c = (candidate.u_bar, candidate.f_bar);
        if self.points.iter().any(|p| {
            let q = (p.u_bar, p.f_bar);
            q == c || dominates(q, c)
        }) {
            return false;
        }
        self.points.retain(|p| !dominates(c, (p.u_bar, p.f_bar)));
        self.points.push(candidate);
        true
    }

    /// Retained points forming the upper-right convex hull, by increasing Ū.
    pub fn upper_right_hull(&self) -> Vec<&FrontierPoint> {
        let coords: Vec<(f64, f64)> = self.points.iter().map(|p| (p.u_bar, p.f_bar)).collect();
        hull_indices(&coords).into_iter().map(|i| &self.points[i]).collect()
    }
}

/// Turns flatter than this count as collinear.
pub const COLLINEAR_EPS: f64 = 1e-12;

/// Indices of the upper hull of mutually non-dominated `(u, f)` points, by
/// increasing `u`. Points on a hull edge are dropped.
pub fn hull_indices(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].0.total_cmp(&points[j].0).then(points[j].1.total_cmp(&points[i].1)));
    let mut chain: Vec<usize> = Vec::with_capacity(order.len());
    for i in order {
        while chain.len() >= 2 {
            let o = points[chain[chain.len() - 2]];
            let a = points[chain[chain.len() - 1]];
            let b = points[i];
            let cross = (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
            // keep only strict clockwise turns
            if cross >= -COLLINEAR_EPS {
                chain.pop();
            } else {
                break;
            }
        }
        chain.push(i);
    }
    chain
}
