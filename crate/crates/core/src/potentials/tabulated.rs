use serde::{Deserialize, Serialize};

use super::GraphValue;

/// One row of a tabulated graph: at `r` the graph takes the interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub r: f64,
    pub lo: f64,
    pub hi: f64,
}

/// A monotone graph given by sorted breakpoints, linear between them and
/// extended beyond the table with the slope of the outermost segment.
///
/// The potential is the exact integral of the piecewise-linear graph,
/// anchored at `j(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakpointTable {
    points: Vec<Breakpoint>,
    /// `∫₀^{r_i} β` at every breakpoint.
    integral: Vec<f64>,
}

impl BreakpointTable {
    /// Validates ordering and monotonicity, reporting the offending row.
    pub fn new(points: Vec<Breakpoint>) -> Result<Self, String> {
        if points.len() < 2 {
            return Err("table needs at least two breakpoints".into());
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.r.is_finite() && p.lo.is_finite() && p.hi.is_finite()) {
                return Err(format!("breakpoint {i}: entries must be finite"));
            }
            if p.lo > p.hi {
                return Err(format!(
                    "breakpoint {i} (r = {}): lo {} exceeds hi {}",
                    p.r, p.lo, p.hi
                ));
            }
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[0].r < w[1].r) {
                return Err(format!(
                    "breakpoint {}: r = {} is not strictly greater than {}",
                    i + 1,
                    w[1].r,
                    w[0].r
                ));
            }
            if w[0].hi > w[1].lo {
                return Err(format!(
                    "breakpoint {} (r = {}): graph decreases from {} to {}",
                    i + 1,
                    w[1].r,
                    w[0].hi,
                    w[1].lo
                ));
            }
        }
        let mut table = Self {
            integral: vec![0.0; points.len()],
            points,
        };
        for i in 0..table.points.len() {
            table.integral[i] = table.integrate_from_zero(table.points[i].r);
        }
        Ok(table)
    }

    pub fn points(&self) -> &[Breakpoint] {
        &self.points
    }

    fn left_slope(&self) -> f64 {
        let (p, q) = (self.points[0], self.points[1]);
        (q.lo - p.hi) / (q.r - p.r)
    }

    fn right_slope(&self) -> f64 {
        let n = self.points.len();
        let (p, q) = (self.points[n - 2], self.points[n - 1]);
        (q.lo - p.hi) / (q.r - p.r)
    }

    /// Index `i` of the segment `[r_i, r_{i+1}]` containing `r`, with the
    /// outer rays mapped to the first and last segments.
    fn segment(&self, r: f64) -> usize {
        let n = self.points.len();
        match self.points.partition_point(|p| p.r <= r) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    /// Value of the graph at `r` (linear piece continuing to the right of r_i).
    fn linear_piece(&self, i: usize, r: f64) -> f64 {
        let n = self.points.len();
        if r < self.points[0].r {
            return self.points[0].lo + self.left_slope() * (r - self.points[0].r);
        }
        if r > self.points[n - 1].r {
            return self.points[n - 1].hi + self.right_slope() * (r - self.points[n - 1].r);
        }
        let (p, q) = (self.points[i], self.points[i + 1]);
        p.hi + (q.lo - p.hi) * (r - p.r) / (q.r - p.r)
    }

    pub fn graph(&self, r: f64) -> GraphValue {
        if let Ok(k) = self.points.binary_search_by(|p| p.r.total_cmp(&r)) {
            let p = self.points[k];
            return GraphValue::interval(p.lo, p.hi);
        }
        GraphValue::single(self.linear_piece(self.segment(r), r))
    }

    pub fn slope(&self, r: f64) -> f64 {
        if let Ok(k) = self.points.binary_search_by(|p| p.r.total_cmp(&r)) {
            let p = self.points[k];
            if p.lo < p.hi {
                return f64::INFINITY;
            }
        }
        let n = self.points.len();
        if r <= self.points[0].r {
            return self.left_slope();
        }
        if r >= self.points[n - 1].r {
            return self.right_slope();
        }
        let i = self.segment(r);
        let (p, q) = (self.points[i], self.points[i + 1]);
        (q.lo - p.hi) / (q.r - p.r)
    }

    /// `∫_a^b β` over a range free of breakpoints. The graph is affine there,
    /// so the midpoint rule is exact.
    fn integrate_piece(&self, a: f64, b: f64) -> f64 {
        let mid = 0.5 * (a + b);
        self.linear_piece(self.segment(mid), mid) * (b - a)
    }

    /// `∫₀^r β` by walking over the breakpoints between 0 and r.
    fn integrate_from_zero(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let (a, b, sign) = if r > 0.0 { (0.0, r, 1.0) } else { (r, 0.0, -1.0) };
        let mut cuts = vec![a];
        cuts.extend(self.points.iter().map(|p| p.r).filter(|&x| x > a && x < b));
        cuts.push(b);
        let total: f64 = cuts.windows(2).map(|w| self.integrate_piece(w[0], w[1])).sum();
        sign * total
    }

    /// `j(r) = ∫₀^r β`.
    pub fn potential(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        match self.points.partition_point(|p| p.r <= r) {
            0 => self.integral[0] - self.integrate_piece(r, self.points[0].r),
            k => {
                let p = self.points[k - 1];
                self.integral[k - 1] + self.integrate_piece(p.r, r)
            }
        }
    }
}
