//! Threshold counting: the number and total mass of normalized products
//! `>= t`, found by a pruned depth-first walk over all coordinates but the
//! last, which is resolved from its prefix sums.
//! Bisection on `t` then locates the crossing of a target mass without
//! materializing the products.

use super::{is_certified, rounding_budget, ComplexityResult, EngineLimits, ProductProblem};
use crate::error::{Error, Result};
use crate::summation::CompensatedSum;

/// Largest bracket of products sorted explicitly at the end of a search.
const COLLECT_LIMIT: usize = 1 << 20;

/// Smallest crossing value searched for.
const THRESHOLD_FLOOR: f64 = 1e-290;

pub(super) struct ThresholdCounter {
    coords: Vec<Vec<f64>>,
    /// `suffix_max[j] = prod_{i >= j} coords[i][0]`
    suffix_max: Vec<f64>,
    /// `prefix[c]` is the sum of the first `c` values of the last coordinate.
    prefix: Vec<f64>,
    prune: f64,
    max_work: u64,
}

#[derive(Debug, Clone, Copy)]
struct Tally {
    count: u64,
    mass: f64,
}

impl ThresholdCounter {
    pub(super) fn new(problem: &ProductProblem, max_work: u64) -> Self {
        let mut coords: Vec<Vec<f64>> = problem
            .coordinates
            .iter()
            .map(|c| c.eigenvalues().iter().map(|&x| x / c.trace()).collect())
            .collect();
        // slowest decay last: the two innermost levels do the bulk counting
        let decay = |c: &[f64]| c.get(1).map_or(0.0, |&x| x / c[0]);
        coords.sort_by(|a, b| decay(a).total_cmp(&decay(b)).then(a.len().cmp(&b.len())));

        let d = coords.len();
        let mut suffix_max = vec![1.0; d + 1];
        for j in (0..d).rev() {
            suffix_max[j] = suffix_max[j + 1] * coords[j][0];
        }
        let mut acc = CompensatedSum::new();
        let mut prefix = Vec::with_capacity(coords[d - 1].len() + 1);
        prefix.push(0.0);
        for &x in &coords[d - 1] {
            acc.add(x);
            prefix.push(acc.value());
        }
        Self {
            coords,
            suffix_max,
            prefix,
            prune: 1.0 - 4.0 * (d as f64 + 1.0) * f64::EPSILON,
            max_work,
        }
    }

    /// Largest product, up to the rounding of its evaluation order.
    pub(super) fn top(&self) -> f64 {
        self.suffix_max[0]
    }

    /// Products `>= t`. Stops early, with a partial tally, once the mass
    /// reaches `stop`.
    fn tally(&self, t: f64, stop: f64) -> Result<(Tally, bool)> {
        let mut state = Walk {
            count: 0,
            mass: CompensatedSum::new(),
            work: 0,
        };
        let stopped = self.visit(0, 1.0, t, stop, &mut state)?;
        Ok((
            Tally {
                count: state.count,
                mass: state.mass.value(),
            },
            stopped,
        ))
    }

    fn reaches(&self, t: f64, target: f64) -> Result<bool> {
        let (tally, stopped) = self.tally(t, target)?;
        Ok(stopped || tally.mass >= target)
    }

    fn visit(&self, j: usize, p: f64, t: f64, stop: f64, state: &mut Walk) -> Result<bool> {
        state.work += 1;
        if state.work > self.max_work {
            return Err(Error::CapacityExhausted(format!(
                "threshold count exceeded {} steps",
                self.max_work
            )));
        }
        let values = &self.coords[j];
        if j + 1 == self.coords.len() {
            let c = values.partition_point(|&x| p * x >= t);
            if c > 0 {
                state.count = state.count.saturating_add(c as u64);
                state.mass.add(p * self.prefix[c]);
            }
            return Ok(state.mass.value() >= stop);
        }
        if j + 2 == self.coords.len() {
            return Ok(self.visit_pairs(p, t, stop, state));
        }
        let rest = self.suffix_max[j + 1];
        for &x in values.iter() {
            let q = p * x;
            if q * rest < t * self.prune {
                break;
            }
            if self.visit(j + 1, q, t, stop, state)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// The last two coordinates. As the second-to-last value falls, the
    /// admissible prefix of the last coordinate shrinks, so each cut is found
    /// by galloping down from the previous one.
    fn visit_pairs(&self, p: f64, t: f64, stop: f64, state: &mut Walk) -> bool {
        let d = self.coords.len();
        let last = &self.coords[d - 1];
        let mut cut = last.len();
        for &x in self.coords[d - 2].iter() {
            let q = p * x;
            cut = gallop_down(last, cut, |y| q * y >= t);
            if cut == 0 {
                break;
            }
            state.work += 1;
            state.count = state.count.saturating_add(cut as u64);
            state.mass.add(q * self.prefix[cut]);
            if state.mass.value() >= stop {
                return true;
            }
        }
        false
    }
}

impl ThresholdCounter {
    /// Every product in `[lo, hi)`, unordered.
    fn collect(&self, lo: f64, hi: f64, limit: usize) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        let mut work = 0u64;
        self.gather(0, 1.0, lo, hi, limit, &mut out, &mut work)?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn gather(&self, j: usize, p: f64, lo: f64, hi: f64, limit: usize, out: &mut Vec<f64>, work: &mut u64) -> Result<()> {
        *work += 1;
        if *work > self.max_work {
            return Err(Error::CapacityExhausted(format!(
                "threshold count exceeded {} steps",
                self.max_work
            )));
        }
        let values = &self.coords[j];
        if j + 1 == self.coords.len() {
            let start = values.partition_point(|&x| p * x >= hi);
            let end = values.partition_point(|&x| p * x >= lo);
            if out.len() + (end - start) > limit {
                return Err(Error::CapacityExhausted(format!(
                    "more than {limit} products share the crossing bracket"
                )));
            }
            out.extend(values[start..end].iter().map(|&x| p * x));
            return Ok(());
        }
        let rest = self.suffix_max[j + 1];
        for &x in values.iter() {
            let q = p * x;
            if q * rest < lo * self.prune {
                break;
            }
            self.gather(j + 1, q, lo, hi, limit, out, work)?;
        }
        Ok(())
    }
}

struct Walk {
    count: u64,
    mass: CompensatedSum,
    work: u64,
}

/// `values[..cut]` satisfies `pred` on a prefix; returns the length of that
/// prefix, searching downward from `cut`.
fn gallop_down(values: &[f64], cut: usize, pred: impl Fn(f64) -> bool) -> usize {
    if cut == 0 || pred(values[cut - 1]) {
        return cut;
    }
    // pred fails at cut - 1; find the first failure below it
    let mut step = 1;
    let mut high = cut - 1;
    loop {
        if high < step {
            return values[..high].partition_point(|&y| pred(y));
        }
        let probe = high - step;
        if pred(values[probe]) {
            return probe + 1 + values[probe + 1..high].partition_point(|&y| pred(y));
        }
        high = probe;
        step *= 2;
    }
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

/// Complexity for a normalized `target` in `(0, 1)`. `hint` is a product
/// value known to lie at or above the crossing.
pub(super) fn complexity_by_threshold(
    problem: &ProductProblem,
    counter: &ThresholdCounter,
    target: f64,
    hint: Option<f64>,
    limits: EngineLimits,
) -> Result<ComplexityResult> {
    let trace = problem.total_trace;
    let retained: f64 = problem
        .coordinates
        .iter()
        .map(|c| c.retained_sum() / c.trace())
        .product();
    if retained < target {
        return Err(Error::TargetUnreachable {
            captured: retained * trace,
            target: target * trace,
        });
    }

    // bracket: reaches(lo) and !reaches(hi)
    let mut hi = next_up(counter.top() / counter.prune);
    while counter.reaches(hi, target)? {
        hi *= 2.0;
    }
    if let Some(h) = hint {
        let h = next_up(h * (1.0 + 1e-12));
        if h < hi && !counter.reaches(h, target)? {
            hi = h;
        }
    }
    let mut lo = hi;
    loop {
        let t = lo * 0.5;
        if t < THRESHOLD_FLOOR {
            return Err(Error::CapacityExhausted(
                "crossing product lies below the representable threshold floor".into(),
            ));
        }
        if counter.reaches(t, target)? {
            lo = t;
            break;
        }
        hi = t;
        lo = t;
    }
    let (mut lo_bits, mut hi_bits) = (lo.to_bits(), hi.to_bits());
    let (mut below, _) = counter.tally(lo, f64::INFINITY)?;
    let (mut above, _) = counter.tally(hi, f64::INFINITY)?;
    while hi_bits - lo_bits > 1 && below.count - above.count > COLLECT_LIMIT as u64 {
        let mid = lo_bits + (hi_bits - lo_bits) / 2;
        let (tally, _) = counter.tally(f64::from_bits(mid), f64::INFINITY)?;
        if tally.mass >= target {
            lo_bits = mid;
            below = tally;
        } else {
            hi_bits = mid;
            above = tally;
        }
    }

    let (value, m, previous, captured) = if hi_bits - lo_bits > 1 {
        let mut bracket = counter.collect(f64::from_bits(lo_bits), f64::from_bits(hi_bits), COLLECT_LIMIT)?;
        bracket.sort_by(|a, b| b.total_cmp(a));
        let mut acc = CompensatedSum::with_initial(above.mass);
        let mut found = None;
        for (i, &v) in bracket.iter().enumerate() {
            let before = acc.value();
            acc.add(v);
            if acc.value() >= target {
                found = Some((v, i as u64 + 1, before, acc.value()));
                break;
            }
        }
        // rounding can leave the item-by-item sum a hair short of the
        // tallied mass; the crossing is then the last product in the bracket
        found.unwrap_or_else(|| {
            let last = *bracket.last().expect("non-empty bracket");
            let total = acc.value();
            (last, bracket.len() as u64, total - last, total)
        })
    } else {
        // every product in the bracket equals `value`
        let value = f64::from_bits(lo_bits);
        let mut m = ((target - above.mass) / value).ceil().max(1.0) as u64;
        while above.mass + (m as f64) * value < target {
            m += 1;
        }
        while m > 1 && above.mass + ((m - 1) as f64) * value >= target {
            m -= 1;
        }
        (
            value,
            m,
            above.mass + ((m - 1) as f64) * value,
            above.mass + (m as f64) * value,
        )
    };
    let n = above.count + m;
    if n > limits.max_n as u64 {
        return Err(Error::CapacityExhausted(format!(
            "complexity exceeds the limit n <= {}",
            limits.max_n
        )));
    }
    let budget = rounding_budget(problem.dimension());
    let slack = if value > problem.dropped_ceiling * (1.0 + budget) {
        0.0
    } else {
        problem.relative_slack
    };
    Ok(ComplexityResult {
        n,
        captured_mass: captured * trace,
        target_mass: target * trace,
        truncation_slack: problem.relative_slack * trace,
        certified: is_certified(n, captured, previous, target, slack, budget),
    })
}
