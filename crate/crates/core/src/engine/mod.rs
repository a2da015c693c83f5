//! Ordered product spectrum of a tensor-product element and its
//! average-case approximation complexity.
//!
//! The eigenvalues of `X_d = X_{1,1} (x) ... (x) X_{1,d}` are all products
//! `prod_j lambda_{k_j}` over multi-indices `(k_1, ..., k_d)`. The engine
//! streams them in non-increasing order with a best-first search over the
//! index lattice: a popped multi-index only spawns successors in coordinates
//! `j >= last`, where `last` is the coordinate its parent incremented, so every
//! multi-index has exactly one parent and no visited set is needed.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::spectra::CoordinateSpectrum;
use crate::summation::CompensatedSum;

mod counting;

/// Default bound on the priority queue size.
pub const DEFAULT_MAX_QUEUE: usize = 20_000_000;

/// Default bound on any returned complexity or product count.
pub const DEFAULT_MAX_N: usize = 1_000_000_000_000;

/// Default bound on the steps of one threshold count.
pub const DEFAULT_MAX_WORK: u64 = 4_000_000_000;

/// Products streamed best-first before a complexity search switches to
/// threshold counting.
pub const STREAM_BUDGET: usize = 1 << 20;

/// Default cap on the lattice size accepted by [`brute_force_complexity`].
pub const DEFAULT_BRUTE_FORCE_CAP: usize = 10_000_000;

/// Dimension from which products are always formed in log space.
const LOG_SPACE_DIMENSION: usize = 30;

/// Smallest product magnitude handled in direct arithmetic.
const DIRECT_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineLimits {
    pub max_queue: usize,
    pub max_n: usize,
    pub max_work: u64,
}

impl Default for EngineLimits {
    fn default() -> Self {
        Self {
            max_queue: DEFAULT_MAX_QUEUE,
            max_n: DEFAULT_MAX_N,
            max_work: DEFAULT_MAX_WORK,
        }
    }
}

/// Tensor product of `d >= 1` coordinate spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductProblem {
    coordinates: Vec<CoordinateSpectrum>,
    total_trace: f64,
    relative_slack: f64,
    dropped_ceiling: f64,
}

impl ProductProblem {
    pub fn new(coordinates: Vec<CoordinateSpectrum>) -> Result<Self> {
        if coordinates.is_empty() {
            return Err(Error::InvalidParameter("a product problem needs at least one coordinate".into()));
        }
        let total_trace = coordinates.iter().map(|c| c.trace()).product();
        // lost mass <= trace * (1 - prod_j (1 - tau_j))
        let log_kept: f64 = coordinates.iter().map(|c| (-c.relative_tail()).ln_1p()).sum();
        let relative_slack = -log_kept.exp_m1();
        // largest product that uses at least one dropped eigenvalue, relative to the trace
        let top: f64 = coordinates.iter().map(|c| c.eigenvalues()[0] / c.trace()).product();
        let worst = coordinates
            .iter()
            .map(|c| c.dropped_max() / c.eigenvalues()[0])
            .fold(0.0, f64::max);
        Ok(Self {
            coordinates,
            total_trace,
            relative_slack,
            dropped_ceiling: top * worst,
        })
    }

    pub fn dimension(&self) -> usize {
        self.coordinates.len()
    }

    pub fn coordinates(&self) -> &[CoordinateSpectrum] {
        &self.coordinates
    }

    /// `prod_j trace_j`.
    pub fn total_trace(&self) -> f64 {
        self.total_trace
    }

    /// Upper bound on product-spectrum mass lost to per-coordinate truncation.
    pub fn total_tail_bound(&self) -> f64 {
        self.total_trace * self.relative_slack
    }

    /// [`Self::total_tail_bound`] divided by the total trace.
    pub fn relative_slack(&self) -> f64 {
        self.relative_slack
    }

    /// Upper bound on any product eigenvalue that involves a dropped
    /// coordinate eigenvalue, relative to the total trace.
    pub fn dropped_ceiling(&self) -> f64 {
        self.dropped_ceiling
    }

    /// Number of multi-indices in the truncated lattice (saturating).
    pub fn lattice_size(&self) -> usize {
        self.coordinates
            .iter()
            .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
            .unwrap_or(usize::MAX)
    }

    /// Appends a coordinate.
    pub fn extended(&self, coordinate: CoordinateSpectrum) -> Result<Self> {
        let mut coords = self.coordinates.clone();
        coords.push(coordinate);
        Self::new(coords)
    }
}

/// Approximation complexity for one error threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityResult {
    pub n: u64,
    /// Sum of the top `n` product eigenvalues.
    pub captured_mass: f64,
    /// `(1 - eps^2) * total_trace`.
    pub target_mass: f64,
    pub truncation_slack: f64,
    pub certified: bool,
}

/// Arithmetic budget for certification, relative to the total trace: four
/// ulps for the target and the compensated sum plus the rounding carried by
/// each `d`-fold product and its normalization.
fn rounding_budget(d: usize) -> f64 {
    (4.0 + 2.0 * d as f64) * f64::EPSILON
}

/// `certified` rule shared by the engine and the oracle, in units of the total
/// trace. Undercounting by truncation can only make `n` too large, so the
/// crossing is exact once the previous partial sum clears the target by more
/// than the slack. When the `n`-th value exceeds every product touching a
/// dropped eigenvalue the partial sums are exact and the slack drops out.
fn is_certified(n: u64, captured: f64, previous: f64, target: f64, slack: f64, budget: f64) -> bool {
    let reached = captured - target > budget;
    let previous_short = n == 1 || target - previous > slack + budget;
    reached && previous_short
}

fn validate_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct Node {
    key: f64,
    index: Box<[u32]>,
    last: u32,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // ties go to the lexicographically smaller multi-index
        self.key
            .total_cmp(&other.key)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Streams product eigenvalues in non-increasing order.
struct ProductStream<'a> {
    coords: Vec<&'a [f64]>,
    scales: Vec<f64>,
    log_scales: Vec<f64>,
    log_space: bool,
    heap: BinaryHeap<Node>,
    max_queue: usize,
}

impl<'a> ProductStream<'a> {
    /// `normalized` divides every coordinate by its trace.
    fn new(problem: &'a ProductProblem, normalized: bool, max_queue: usize) -> Self {
        let coords: Vec<&[f64]> = problem.coordinates.iter().map(|c| c.eigenvalues()).collect();
        let scales: Vec<f64> = problem
            .coordinates
            .iter()
            .map(|c| if normalized { 1.0 / c.trace() } else { 1.0 })
            .collect();
        let log_scales: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
        let min_positive = |c: &[f64]| c.iter().rev().copied().find(|&x| x > 0.0).unwrap_or(c[0]);
        let tiny_entry = coords.iter().any(|c| min_positive(c) < DIRECT_FLOOR);
        let smallest_log: f64 = coords
            .iter()
            .zip(&log_scales)
            .map(|(c, ls)| min_positive(c).ln() + ls)
            .sum();
        let log_space =
            coords.len() >= LOG_SPACE_DIMENSION || tiny_entry || smallest_log < DIRECT_FLOOR.ln();
        let mut stream = Self {
            coords,
            scales,
            log_scales,
            log_space,
            heap: BinaryHeap::new(),
            max_queue,
        };
        let root = vec![0u32; stream.coords.len()].into_boxed_slice();
        let key = stream.key(&root);
        stream.heap.push(Node {
            key,
            index: root,
            last: 0,
        });
        stream
    }

    fn key(&self, index: &[u32]) -> f64 {
        if self.log_space {
            index
                .iter()
                .zip(&self.coords)
                .zip(&self.log_scales)
                .map(|((&k, c), ls)| c[k as usize].ln() + ls)
                .sum()
        } else {
            index
                .iter()
                .zip(&self.coords)
                .zip(&self.scales)
                .map(|((&k, c), s)| c[k as usize] * s)
                .product()
        }
    }

    fn value(&self, key: f64) -> f64 {
        if self.log_space {
            key.exp()
        } else {
            key
        }
    }

    fn next_value(&mut self) -> Result<Option<f64>> {
        let Some(node) = self.heap.pop() else {
            return Ok(None);
        };
        for j in node.last as usize..self.coords.len() {
            let next = node.index[j] as usize + 1;
            if next >= self.coords[j].len() {
                continue;
            }
            let mut index = node.index.clone();
            index[j] = next as u32;
            let key = self.key(&index);
            self.heap.push(Node {
                key,
                index,
                last: j as u32,
            });
        }
        if self.heap.len() > self.max_queue {
            return Err(Error::CapacityExhausted(format!(
                "priority queue exceeded {} entries",
                self.max_queue
            )));
        }
        Ok(Some(self.value(node.key)))
    }
}

/// The `n` largest product eigenvalues, non-increasing, with multiplicity.
/// Returns the whole truncated lattice if it holds fewer than `n` points.
pub fn top_products(problem: &ProductProblem, n: usize) -> Result<Vec<f64>> {
    top_products_with(problem, n, EngineLimits::default())
}

pub fn top_products_with(problem: &ProductProblem, n: usize, limits: EngineLimits) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if n > limits.max_n {
        return Err(Error::CapacityExhausted(format!("n = {n} exceeds the limit {}", limits.max_n)));
    }
    let mut stream = ProductStream::new(problem, false, limits.max_queue);
    let mut out = Vec::with_capacity(n.min(1 << 20));
    while out.len() < n {
        match stream.next_value()? {
            Some(v) => out.push(v),
            None => break,
        }
    }
    Ok(out)
}

/// Average-case approximation complexity `n^{X_d}(eps)`.
pub fn complexity(problem: &ProductProblem, eps: f64) -> Result<ComplexityResult> {
    complexity_with(problem, eps, EngineLimits::default())
}

pub fn complexity_with(problem: &ProductProblem, eps: f64, limits: EngineLimits) -> Result<ComplexityResult> {
    complexity_many_with(problem, &[eps], limits)
        .pop()
        .expect("one threshold in, one result out")
}

/// Complexities for several thresholds from a single pass over the product
/// spectrum. Results follow the order of `eps_list`.
pub fn complexity_many_with(
    problem: &ProductProblem,
    eps_list: &[f64],
    limits: EngineLimits,
) -> Vec<Result<ComplexityResult>> {
    let mut results: Vec<Option<Result<ComplexityResult>>> = vec![None; eps_list.len()];
    let mut pending: Vec<(usize, f64)> = Vec::new();
    for (i, &eps) in eps_list.iter().enumerate() {
        match validate_eps(eps) {
            Ok(()) => pending.push((i, 1.0 - eps * eps)),
            Err(e) => results[i] = Some(Err(e)),
        }
    }
    // smallest target first
    pending.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let trace = problem.total_trace;
    let slack = problem.relative_slack;
    let budget = rounding_budget(problem.dimension());
    let ceiling = problem.dropped_ceiling * (1.0 + budget);
    let finish = |n: u64, value: f64, captured: f64, previous: f64, target: f64| ComplexityResult {
        n,
        captured_mass: captured * trace,
        target_mass: target * trace,
        truncation_slack: slack * trace,
        certified: is_certified(
            n,
            captured,
            previous,
            target,
            if value > ceiling { 0.0 } else { slack },
            budget,
        ),
    };

    let stream_limit = limits.max_n.min(STREAM_BUDGET);
    let mut stream = ProductStream::new(problem, true, limits.max_queue);
    let mut acc = CompensatedSum::new();
    let mut previous = 0.0;
    let mut last_value = None;
    let mut n: u64 = 0;
    let mut next = 0;
    while next < pending.len() {
        if n as usize >= stream_limit {
            break;
        }
        let value = match stream.next_value() {
            Ok(Some(v)) => v,
            Ok(None) => {
                let captured = acc.value();
                for &(i, target) in &pending[next..] {
                    results[i] = Some(Err(Error::TargetUnreachable {
                        captured: captured * trace,
                        target: target * trace,
                    }));
                }
                next = pending.len();
                break;
            }
            // the queue is full; counting needs no queue
            Err(_) => break,
        };
        n += 1;
        acc.add(value);
        last_value = Some(value);
        let captured = acc.value();
        while next < pending.len() && captured >= pending[next].1 {
            let (i, target) = pending[next];
            results[i] = Some(Ok(finish(n, value, captured, previous, target)));
            next += 1;
        }
        previous = captured;
    }
    if next < pending.len() {
        if limits.max_n <= STREAM_BUDGET && n as usize >= limits.max_n {
            for &(i, _) in &pending[next..] {
                results[i] = Some(Err(Error::CapacityExhausted(format!(
                    "complexity exceeds the limit n <= {}",
                    limits.max_n
                ))));
            }
        } else {
            let counter = counting::ThresholdCounter::new(problem, limits.max_work);
            for &(i, target) in &pending[next..] {
                results[i] = Some(counting::complexity_by_threshold(
                    problem, &counter, target, last_value, limits,
                ));
            }
        }
    }
    results
        .into_iter()
        .map(|r| r.expect("every threshold resolved"))
        .collect()
}

/// Complexity by threshold counting alone, skipping the best-first stream.
pub fn complexity_by_counting(problem: &ProductProblem, eps: f64, limits: EngineLimits) -> Result<ComplexityResult> {
    validate_eps(eps)?;
    let counter = counting::ThresholdCounter::new(problem, limits.max_work);
    counting::complexity_by_threshold(problem, &counter, 1.0 - eps * eps, None, limits)
}

/// `sum_{k > n} lambda_k` of the product spectrum, i.e. `trace - (top-n sum)`.
pub fn tail_mass_at(problem: &ProductProblem, n: usize) -> Result<f64> {
    Ok(*error_tail_curve(problem, n, EngineLimits::default())?
        .last()
        .expect("n >= 1"))
}

/// Tail masses `sum_{k > m} lambda_k` for `m = 1..=n`.
pub fn error_tail_curve(problem: &ProductProblem, n: usize, limits: EngineLimits) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if n > limits.max_n {
        return Err(Error::CapacityExhausted(format!("n = {n} exceeds the limit {}", limits.max_n)));
    }
    let mut stream = ProductStream::new(problem, true, limits.max_queue);
    let mut remaining = CompensatedSum::with_initial(1.0);
    let mut out = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        if let Some(v) = stream.next_value()? {
            remaining.add(-v);
        }
        out.push(remaining.value().max(0.0) * problem.total_trace);
    }
    Ok(out)
}

/// Relative errors `e(m) / e(0) = sqrt(tail_m / trace)` for `m = 1..=n`.
pub fn error_curve(problem: &ProductProblem, n: usize, limits: EngineLimits) -> Result<Vec<f64>> {
    let trace = problem.total_trace;
    Ok(error_tail_curve(problem, n, limits)?
        .into_iter()
        .map(|t| (t / trace).sqrt())
        .collect())
}

/// Exhaustive oracle: materializes every product of the truncated lattice,
/// sorts, and scans for the crossing. Independent of the lattice search.
pub fn brute_force_complexity(problem: &ProductProblem, eps: f64) -> Result<ComplexityResult> {
    brute_force_complexity_capped(problem, eps, DEFAULT_BRUTE_FORCE_CAP)
}

pub fn brute_force_complexity_capped(problem: &ProductProblem, eps: f64, cap: usize) -> Result<ComplexityResult> {
    validate_eps(eps)?;
    let size = problem.lattice_size();
    if size > cap {
        return Err(Error::CapacityExhausted(format!(
            "lattice of {size} products exceeds the brute-force cap {cap}"
        )));
    }
    let coords = problem.coordinates();
    let mut products = Vec::with_capacity(size);
    let mut index = vec![0usize; coords.len()];
    'outer: loop {
        products.push(coords.iter().zip(&index).map(|(c, &k)| c.eigenvalues()[k]).product::<f64>());
        for j in (0..coords.len()).rev() {
            index[j] += 1;
            if index[j] < coords[j].len() {
                continue 'outer;
            }
            index[j] = 0;
        }
        break;
    }
    products.sort_by(|a, b| b.total_cmp(a));

    let trace: f64 = coords.iter().map(|c| c.trace()).product();
    let target = (1.0 - eps * eps) * trace;
    let slack = problem.relative_slack() * trace;
    let budget = rounding_budget(coords.len()) * trace;
    let ceiling = problem.dropped_ceiling() * trace * (1.0 + budget / trace);
    let mut acc = CompensatedSum::new();
    let mut previous = 0.0;
    for (i, p) in products.iter().enumerate() {
        acc.add(*p);
        let captured = acc.value();
        if captured >= target {
            let n = i as u64 + 1;
            return Ok(ComplexityResult {
                n,
                captured_mass: captured,
                target_mass: target,
                truncation_slack: slack,
                certified: is_certified(
                    n,
                    captured,
                    previous,
                    target,
                    if *p > ceiling { 0.0 } else { slack },
                    budget,
                ),
            });
        }
        previous = captured;
    }
    Err(Error::TargetUnreachable {
        captured: acc.value(),
        target,
    })
}
