//! Setups and the physical AND / OR connectives.
//!
//! A [`CanonicalSetup`] is a source point, a detector point and a time-ordered
//! list of filters strictly between them. Setup expressions ([`SetupExpr`])
//! are trees of AND / OR over bracketed setups; [`canonicalize`] folds a tree
//! into its unique canonical setup or reports which subexpression is not an
//! allowed composition.

mod parse;
mod random;

use std::fmt;

use thiserror::Error;

pub use parse::{parse, ParseError};
pub use random::{
    expand, random_and_pair, random_canonical, random_canonical_from, random_or_pair, random_rewrite,
    random_setup, rewrite_once, SetupRng,
};

/// Position in DSL source text, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

fn at(span: &Option<Span>) -> String {
    span.map(|s| format!(" at {s}")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SetupError {
    #[error("junction mismatch{}: earlier setup ends at {earlier_dst}, later setup starts at {later_src}", at(.span))]
    JunctionMismatch {
        earlier_dst: SpacetimePoint,
        later_src: SpacetimePoint,
        span: Option<Span>,
    },
    #[error("setups are not OR-composable{}: {reason}", at(.span))]
    NotOrComposable { reason: String, span: Option<Span> },
    #[error("OR operands share holes in the filter at t={time}{}", at(.span))]
    OverlappingHoles { time: i64, span: Option<Span> },
    #[error("invalid setup{}: {reason}", at(.span))]
    InvalidSetup { reason: String, span: Option<Span> },
    #[error("site {site} is outside a lattice of {num_sites} sites{}", at(.span))]
    UnboundSite {
        site: usize,
        num_sites: usize,
        span: Option<Span>,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl SetupError {
    fn with_span(self, node: Option<Span>) -> Self {
        use SetupError::*;
        match self {
            JunctionMismatch {
                earlier_dst,
                later_src,
                span: None,
            } => JunctionMismatch {
                earlier_dst,
                later_src,
                span: node,
            },
            NotOrComposable { reason, span: None } => NotOrComposable { reason, span: node },
            OverlappingHoles { time, span: None } => OverlappingHoles { time, span: node },
            InvalidSetup { reason, span: None } => InvalidSetup { reason, span: node },
            other => other,
        }
    }

    pub fn span(&self) -> Option<Span> {
        use SetupError::*;
        match self {
            JunctionMismatch { span, .. }
            | NotOrComposable { span, .. }
            | OverlappingHoles { span, .. }
            | InvalidSetup { span, .. }
            | UnboundSite { span, .. } => *span,
            Parse(e) => Some(Span {
                start: e.pos,
                end: e.pos,
            }),
        }
    }
}

fn invalid(reason: impl Into<String>) -> SetupError {
    SetupError::InvalidSetup {
        reason: reason.into(),
        span: None,
    }
}

/// Lattice site at a discrete time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpacetimePoint {
    pub site: usize,
    pub time: i64,
}

impl SpacetimePoint {
    pub const fn new(site: usize, time: i64) -> Self {
        Self { site, time }
    }
}

impl fmt::Display for SpacetimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.site, self.time)
    }
}

/// Time slice with a nonempty, strictly increasing set of holes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Filter {
    time: i64,
    holes: Vec<usize>,
}

impl Filter {
    /// Sorts the holes; rejects an empty or repeated hole list.
    pub fn new(time: i64, mut holes: Vec<usize>) -> Result<Self, SetupError> {
        if holes.is_empty() {
            return Err(invalid(format!("filter at t={time} has no holes")));
        }
        holes.sort_unstable();
        if let Some(w) = holes.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid(format!("filter at t={time} repeats hole {}", w[0])));
        }
        Ok(Self { time, holes })
    }

    pub fn single(time: i64, site: usize) -> Self {
        Self {
            time,
            holes: vec![site],
        }
    }

    pub fn time(&self) -> i64 {
        self.time
    }

    pub fn holes(&self) -> &[usize] {
        &self.holes
    }

    pub fn projector(&self) -> crate::hilbert::Projector {
        crate::hilbert::Projector::new(self.holes.clone())
    }

    fn is_disjoint(&self, other: &Filter) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.holes.len() && j < other.holes.len() {
            match self.holes[i].cmp(&other.holes[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    fn union(&self, other: &Filter) -> Filter {
        let mut holes: Vec<usize> = self.holes.iter().chain(&other.holes).copied().collect();
        holes.sort_unstable();
        holes.dedup();
        Filter { time: self.time, holes }
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, h) in self.holes.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{h}")?;
        }
        write!(f, "}}@{}", self.time)
    }
}

/// Normal form `[dst; filters...; src]`, printed latest filter first; structural equality is setup identity.
///
/// `src.time < dst.time` with filters at strictly increasing interior times.
/// The one degenerate case allowed is the zero-step setup `src == dst` with
/// no filters, which is the unit for AND.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalSetup {
    src: SpacetimePoint,
    dst: SpacetimePoint,
    filters: Vec<Filter>,
}

impl CanonicalSetup {
    pub fn new(src: SpacetimePoint, dst: SpacetimePoint, filters: Vec<Filter>) -> Result<Self, SetupError> {
        if src.time > dst.time {
            return Err(invalid(format!("source time {} is after detector time {}", src.time, dst.time)));
        }
        if src.time == dst.time {
            if src != dst {
                return Err(invalid(format!("source {src} and detector {dst} share a time slice")));
            }
            if !filters.is_empty() {
                return Err(invalid("zero-step setup cannot hold filters"));
            }
        }
        let mut last = src.time;
        for filter in &filters {
            if filter.time <= last {
                return Err(invalid(format!(
                    "filter at t={} is not strictly after t={last}",
                    filter.time
                )));
            }
            last = filter.time;
        }
        if !filters.is_empty() && last >= dst.time {
            return Err(invalid(format!("filter at t={last} is not before detector time {}", dst.time)));
        }
        Ok(Self { src, dst, filters })
    }

    pub fn elementary(src: SpacetimePoint, dst: SpacetimePoint) -> Result<Self, SetupError> {
        Self::new(src, dst, Vec::new())
    }

    pub fn src(&self) -> SpacetimePoint {
        self.src
    }

    pub fn dst(&self) -> SpacetimePoint {
        self.dst
    }

    pub fn filters(&self) -> &[Filter] {
        &self.filters
    }

    pub fn is_zero_step(&self) -> bool {
        self.src.time == self.dst.time
    }

    pub fn max_site(&self) -> usize {
        self.filters
            .iter()
            .flat_map(|f| f.holes.iter().copied())
            .chain([self.src.site, self.dst.site])
            .max()
            .unwrap_or(0)
    }

    /// Checks every site against a lattice of `num_sites`.
    pub fn check_sites(&self, num_sites: usize) -> Result<(), SetupError> {
        let site = self.max_site();
        if site >= num_sites {
            return Err(SetupError::UnboundSite {
                site,
                num_sites,
                span: None,
            });
        }
        Ok(())
    }

    /// Inserts a filter; its time must fall strictly between the existing
    /// neighbours.
    pub fn with_filter(&self, filter: Filter) -> Result<Self, SetupError> {
        let mut filters = self.filters.clone();
        let pos = filters.partition_point(|f| f.time < filter.time);
        filters.insert(pos, filter);
        Self::new(self.src, self.dst, filters)
    }

    /// Replaces the holes of filter `index`.
    pub fn with_holes(&self, index: usize, holes: Vec<usize>) -> Result<Self, SetupError> {
        let mut filters = self.filters.clone();
        let slot = filters
            .get_mut(index)
            .ok_or_else(|| invalid(format!("no filter with index {index}")))?;
        *slot = Filter::new(slot.time, holes)?;
        Self::new(self.src, self.dst, filters)
    }

    /// Number of hole tuples (one hole per filter), saturating.
    pub fn path_count(&self) -> u128 {
        self.filters
            .iter()
            .fold(1u128, |acc, f| acc.saturating_mul(f.holes.len() as u128))
    }
}

impl fmt::Display for CanonicalSetup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.dst)?;
        for filter in self.filters.iter().rev() {
            write!(f, "; {filter}")?;
        }
        write!(f, "; {}]", self.src)
    }
}

/// `later AND earlier`: the earlier setup must end where the later begins.
///
/// The junction point becomes a single-hole filter. A zero-step operand is
/// the unit and leaves the other operand unchanged.
pub fn and_compose(later: &CanonicalSetup, earlier: &CanonicalSetup) -> Result<CanonicalSetup, SetupError> {
    if earlier.dst != later.src {
        return Err(SetupError::JunctionMismatch {
            earlier_dst: earlier.dst,
            later_src: later.src,
            span: None,
        });
    }
    if later.is_zero_step() {
        return Ok(earlier.clone());
    }
    if earlier.is_zero_step() {
        return Ok(later.clone());
    }
    let junction = earlier.dst;
    let filters = earlier
        .filters
        .iter()
        .cloned()
        .chain(std::iter::once(Filter::single(junction.time, junction.site)))
        .chain(later.filters.iter().cloned())
        .collect();
    CanonicalSetup::new(earlier.src, later.dst, filters)
}

/// `a OR b`: allowed only when the setups agree everywhere except one
/// filter, where their holes are disjoint.
pub fn or_compose(a: &CanonicalSetup, b: &CanonicalSetup) -> Result<CanonicalSetup, SetupError> {
    let not_or = |reason: String| SetupError::NotOrComposable { reason, span: None };
    if a.src != b.src || a.dst != b.dst {
        return Err(not_or(format!("endpoints differ ({} vs {})", a, b)));
    }
    if a.filters.len() != b.filters.len() {
        return Err(not_or(format!(
            "filter counts differ ({} vs {})",
            a.filters.len(),
            b.filters.len()
        )));
    }
    if let Some((fa, fb)) = a.filters.iter().zip(&b.filters).find(|(fa, fb)| fa.time != fb.time) {
        return Err(not_or(format!("filter times differ (t={} vs t={})", fa.time, fb.time)));
    }
    let differing: Vec<usize> = (0..a.filters.len())
        .filter(|&i| a.filters[i].holes != b.filters[i].holes)
        .collect();
    match differing.as_slice() {
        [] => match a.filters.first() {
            Some(f) => Err(SetupError::OverlappingHoles { time: f.time, span: None }),
            None => Err(not_or("setups have no filter in which to merge holes".into())),
        },
        &[j] => {
            let (fa, fb) = (&a.filters[j], &b.filters[j]);
            if !fa.is_disjoint(fb) {
                return Err(SetupError::OverlappingHoles { time: fa.time, span: None });
            }
            let mut filters = a.filters.clone();
            filters[j] = fa.union(fb);
            Ok(CanonicalSetup {
                src: a.src,
                dst: a.dst,
                filters,
            })
        }
        many => Err(not_or(format!("setups differ at {} filters", many.len()))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    /// Bracketed setup `[dst; filters...; src]`, written latest filter
    /// first but stored in time order; validated on canonicalization. With
    /// no filters this is an elementary setup.
    Leaf {
        dst: SpacetimePoint,
        filters: Vec<Filter>,
        src: SpacetimePoint,
    },
    And {
        later: Box<SetupExpr>,
        earlier: Box<SetupExpr>,
    },
    Or {
        left: Box<SetupExpr>,
        right: Box<SetupExpr>,
    },
}

/// AND / OR expression tree with optional source spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetupExpr {
    pub kind: ExprKind,
    pub span: Option<Span>,
}

impl SetupExpr {
    pub fn elementary(src: SpacetimePoint, dst: SpacetimePoint) -> Self {
        Self::leaf(dst, Vec::new(), src)
    }

    pub fn leaf(dst: SpacetimePoint, filters: Vec<Filter>, src: SpacetimePoint) -> Self {
        Self {
            kind: ExprKind::Leaf { dst, filters, src },
            span: None,
        }
    }

    pub fn from_canonical(s: &CanonicalSetup) -> Self {
        Self::leaf(s.dst, s.filters.clone(), s.src)
    }

    pub fn and(later: SetupExpr, earlier: SetupExpr) -> Self {
        Self {
            kind: ExprKind::And {
                later: Box::new(later),
                earlier: Box::new(earlier),
            },
            span: None,
        }
    }

    pub fn or(left: SetupExpr, right: SetupExpr) -> Self {
        Self {
            kind: ExprKind::Or {
                left: Box::new(left),
                right: Box::new(right),
            },
            span: None,
        }
    }

    pub fn is_elementary(&self) -> bool {
        matches!(&self.kind, ExprKind::Leaf { filters, .. } if filters.is_empty())
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match &self.kind {
            ExprKind::Leaf { .. } => 1,
            ExprKind::And { later, earlier } => 1 + later.size() + earlier.size(),
            ExprKind::Or { left, right } => 1 + left.size() + right.size(),
        }
    }

    /// Rejects any site index outside `[0, num_sites)`, reporting the span of
    /// the bracket that holds it.
    pub fn check_sites(&self, num_sites: usize) -> Result<(), SetupError> {
        match &self.kind {
            ExprKind::Leaf { dst, filters, src } => {
                let worst = filters
                    .iter()
                    .flat_map(|f| f.holes.iter().copied())
                    .chain([src.site, dst.site])
                    .find(|&s| s >= num_sites);
                match worst {
                    Some(site) => Err(SetupError::UnboundSite {
                        site,
                        num_sites,
                        span: self.span,
                    }),
                    None => Ok(()),
                }
            }
            ExprKind::And { later: a, earlier: b } | ExprKind::Or { left: a, right: b } => {
                a.check_sites(num_sites)?;
                b.check_sites(num_sites)
            }
        }
    }

    /// Strips source spans, recursively.
    pub fn without_spans(&self) -> Self {
        let kind = match &self.kind {
            ExprKind::Leaf { .. } => self.kind.clone(),
            ExprKind::And { later, earlier } => ExprKind::And {
                later: Box::new(later.without_spans()),
                earlier: Box::new(earlier.without_spans()),
            },
            ExprKind::Or { left, right } => ExprKind::Or {
                left: Box::new(left.without_spans()),
                right: Box::new(right.without_spans()),
            },
        };
        Self { kind, span: None }
    }
}

impl From<&CanonicalSetup> for SetupExpr {
    fn from(s: &CanonicalSetup) -> Self {
        Self::from_canonical(s)
    }
}

/// Prints with the fewest parentheses that reparse to the same tree:
/// OR binds looser than AND and both associate to the left.
impl fmt::Display for SetupExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn paren(f: &mut fmt::Formatter<'_>, e: &SetupExpr, wrap: bool) -> fmt::Result {
            if wrap {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match &self.kind {
            ExprKind::Leaf { dst, filters, src } => {
                write!(f, "[{dst}")?;
                for filter in filters.iter().rev() {
                    write!(f, "; {filter}")?;
                }
                write!(f, "; {src}]")
            }
            ExprKind::And { later, earlier } => {
                paren(f, later, matches!(later.kind, ExprKind::Or { .. }))?;
                f.write_str(" AND ")?;
                paren(f, earlier, !matches!(earlier.kind, ExprKind::Leaf { .. }))
            }
            ExprKind::Or { left, right } => {
                paren(f, left, false)?;
                f.write_str(" OR ")?;
                paren(f, right, matches!(right.kind, ExprKind::Or { .. }))
            }
        }
    }
}

/// Folds an expression into its canonical setup.
pub fn canonicalize(e: &SetupExpr) -> Result<CanonicalSetup, SetupError> {
    match &e.kind {
        ExprKind::Leaf { dst, filters, src } => {
            CanonicalSetup::new(*src, *dst, filters.clone()).map_err(|err| err.with_span(e.span))
        }
        ExprKind::And { later, earlier } => {
            let later = canonicalize(later)?;
            let earlier = canonicalize(earlier)?;
            and_compose(&later, &earlier).map_err(|err| err.with_span(e.span))
        }
        ExprKind::Or { left, right } => {
            let left = canonicalize(left)?;
            let right = canonicalize(right)?;
            or_compose(&left, &right).map_err(|err| err.with_span(e.span))
        }
    }
}

/// Site check against the lattice followed by canonicalization.
pub fn bind(e: &SetupExpr, num_sites: usize) -> Result<CanonicalSetup, SetupError> {
    e.check_sites(num_sites)?;
    canonicalize(e)
}
