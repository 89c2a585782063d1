//! Seeded generators of valid setups and rewrite-equivalent expressions.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{canonicalize, CanonicalSetup, ExprKind, Filter, SetupExpr, SpacetimePoint};
use crate::lattice::LatticeConfig;

pub type SetupRng = ChaCha8Rng;

const MAX_GAP: i64 = 3;
const MAX_EXPAND_DEPTH: usize = 6;

fn random_holes(rng: &mut SetupRng, num_sites: usize, max_holes: usize) -> Vec<usize> {
    let k = rng.random_range(1..=max_holes.min(num_sites));
    let mut holes = index::sample(rng, num_sites, k).into_vec();
    holes.sort_unstable();
    holes
}

/// Random canonical setup starting at `src`, with up to `max_filters` filters.
pub fn random_canonical_from(
    rng: &mut SetupRng,
    num_sites: usize,
    src: SpacetimePoint,
    max_filters: usize,
) -> CanonicalSetup {
    let n = rng.random_range(0..=max_filters);
    let mut time = src.time;
    let mut filters = Vec::with_capacity(n);
    for _ in 0..n {
        time += rng.random_range(1..=MAX_GAP);
        filters.push(Filter {
            time,
            holes: random_holes(rng, num_sites, 3),
        });
    }
    let dst = SpacetimePoint::new(rng.random_range(0..num_sites), time + rng.random_range(1..=MAX_GAP));
    CanonicalSetup { src, dst, filters }
}

pub fn random_canonical(rng: &mut SetupRng, num_sites: usize, max_filters: usize) -> CanonicalSetup {
    let src = SpacetimePoint::new(rng.random_range(0..num_sites), rng.random_range(0..=MAX_GAP));
    random_canonical_from(rng, num_sites, src, max_filters)
}

/// `(later, earlier)` with matching junction.
pub fn random_and_pair(
    rng: &mut SetupRng,
    num_sites: usize,
    max_filters: usize,
) -> (CanonicalSetup, CanonicalSetup) {
    let earlier = random_canonical(rng, num_sites, max_filters);
    let later = random_canonical_from(rng, num_sites, earlier.dst, max_filters);
    (later, earlier)
}

/// Two setups that agree except for disjoint holes in one filter.
pub fn random_or_pair(
    rng: &mut SetupRng,
    num_sites: usize,
    max_filters: usize,
) -> (CanonicalSetup, CanonicalSetup) {
    let mut base = random_canonical(rng, num_sites, max_filters.max(1));
    while base.filters.is_empty() {
        base = random_canonical(rng, num_sites, max_filters.max(1));
    }
    let j = rng.random_range(0..base.filters.len());
    let total = rng.random_range(2..=num_sites.min(4));
    let mut sites = index::sample(rng, num_sites, total).into_vec();
    sites.shuffle(rng);
    let cut = rng.random_range(1..total);
    let mut a = base.clone();
    let mut b = base;
    a.filters[j] = Filter::new(a.filters[j].time, sites[..cut].to_vec()).expect("distinct sites");
    b.filters[j] = Filter::new(b.filters[j].time, sites[cut..].to_vec()).expect("distinct sites");
    (a, b)
}

/// One random decomposition step of a canonical setup: an OR split of a
/// multi-hole filter or an AND split at a single-hole filter.
fn split_once(rng: &mut SetupRng, s: &CanonicalSetup) -> Option<SetupExpr> {
    if s.filters.is_empty() {
        return None;
    }
    let j = rng.random_range(0..s.filters.len());
    let filter = &s.filters[j];
    if filter.holes.len() > 1 {
        let mut holes = filter.holes.clone();
        holes.shuffle(rng);
        let cut = rng.random_range(1..holes.len());
        let a = s.with_holes(j, holes[..cut].to_vec()).expect("subset of valid holes");
        let b = s.with_holes(j, holes[cut..].to_vec()).expect("subset of valid holes");
        return Some(SetupExpr::or(SetupExpr::from_canonical(&a), SetupExpr::from_canonical(&b)));
    }
    let junction = SpacetimePoint::new(filter.holes[0], filter.time);
    let earlier = CanonicalSetup::new(s.src, junction, s.filters[..j].to_vec()).expect("prefix of valid setup");
    let later = CanonicalSetup::new(junction, s.dst, s.filters[j + 1..].to_vec()).expect("suffix of valid setup");
    Some(SetupExpr::and(
        SetupExpr::from_canonical(&later),
        SetupExpr::from_canonical(&earlier),
    ))
}

/// Random expression tree whose canonical form is `s`.
pub fn expand(rng: &mut SetupRng, s: &CanonicalSetup) -> SetupExpr {
    expand_to(rng, s, MAX_EXPAND_DEPTH)
}

fn expand_to(rng: &mut SetupRng, s: &CanonicalSetup, depth: usize) -> SetupExpr {
    if depth == 0 || rng.random_bool(0.2) {
        return SetupExpr::from_canonical(s);
    }
    match split_once(rng, s) {
        None => SetupExpr::from_canonical(s),
        Some(SetupExpr { kind, .. }) => match kind {
            ExprKind::And { later, earlier } => SetupExpr::and(
                expand_to(rng, &canonical_of(&later), depth - 1),
                expand_to(rng, &canonical_of(&earlier), depth - 1),
            ),
            ExprKind::Or { left, right } => SetupExpr::or(
                expand_to(rng, &canonical_of(&left), depth - 1),
                expand_to(rng, &canonical_of(&right), depth - 1),
            ),
            ExprKind::Leaf { .. } => unreachable!("split_once never yields a leaf"),
        },
    }
}

fn canonical_of(e: &SetupExpr) -> CanonicalSetup {
    canonicalize(e).expect("generated expressions are valid")
}

/// Deterministic random expression over `cfg`'s sites with up to
/// `max_filters` filters in its canonical form. Always canonicalizes.
pub fn random_setup(seed: u64, cfg: &LatticeConfig, max_filters: usize) -> SetupExpr {
    let mut rng = SetupRng::seed_from_u64(seed);
    let s = random_canonical(&mut rng, cfg.num_sites(), max_filters);
    expand(&mut rng, &s)
}

fn same_setup(a: &SetupExpr, b: &SetupExpr) -> bool {
    matches!((canonicalize(a), canonicalize(b)), (Ok(x), Ok(y)) if x == y)
}

/// Every algebraic rewrite applicable at the root of `e`.
fn local_rewrites(rng: &mut SetupRng, e: &SetupExpr) -> Vec<SetupExpr> {
    use SetupExpr as E;
    let mut out = Vec::new();
    match &e.kind {
        ExprKind::Leaf { .. } => {
            if let Ok(s) = canonicalize(e) {
                if let Some(split) = split_once(rng, &s) {
                    out.push(split);
                }
            }
        }
        ExprKind::And { later, earlier } => {
            if let ExprKind::And { later: a, earlier: b } = &later.kind {
                out.push(E::and((**a).clone(), E::and((**b).clone(), (**earlier).clone())));
            }
            if let ExprKind::And { later: b, earlier: c } = &earlier.kind {
                out.push(E::and(E::and((**later).clone(), (**b).clone()), (**c).clone()));
            }
            if let ExprKind::Or { left: b, right: c } = &earlier.kind {
                out.push(E::or(
                    E::and((**later).clone(), (**b).clone()),
                    E::and((**later).clone(), (**c).clone()),
                ));
            }
            if let ExprKind::Or { left: b, right: c } = &later.kind {
                out.push(E::or(
                    E::and((**b).clone(), (**earlier).clone()),
                    E::and((**c).clone(), (**earlier).clone()),
                ));
            }
        }
        ExprKind::Or { left, right } => {
            out.push(E::or((**right).clone(), (**left).clone()));
            if let ExprKind::Or { left: a, right: b } = &left.kind {
                out.push(E::or((**a).clone(), E::or((**b).clone(), (**right).clone())));
            }
            if let ExprKind::Or { left: b, right: c } = &right.kind {
                out.push(E::or(E::or((**left).clone(), (**b).clone()), (**c).clone()));
            }
            if let (ExprKind::And { later: a1, earlier: b }, ExprKind::And { later: a2, earlier: c }) =
                (&left.kind, &right.kind)
            {
                // Factor a common later part: (a b) OR (a c) = a (b OR c).
                if same_setup(a1, a2) {
                    out.push(E::and((**a1).clone(), E::or((**b).clone(), (**c).clone())));
                }
                // Factor a common earlier part: (b a) OR (c a) = (b OR c) a.
                if same_setup(b, c) {
                    out.push(E::and(E::or((**a1).clone(), (**a2).clone()), (**b).clone()));
                }
            }
        }
    }
    if !matches!(e.kind, ExprKind::Leaf { .. }) {
        if let Ok(s) = canonicalize(e) {
            out.push(SetupExpr::from_canonical(&s));
        }
    }
    out
}

fn rewrite_node(rng: &mut SetupRng, e: &SetupExpr, target: usize, seen: &mut usize) -> Option<SetupExpr> {
    let here = *seen;
    *seen += 1;
    if here == target {
        let mut options = local_rewrites(rng, e);
        if options.is_empty() {
            return None;
        }
        let pick = rng.random_range(0..options.len());
        return Some(options.swap_remove(pick));
    }
    match &e.kind {
        ExprKind::Leaf { .. } => None,
        ExprKind::And { later, earlier } => {
            if let Some(new) = rewrite_node(rng, later, target, seen) {
                return Some(SetupExpr::and(new, (**earlier).clone()));
            }
            rewrite_node(rng, earlier, target, seen).map(|new| SetupExpr::and((**later).clone(), new))
        }
        ExprKind::Or { left, right } => {
            if let Some(new) = rewrite_node(rng, left, target, seen) {
                return Some(SetupExpr::or(new, (**right).clone()));
            }
            rewrite_node(rng, right, target, seen).map(|new| SetupExpr::or((**left).clone(), new))
        }
    }
}

/// Applies one associativity, commutativity, distributivity, split or
/// collapse rewrite at a random node.
///
/// Returns `None` when the chosen rewrite does not apply or produces a
/// disallowed composition (OR associativity only holds when every
/// intermediate setup is allowed).
pub fn rewrite_once(rng: &mut SetupRng, e: &SetupExpr) -> Option<SetupExpr> {
    let target = rng.random_range(0..e.size());
    let out = rewrite_node(rng, e, target, &mut 0)?;
    canonicalize(&out).ok().map(|_| out)
}

/// Applies `steps` successful random rewrites (fewer if the expression
/// admits none).
pub fn random_rewrite(rng: &mut SetupRng, e: &SetupExpr, steps: usize) -> SetupExpr {
    let mut current = e.clone();
    let mut done = 0;
    let mut attempts = 0;
    while done < steps && attempts < 64 * steps.max(1) {
        attempts += 1;
        if let Some(next) = rewrite_once(rng, &current) {
            current = next;
            done += 1;
        }
    }
    current
}
