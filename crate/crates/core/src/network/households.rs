use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::population::{AgeGroup, Population};
use crate::rng::{self, stage};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Household {
    pub id: u32,
    pub tile: u32,
    pub members: Vec<u32>,
}

/// Partition of the agents into co-resident households.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Households {
    list: Vec<Household>,
    household_of: Vec<u32>,
}

impl Households {
    /// Validates that `list` is a partition of `0..agent_count` with dense ids.
    pub fn new(list: Vec<Household>, agent_count: usize) -> Result<Self> {
        let mut household_of = vec![u32::MAX; agent_count];
        for (i, h) in list.iter().enumerate() {
            if h.id as usize != i {
                return Err(Error::Input(format!("household ids must be dense; position {i} holds id {}", h.id)));
            }
            if h.members.is_empty() {
                return Err(Error::Input(format!("household {} is empty", h.id)));
            }
            for &m in &h.members {
                let slot = household_of
                    .get_mut(m as usize)
                    .ok_or_else(|| Error::Input(format!("household {} lists unknown agent {m}", h.id)))?;
                if *slot != u32::MAX {
                    return Err(Error::Input(format!("agent {m} belongs to two households")));
                }
                *slot = h.id;
            }
        }
        if let Some(a) = household_of.iter().position(|h| *h == u32::MAX) {
            return Err(Error::Input(format!("agent {a} has no household")));
        }
        Ok(Self { list, household_of })
    }

    pub fn agent_count(&self) -> usize {
        self.household_of.len()
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Household> {
        self.list.iter()
    }

    pub fn get(&self, id: u32) -> &Household {
        &self.list[id as usize]
    }

    #[inline]
    pub fn household_of(&self, agent: u32) -> u32 {
        self.household_of[agent as usize]
    }

    #[inline]
    pub fn same_household(&self, u: u32, v: u32) -> bool {
        self.household_of[u as usize] == self.household_of[v as usize]
    }

    /// All within-household pairs as `(min, max)`, sorted.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for h in &self.list {
            for (i, &a) in h.members.iter().enumerate() {
                for &b in &h.members[i + 1..] {
                    out.push((a.min(b), a.max(b)));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Categorical distribution over household sizes `1..=len`.
#[derive(Debug, Clone, PartialEq)]
pub struct HouseholdSizes(Vec<f64>);

impl HouseholdSizes {
    /// `probabilities[k]` is the probability of size `k + 1`.
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::Input("household size distribution is empty".into()));
        }
        if let Some(p) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Input(format!("household size probabilities must be nonnegative, got {p}")));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!("household size probabilities must sum to 1, got {sum}")));
        }
        Ok(Self(probabilities))
    }

    /// Every household has exactly `size` members.
    pub fn fixed(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Input("household size must be at least 1".into()));
        }
        let mut p = vec![0.0; size];
        p[size - 1] = 1.0;
        Self::new(p)
    }

    /// Italian-like shares of sizes 1 to 5.
    pub fn italian_default() -> Self {
        Self(vec![0.33, 0.27, 0.19, 0.15, 0.06])
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn max_size(&self) -> usize {
        self.0.len()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let x = rng.random::<f64>();
        let mut acc = 0.0;
        for (k, p) in self.0.iter().enumerate() {
            acc += p;
            if x < acc {
                return k + 1;
            }
        }
        self.0.iter().rposition(|p| *p > 0.0).unwrap_or(0) + 1
    }
}

/// How often the grouping rules had to be relaxed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HouseholdReport {
    /// Households headed by a child because no older resident was left.
    pub child_heads: u32,
    /// Children placed in a household without an adult or elderly member.
    pub unsupervised_children: u32,
    /// Co-heads drawn from a non-adjacent age group.
    pub distant_partners: u32,
}

impl HouseholdReport {
    /// True when the child rule could not be honoured somewhere.
    pub fn fallback_fired(&self) -> bool {
        self.child_heads > 0 || self.unsupervised_children > 0
    }

    fn absorb(&mut self, other: HouseholdReport) {
        self.child_heads += other.child_heads;
        self.unsupervised_children += other.unsupervised_children;
        self.distant_partners += other.distant_partners;
    }
}

/// Partitions each tile's residents into households.
///
/// Rules: members share the tile; a household with children has at least one
/// adult or elderly member; the second member of a multi-person household is
/// drawn from the head's age group or an adjacent one. When a tile cannot
/// satisfy the child rule the grouping is relaxed, counted in the report and
/// logged.
pub fn build_households(population: &Population, sizes: &HouseholdSizes, seed: u64) -> Result<(Households, HouseholdReport)> {
    let mut list = Vec::new();
    let mut report = HouseholdReport::default();
    for tile in population.territory.tiles() {
        let mut rng = rng::stream(seed, &[stage::HOUSEHOLDS, tile.id as u64]);
        let residents = population.residents(tile.id);
        let (groups, tile_report) = group_tile(residents.iter().map(|a| (a.id, a.age)), sizes, &mut rng);
        if tile_report.fallback_fired() {
            log::warn!(
                "tile {}: household rules relaxed ({} child heads, {} unsupervised children)",
                tile.id,
                tile_report.child_heads,
                tile_report.unsupervised_children
            );
        }
        report.absorb(tile_report);
        for members in groups {
            list.push(Household { id: list.len() as u32, tile: tile.id, members });
        }
    }
    let households = Households::new(list, population.len())?;
    Ok((households, report))
}

struct Draft {
    size: usize,
    head_age: AgeGroup,
    members: Vec<u32>,
}

impl Draft {
    fn free(&self) -> usize {
        self.size - self.members.len()
    }
}

fn group_tile<R: Rng + ?Sized>(
    residents: impl Iterator<Item = (u32, AgeGroup)>,
    sizes: &HouseholdSizes,
    rng: &mut R,
) -> (Vec<Vec<u32>>, HouseholdReport) {
    let mut report = HouseholdReport::default();
    let mut pools: [Vec<u32>; 4] = Default::default();
    let mut total = 0usize;
    for (id, age) in residents {
        pools[age.index()].push(id);
        total += 1;
    }
    for p in pools.iter_mut() {
        p.shuffle(rng);
    }

    let mut drafts: Vec<Draft> = Vec::new();
    let mut remaining = total;
    while remaining > 0 {
        let size = sizes.sample(rng).min(remaining);
        remaining -= size;
        drafts.push(Draft { size, head_age: AgeGroup::Children, members: Vec::with_capacity(size) });
    }
    // largest first so family heads go where the child slots are
    drafts.sort_by_key(|d| core::cmp::Reverse(d.size));

    for d in drafts.iter_mut() {
        let head_age = pick_head(&mut pools, rng);
        if head_age.is_child() {
            report.child_heads += 1;
        }
        d.head_age = head_age;
        d.members.push(pools[head_age.index()].pop().unwrap());
    }

    // children go behind family heads, keeping one partner slot when possible
    let children = AgeGroup::Children.index();
    for d in drafts.iter_mut().filter(|d| d.head_age.can_head_family() && d.size >= 3) {
        while d.free() > 1 {
            match pools[children].pop() {
                Some(c) => d.members.push(c),
                None => break,
            }
        }
    }
    for d in drafts.iter_mut().filter(|d| d.head_age.can_head_family()) {
        while d.free() > 0 {
            match pools[children].pop() {
                Some(c) => d.members.push(c),
                None => break,
            }
        }
    }
    for d in drafts.iter_mut() {
        while d.free() > 0 {
            match pools[children].pop() {
                Some(c) => {
                    report.unsupervised_children += 1;
                    d.members.push(c)
                }
                None => break,
            }
        }
    }

    // partners: same group for everyone first, then adjacent, then anyone
    for pass in [PartnerPass::Same, PartnerPass::Adjacent, PartnerPass::Any] {
        for d in drafts.iter_mut().filter(|d| d.size >= 2 && d.free() > 0 && d.members.len() == 1) {
            if let Some((age, id)) = pick_partner(&mut pools, d.head_age, pass) {
                if pass == PartnerPass::Any && !d.head_age.is_child() && !(age == d.head_age || age.is_adjacent(d.head_age)) {
                    report.distant_partners += 1;
                }
                d.members.push(id);
            }
        }
    }

    let mut rest: Vec<u32> = pools.iter_mut().flat_map(|p| p.drain(..)).collect();
    rest.shuffle(rng);
    for d in drafts.iter_mut() {
        while d.free() > 0 {
            d.members.push(rest.pop().expect("slots match residents"));
        }
    }
    debug_assert!(rest.is_empty());

    (drafts.into_iter().map(|d| d.members).collect(), report)
}

fn pick_head<R: Rng + ?Sized>(pools: &mut [Vec<u32>; 4], rng: &mut R) -> AgeGroup {
    let adults = pools[AgeGroup::Adults.index()].len();
    let elderly = pools[AgeGroup::Elderly.index()].len();
    if adults + elderly > 0 {
        if rng.random_range(0..adults + elderly) < adults {
            AgeGroup::Adults
        } else {
            AgeGroup::Elderly
        }
    } else if !pools[AgeGroup::Young.index()].is_empty() {
        AgeGroup::Young
    } else {
        AgeGroup::Children
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PartnerPass {
    Same,
    Adjacent,
    Any,
}

fn pick_partner(pools: &mut [Vec<u32>; 4], head: AgeGroup, pass: PartnerPass) -> Option<(AgeGroup, u32)> {
    let adult_groups = [AgeGroup::Young, AgeGroup::Adults, AgeGroup::Elderly];
    let candidates = adult_groups.iter().copied().filter(|g| match pass {
        PartnerPass::Same => *g == head,
        PartnerPass::Adjacent => g.is_adjacent(head) && !head.is_child(),
        PartnerPass::Any => true,
    });
    // the fullest eligible pool keeps later households matchable
    let g = candidates.max_by_key(|g| pools[g.index()].len())?;
    pools[g.index()].pop().map(|id| (g, id))
}
