use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::{FacilityStaffTarget, HcwAssignment, HcwType, WorkforceParams};
use crate::error::{Error, Result};
use crate::geo::haversine_miles;
use crate::population::{FacilityKind, World};
use crate::rng::{categorical, SimRng};
use crate::sim::{Event, EventKind, EventLog};
use crate::types::{AgentId, Location};

const FT: usize = 0;
const PT: usize = 1;
const MS: usize = 2;
const CT: usize = 3;

/// Distance outcome for one cap.
#[derive(Debug, Clone, PartialEq)]
pub struct CapCheck {
    pub name: &'static str,
    pub share: f64,
    pub cap: f64,
    pub workers: usize,
}

impl CapCheck {
    pub fn ok(&self) -> bool {
        self.share <= self.cap
    }
}

/// Result of checking an assignment against the assignment criteria.
#[derive(Debug, Clone)]
pub struct AssignmentCheck {
    /// (criterion, holds, detail), in a fixed order.
    pub criteria: Vec<(&'static str, bool, String)>,
    pub caps: Vec<CapCheck>,
}

impl AssignmentCheck {
    pub fn all_hold(&self) -> bool {
        self.criteria.iter().all(|(_, ok, _)| *ok)
    }

    pub fn failures(&self) -> Vec<String> {
        self.criteria
            .iter()
            .filter(|(_, ok, _)| !ok)
            .map(|(name, _, detail)| format!("{name}: {detail}"))
            .collect()
    }
}

struct Geometry {
    /// County-centroid distances in miles.
    dist: Vec<Vec<f64>>,
}

impl Geometry {
    fn new(world: &World) -> Self {
        let dist = world
            .counties
            .iter()
            .map(|a| {
                world
                    .counties
                    .iter()
                    .map(|b| haversine_miles(a.lat, a.lon, b.lat, b.lon))
                    .collect()
            })
            .collect();
        Self { dist }
    }

    fn to_facility(&self, world: &World, home_county: usize, facility: usize) -> f64 {
        self.dist[home_county][world.facilities[facility].county]
    }
}

/// Distance from home county used by the caps: the secondary site for
/// multisite workers, the farthest site for contract workers.
fn cap_distance(world: &World, geo: &Geometry, a: &HcwAssignment) -> f64 {
    let home = world.agent(a.agent).home_county;
    a.secondary_facilities
        .iter()
        .map(|&f| geo.to_facility(world, home, f))
        .fold(0.0, f64::max)
}

fn cap_checks(world: &World, geo: &Geometry, hcws: &[HcwAssignment], params: &WorkforceParams) -> Vec<CapCheck> {
    params
        .caps
        .caps()
        .iter()
        .map(|&(name, t, miles, cap)| {
            let of_type: Vec<f64> = hcws
                .iter()
                .filter(|a| a.hcw_type == t)
                .map(|a| cap_distance(world, geo, a))
                .collect();
            let over = of_type.iter().filter(|d| **d > miles).count();
            let share = if of_type.is_empty() {
                0.0
            } else {
                over as f64 / of_type.len() as f64
            };
            CapCheck {
                name,
                share,
                cap,
                workers: of_type.len(),
            }
        })
        .collect()
}

/// Per-facility slot counts: [ft, pt, ms primary, ms secondary, contract].
fn required_slots(targets: &[(usize, &FacilityStaffTarget)], k: usize) -> BTreeMap<usize, [u64; 5]> {
    targets
        .iter()
        .map(|(f, t)| {
            let tt = t.targets.map(u64::from);
            (*f, [tt[FT], tt[PT], tt[MS], tt[MS], tt[CT] * k as u64])
        })
        .collect()
}

fn resolve_targets<'a>(world: &World, targets: &'a [FacilityStaffTarget]) -> Result<Vec<(usize, &'a FacilityStaffTarget)>> {
    targets
        .iter()
        .map(|t| {
            let f = world
                .facility_index(t.facility)
                .ok_or_else(|| Error::config(format!("staff target for unknown facility {}", t.facility)))?;
            if world.facilities[f].kind != FacilityKind::NursingHome {
                return Err(Error::config(format!("staff target for non-nursing-home facility {}", t.facility)));
            }
            Ok((f, t))
        })
        .collect()
}

/// Picks uniformly among the candidates nearest to `home`.
fn nearest(world: &World, geo: &Geometry, home: usize, candidates: &[usize], rng: &mut SimRng) -> Option<usize> {
    let best = candidates
        .iter()
        .map(|&f| geo.to_facility(world, home, f))
        .fold(f64::INFINITY, f64::min);
    let ties: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&f| geo.to_facility(world, home, f) <= best)
        .collect();
    ties.choose(rng).copied()
}

struct Attempt {
    hcws: Vec<HcwAssignment>,
}

/// One randomized pass through the assignment steps. Errors here are
/// structural (pool too small, slots unfillable) and are not retried.
fn attempt(
    world: &World,
    geo: &Geometry,
    targets: &[(usize, &FacilityStaffTarget)],
    params: &WorkforceParams,
    rng: &mut SimRng,
) -> Result<Attempt> {
    let n_counties = world.counties.len();
    let k = params.contract_facility_count;

    // eligible community agents per county, in random order
    let mut eligible: Vec<Vec<AgentId>> = vec![Vec::new(); n_counties];
    for a in &world.agents {
        if a.alive && !a.is_hcw && a.location == Location::Community && a.home_location == Location::Community {
            eligible[a.home_county].push(a.id);
        }
    }
    for e in &mut eligible {
        e.shuffle(rng);
    }

    // employees: per-county counts, drawn from that county
    let mut per_county: Vec<[Vec<AgentId>; 3]> = vec![Default::default(); n_counties];
    for c in 0..n_counties {
        for t in [FT, PT, MS] {
            let need: usize = targets
                .iter()
                .filter(|(f, _)| world.facilities[*f].county == c)
                .map(|(_, tg)| tg.targets[t] as usize)
                .sum();
            if eligible[c].len() < need {
                return Err(Error::Infeasible(format!(
                    "county {} has {} eligible agents but needs {} more {} workers",
                    world.counties[c].id,
                    eligible[c].len(),
                    need,
                    HcwType::ALL[t].label()
                )));
            }
            let at = eligible[c].len() - need;
            per_county[c][t] = eligible[c].split_off(at);
        }
    }

    // contract workers: statewide, counties weighted by population
    let n_contract: usize = targets.iter().map(|(_, t)| t.targets[CT] as usize).sum();
    let mut contract_workers = Vec::with_capacity(n_contract);
    for _ in 0..n_contract {
        let weights: Vec<f64> = world
            .counties
            .iter()
            .enumerate()
            .map(|(c, county)| if eligible[c].is_empty() { 0.0 } else { county.population as f64 })
            .collect();
        let c = categorical(&weights, rng)
            .ok_or_else(|| Error::Infeasible("no eligible agents left for contract workers".into()))?;
        contract_workers.push(eligible[c].pop().expect("non-empty county"));
    }

    let mut hcws = Vec::new();

    // primary facilities within the county of residence
    let mut multisite: Vec<HcwAssignment> = Vec::new();
    for c in 0..n_counties {
        for t in [FT, PT, MS] {
            let mut slots: Vec<usize> = targets
                .iter()
                .filter(|(f, _)| world.facilities[*f].county == c)
                .flat_map(|(f, tg)| std::iter::repeat_n(*f, tg.targets[t] as usize))
                .collect();
            slots.shuffle(rng);
            for (&agent, f) in per_county[c][t].iter().zip(slots) {
                let hcw_type = HcwType::ALL[t];
                let a = HcwAssignment {
                    agent,
                    hcw_type,
                    primary_facility: Some(f),
                    secondary_facilities: Vec::new(),
                    workday_probability: params.workday(hcw_type),
                };
                if t == MS {
                    multisite.push(a);
                } else {
                    hcws.push(a);
                }
            }
        }
    }

    assign_secondaries(world, geo, targets, &mut multisite, rng)?;
    hcws.extend(multisite);

    let mut contract: Vec<HcwAssignment> = contract_workers
        .into_iter()
        .map(|agent| HcwAssignment {
            agent,
            hcw_type: HcwType::Contract,
            primary_facility: None,
            secondary_facilities: Vec::new(),
            workday_probability: params.workday(HcwType::Contract),
        })
        .collect();
    assign_contract_sites(world, geo, targets, k, &mut contract, rng)?;
    hcws.extend(contract);

    hcws.sort_by_key(|a| a.agent);
    Ok(Attempt { hcws })
}

/// Gives each multisite worker one secondary facility, nearest first, with
/// the slot counts equal to the multisite targets.
///
/// A slot at facility `f` can only go to a worker whose primary is not `f`.
/// A facility is forced when its open slots equal the remaining workers
/// that could take it, which keeps the rest of the pass feasible.
fn assign_secondaries(
    world: &World,
    geo: &Geometry,
    targets: &[(usize, &FacilityStaffTarget)],
    workers: &mut [HcwAssignment],
    rng: &mut SimRng,
) -> Result<()> {
    let mut open: BTreeMap<usize, usize> = targets
        .iter()
        .filter(|(_, t)| t.targets[MS] > 0)
        .map(|(f, t)| (*f, t.targets[MS] as usize))
        .collect();
    let mut primaries: BTreeMap<usize, usize> = BTreeMap::new();
    for w in workers.iter() {
        *primaries.entry(w.primary_facility.expect("employee")).or_default() += 1;
    }
    let total = workers.len();
    for (&f, &slots) in &open {
        if slots > total - primaries.get(&f).copied().unwrap_or(0) {
            return Err(Error::Infeasible(format!(
                "nursing home {} needs {slots} multisite secondaries but only {} multisite workers have another primary",
                world.facilities[f].id,
                total - primaries.get(&f).copied().unwrap_or(0)
            )));
        }
    }

    let mut order: Vec<usize> = (0..workers.len()).collect();
    order.shuffle(rng);
    let mut remaining = total;
    for i in order {
        let primary = workers[i].primary_facility.expect("employee");
        let home = world.agent(workers[i].agent).home_county;
        let forced = open.iter().find(|(&f, &slots)| {
            f != primary && slots > 0 && slots == remaining - primaries.get(&f).copied().unwrap_or(0)
        });
        let pick = match forced {
            Some((&f, _)) => f,
            None => {
                let candidates: Vec<usize> = open
                    .iter()
                    .filter(|(&f, &slots)| slots > 0 && f != primary)
                    .map(|(&f, _)| f)
                    .collect();
                nearest(world, geo, home, &candidates, rng).expect("feasibility guard leaves a candidate")
            }
        };
        *open.get_mut(&pick).expect("open slot") -= 1;
        *primaries.get_mut(&primary).expect("counted") -= 1;
        remaining -= 1;
        workers[i].secondary_facilities = vec![pick];
    }
    Ok(())
}

/// Gives each contract worker `k` distinct facilities, nearest first. A
/// facility whose open slots equal the remaining workers is forced.
fn assign_contract_sites(
    world: &World,
    geo: &Geometry,
    targets: &[(usize, &FacilityStaffTarget)],
    k: usize,
    workers: &mut [HcwAssignment],
    rng: &mut SimRng,
) -> Result<()> {
    if workers.is_empty() {
        return Ok(());
    }
    let mut open: BTreeMap<usize, usize> = targets
        .iter()
        .filter(|(_, t)| t.targets[CT] > 0)
        .map(|(f, t)| (*f, t.targets[CT] as usize * k))
        .collect();
    let total = workers.len();
    if open.len() < k {
        return Err(Error::Infeasible(format!(
            "contract workers need {k} distinct facilities but only {} nursing homes have contract targets",
            open.len()
        )));
    }
    if let Some((&f, &slots)) = open.iter().find(|(_, &s)| s > total) {
        return Err(Error::Infeasible(format!(
            "nursing home {} needs {slots} contract listings but there are only {total} contract workers",
            world.facilities[f].id
        )));
    }

    let mut order: Vec<usize> = (0..workers.len()).collect();
    order.shuffle(rng);
    let mut remaining = total;
    for i in order {
        let home = world.agent(workers[i].agent).home_county;
        let mut chosen: Vec<usize> = open
            .iter()
            .filter(|(_, &slots)| slots == remaining)
            .map(|(&f, _)| f)
            .collect();
        while chosen.len() < k {
            let candidates: Vec<usize> = open
                .iter()
                .filter(|(f, &slots)| slots > 0 && !chosen.contains(f))
                .map(|(&f, _)| f)
                .collect();
            let f = nearest(world, geo, home, &candidates, rng).expect("feasibility guard leaves a candidate");
            chosen.push(f);
        }
        for f in &chosen {
            *open.get_mut(f).expect("open slot") -= 1;
        }
        remaining -= 1;
        chosen.sort_unstable();
        workers[i].secondary_facilities = chosen;
    }
    Ok(())
}

/// Number of caps a worker's distance exceeds, used to guide repair swaps.
fn excess(world: &World, geo: &Geometry, a: &HcwAssignment, params: &WorkforceParams) -> usize {
    let d = cap_distance(world, geo, a);
    params
        .caps
        .caps()
        .iter()
        .filter(|(_, t, miles, _)| *t == a.hcw_type && d > *miles)
        .count()
}

fn travel(world: &World, geo: &Geometry, a: &HcwAssignment) -> f64 {
    let home = world.agent(a.agent).home_county;
    a.secondary_facilities.iter().map(|&f| geo.to_facility(world, home, f)).sum()
}

/// Cap excess first, total travel second.
fn score(world: &World, geo: &Geometry, a: &HcwAssignment, params: &WorkforceParams) -> (usize, f64) {
    (excess(world, geo, a, params), travel(world, geo, a))
}

fn better(after: (usize, f64), before: (usize, f64)) -> bool {
    after.0 < before.0 || (after.0 == before.0 && after.1 < before.1 - 1e-9)
}

/// Pairwise facility swaps between workers of one type that lower the total
/// cap excess, or keep it and shorten total travel. Slot counts per facility
/// are unchanged by a swap.
fn repair(world: &World, geo: &Geometry, hcws: &mut [HcwAssignment], params: &WorkforceParams) {
    for t in [HcwType::Multisite, HcwType::Contract] {
        let idx: Vec<usize> = (0..hcws.len()).filter(|&i| hcws[i].hcw_type == t).collect();
        let mut improved = true;
        let mut rounds = 0;
        while improved && rounds < 20 {
            improved = false;
            rounds += 1;
            for &i in &idx {
                if score(world, geo, &hcws[i], params) == (0, 0.0) {
                    continue;
                }
                'partner: for &j in &idx {
                    if i == j {
                        continue;
                    }
                    let (a, b) = (score(world, geo, &hcws[i], params), score(world, geo, &hcws[j], params));
                    let before = (a.0 + b.0, a.1 + b.1);
                    for si in 0..hcws[i].secondary_facilities.len() {
                        for sj in 0..hcws[j].secondary_facilities.len() {
                            let (fi, fj) = (hcws[i].secondary_facilities[si], hcws[j].secondary_facilities[sj]);
                            if fi == fj
                                || hcws[i].facilities().contains(&fj)
                                || hcws[j].facilities().contains(&fi)
                            {
                                continue;
                            }
                            hcws[i].secondary_facilities[si] = fj;
                            hcws[j].secondary_facilities[sj] = fi;
                            let (a, b) = (score(world, geo, &hcws[i], params), score(world, geo, &hcws[j], params));
                            if better((a.0 + b.0, a.1 + b.1), before) {
                                improved = true;
                                break 'partner;
                            }
                            hcws[i].secondary_facilities[si] = fi;
                            hcws[j].secondary_facilities[sj] = fj;
                        }
                    }
                }
            }
        }
        for &i in &idx {
            hcws[i].secondary_facilities.sort_unstable();
        }
    }
}

/// Creates nursing-home HCWs and assigns their facilities. Every criterion
/// holds on success; if the distance caps cannot be met after
/// `max_attempts` randomized passes, the error names the violated cap.
pub fn assign_hcws(
    world: &mut World,
    targets: &[FacilityStaffTarget],
    params: &WorkforceParams,
    rng: &mut SimRng,
    log: &mut EventLog,
) -> Result<()> {
    params.validate()?;
    if !world.hcws.is_empty() {
        return Err(Error::config("HCWs are already assigned"));
    }
    let resolved = resolve_targets(world, targets)?;
    let geo = Geometry::new(world);
    let mut last_violation = None;
    for _ in 0..params.max_attempts {
        let mut a = attempt(world, &geo, &resolved, params, rng)?;
        let violated = |hcws: &[HcwAssignment]| cap_checks(world, &geo, hcws, params).into_iter().find(|c| !c.ok());
        repair(world, &geo, &mut a.hcws, params);
        match violated(&a.hcws) {
            None => {
                commit(world, a.hcws, log);
                return Ok(());
            }
            Some(c) => last_violation = Some(c),
        }
    }
    let c = last_violation.expect("at least one attempt");
    Err(Error::Infeasible(format!(
        "distance cap {} cannot be met: {:.3} of {} workers exceed it (cap {:.2}) after {} attempts",
        c.name, c.share, c.workers, c.cap, params.max_attempts
    )))
}

fn commit(world: &mut World, hcws: Vec<HcwAssignment>, log: &mut EventLog) {
    for a in &hcws {
        let agent = &mut world.agents[a.agent as usize];
        agent.is_hcw = true;
        let facilities = a.facilities();
        let e = Event::new(0, EventKind::HcwAssigned)
            .agent(a.agent)
            .facility(world.facilities[facilities[0]].id)
            .county(world.counties[agent.home_county].id)
            .value(a.workday_probability)
            .aux(facilities.len() as f64)
            .count(a.hcw_type.index() as u64);
        log.push(e);
    }
    world.hcws = hcws;
}

/// Checks an assignment against the assignment criteria: facility targets,
/// uniqueness, single-site full-time and part-time, multisite shape,
/// contract shape and the five distance caps.
pub fn check_assignment(
    world: &World,
    targets: &[FacilityStaffTarget],
    hcws: &[HcwAssignment],
    params: &WorkforceParams,
) -> Result<AssignmentCheck> {
    let resolved = resolve_targets(world, targets)?;
    let k = params.contract_facility_count;
    let required = required_slots(&resolved, k);
    let mut actual: BTreeMap<usize, [u64; 5]> = required.keys().map(|&f| (f, [0; 5])).collect();
    let mut stray = 0usize;
    let mut bump = |f: usize, slot: usize| match actual.get_mut(&f) {
        Some(c) => c[slot] += 1,
        None => stray += 1,
    };
    for a in hcws {
        match a.hcw_type {
            HcwType::SingleSiteFullTime => a.primary_facility.into_iter().for_each(|f| bump(f, 0)),
            HcwType::SingleSitePartTime => a.primary_facility.into_iter().for_each(|f| bump(f, 1)),
            HcwType::Multisite => {
                a.primary_facility.into_iter().for_each(|f| bump(f, 2));
                a.secondary_facilities.iter().for_each(|&f| bump(f, 3));
            }
            HcwType::Contract => a.secondary_facilities.iter().for_each(|&f| bump(f, 4)),
        }
    }
    let mismatched: Vec<String> = required
        .iter()
        .filter(|(f, r)| actual[f] != **r)
        .map(|(f, r)| format!("facility {} wants {:?} has {:?}", world.facilities[*f].id, r, actual[f]))
        .collect();
    let mut criteria = Vec::new();
    criteria.push((
        "facility_targets",
        mismatched.is_empty() && stray == 0,
        if mismatched.is_empty() && stray == 0 {
            format!("{} facilities match", required.len())
        } else {
            format!("{} mismatched, {stray} stray: {}", mismatched.len(), mismatched.join("; "))
        },
    ));

    let unique: BTreeSet<AgentId> = hcws.iter().map(|a| a.agent).collect();
    let flagged = world.agents.iter().filter(|a| a.is_hcw).count();
    let uniq_ok = unique.len() == hcws.len() && (world.hcws.is_empty() || flagged == hcws.len());
    criteria.push((
        "unique_agents",
        uniq_ok,
        format!("{} assignments, {} distinct agents, {flagged} flagged", hcws.len(), unique.len()),
    ));

    for (name, t) in [
        ("single_site_full_time_one_facility", HcwType::SingleSiteFullTime),
        ("single_site_part_time_one_facility", HcwType::SingleSitePartTime),
    ] {
        let bad = hcws
            .iter()
            .filter(|a| a.hcw_type == t && (a.primary_facility.is_none() || !a.secondary_facilities.is_empty()))
            .count();
        criteria.push((name, bad == 0, format!("{bad} violations")));
    }
    let bad_ms = hcws
        .iter()
        .filter(|a| a.hcw_type == HcwType::Multisite)
        .filter(|a| {
            a.primary_facility.is_none()
                || a.secondary_facilities.len() != 1
                || a.primary_facility == Some(a.secondary_facilities[0])
        })
        .count();
    criteria.push((
        "multisite_primary_and_secondary",
        bad_ms == 0,
        format!("{bad_ms} violations"),
    ));
    let bad_ct = hcws
        .iter()
        .filter(|a| a.hcw_type == HcwType::Contract)
        .filter(|a| {
            let distinct: BTreeSet<usize> = a.secondary_facilities.iter().copied().collect();
            a.primary_facility.is_some() || a.secondary_facilities.len() != k || distinct.len() != k
        })
        .count();
    criteria.push((
        "contract_facility_count",
        bad_ct == 0,
        format!("{bad_ct} violations"),
    ));

    let geo = Geometry::new(world);
    let caps = cap_checks(world, &geo, hcws, params);
    for c in &caps {
        criteria.push((
            c.name,
            c.ok(),
            format!("{:.4} of {} workers (cap {:.2})", c.share, c.workers, c.cap),
        ));
    }
    Ok(AssignmentCheck { criteria, caps })
}

/// Random facility among a worker's sites.
pub(crate) fn pick_facility(a: &HcwAssignment, rng: &mut SimRng) -> usize {
    let sites = a.facilities();
    sites[rng.random_range(0..sites.len())]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{synthesize_world, CountySpec, FacilitySpec, WorldSpec};
    use crate::rng::{RngStream, StreamTag};
    use crate::workforce::staff_targets_for;

    /// Counties on a west-east line about 35 miles apart, each with `nh`
    /// nursing homes.
    pub(crate) fn line_world(counties: usize, pop: u64, nh: usize, seed: u64) -> World {
        let mut spec = WorldSpec {
            counties: Vec::new(),
            facilities: Vec::new(),
            scale_factor: 1.0,
            bounding_box: None,
        };
        for c in 0..counties {
            let lon = -80.0 + 0.64 * c as f64;
            spec.counties.push(CountySpec {
                id: c as u32 + 1,
                name: format!("C{c}"),
                population: pop,
                age_shares: [0.6, 0.25, 0.15],
                lat: 35.5,
                lon,
            });
            for n in 0..nh {
                spec.facilities.push(FacilitySpec {
                    id: (100 * (c + 1) + n) as u32,
                    kind: FacilityKind::NursingHome,
                    county: c as u32 + 1,
                    acute_beds: 0,
                    icu_beds: 0,
                    nh_capacity: 60,
                    nh_occupancy: 50,
                    lat: 35.5,
                    lon,
                });
            }
        }
        synthesize_world(&spec, &mut RngStream::new(seed).substream(StreamTag::Population, 0)).unwrap()
    }

    fn targets_for(world: &World, hours: f64, params: &WorkforceParams) -> Vec<FacilityStaffTarget> {
        world
            .nursing_homes()
            .map(|f| staff_targets_for(world.facilities[f].id, hours, params))
            .collect()
    }

    fn rng(seed: u64) -> SimRng {
        RngStream::new(seed).substream(StreamTag::Workforce, 0)
    }

    #[test]
    fn one_home_two_single_site() {
        let mut w = line_world(1, 500, 1, 1);
        let f = w.facilities[0].id;
        let t = vec![FacilityStaffTarget {
            facility: f,
            avg_daily_hours: 0.0,
            targets: [1, 1, 0, 0],
        }];
        let p = WorkforceParams::default();
        assign_hcws(&mut w, &t, &p, &mut rng(1), &mut EventLog::new()).unwrap();
        assert_eq!(w.hcws.len(), 2);
        assert!(w.hcws.iter().all(|a| a.primary_facility == Some(0) && a.secondary_facilities.is_empty()));
        let check = check_assignment(&w, &t, &w.hcws, &p).unwrap();
        assert!(check.all_hold(), "{:?}", check.failures());
        assert_eq!(check.criteria.len(), 11);
    }

    #[test]
    fn all_criteria_hold() {
        let p = WorkforceParams::default();
        for seed in 0..5 {
            let mut w = line_world(4, 8_000, 3, seed);
            let t = targets_for(&w, 200.0, &p);
            let mut log = EventLog::new();
            assign_hcws(&mut w, &t, &p, &mut rng(seed), &mut log).unwrap();
            let check = check_assignment(&w, &t, &w.hcws, &p).unwrap();
            assert!(check.all_hold(), "seed {seed}: {:?}", check.failures());
            assert_eq!(log.len(), w.hcws.len());
            // no HCW is a nursing-home resident
            assert!(w.hcws.iter().all(|a| w.agent(a.agent).location == Location::Community));
        }
    }

    #[test]
    fn secondaries_prefer_home_county() {
        let p = WorkforceParams::default();
        let mut w = line_world(3, 8_000, 3, 4);
        let t = targets_for(&w, 200.0, &p);
        assign_hcws(&mut w, &t, &p, &mut rng(4), &mut EventLog::new()).unwrap();
        let geo = Geometry::new(&w);
        let ms: Vec<f64> = w
            .hcws
            .iter()
            .filter(|a| a.hcw_type == HcwType::Multisite)
            .map(|a| cap_distance(&w, &geo, a))
            .collect();
        assert!(!ms.is_empty());
        // nearest-first plus swap repair keeps nearly all secondaries local
        let local = ms.iter().filter(|d| **d == 0.0).count();
        assert!(local * 10 >= ms.len() * 9, "{ms:?}");
        assert!(ms.iter().all(|d| *d < 40.0), "{ms:?}");
    }

    #[test]
    fn single_home_cannot_host_multisite() {
        let mut w = line_world(1, 2_000, 1, 1);
        let t = vec![FacilityStaffTarget {
            facility: w.facilities[0].id,
            avg_daily_hours: 0.0,
            targets: [0, 0, 2, 0],
        }];
        let err = assign_hcws(&mut w, &t, &WorkforceParams::default(), &mut rng(1), &mut EventLog::new()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "{err}");
    }

    #[test]
    fn tight_caps_name_the_cap() {
        // two far-apart counties; one has all the homes, the other most people
        let mut w = line_world(2, 3_000, 3, 2);
        w.counties[1].lon += 6.0;
        w.counties[1].population = 1_000_000;
        let p = WorkforceParams {
            max_attempts: 3,
            caps: super::super::DistanceCaps {
                contract_over_200: 0.0,
                ..Default::default()
            },
            ..Default::default()
        };
        let t: Vec<FacilityStaffTarget> = w
            .nursing_homes()
            .filter(|&f| w.facilities[f].county == 0)
            .map(|f| FacilityStaffTarget {
                facility: w.facilities[f].id,
                avg_daily_hours: 0.0,
                targets: [0, 0, 0, 5],
            })
            .collect();
        let err = assign_hcws(&mut w, &t, &p, &mut rng(2), &mut EventLog::new()).unwrap_err();
        assert!(err.to_string().contains("contract_over"), "{err}");
    }

    #[test]
    fn check_detects_duplicates() {
        let p = WorkforceParams::default();
        let mut w = line_world(2, 5_000, 2, 3);
        let t = targets_for(&w, 100.0, &p);
        assign_hcws(&mut w, &t, &p, &mut rng(3), &mut EventLog::new()).unwrap();
        let mut hcws = w.hcws.clone();
        let first = hcws[0].agent;
        hcws[1].agent = first;
        let check = check_assignment(&w, &t, &hcws, &p).unwrap();
        assert!(!check.criteria[1].1);
    }
}
