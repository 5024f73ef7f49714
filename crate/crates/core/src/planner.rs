//! Achievability checking and staged plan search.
//!
//! A plan is a sequence of grounded usage invocations whose replayed
//! final context entails the goal context. The search works purely on
//! context graphs: a stage transition deletes the matched precondition
//! triples and inserts the postcondition triples, so side-effect triples
//! that break one-shot entailment checks are carried forward and a
//! multi-step search still finds the sequence.

use std::collections::{BTreeSet, BinaryHeap, HashSet, VecDeque};
use std::cmp::Reverse;

use thiserror::Error;

use crate::kb::{self, InstanceDirectory, KbError, Topology, UsageDecl};
use crate::ntriples::serialize_ntriples;
use crate::rdf::{apply_update, entails, Graph, Term, Triple};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("goal context is empty")]
    EmptyGoal,
    #[error("no plan found: explored {explored} states, best goal coverage {best_coverage}/{goal_size}")]
    NoPlanFound { explored: usize, best_coverage: usize, goal_size: usize },
    #[error("search limit exceeded after {expansions} expansions")]
    LimitExceeded { expansions: usize },
    #[error("usage `{usage}` is not applicable to `{instance}` in this state")]
    NotApplicable { usage: String, instance: String },
    #[error("goal {index}: {source}")]
    AtGoal { index: usize, source: Box<PlanError> },
    #[error(transparent)]
    Kb(#[from] KbError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Bfs,
    Greedy,
    Subgoal,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bfs" => Ok(Strategy::Bfs),
            "greedy" => Ok(Strategy::Greedy),
            "subgoal" => Ok(Strategy::Subgoal),
            other => Err(format!("unknown strategy `{other}` (bfs|greedy|subgoal)")),
        }
    }
}

/// Search knobs. `functional_predicates` are status predicates with at
/// most one value per subject: inserting a new value first removes the
/// old triples, which keeps side effects from piling up contradictory
/// statuses.
#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub strategy: Strategy,
    pub max_depth: usize,
    pub max_expansions: usize,
    pub functional_predicates: BTreeSet<String>,
    /// When false, reference markers are ignored and self-restricted
    /// statuses are treated like type-level ones, reproducing the
    /// ambiguity that grounding exists to fix.
    pub use_references: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            strategy: Strategy::Bfs,
            max_depth: 6,
            max_expansions: 10_000,
            functional_predicates: ["switchstatus", "status", "currentStatus", "brightness"]
                .into_iter()
                .map(kb::ns::iot)
                .collect(),
            use_references: true,
        }
    }
}

/// Immutable knowledge the planner works over.
#[derive(Clone, Copy, Debug)]
pub struct PlannerKb<'a> {
    pub usages: &'a [UsageDecl],
    pub topology: &'a Topology,
    pub instances: &'a InstanceDirectory,
}

impl<'a> PlannerKb<'a> {
    /// Usage indices in deterministic id order.
    fn usage_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.usages.len()).collect();
        order.sort_by(|a, b| self.usages[*a].id.cmp(&self.usages[*b].id));
        order
    }

    /// Instances of the usage's artifact type that actually expose an
    /// operation of the usage's operation type, in lexicographic order.
    fn candidates(&self, usage: &UsageDecl) -> Vec<String> {
        self.instances
            .instances_of(self.topology, &usage.artifact_type)
            .into_iter()
            .filter(|iri| {
                self.instances
                    .info(iri)
                    .is_some_and(|info| info.actions_by_type.contains_key(&usage.operation_type))
            })
            .collect()
    }

    fn types_of(&self, instance: &str) -> BTreeSet<String> {
        self.instances
            .info(instance)
            .map(|info| info.types.clone())
            .unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanStep {
    pub usage_id: String,
    pub instance: String,
    pub artifact_name: String,
    pub operation_name: String,
    pub grounded_pre: Graph,
    pub grounded_post: Graph,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
    pub projected_final: Graph,
}

impl Plan {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (index, step) in self.steps.iter().enumerate() {
            out.push_str(&format!(
                "step {}: usage {} instance {} operation {}\n",
                index + 1,
                step.usage_id,
                step.instance,
                step.operation_name
            ));
        }
        out
    }
}

/// Direct achievability, regardless of preconditions: every
/// (usage, instance) pair whose postcondition claims at least one goal
/// triple. A self-restricted status (its subject blank shares the
/// usage's forArtifact reference) claims only goal triples about the
/// grounded instance itself; any other status claims goal triples about
/// any instance of the artifact type.
pub fn directly_achievable<'a>(
    goal: &Graph,
    kb: &PlannerKb<'a>,
    use_references: bool,
) -> Vec<(&'a UsageDecl, String)> {
    let mut out = Vec::new();
    for index in kb.usage_order() {
        let usage = &kb.usages[index];
        let type_instances: BTreeSet<String> = kb
            .instances
            .instances_of(kb.topology, &usage.artifact_type)
            .into_iter()
            .collect();
        for instance in kb.candidates(usage) {
            if claims_any(goal, usage, &instance, &type_instances, use_references) {
                out.push((usage, instance));
            }
        }
    }
    out
}

fn claims_any(
    goal: &Graph,
    usage: &UsageDecl,
    instance: &str,
    type_instances: &BTreeSet<String>,
    use_references: bool,
) -> bool {
    goal.iter().any(|goal_triple| {
        usage
            .postcond
            .graph
            .iter()
            .any(|status| claims(goal_triple, status, usage, instance, type_instances, use_references))
    })
}

fn claims(
    goal_triple: &Triple,
    status: &Triple,
    usage: &UsageDecl,
    instance: &str,
    type_instances: &BTreeSet<String>,
    use_references: bool,
) -> bool {
    if goal_triple.predicate != status.predicate || goal_triple.object != status.object {
        return false;
    }
    match &status.subject {
        // A concrete status subject must match the goal subject exactly.
        Term::Iri(iri) => goal_triple.subject.as_iri() == Some(iri),
        Term::Blank(label) => {
            let self_restricted = use_references && usage.is_self_label(label);
            match &goal_triple.subject {
                // Existential goal subjects are satisfied by any instance.
                Term::Blank(_) => true,
                Term::Iri(goal_subject) => {
                    if self_restricted {
                        goal_subject == instance
                    } else {
                        type_instances.contains(goal_subject)
                    }
                }
                _ => false,
            }
        }
        _ => false,
    }
}

/// True iff the usage has no precondition or the state entails its
/// grounded precondition.
pub fn applicable(
    state: &Graph,
    usage: &UsageDecl,
    instance: &str,
    kb: &PlannerKb<'_>,
) -> Result<bool, KbError> {
    if usage.precond.is_none() {
        return Ok(true);
    }
    let (pre, _) = usage.ground(instance, &kb.types_of(instance))?;
    Ok(entails(state, &pre))
}

/// The provisional context after applying one grounded usage: matched
/// precondition triples are deleted, postcondition triples inserted.
/// Residual precondition blanks act as match variables; residual
/// postcondition blanks (side effects) are inserted under stable skolem
/// subjects. Inserted functional predicates evict older values first.
pub fn stage_transition(
    state: &Graph,
    usage: &UsageDecl,
    instance: &str,
    kb: &PlannerKb<'_>,
    cfg: &SearchConfig,
) -> Result<Graph, PlanError> {
    if !applicable(state, usage, instance, kb)? {
        return Err(PlanError::NotApplicable {
            usage: usage.id.clone(),
            instance: instance.to_string(),
        });
    }
    let (pre, post) = usage.ground(instance, &kb.types_of(instance))?;

    let pre_pattern: Vec<Triple> = pre
        .iter()
        .map(|t| t.map_terms(|term| match term {
            Term::Blank(label) => Term::variable(format!("pre_{label}")),
            other => other.clone(),
        }))
        .collect();
    let mut next = apply_update(state, &pre_pattern, &[], &pre_pattern)
        .expect("precondition templates carry no blanks");

    let post = post.map_blanks(|label| Term::iri_unchecked(kb::skolem_iri(&usage.id, label)));
    for triple in post.iter() {
        if let Some(predicate) = triple.predicate.as_iri() {
            if cfg.functional_predicates.contains(predicate) {
                let stale: Vec<Triple> = next
                    .iter()
                    .filter(|t| t.subject == triple.subject && t.predicate == triple.predicate)
                    .cloned()
                    .collect();
                for t in stale {
                    next.remove(&t);
                }
            }
        }
    }
    for triple in post {
        next.insert(triple).expect("grounded postconditions have no variables");
    }
    Ok(next)
}

/// Number of goal triples individually entailed by the state.
pub fn goal_coverage(state: &Graph, goal: &Graph) -> usize {
    goal.iter()
        .filter(|t| {
            let single = Graph::from_triples([(*t).clone()]).expect("goal triple is storable");
            entails(state, &single)
        })
        .count()
}

/// Finds a plan transforming `initial` into a state entailing `goal`.
pub fn plan(
    initial: &Graph,
    goal: &Graph,
    kb: &PlannerKb<'_>,
    cfg: &SearchConfig,
) -> Result<Plan, PlanError> {
    if goal.is_empty() {
        return Err(PlanError::EmptyGoal);
    }
    if entails(initial, goal) {
        return Ok(Plan { steps: Vec::new(), projected_final: initial.clone() });
    }
    match cfg.strategy {
        Strategy::Bfs => search(initial, goal, kb, cfg, false),
        Strategy::Greedy => search(initial, goal, kb, cfg, true),
        Strategy::Subgoal => subgoal_plan(initial, goal, kb, cfg),
    }
}

/// Plans a sequence of goals, each from the projected final state of the
/// previous plan. Fails fast, reporting the index of the goal that
/// cannot be reached.
pub fn plan_sequence(
    initial: &Graph,
    goals: &[Graph],
    kb: &PlannerKb<'_>,
    cfg: &SearchConfig,
) -> Result<Vec<Plan>, PlanError> {
    let mut plans = Vec::new();
    let mut state = initial.clone();
    for (index, goal) in goals.iter().enumerate() {
        let next = plan(&state, goal, kb, cfg)
            .map_err(|e| PlanError::AtGoal { index, source: Box::new(e) })?;
        state = next.projected_final.clone();
        plans.push(next);
    }
    Ok(plans)
}

struct Node {
    state: Graph,
    path: Vec<(usize, String)>,
}

/// Breadth-first (or coverage-greedy best-first) search over provisional
/// contexts, with duplicate-state pruning on the canonical serialization
/// and lexicographic (usage id, instance) expansion order.
fn search(
    initial: &Graph,
    goal: &Graph,
    kb: &PlannerKb<'_>,
    cfg: &SearchConfig,
    greedy: bool,
) -> Result<Plan, PlanError> {
    let order = kb.usage_order();
    let mut visited: HashSet<String> = HashSet::new();
    visited.insert(serialize_ntriples(initial));

    // The greedy frontier pops by best goal coverage, then insertion
    // order; the bfs frontier is plain FIFO.
    let mut queue: VecDeque<Node> = VecDeque::new();
    let mut heap: BinaryHeap<(usize, Reverse<usize>, usize)> = BinaryHeap::new();
    let mut nodes: Vec<Node> = Vec::new();

    let root = Node { state: initial.clone(), path: Vec::new() };
    if greedy {
        heap.push((goal_coverage(initial, goal), Reverse(0), 0));
        nodes.push(root);
    } else {
        queue.push_back(root);
    }

    let mut expansions = 0usize;
    let mut best_coverage = goal_coverage(initial, goal);

    loop {
        let node = if greedy {
            match heap.pop() {
                Some((_, _, index)) => std::mem::replace(
                    &mut nodes[index],
                    Node { state: Graph::new(), path: Vec::new() },
                ),
                None => break,
            }
        } else {
            match queue.pop_front() {
                Some(node) => node,
                None => break,
            }
        };
        if node.path.len() >= cfg.max_depth {
            continue;
        }
        for &usage_index in &order {
            let usage = &kb.usages[usage_index];
            for instance in kb.candidates(usage) {
                expansions += 1;
                if expansions > cfg.max_expansions {
                    return Err(PlanError::LimitExceeded { expansions: cfg.max_expansions });
                }
                if !applicable(&node.state, usage, &instance, kb)? {
                    continue;
                }
                let next = stage_transition(&node.state, usage, &instance, kb, cfg)?;
                if !visited.insert(serialize_ntriples(&next)) {
                    continue;
                }
                let mut path = node.path.clone();
                path.push((usage_index, instance.clone()));
                let coverage = goal_coverage(&next, goal);
                best_coverage = best_coverage.max(coverage);
                if entails(&next, goal) {
                    return build_plan(initial, &path, next, kb, cfg);
                }
                let child = Node { state: next, path };
                if greedy {
                    nodes.push(child);
                    heap.push((coverage, Reverse(nodes.len() - 1), nodes.len() - 1));
                } else {
                    queue.push_back(child);
                }
            }
        }
    }
    Err(PlanError::NoPlanFound {
        explored: visited.len(),
        best_coverage,
        goal_size: goal.len(),
    })
}

/// Divide and conquer: split the goal into single-triple subgoals, chase
/// each with direct achievability plus precondition chaining, then
/// verify the concatenation by replaying the transitions from the
/// initial state. Unverifiable concatenations are rejected.
fn subgoal_plan(
    initial: &Graph,
    goal: &Graph,
    kb: &PlannerKb<'_>,
    cfg: &SearchConfig,
) -> Result<Plan, PlanError> {
    let mut steps: Vec<(usize, String)> = Vec::new();
    let mut state = initial.clone();
    let explored = goal.len();

    for goal_triple in goal.iter() {
        let sub = Graph::from_triples([goal_triple.clone()]).expect("goal triple is storable");
        if entails(&state, &sub) {
            continue;
        }
        let chain = achieve_graph(&sub, &state, kb, cfg, cfg.max_depth).ok_or(
            PlanError::NoPlanFound {
                explored,
                best_coverage: goal_coverage(&state, goal),
                goal_size: goal.len(),
            },
        )?;
        for (usage_index, instance) in &chain {
            state = stage_transition(&state, &kb.usages[*usage_index], instance, kb, cfg)?;
        }
        steps.extend(chain);
    }

    // Replay verification over the whole concatenation.
    let mut replay = initial.clone();
    for (usage_index, instance) in &steps {
        replay = stage_transition(&replay, &kb.usages[*usage_index], instance, kb, cfg)?;
    }
    if !entails(&replay, goal) {
        return Err(PlanError::NoPlanFound {
            explored,
            best_coverage: goal_coverage(&replay, goal),
            goal_size: goal.len(),
        });
    }
    build_plan(initial, &steps, replay, kb, cfg)
}

/// One subgoal: try each directly-achieving pair; when its precondition
/// does not hold yet, chase the precondition graph first (bounded).
fn achieve_graph(
    target: &Graph,
    state: &Graph,
    kb: &PlannerKb<'_>,
    cfg: &SearchConfig,
    budget: usize,
) -> Option<Vec<(usize, String)>> {
    if budget == 0 {
        return None;
    }
    let order = kb.usage_order();
    for (usage, instance) in directly_achievable(target, kb, cfg.use_references) {
        let usage_index = order
            .iter()
            .copied()
            .find(|&i| std::ptr::eq(&kb.usages[i], usage))
            .expect("usage comes from the kb");
        if applicable(state, usage, &instance, kb).ok()? {
            return Some(vec![(usage_index, instance)]);
        }
        let Ok((pre, _)) = usage.ground(&instance, &kb.types_of(&instance)) else {
            continue;
        };
        let Some(mut chain) = achieve_graph(&pre, state, kb, cfg, budget - 1) else {
            continue;
        };
        // Re-check applicability after the chain.
        let mut probe = state.clone();
        let mut ok = true;
        for (chained_usage, chained_instance) in &chain {
            match stage_transition(&probe, &kb.usages[*chained_usage], chained_instance, kb, cfg) {
                Ok(next) => probe = next,
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && applicable(&probe, usage, &instance, kb).ok()? {
            chain.push((usage_index, instance));
            return Some(chain);
        }
    }
    // Multi-triple targets: achieve each member triple in turn.
    if target.len() > 1 {
        let mut chain = Vec::new();
        let mut probe = state.clone();
        for triple in target.iter() {
            let single = Graph::from_triples([triple.clone()]).expect("storable");
            if entails(&probe, &single) {
                continue;
            }
            let part = achieve_graph(&single, &probe, kb, cfg, budget - 1)?;
            for (u, i) in &part {
                probe = stage_transition(&probe, &kb.usages[*u], i, kb, cfg).ok()?;
            }
            chain.extend(part);
        }
        if entails(&probe, target) {
            return Some(chain);
        }
    }
    None
}

fn build_plan(
    initial: &Graph,
    path: &[(usize, String)],
    projected_final: Graph,
    kb: &PlannerKb<'_>,
    _cfg: &SearchConfig,
) -> Result<Plan, PlanError> {
    let mut steps = Vec::new();
    for (usage_index, instance) in path {
        let usage = &kb.usages[*usage_index];
        let (grounded_pre, grounded_post) = usage.ground(instance, &kb.types_of(instance))?;
        let info = kb.instances.info(instance);
        let artifact_name = info
            .and_then(|i| i.artifact_name.clone())
            .unwrap_or_else(|| instance.clone());
        let operation_name = info
            .and_then(|i| i.actions_by_type.get(&usage.operation_type).cloned())
            .unwrap_or_else(|| usage.operation_type.clone());
        steps.push(PlanStep {
            usage_id: usage.id.clone(),
            instance: instance.clone(),
            artifact_name,
            operation_name,
            grounded_pre,
            grounded_post,
        });
    }
    let _ = initial;
    Ok(Plan { steps, projected_final })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{load_usages, Manifest, Topology};
    use crate::rdf::union;
    use crate::turtle::parse_turtle;
    use std::path::PathBuf;

    fn fixture(rel: &str) -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
    }

    fn graph(rel: &str) -> Graph {
        let text = std::fs::read_to_string(fixture(rel)).unwrap();
        parse_turtle(&text).unwrap().0
    }

    struct Kb61 {
        usages: Vec<UsageDecl>,
        topology: Topology,
        instances: InstanceDirectory,
    }

    fn kb61(two_lights: bool) -> Kb61 {
        let manifest = Manifest::load(&fixture("manifests/kitchen61.tsv")).unwrap();
        let usages = load_usages(&graph("usages/switch_on.ttl"), &manifest).unwrap();
        let topo_file = if two_lights {
            "topology/home_two_lights.ttl"
        } else {
            "topology/home_single.ttl"
        };
        let topology = Topology::from_graph(graph(topo_file)).unwrap();
        let mut instances = InstanceDirectory::new();
        instances.add_manifest_tds(&manifest);
        Kb61 { usages, topology, instances }
    }

    impl Kb61 {
        fn planner(&self) -> PlannerKb<'_> {
            PlannerKb {
                usages: &self.usages,
                topology: &self.topology,
                instances: &self.instances,
            }
        }
    }

    const CEILING: &str = "http://localhost/TD/smart_home/kitchen/ceilingLight.jsonld";
    const EMERGENCY: &str = "http://localhost/TD/smart_home/kitchen/emergencyLight.jsonld";

    fn initial61(two_lights: bool) -> Graph {
        let topo = if two_lights {
            graph("topology/home_two_lights.ttl")
        } else {
            graph("topology/home_single.ttl")
        };
        union(&graph("contexts/kitchen_context.ttl"), &topo)
    }

    #[test]
    fn single_light_goal_plans_one_step() {
        let kb = kb61(false);
        let cfg = SearchConfig::default();
        let result = plan(
            &initial61(false),
            &graph("goals/ceiling_on.ttl"),
            &kb.planner(),
            &cfg,
        )
        .unwrap();
        assert_eq!(result.steps.len(), 1);
        let step = &result.steps[0];
        assert_eq!(step.usage_id, "_:switchOnUsage");
        assert_eq!(step.instance, CEILING);
        assert_eq!(step.operation_name, "Switch On");
        assert_eq!(step.artifact_name, "ceilingLight");
        assert!(entails(&result.projected_final, &graph("goals/ceiling_on.ttl")));
    }

    #[test]
    fn all_three_strategies_agree_on_the_simple_goal() {
        let kb = kb61(false);
        let goal = graph("goals/ceiling_on.ttl");
        let initial = initial61(false);
        let mut lengths = Vec::new();
        for strategy in [Strategy::Bfs, Strategy::Greedy, Strategy::Subgoal] {
            let cfg = SearchConfig { strategy, ..Default::default() };
            let result = plan(&initial, &goal, &kb.planner(), &cfg).unwrap();
            assert!(entails(&result.projected_final, &goal));
            lengths.push(result.steps.len());
        }
        assert_eq!(lengths, vec![1, 1, 1]);
    }

    #[test]
    fn grounding_disambiguates_the_two_light_kitchen() {
        let kb = kb61(true);
        let goal = graph("goals/ceiling_on.ttl");

        let with_refs = directly_achievable(&goal, &kb.planner(), true);
        assert_eq!(with_refs.len(), 1);
        assert_eq!(with_refs[0].1, CEILING);

        let without_refs = directly_achievable(&goal, &kb.planner(), false);
        assert_eq!(without_refs.len(), 2);
        let instances: Vec<&str> = without_refs.iter().map(|(_, i)| i.as_str()).collect();
        assert_eq!(instances, vec![CEILING, EMERGENCY]);
    }

    #[test]
    fn empty_goal_achieves_nothing() {
        let kb = kb61(false);
        assert!(directly_achievable(&Graph::new(), &kb.planner(), true).is_empty());
        assert!(matches!(
            plan(&initial61(false), &Graph::new(), &kb.planner(), &SearchConfig::default()),
            Err(PlanError::EmptyGoal)
        ));
    }

    #[test]
    fn already_satisfied_goal_yields_the_empty_plan() {
        let kb = kb61(false);
        let goal_doc = format!(
            "@prefix iot: <{}>.\n<{CEILING}> iot:switchstatus \"off\".\n",
            kb::ns::IOT
        );
        let (goal, _) = parse_turtle(&goal_doc).unwrap();
        let result = plan(
            &initial61(false),
            &goal,
            &kb.planner(),
            &SearchConfig::default(),
        )
        .unwrap();
        assert!(result.is_empty());
    }

    #[test]
    fn applicability_flips_after_the_transition() {
        let kb = kb61(false);
        let planner = kb.planner();
        let usage = &kb.usages[0];
        let initial = initial61(false);
        let cfg = SearchConfig::default();

        assert!(applicable(&initial, usage, CEILING, &planner).unwrap());
        let next = stage_transition(&initial, usage, CEILING, &planner, &cfg).unwrap();
        assert!(!applicable(&next, usage, CEILING, &planner).unwrap());
        assert!(matches!(
            stage_transition(&next, usage, CEILING, &planner, &cfg),
            Err(PlanError::NotApplicable { .. })
        ));
    }

    #[test]
    fn usage_without_precond_is_always_applicable() {
        let manifest = Manifest::load(&fixture("manifests/kitchen61.tsv")).unwrap();
        let full = std::fs::read_to_string(fixture("usages/switch_on.ttl")).unwrap();
        let no_pre = full.replace("\tusg:hasPrecond\ttools:lightOffContext.", "\t.");
        let (g, _) = parse_turtle(&no_pre).unwrap();
        let usages = load_usages(&g, &manifest).unwrap();
        assert!(usages[0].precond.is_none());

        let kb = kb61(false);
        let planner = PlannerKb {
            usages: &usages,
            topology: &kb.topology,
            instances: &kb.instances,
        };
        assert!(applicable(&Graph::new(), &usages[0], CEILING, &planner).unwrap());
    }

    #[test]
    fn unreachable_goal_reports_partial_coverage() {
        let kb = kb61(false);
        let goal_doc = format!(
            "@prefix iot: <{iot}>.\n<{CEILING}> iot:switchstatus \"on\".\n\
             <http://localhost/TD/smart_home/kitchen/curtains.jsonld> iot:currentStatus \"open\".\n",
            iot = kb::ns::IOT
        );
        let (goal, _) = parse_turtle(&goal_doc).unwrap();
        match plan(&initial61(false), &goal, &kb.planner(), &SearchConfig::default()) {
            Err(PlanError::NoPlanFound { best_coverage, goal_size, .. }) => {
                // The light half is coverable, the curtain half is not.
                assert_eq!(goal_size, 2);
                assert_eq!(best_coverage, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn plans_are_deterministic() {
        let kb = kb61(true);
        let goal = graph("goals/ceiling_on.ttl");
        let initial = initial61(true);
        let cfg = SearchConfig::default();
        let a = plan(&initial, &goal, &kb.planner(), &cfg).unwrap();
        let b = plan(&initial, &goal, &kb.planner(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    struct Kb62 {
        usages: Vec<UsageDecl>,
        topology: Topology,
        instances: InstanceDirectory,
    }

    fn kb62() -> Kb62 {
        let manifest = Manifest::load(&fixture("manifests/kitchen62.tsv")).unwrap();
        let usages = load_usages(&graph("usages/complex.ttl"), &manifest).unwrap();
        let topology = Topology::from_graph(graph("topology/kitchen62.ttl")).unwrap();
        let mut instances = InstanceDirectory::new();
        instances.add_manifest_tds(&manifest);
        Kb62 { usages, topology, instances }
    }

    const LIGHT1: &str = "http://localhost/TD/smart_home/kitchen/light1.jsonld";
    const CURTAINS: &str = "http://localhost/TD/smart_home/kitchen/curtains.jsonld";

    fn initial62() -> Graph {
        let doc = format!(
            "@prefix iot: <{iot}>.\n<{LIGHT1}> iot:switchstatus \"on\".\n<{CURTAINS}> iot:status \"closed\".\n",
            iot = kb::ns::IOT
        );
        union(&parse_turtle(&doc).unwrap().0, &graph("topology/kitchen62.ttl"))
    }

    #[test]
    fn side_effects_block_direct_entailment_but_not_the_search() {
        let kb = kb62();
        let planner = PlannerKb {
            usages: &kb.usages,
            topology: &kb.topology,
            instances: &kb.instances,
        };
        let goal = graph("goals/light1_off_curtains_open.ttl");
        let topo = graph("topology/kitchen62.ttl");

        // No single grounded postcondition entails the compound goal.
        for usage in &kb.usages {
            for instance in [LIGHT1, CURTAINS] {
                let types = kb.instances.info(instance).unwrap().types.clone();
                if let Ok((_, post)) = usage.ground(instance, &types) {
                    assert!(
                        !entails(&union(&post, &topo), &goal),
                        "{} on {} should not entail the compound goal",
                        usage.id,
                        instance
                    );
                }
            }
        }

        let cfg = SearchConfig::default();
        let result = plan(&initial62(), &goal, &planner, &cfg).unwrap();
        assert_eq!(result.steps.len(), 2);
        assert!(entails(&result.projected_final, &goal));
        // The skolemized side effect survives in the projected state.
        assert!(result
            .projected_final
            .iter()
            .any(|t| t.predicate.as_iri() == Some(kb::ns::iot("brightness").as_str())
                && t.subject.as_iri().is_some_and(|s| s.starts_with(kb::ns::SKOLEM))));
    }

    #[test]
    fn switch_off_then_on_round_trips_the_status_triple() {
        // A transition followed by its reverse restores the status.
        let kb61 = kb61(false);
        let manifest = Manifest::load(&fixture("manifests/kitchen62.tsv")).unwrap();
        let off_usages = load_usages(&graph("usages/complex.ttl"), &manifest).unwrap();
        let mut usages = kb61.usages.clone();
        usages.extend(off_usages);
        let mut instances = InstanceDirectory::new();
        instances.add_manifest_tds(&Manifest::load(&fixture("manifests/kitchen61.tsv")).unwrap());
        let topology = Topology::from_graph(graph("topology/home_single.ttl")).unwrap();
        let planner = PlannerKb { usages: &usages, topology: &topology, instances: &instances };
        let cfg = SearchConfig::default();

        let initial = initial61(false);
        let on_usage = usages.iter().find(|u| u.id == "_:switchOnUsage").unwrap();
        let off_usage = usages.iter().find(|u| u.id == "_:switchOffUsage").unwrap();

        let lit = stage_transition(&initial, on_usage, CEILING, &planner, &cfg).unwrap();
        let back = stage_transition(&lit, off_usage, CEILING, &planner, &cfg).unwrap();

        let off_triple = Triple::new(
            Term::iri_unchecked(CEILING),
            Term::iri_unchecked(kb::ns::iot("switchstatus")),
            Term::text("off"),
        )
        .unwrap();
        assert!(back.contains(&off_triple));
        assert!(!lit.contains(&off_triple));
    }

    #[test]
    fn sequence_plans_fold_projected_states() {
        let kb = kb62();
        let planner = PlannerKb {
            usages: &kb.usages,
            topology: &kb.topology,
            instances: &kb.instances,
        };
        let goal = graph("goals/light1_off_curtains_open.ttl");
        let cfg = SearchConfig::default();

        // Same one-shot goal twice: the second plan is empty.
        let plans = plan_sequence(
            &initial62(),
            &[goal.clone(), goal.clone()],
            &planner,
            &cfg,
        )
        .unwrap();
        assert_eq!(plans.len(), 2);
        assert_eq!(plans[0].steps.len(), 2);
        assert!(plans[1].is_empty());

        // Empty sequence, empty result.
        assert!(plan_sequence(&initial62(), &[], &planner, &cfg).unwrap().is_empty());

        // An unreachable goal reports its index.
        let unreachable = parse_turtle(
            &format!("@prefix iot: <{}>.\n<{LIGHT1}> iot:switchstatus \"purple\".\n", kb::ns::IOT),
        )
        .unwrap()
        .0;
        match plan_sequence(&initial62(), &[goal, unreachable], &planner, &cfg) {
            Err(PlanError::AtGoal { index: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn subgoal_chains_preconditions_and_rejects_contradictions() {
        // A status reachable only through a two-usage chain: curtains
        // must be open before they can be locked open.
        let usage_doc = format!(
            "@prefix usg: <{usg}>.\n@prefix iot: <{iot}>.\n@prefix tools: <{tools}>.\n\
             _:openUsage a usg:Usage;\n\
             \tusg:hasPrecond tools:cClosed; usg:hasPostcond tools:cOpen;\n\
             \tusg:forArtifact _:c1; usg:forOperation _:op1.\n\
             _:c1 a iot:Curtain; usg:hasOperation _:op1; tools:referencedBy tools:c.\n\
             _:op1 a iot:OpenCurtain.\n\
             _:lockUsage a usg:Usage;\n\
             \tusg:hasPrecond tools:cOpen; usg:hasPostcond tools:cLocked;\n\
             \tusg:forArtifact _:c2; usg:forOperation _:op2.\n\
             _:c2 a iot:Curtain; usg:hasOperation _:op2; tools:referencedBy tools:c.\n\
             _:op2 a iot:CloseCurtain.\n",
            usg = kb::ns::USG,
            iot = kb::ns::IOT,
            tools = kb::ns::TOOLS,
        );
        let ctx = |value: &str| {
            let doc = format!(
                "@prefix iot: <{iot}>.\n@prefix tools: <{tools}>.\n\
                 _:c iot:status \"{value}\"; tools:referencedBy tools:c.\n",
                iot = kb::ns::IOT,
                tools = kb::ns::TOOLS,
            );
            parse_turtle(&doc).unwrap().0
        };
        let mut graphs = std::collections::BTreeMap::new();
        graphs.insert(kb::ns::tools("cClosed"), ctx("closed"));
        graphs.insert(kb::ns::tools("cOpen"), ctx("open"));
        graphs.insert(kb::ns::tools("cLocked"), ctx("locked-open"));
        let resolver = crate::kb::InMemoryResolver { graphs };
        let usages =
            crate::kb::load_usages(&parse_turtle(&usage_doc).unwrap().0, &resolver).unwrap();

        let base = kb62();
        let planner = PlannerKb {
            usages: &usages,
            topology: &base.topology,
            instances: &base.instances,
        };
        let initial_doc = format!(
            "@prefix iot: <{}>.\n<{CURTAINS}> iot:status \"closed\".\n",
            kb::ns::IOT
        );
        let initial = union(&parse_turtle(&initial_doc).unwrap().0, &base.topology.graph);
        let goal_doc = format!(
            "@prefix iot: <{}>.\n<{CURTAINS}> iot:status \"locked-open\".\n",
            kb::ns::IOT
        );
        let (goal, _) = parse_turtle(&goal_doc).unwrap();

        let cfg = SearchConfig { strategy: Strategy::Subgoal, ..Default::default() };
        let result = plan(&initial, &goal, &planner, &cfg).unwrap();
        assert_eq!(result.steps.len(), 2);
        assert_eq!(result.steps[0].usage_id, "_:openUsage");
        assert_eq!(result.steps[1].usage_id, "_:lockUsage");
        assert!(entails(&result.projected_final, &goal));

        // A self-contradictory goal never survives replay verification.
        let bad_doc = format!(
            "@prefix iot: <{iot}>.\n<{CURTAINS}> iot:status \"open\".\n\
             <{CURTAINS}> iot:status \"locked-open\".\n",
            iot = kb::ns::IOT
        );
        let (bad_goal, _) = parse_turtle(&bad_doc).unwrap();
        assert!(matches!(
            plan(&initial, &bad_goal, &planner, &cfg),
            Err(PlanError::NoPlanFound { .. })
        ));
    }

    #[test]
    fn expansion_limit_is_enforced() {
        let kb = kb62();
        let planner = PlannerKb {
            usages: &kb.usages,
            topology: &kb.topology,
            instances: &kb.instances,
        };
        let goal = graph("goals/light1_off_curtains_open.ttl");
        let cfg = SearchConfig { max_expansions: 1, ..Default::default() };
        assert!(matches!(
            plan(&initial62(), &goal, &planner, &cfg),
            Err(PlanError::LimitExceeded { .. })
        ));
    }
}
