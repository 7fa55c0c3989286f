use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::PetriError;
use crate::signal::{activity_class, Class};

/// Index of a place in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaceId(pub usize);

/// Index of a transition in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub id: String,
    /// Observable activity, or `None` for a hidden transition.
    pub label: Option<String>,
    pub class: Option<Class>,
}

impl Transition {
    pub fn labeled(id: impl Into<String>, label: impl Into<String>, class: Class) -> Self {
        Transition {
            id: id.into(),
            label: Some(label.into()),
            class: Some(class),
        }
    }

    pub fn hidden(id: impl Into<String>) -> Self {
        Transition {
            id: id.into(),
            label: None,
            class: None,
        }
    }

    pub fn is_hidden(&self) -> bool {
        self.label.is_none()
    }
}

/// A directed arc between a place and a transition, by identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Arc {
    pub from: String,
    pub to: String,
}

impl Arc {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Arc {
            from: from.into(),
            to: to.into(),
        }
    }
}

/// Token count per place, in canonical place order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Marking(pub Vec<u32>);

impl Marking {
    pub fn zeros(places: usize) -> Self {
        Marking(vec![0; places])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self, place: PlaceId) -> u32 {
        self.0[place.0]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&t| u64::from(t)).sum()
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledPetriNet {
    places: Vec<String>,
    transitions: Vec<Transition>,
    /// Input places per transition, sorted.
    pre: Vec<Vec<PlaceId>>,
    /// Output places per transition, sorted.
    post: Vec<Vec<PlaceId>>,
    initial: Marking,
    final_marking: Marking,
}

#[derive(Serialize, Deserialize)]
struct NetDocument {
    places: Vec<String>,
    transitions: Vec<Transition>,
    arcs: Vec<Arc>,
    initial_marking: Vec<u32>,
    final_marking: Vec<u32>,
}

impl LabeledPetriNet {
    /// Build a net, sorting places and transitions into canonical order.
    ///
    /// Markings are given as place-id → tokens maps; absent places hold 0.
    pub fn new(
        places: impl IntoIterator<Item = String>,
        transitions: impl IntoIterator<Item = Transition>,
        arcs: impl IntoIterator<Item = Arc>,
        initial: &BTreeMap<String, u32>,
        final_marking: &BTreeMap<String, u32>,
    ) -> Result<Self, PetriError> {
        let places: BTreeSet<String> = places.into_iter().collect();
        let places: Vec<String> = places.into_iter().collect();
        let mut transitions: Vec<Transition> = transitions.into_iter().collect();
        transitions.sort_by(|a, b| a.id.cmp(&b.id));
        let arcs: Vec<Arc> = arcs.into_iter().collect();

        let to_marking = |m: &BTreeMap<String, u32>| -> Result<Marking, PetriError> {
            let mut out = Marking::zeros(places.len());
            for (id, &tokens) in m {
                let idx = places
                    .binary_search(id)
                    .map_err(|_| PetriError::InvalidNet(format!("marking names unknown place `{id}`")))?;
                out.0[idx] = tokens;
            }
            Ok(out)
        };
        let initial = to_marking(initial)?;
        let final_marking = to_marking(final_marking)?;
        Self::assemble(places, transitions, arcs, initial, final_marking)
    }

    fn assemble(
        places: Vec<String>,
        transitions: Vec<Transition>,
        arcs: Vec<Arc>,
        initial: Marking,
        final_marking: Marking,
    ) -> Result<Self, PetriError> {
        for w in places.windows(2) {
            if w[0] >= w[1] {
                return Err(PetriError::InvalidNet(format!(
                    "place ids not strictly ordered at `{}`",
                    w[1]
                )));
            }
        }
        for w in transitions.windows(2) {
            if w[0].id >= w[1].id {
                return Err(PetriError::InvalidNet(format!(
                    "transition ids not strictly ordered at `{}`",
                    w[1].id
                )));
            }
        }
        for t in &transitions {
            if places.binary_search(&t.id).is_ok() {
                return Err(PetriError::InvalidNet(format!(
                    "`{}` is both a place and a transition",
                    t.id
                )));
            }
            match (&t.label, t.class) {
                (None, None) => {}
                (Some(label), Some(class)) => {
                    let implied = activity_class(label).map_err(|e| {
                        PetriError::InvalidNet(format!("transition `{}`: {e}", t.id))
                    })?;
                    if implied != class {
                        return Err(PetriError::InvalidNet(format!(
                            "transition `{}` has class {class} but label `{label}` is {implied}",
                            t.id
                        )));
                    }
                }
                _ => {
                    return Err(PetriError::InvalidNet(format!(
                        "transition `{}` must be either hidden with no class or labeled with a class",
                        t.id
                    )))
                }
            }
        }
        if initial.len() != places.len() || final_marking.len() != places.len() {
            return Err(PetriError::Dimension {
                expected: places.len(),
                got: initial.len().min(final_marking.len()),
            });
        }

        let place_idx = |id: &str| places.binary_search_by(|p| p.as_str().cmp(id)).ok();
        let trans_idx = |id: &str| transitions.binary_search_by(|t| t.id.as_str().cmp(id)).ok();
        let mut pre = vec![BTreeSet::new(); transitions.len()];
        let mut post = vec![BTreeSet::new(); transitions.len()];
        for arc in &arcs {
            match (place_idx(&arc.from), trans_idx(&arc.to), trans_idx(&arc.from), place_idx(&arc.to)) {
                (Some(p), Some(t), _, _) => {
                    pre[t].insert(PlaceId(p));
                }
                (_, _, Some(t), Some(p)) => {
                    post[t].insert(PlaceId(p));
                }
                _ => {
                    return Err(PetriError::InvalidNet(format!(
                        "arc {} -> {} does not connect a place and a transition of this net",
                        arc.from, arc.to
                    )))
                }
            }
        }
        Ok(LabeledPetriNet {
            places,
            transitions,
            pre: pre.into_iter().map(|s| s.into_iter().collect()).collect(),
            post: post.into_iter().map(|s| s.into_iter().collect()).collect(),
            initial,
            final_marking,
        })
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition(&self, t: TransitionId) -> &Transition {
        &self.transitions[t.0]
    }

    pub fn transition_ids(&self) -> impl Iterator<Item = TransitionId> {
        (0..self.transitions.len()).map(TransitionId)
    }

    pub fn place_id(&self, id: &str) -> Option<PlaceId> {
        self.places.binary_search_by(|p| p.as_str().cmp(id)).ok().map(PlaceId)
    }

    pub fn transition_id(&self, id: &str) -> Option<TransitionId> {
        self.transitions
            .binary_search_by(|t| t.id.as_str().cmp(id))
            .ok()
            .map(TransitionId)
    }

    pub fn inputs(&self, t: TransitionId) -> &[PlaceId] {
        &self.pre[t.0]
    }

    pub fn outputs(&self, t: TransitionId) -> &[PlaceId] {
        &self.post[t.0]
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    pub fn final_marking(&self) -> &Marking {
        &self.final_marking
    }

    /// Transitions carrying `activity` as their label, in canonical order.
    pub fn transitions_labeled<'a>(&'a self, activity: &'a str) -> impl Iterator<Item = TransitionId> + 'a {
        self.transition_ids()
            .filter(move |&t| self.transitions[t.0].label.as_deref() == Some(activity))
    }

    /// Distinct activity labels of the net, sorted.
    pub fn activities(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.transitions.iter().filter_map(|t| t.label.as_ref()).collect();
        set.into_iter().cloned().collect()
    }

    /// All arcs, sorted by (from, to).
    pub fn arcs(&self) -> Vec<Arc> {
        let mut arcs = Vec::new();
        for t in self.transition_ids() {
            let tid = &self.transitions[t.0].id;
            for p in self.inputs(t) {
                arcs.push(Arc::new(self.places[p.0].clone(), tid.clone()));
            }
            for p in self.outputs(t) {
                arcs.push(Arc::new(tid.clone(), self.places[p.0].clone()));
            }
        }
        arcs.sort();
        arcs
    }

    fn check_dim(&self, m: &Marking) -> Result<(), PetriError> {
        if m.len() != self.places.len() {
            return Err(PetriError::Dimension {
                expected: self.places.len(),
                got: m.len(),
            });
        }
        Ok(())
    }

    /// A transition without input places is never reported as enabled.
    pub fn is_enabled(&self, m: &Marking, t: TransitionId) -> bool {
        let pre = &self.pre[t.0];
        !pre.is_empty() && pre.iter().all(|p| m.0[p.0] >= 1)
    }

    pub fn enabled_transitions(&self, m: &Marking) -> Result<Vec<TransitionId>, PetriError> {
        self.check_dim(m)?;
        Ok(self.transition_ids().filter(|&t| self.is_enabled(m, t)).collect())
    }

    /// Fire `t` from `m`, returning the successor marking.
    pub fn fire(&self, m: &Marking, t: TransitionId) -> Result<Marking, PetriError> {
        self.check_dim(m)?;
        if !self.is_enabled(m, t) {
            return Err(PetriError::NotEnabled(self.transitions[t.0].id.clone()));
        }
        let mut next = m.clone();
        self.fire_in_place(&mut next, t);
        Ok(next)
    }

    /// Firing rule without the enablement check; the caller guarantees
    /// every input place holds a token.
    pub(crate) fn fire_in_place(&self, m: &mut Marking, t: TransitionId) {
        for p in &self.pre[t.0] {
            m.0[p.0] -= 1;
        }
        for p in &self.post[t.0] {
            m.0[p.0] += 1;
        }
    }

    pub fn to_json(&self) -> String {
        let doc = NetDocument {
            places: self.places.clone(),
            transitions: self.transitions.clone(),
            arcs: self.arcs(),
            initial_marking: self.initial.0.clone(),
            final_marking: self.final_marking.0.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("net document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PetriError> {
        let doc: NetDocument = serde_json::from_str(text).map_err(|e| PetriError::Parse(e.to_string()))?;
        Self::assemble(
            doc.places,
            doc.transitions,
            doc.arcs,
            Marking(doc.initial_marking),
            Marking(doc.final_marking),
        )
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `a -> p -> b`: source transition a, place p, sink transition b.
    pub(crate) fn a_p_b() -> LabeledPetriNet {
        LabeledPetriNet::new(
            ["p".to_string()],
            [
                Transition::labeled("a", "%IX0.0_true", Class::Input),
                Transition::labeled("b", "%QX0.0_true", Class::Output),
            ],
            [Arc::new("a", "p"), Arc::new("p", "b")],
            &BTreeMap::new(),
            &BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn single_input_enablement() {
        let net = a_p_b();
        let b = net.transition_id("b").unwrap();
        assert_eq!(net.enabled_transitions(&Marking(vec![1])).unwrap(), vec![b]);
        assert!(net.enabled_transitions(&Marking(vec![0])).unwrap().is_empty());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let net = a_p_b();
        assert_eq!(
            net.enabled_transitions(&Marking(vec![1, 0])),
            Err(PetriError::Dimension { expected: 1, got: 2 })
        );
    }

    #[test]
    fn firing_consumes_token() {
        let net = a_p_b();
        let b = net.transition_id("b").unwrap();
        let m = Marking(vec![1]);
        assert_eq!(net.fire(&m, b).unwrap(), Marking(vec![0]));
        assert_eq!(m, Marking(vec![1]));
        assert!(matches!(net.fire(&Marking(vec![0]), b), Err(PetriError::NotEnabled(_))));
    }

    #[test]
    fn two_inputs_one_output() {
        let net = LabeledPetriNet::new(
            ["p1", "p2", "q"].map(String::from),
            [Transition::hidden("t")],
            [Arc::new("p1", "t"), Arc::new("p2", "t"), Arc::new("t", "q")],
            &BTreeMap::new(),
            &BTreeMap::new(),
        )
        .unwrap();
        let m = Marking(vec![1, 1, 0]);
        let next = net.fire(&m, TransitionId(0)).unwrap();
        assert_eq!(next, Marking(vec![0, 0, 1]));
        assert_eq!(next.total() as i64 - m.total() as i64, -1);
    }

    #[test]
    fn rejects_place_to_place_arc_and_bad_classes() {
        let bad_arc = LabeledPetriNet::new(
            ["p", "q"].map(String::from),
            [Transition::hidden("t")],
            [Arc::new("p", "q")],
            &BTreeMap::new(),
            &BTreeMap::new(),
        );
        assert!(matches!(bad_arc, Err(PetriError::InvalidNet(_))));

        let bad_class = LabeledPetriNet::new(
            ["p".to_string()],
            [Transition::labeled("t", "%IX0.0_true", Class::Output)],
            [],
            &BTreeMap::new(),
            &BTreeMap::new(),
        );
        assert!(matches!(bad_class, Err(PetriError::InvalidNet(_))));

        let half_hidden = LabeledPetriNet::new(
            ["p".to_string()],
            [Transition {
                id: "t".into(),
                label: None,
                class: Some(Class::Input),
            }],
            [],
            &BTreeMap::new(),
            &BTreeMap::new(),
        );
        assert!(matches!(half_hidden, Err(PetriError::InvalidNet(_))));
    }

    #[test]
    fn canonical_order_is_lexicographic() {
        let net = LabeledPetriNet::new(
            ["z", "a", "m"].map(String::from),
            [Transition::hidden("t2"), Transition::hidden("t1")],
            [Arc::new("z", "t2"), Arc::new("t1", "a")],
            &BTreeMap::from([("z".to_string(), 1)]),
            &BTreeMap::from([("a".to_string(), 1)]),
        )
        .unwrap();
        assert_eq!(net.places(), &["a", "m", "z"]);
        assert_eq!(net.transitions()[0].id, "t1");
        assert_eq!(net.initial_marking(), &Marking(vec![0, 0, 1]));
        assert_eq!(net.final_marking(), &Marking(vec![1, 0, 0]));
    }

    /// Random small nets: `places` places, `edges` arcs in both directions.
    fn arb_net() -> impl Strategy<Value = LabeledPetriNet> {
        (2usize..6, 1usize..5).prop_flat_map(|(np, nt)| {
            let arcs = proptest::collection::vec((0..np, 0..nt, any::<bool>()), 1..12);
            let marking = proptest::collection::vec(0u32..3, np);
            (Just(np), Just(nt), arcs, marking)
        })
        .prop_map(|(np, nt, arcs, marking)| {
            let places: Vec<String> = (0..np).map(|i| format!("p{i}")).collect();
            let transitions: Vec<Transition> = (0..nt).map(|i| Transition::hidden(format!("t{i}"))).collect();
            let arcs = arcs.into_iter().map(|(p, t, into_t)| {
                if into_t {
                    Arc::new(format!("p{p}"), format!("t{t}"))
                } else {
                    Arc::new(format!("t{t}"), format!("p{p}"))
                }
            });
            let initial: BTreeMap<String, u32> =
                marking.iter().enumerate().map(|(i, &k)| (format!("p{i}"), k)).collect();
            LabeledPetriNet::new(places, transitions, arcs, &initial, &BTreeMap::new()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn firing_is_local_and_conserves_flow(net in arb_net()) {
            let m = net.initial_marking().clone();
            for t in net.enabled_transitions(&m).unwrap() {
                let next = net.fire(&m, t).unwrap();
                for (i, (&before, &after)) in m.0.iter().zip(&next.0).enumerate() {
                    let p = PlaceId(i);
                    let consumed = net.inputs(t).contains(&p) as i64;
                    let produced = net.outputs(t).contains(&p) as i64;
                    prop_assert_eq!(after as i64, before as i64 - consumed + produced);
                }
                let delta = net.outputs(t).len() as i64 - net.inputs(t).len() as i64;
                prop_assert_eq!(next.total() as i64 - m.total() as i64, delta);
                // nothing reported enabled may rely on a place this firing emptied
                for u in net.enabled_transitions(&next).unwrap() {
                    for p in net.inputs(u) {
                        prop_assert!(next.tokens(*p) >= 1);
                    }
                }
            }
        }

        #[test]
        fn json_round_trip(net in arb_net()) {
            let back = LabeledPetriNet::from_json(&net.to_json()).unwrap();
            prop_assert_eq!(&back, &net);
            prop_assert_eq!(back.to_json(), net.to_json());
        }
    }
}
